// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <random>

#include "scenecomp/error.hpp"
#include "scenecomp/metrics.hpp"

using namespace scenecomp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian_samples(int n, int d, double scale, double shift, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd mix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) mix(i, j) = g(rng) * scale / std::sqrt(double(d));
    MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = g(rng);
    return (x * mix).array() + shift;
}

FeatureStats one_d(double mean, double var) {
    FeatureStats s;
    s.mean = VectorXd::Constant(1, mean);
    s.covariance = MatrixXd::Constant(1, 1, var);
    s.count = 10;
    return s;
}

}  // namespace

TEST(FeatureStats, Examples) {
    const VectorXd v = (VectorXd(3) << 1, -2, 0.5).finished();
    const FeatureStats single = feature_stats(v.transpose());
    EXPECT_EQ(single.mean, v);
    EXPECT_EQ(single.covariance, MatrixXd::Zero(3, 3));

    MatrixXd pm(2, 3);
    pm << v.transpose(), -v.transpose();
    EXPECT_LT(feature_stats(pm).mean.norm(), 1e-15);

    const FeatureStats s = feature_stats((MatrixXd(2, 1) << 0, 2).finished());
    EXPECT_DOUBLE_EQ(s.mean(0), 1.0);
    EXPECT_DOUBLE_EQ(s.covariance(0, 0), 2.0);

    try {
        feature_stats(MatrixXd(0, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
    }
}

TEST(FeatureStats, SymmetricPsdCovariance) {
    std::mt19937_64 rng(1);
    const FeatureStats s = feature_stats(gaussian_samples(50, 16, 1.0, 0.0, rng));
    EXPECT_LT((s.covariance - s.covariance.transpose()).norm(), 1e-9);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.covariance);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(FidScore, ClosedFormCases) {
    EXPECT_NEAR(fid_score(one_d(0, 1), one_d(1, 1)), 1.0, 1e-9);
    EXPECT_NEAR(fid_score(one_d(0, 1), one_d(0, 4)), 1.0, 1e-9);
    EXPECT_NEAR(fid_score(one_d(3, 9), one_d(1, 0.25)), 4.0 + 2.5 * 2.5, 1e-9);
}

TEST(FidScore, IdenticalIsZeroAndSymmetric) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 5; ++t) {
        const FeatureStats a = feature_stats(gaussian_samples(200, 16, 1.0, 0.0, rng));
        const FeatureStats b = feature_stats(gaussian_samples(150, 16, 1.5, 0.3, rng));
        EXPECT_NEAR(fid_score(a, a), 0.0, 1e-9);
        const double ab = fid_score(a, b), ba = fid_score(b, a);
        EXPECT_NEAR(ab, ba, 1e-9);
        EXPECT_GT(ab, 0.0);
    }
}

TEST(FidScore, RotationInvariant) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const MatrixXd xa = gaussian_samples(300, 16, 1.0, 0.0, rng);
        const MatrixXd xb = gaussian_samples(300, 16, 1.2, 0.5, rng);
        MatrixXd m(16, 16);
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) m(i, j) = g(rng);
        const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(m).householderQ();
        const double base = fid_score(feature_stats(xa), feature_stats(xb));
        const double rotated = fid_score(feature_stats(xa * Q), feature_stats(xb * Q));
        EXPECT_NEAR(rotated, base, 1e-6);
    }
}

TEST(FidScore, Errors) {
    try {
        fid_score(one_d(0, 1), feature_stats(MatrixXd::Zero(2, 2)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
    FeatureStats bad = one_d(0, -1.0);
    try {
        fid_score(bad, one_d(0, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NumericalFailure);
    }
}

TEST(SqrtPsd, SquaresBack) {
    std::mt19937_64 rng(4);
    const FeatureStats s = feature_stats(gaussian_samples(40, 8, 1.0, 0.0, rng));
    const MatrixXd r = sqrt_psd(s.covariance);
    EXPECT_LT((r * r - s.covariance).norm(), 1e-10 * s.covariance.norm());
    MatrixXd tiny = MatrixXd::Identity(2, 2);
    tiny(1, 1) = -1e-12;
    EXPECT_NO_THROW(sqrt_psd(tiny));
    tiny(1, 1) = -1e-3;
    EXPECT_THROW(sqrt_psd(tiny), Error);
}

TEST(ImageStats, Basic) {
    ImageF img(4, 2, 3, 0.0f);
    img(1, 1, 0) = 1.0f;
    const ImageStats s = image_stats(img);
    EXPECT_EQ(s.width, 4);
    EXPECT_EQ(s.channels, 3);
    EXPECT_DOUBLE_EQ(s.mean[0], 1.0 / 8);
    EXPECT_DOUBLE_EQ(s.max, 1.0);
    EXPECT_DOUBLE_EQ(s.nonzero_fraction, 1.0 / 8);
}
