// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "scenecomp/error.hpp"

namespace scenecomp {

FeatureStats feature_stats(const Eigen::MatrixXd& features) {
    const Eigen::Index n = features.rows(), d = features.cols();
    if (n == 0) throw Error(ErrorKind::EmptyInput, "no feature rows");
    FeatureStats s;
    s.count = n;
    s.mean = features.colwise().mean().transpose();
    if (n == 1) {
        s.covariance = Eigen::MatrixXd::Zero(d, d);
        return s;
    }
    const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
    s.covariance = (centered.transpose() * centered) / double(n - 1);
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose());
    return s;
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "eigen decomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    if (!ev.allFinite()) throw Error(ErrorKind::NumericalFailure, "non-finite eigenvalues");
    const double top = ev.size() ? std::max(0.0, ev.maxCoeff()) : 0.0;
    const double tol = 1e-10 * top;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol) {
            throw Error(ErrorKind::NumericalFailure,
                        "matrix is not positive semidefinite (eigenvalue " + std::to_string(ev[i]) + ")");
        }
        ev[i] = std::max(ev[i], 0.0);
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double fid_score(const FeatureStats& a, const FeatureStats& b) {
    const Eigen::Index d = a.mean.size();
    if (b.mean.size() != d || a.covariance.rows() != d || a.covariance.cols() != d ||
        b.covariance.rows() != d || b.covariance.cols() != d) {
        throw Error(ErrorKind::DimensionMismatch, "feature statistics differ in dimension");
    }
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const Eigen::MatrixXd ra = sqrt_psd(a.covariance);
    const Eigen::MatrixXd inner = ra * b.covariance * ra;
    const Eigen::MatrixXd root = sqrt_psd(inner);
    const double trace = a.covariance.trace() + b.covariance.trace() - 2.0 * root.trace();
    const double fid = mean_term + trace;
    if (!std::isfinite(fid)) throw Error(ErrorKind::NumericalFailure, "FID is not finite");
    return std::max(0.0, fid);
}

ImageStats image_stats(const ImageF& image) {
    ImageStats s;
    s.width = image.width();
    s.height = image.height();
    s.channels = image.channels();
    const std::size_t n = image.pixel_count();
    if (n == 0) return s;
    const int ch = std::min(image.channels(), 4);
    std::array<double, 4> sum{}, sum2{};
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    std::size_t nonzero = 0;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            bool any = false;
            for (int c = 0; c < image.channels(); ++c) {
                const double v = image(x, y, c);
                if (c < ch) {
                    sum[c] += v;
                    sum2[c] += v * v;
                }
                s.min = std::min(s.min, v);
                s.max = std::max(s.max, v);
                any = any || v != 0.0;
            }
            if (any) ++nonzero;
        }
    for (int c = 0; c < ch; ++c) {
        s.mean[c] = sum[c] / double(n);
        s.stddev[c] = std::sqrt(std::max(0.0, sum2[c] / double(n) - s.mean[c] * s.mean[c]));
    }
    s.nonzero_fraction = double(nonzero) / double(n);
    return s;
}

}  // namespace scenecomp
