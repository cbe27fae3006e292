// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>

#include "scenecomp/raster.hpp"

namespace scenecomp {

struct FeatureStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  // unbiased, symmetric
    Eigen::Index count = 0;
};

/// Rows are samples. Throws EmptyInput for zero rows; one row gives a zero covariance.
FeatureStats feature_stats(const Eigen::MatrixXd& features);

/// Square root of a symmetric positive semidefinite matrix via eigen
/// decomposition. Eigenvalues in [-1e-10 * max, 0) are clamped to zero;
/// anything more negative throws NumericalFailure.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 sqrt(sqrt(S_a) S_b sqrt(S_a))).
/// Throws DimensionMismatch, NumericalFailure.
double fid_score(const FeatureStats& a, const FeatureStats& b);

struct ImageStats {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::array<double, 4> mean{};
    std::array<double, 4> stddev{};
    double min = 0.0;
    double max = 0.0;
    double nonzero_fraction = 0.0;  // pixels with any nonzero channel
};

ImageStats image_stats(const ImageF& image);

}  // namespace scenecomp
