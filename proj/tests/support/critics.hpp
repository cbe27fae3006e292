// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "scenecomp/style_transfer.hpp"

namespace scenecomp::testing {

/// D(x) = w2 . tanh(W1 vec(x) + b1) + b2 over rows x cols grids, with fixed
/// weights generated from a closed-form sequence (no RNG, no training).
class TwoLayerCritic final : public Critic {
public:
    TwoLayerCritic(int rows, int cols, int hidden = 6);
    double operator()(const Grid& x) const override;
    std::optional<Grid> gradient(const Grid& x) const override;

private:
    int rows_, cols_;
    Eigen::MatrixXd w1_;
    Eigen::VectorXd b1_, w2_;
    double b2_;
};

/// D(x) = 0.5 vec(x)^T A vec(x) + b^T vec(x), A symmetric.
class QuadraticCritic final : public Critic {
public:
    QuadraticCritic(int rows, int cols);
    double operator()(const Grid& x) const override;
    std::optional<Grid> gradient(const Grid& x) const override;

private:
    int rows_, cols_;
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
};

/// Hides the analytic gradient of another critic so callers fall back to
/// numeric differentiation.
class OpaqueCritic final : public Critic {
public:
    explicit OpaqueCritic(const Critic& inner) : inner_(inner) {}
    double operator()(const Grid& x) const override { return inner_(x); }

private:
    const Critic& inner_;
};

/// Independent central-difference gradient (step h) for oracles.
Grid fd_gradient(const Critic& critic, const Grid& x, double h = 1e-5);

/// Penalty recomputed from a supplied gradient: lambda * (||g . (1 - m)|| - 1)^2.
double penalty_from_gradient(const Grid& g, const Grid& m, double lambda);

}  // namespace scenecomp::testing
