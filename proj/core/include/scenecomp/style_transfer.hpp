// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "scenecomp/raster.hpp"
#include "scenecomp/subprocess.hpp"

namespace scenecomp {

// Two mask conventions meet here. Pipeline masks (InpaintTriple::fg_mask,
// object masks) use 1 = inserted object. The penalty math uses m with
// m = 0 on the object, so (1 - m) selects it. Convert with
// penalty_mask_from_object_mask at the boundary.

struct InpaintTriple {
    ImageF background_blacked;  // composite with the object region zeroed
    Mask8 fg_mask;              // 1 = object
    ImageF foreground_blacked;  // composite with everything but the object zeroed

    /// background_blacked + foreground_blacked; bit-exact to the composite.
    ImageF reconstruct() const;
};

/// Throws DimensionMismatch. Nonzero mask entries count as object.
InpaintTriple assemble_inpaint_inputs(const ImageF& composite, const Mask8& object_mask);

/// Binary object mask from a fractional alpha: 1 where alpha >= threshold.
Mask8 binarize_alpha(const ImageF& alpha, double threshold = 0.5);

/// Single-channel sample grid for the critic math.
using Grid = Eigen::MatrixXd;

/// m for the penalty: 0 on the object, 1 elsewhere.
Grid penalty_mask_from_object_mask(const Mask8& object_mask);

struct StyleBatch {
    std::vector<double> critic_real;
    std::vector<double> critic_fake;
    double lambda = 10.0;
    std::vector<Grid> interpolates;
    Grid mask;  // penalty convention, 0 = object
};

struct WganLosses {
    double critic_objective = 0.0;  // mean(real) - mean(fake)
    double loss_d = 0.0;            // -critic_objective
    double loss_g = 0.0;            // -mean(fake)
};

/// Throws EmptyBatch when either score list is empty.
WganLosses wgan_losses(std::span<const double> critic_real, std::span<const double> critic_fake);
WganLosses wgan_losses(const StyleBatch& batch);

/// u * real + (1 - u) * fake. Throws ShapeMismatch, OutOfRangeInput for u outside [0, 1].
Grid interpolate_samples(const Grid& x_real, const Grid& x_fake, double u);

/// Scalar critic over grids. Critics without an analytic gradient get
/// central differences.
class Critic {
public:
    virtual ~Critic() = default;
    virtual double operator()(const Grid& x) const = 0;
    virtual std::optional<Grid> gradient(const Grid&) const { return std::nullopt; }
};

/// D(x) = <a, x> + b.
class LinearCritic final : public Critic {
public:
    explicit LinearCritic(Grid a, double b = 0.0) : a_(std::move(a)), b_(b) {}
    double operator()(const Grid& x) const override { return a_.cwiseProduct(x).sum() + b_; }
    std::optional<Grid> gradient(const Grid&) const override { return a_; }

private:
    Grid a_;
    double b_;
};

/// Analytic gradient when the critic provides one, central differences with
/// step h otherwise. Throws NonFiniteGradient.
Grid critic_gradient(const Critic& critic, const Grid& x, double h = 1e-5);

/// lambda * (||grad D(x_hat) . (1 - m)||_2 - 1)^2. Throws ShapeMismatch,
/// OutOfRangeInput (non-binary m or lambda < 0), NonFiniteGradient.
double gradient_penalty(const Critic& critic, const Grid& x_hat, const Grid& m, double lambda);

/// Mean penalty over batch.interpolates. Throws EmptyBatch.
double gradient_penalty(const Critic& critic, const StyleBatch& batch);

struct ExternalRefineOptions {
    PluginSpec plugin;
    double gamma = 2.2;  // display encoding of the exchanged PNGs
    bool identity_fallback = true;
    bool keep_workdir = false;  // generated work directories are removed otherwise
};

/// Exchanges bg.png / mask.png / fg.png / meta.json with an external
/// refinement command and reads back refined.png (linearised with `gamma`).
/// Without a plugin the reconstructed composite is returned unchanged when
/// identity_fallback is set, else PluginNotFound. A non-empty `workdir` must
/// not exist yet or be empty. Throws PluginNotFound, PluginTimeout,
/// BadPluginOutput.
ImageF refine_frame_external(const InpaintTriple& triple, const ExternalRefineOptions& options,
                             const std::filesystem::path& workdir = {});

}  // namespace scenecomp
