// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "scenecomp/flow.hpp"
#include "scenecomp/geometry.hpp"
#include "scenecomp/placement.hpp"
#include "scenecomp/scene_io.hpp"

namespace scenecomp {

/// World anchors with per-frame observations over frames 0..N, where frame N
/// is the first reference frame and carries the reference projections.
struct AnchorSet {
    std::vector<Vector4d> world;
    std::vector<std::vector<Vector2d>> projected;  // [frame][anchor], from poses
    std::vector<std::vector<Vector2d>> observed;   // [frame][anchor], from tracking
    std::vector<std::vector<std::uint8_t>> alive;  // [frame][anchor]

    std::size_t size() const { return world.size(); }
    int frames() const { return static_cast<int>(projected.size()); }
    int alive_count(int frame) const;
};

struct AnchorSelectionOptions {
    int count = 16;
    int window = 5;              // structure-tensor window, odd
    double min_separation = 6.0;  // pixels between accepted corners
    double search_radius = 80.0;  // around the projected placement anchor; <= 0 disables
    double min_relative_strength = 0.01;
    /// Half-size of the square that must lie entirely inside allowed pixels
    /// with valid depth; matches the flow window so tracked windows never
    /// straddle independently moving content.
    int support_radius = 7;
};

/// Strongest structure-tensor corners of frame N whose support square is
/// inside `allowed` with valid depth, back-projected to world. Equal
/// strengths resolve in raster order.
AnchorSet select_anchors(const ScenePackage& scene, const Vector4d& placement_anchor,
                         const std::set<int>& allowed, const AnchorSelectionOptions& options = {});

/// Fills `projected` for frames 0..frames-1 under the given poses; `observed`
/// is initialised to the projections and every anchor starts alive where it
/// projects in front of the camera.
void project_anchors(AnchorSet& anchors, const Matrix3d& K, std::span<const CameraPose> poses,
                     int frames);

/// Flow from frame n+1 to frame n for n = 0..N-1, estimated in parallel over pairs.
std::vector<FlowField> estimate_backward_flows(const ScenePackage& scene,
                                               const FlowOptions& options, int jobs);

/// Chains observations backward from frame N using flows[n] (frame n+1 -> n).
/// Tracks that leave the image or fall below `min_confidence` die for that
/// frame and all earlier ones.
AnchorSet track_anchors(const AnchorSet& anchors, std::span<const FlowField> backward_flows,
                        double min_confidence = 0.05);

struct RefineOptions {
    int max_iterations = 50;
    double residual_threshold = 2.0;  // RMS px above which a capped run is a failure
    double initial_lambda = 1e-3;
};

enum class RefineStatus { Converged, NonConvergence };

struct RefineResult {
    CameraPose pose;
    RefineStatus status = RefineStatus::Converged;
    int iterations = 0;
    int anchors_used = 0;
    double initial_rms = 0.0;
    double final_rms = 0.0;
    std::vector<double> cost_history;  // accepted iterates, starting with the initial cost
    std::vector<double> orthonormality_error;  // ||R^T R - I|| per accepted iterate
};

/// RMS of the stacked residual components, sqrt(sum ||r_i||^2 / (2M)).
double reprojection_rms(const Matrix3d& K, const CameraPose& pose,
                        std::span<const Vector4d> world, std::span<const Vector2d> observed);

/// Levenberg-Marquardt on the reprojection error of frame `frame`'s alive
/// anchors, with a left-multiplied axis-angle update. Throws
/// InsufficientAnchors below four alive anchors. A run that hits the
/// iteration cap above the residual threshold reports NonConvergence and
/// returns its best iterate.
RefineResult refine_pose(const Matrix3d& K, const AnchorSet& anchors, int frame,
                         const CameraPose& init, const RefineOptions& options = {});

struct FrameRefinement {
    int frame = 0;
    bool refined = false;
    RefineResult result;
    std::string warning;  // empty when refined
};

struct StabilizationResult {
    PlacementTrack track;
    std::vector<CameraPose> poses;  // all frames; target frames replaced when refined
    std::vector<FrameRefinement> frames;
};

/// Refines every target frame's pose from the tracked anchors and recomputes
/// the placement track under the refined poses. Frames whose refinement
/// fails keep their original pose and carry a warning.
StabilizationResult stabilize_track(const ScenePackage& scene, const PlacementTrack& track,
                                    const AnchorSet& anchors, const std::set<int>& allowed,
                                    const RefineOptions& options = {}, int jobs = 1);

/// frame,refined,anchors,initial_rms,final_rms,iterations,warning
void write_residual_csv(const std::filesystem::path& path, const StabilizationResult& result);

}  // namespace scenecomp
