// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenecomp/error.hpp"
#include "scenecomp/lighting.hpp"
#include "scenecomp/placement.hpp"
#include "scenecomp/scene_io.hpp"
#include "scenecomp/stabilization.hpp"

namespace scenecomp {

struct PlacementConfig {
    std::string strategy = "future-camera";  // future-camera | mask-region | fixed
    std::vector<std::string> allowed_classes{"road", "lane"};
    std::optional<std::array<double, 3>> fixed_point;
    bool drop_to_ground = true;
    std::optional<double> yaw_deg;
    double ground_offset = 0.0;
    double scale = 1.0;
    std::string up_axis = "y";  // y | z, the mesh's up direction
    int plane_stride = 4;
};

struct StabilizationConfig {
    bool enabled = true;
    int anchors = 16;
    int levels = 3;
    int window = 15;
    double min_confidence = 0.05;
    int max_iterations = 50;
    double residual_threshold = 2.0;
    double search_radius = 80.0;
    std::string flow_dir;  // optional precomputed flow_{n+1}_{n} files
};

struct LightingConfig {
    double tau = 1.0;
    double beta = 0.02;
    double gamma = 2.2;
    double scale = 1.0;
    double sun_exponent = 8.0;
    int pano_width = 256;
    bool use_plugins = true;
    std::string inpaint_plugin;
    std::string sky_plugin;
    std::string ldr2hdr_plugin;
};

struct RenderConfig {
    int samples = 64;
    int subpixels = 2;
    bool shadow = true;
    double shadow_strength = 0.7;  // k
    double softness_deg = 0.0;     // sun cone half-angle
    int shadow_samples = 16;       // used when softness > 0
};

struct StyleConfig {
    bool enabled = true;
    std::string plugin;
};

struct PipelineConfig {
    std::string scene;
    std::string mesh = "builtin:cube";
    std::string output_dir;
    std::uint64_t seed = 0;
    std::optional<double> target_frame_rate;
    double plugin_timeout = 300.0;
    PlacementConfig placement;
    StabilizationConfig stabilization;
    LightingConfig lighting;
    RenderConfig render;
    StyleConfig style;
    // Execution settings; they never change output bytes.
    int jobs = 1;
    int max_plugin_jobs = 1;

    /// Throws InvalidConfig for out-of-range values and MissingAsset for
    /// absent scene, mesh or flow paths.
    void validate() const;
};

/// Parses a JSON config; unknown keys throw InvalidConfig.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Canonical JSON of every setting that influences output bytes (so neither
/// the output directory nor the job counts).
std::string effective_config_json(const PipelineConfig& config);

/// A failure inside a pipeline stage, tagged with the stage and frame
/// (-1 when not frame-specific).
class StageError : public Error {
public:
    StageError(std::string stage, int frame, const Error& cause);
    const std::string& stage() const noexcept { return stage_; }
    int frame() const noexcept { return frame_; }

private:
    std::string stage_;
    int frame_;
};

/// 0 success, 2 validation error, 3 stage failure. Unreadable or inconsistent
/// inputs (including those found while loading) count as validation errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitStage = 3;
int exit_code_for(const std::exception& e);

struct PlacementStage {
    std::set<int> allowed;
    Plane ground;
    Vector4d anchor = Vector4d(0, 0, 0, 1);
    PlacementTrack raw_track;
};

struct StabilizationStage {
    bool enabled = false;
    AnchorSet anchors;
    StabilizationResult result;  // poses and track; equal to the raw inputs when disabled
};

using Logger = std::function<void(const std::string&)>;

ScenePackage load_pipeline_scene(const PipelineConfig& config);
PlacementStage run_placement_stage(const ScenePackage& scene, const PipelineConfig& config);
StabilizationStage run_stabilization_stage(const ScenePackage& scene, const PipelineConfig& config,
                                           const PlacementStage& placement);
Environment run_lighting_stage(const ScenePackage& scene, std::span<const CameraPose> poses,
                               const PipelineConfig& config);

/// Writes environment.exr, coverage.exr and sun.json under `dir`.
void write_environment(const std::filesystem::path& dir, const Environment& env);

/// Writes track.json (raw and stabilized tracks, refined poses) and
/// stabilization_residuals.csv under `dir`.
void write_stabilization(const std::filesystem::path& dir, const PlacementStage& placement,
                         const StabilizationStage& stage);

struct PipelineResult {
    std::filesystem::path manifest;
    std::vector<std::string> warnings;
};

/// load -> place -> stabilize -> light -> render -> shadow -> composite ->
/// refine -> write. Validation failures throw before anything is written;
/// later failures throw StageError.
PipelineResult run_insert_pipeline(const PipelineConfig& config, const Logger& log = {});

}  // namespace scenecomp
