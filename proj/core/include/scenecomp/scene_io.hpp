// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenecomp/geometry.hpp"
#include "scenecomp/raster.hpp"

namespace scenecomp {

/// Calibrated frame sequence. Frames [0, n_target) receive the object; the
/// trailing n_reference frames anchor placement. Poses are stored
/// world-to-camera regardless of the manifest convention.
struct ScenePackage {
    std::vector<ImageF> frames;  // linear RGB
    Matrix3d K = Matrix3d::Identity();
    std::vector<CameraPose> poses;
    std::vector<DepthMap> depth_maps;
    std::vector<ClassMask> seg_masks;
    double frame_rate = 0.0;
    int n_target = 0;
    int n_reference = 0;
    double decode_gamma = 2.2;
    std::map<std::string, int> class_ids;  // class name -> id
    std::vector<std::string> frame_names;   // image file stems, for reports

    int frame_count() const { return static_cast<int>(frames.size()); }
    int width() const { return frames.empty() ? 0 : frames.front().width(); }
    int height() const { return frames.empty() ? 0 : frames.front().height(); }
    /// Index of the last frame I_{N+T}.
    int reference_index() const { return frame_count() - 1; }

    /// Throws DimensionMismatch / InvalidPose when invariants do not hold.
    void validate() const;

    /// Resolves class names or numeric strings into ids (unknown names throw InvalidConfig).
    std::set<int> resolve_classes(const std::vector<std::string>& names) const;
};

struct SceneLoadOptions {
    /// Overrides the manifest's target_frame_rate, keeping every k-th frame
    /// where k = frame_rate / target_frame_rate must be an integer.
    std::optional<double> target_frame_rate;
    /// Overrides the manifest's decode_gamma.
    std::optional<double> decode_gamma;
    int jobs = 1;
};

/// Loads and validates a JSON scene manifest (see docs/formats.md).
/// Errors: MissingAsset, DimensionMismatch, InvalidPose, ParseError.
ScenePackage load_scene_package(const std::filesystem::path& manifest_path,
                                const SceneLoadOptions& options = {});

/// Writes a scene package as a manifest plus PNG/PFM assets under `dir`.
/// Poses are written camera-to-world. Returns the manifest path.
std::filesystem::path save_scene_package(const std::filesystem::path& dir,
                                         const ScenePackage& scene);

}  // namespace scenecomp
