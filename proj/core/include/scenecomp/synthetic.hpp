// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scenecomp/geometry.hpp"
#include "scenecomp/mesh.hpp"
#include "scenecomp/scene_io.hpp"

namespace scenecomp {

/// Procedural driving scene: a textured ground plane z = 0 (road, lane
/// markings, verge) under a sky with a sun disc, seen by a forward-moving
/// camera along +X. World is Z-up.
struct SyntheticSceneOptions {
    int width = 160;
    int height = 120;
    double focal = 120.0;
    int n_target = 5;
    int n_reference = 5;
    double frame_rate = 10.0;
    double step = 0.5;  // meters per frame along +X
    double camera_height = 1.5;
    double pitch_deg = 10.0;  // downward
    double sun_elevation_deg = 12.0;
    double sun_azimuth_deg = 20.0;  // from +X toward +Y
    int supersample = 4;            // per axis
    double jitter_rotation_deg = 0.0;
    double jitter_translation = 0.0;  // meters
    std::uint64_t seed = 1;
};

struct SyntheticScene {
    ScenePackage scene;                   // poses as a tracker would report them
    std::vector<CameraPose> true_poses;   // poses used to render
    Vector3d toward_sun = Vector3d::UnitZ();
};

inline constexpr int kClassRoad = 1;
inline constexpr int kClassLane = 2;
inline constexpr int kClassSky = 3;
inline constexpr int kClassVerge = 4;

/// Renders the scene. When jitter is set, the target-frame poses in `scene`
/// are perturbed by rotations of exactly jitter_rotation_deg about random
/// axes and translations of exactly jitter_translation in random directions;
/// reference frames keep their true poses.
SyntheticScene make_synthetic_scene(const SyntheticSceneOptions& options = {});

/// Camera pose of frame n on the nominal trajectory.
CameraPose synthetic_camera_pose(const SyntheticSceneOptions& options, int n);

/// 1 m cube (mesh Y up), used as the default inserted object.
ObjectMesh synthetic_object();

}  // namespace scenecomp
