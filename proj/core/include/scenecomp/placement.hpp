// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <set>
#include <vector>

#include "scenecomp/geometry.hpp"
#include "scenecomp/scene_io.hpp"

namespace scenecomp {

enum class PlacementStrategy {
    /// Camera center of the last frame I_{N+T}, dropped onto the fitted ground plane.
    FutureCamera,
    /// Depth-backprojected pixel deepest inside the allowed mask region of the last target frame.
    MaskRegion,
    /// Caller-supplied world point (used to express "no placement logic" ablations).
    Fixed,
};

struct PlacementOptions {
    PlacementStrategy strategy = PlacementStrategy::FutureCamera;
    std::set<int> allowed_classes;
    bool drop_to_ground = true;      // FutureCamera only
    int plane_stride = 4;            // depth sampling stride for the ground fit
    std::size_t max_plane_points = 20000;
    std::optional<Vector3d> fixed_point;  // Fixed only
};

/// Total least squares ground plane through depth points of the allowed
/// classes over all frames, normal toward the mean camera center.
/// Throws NoPlaceableRegion (no allowed depth samples) or PlaneFitFailed.
Plane fit_ground_plane(const ScenePackage& scene, const std::set<int>& allowed_classes,
                       int stride = 4, std::size_t max_points = 20000);

/// Anchor O_w as a homogeneous world point.
/// Throws NoPlaceableRegion, PlaneFitFailed, InvalidConfig.
Vector4d select_placement_point(const ScenePackage& scene, const PlacementOptions& options);

/// True iff pixel rounds (nearest) to a cell inside the grid whose class is allowed.
bool occlusion_check(const ClassMask& mask, const Vector2d& pixel, const std::set<int>& allowed);

struct TrackEntry {
    Vector2d pixel = Vector2d::Zero();
    double depth = 0.0;
    bool visible = false;      // false whenever the anchor is behind the camera
    bool valid_class = false;  // visible and on an allowed class
};

struct PlacementTrack {
    Vector4d anchor_world = Vector4d(0, 0, 0, 1);
    std::vector<TrackEntry> entries;  // one per target frame
};

/// Projects the anchor into each target frame with the scene poses.
PlacementTrack build_track(const ScenePackage& scene, const Vector4d& anchor_world,
                           const std::set<int>& allowed_classes);
/// Same with explicit per-frame poses (e.g. after stabilization).
PlacementTrack build_track(const ScenePackage& scene, const std::vector<CameraPose>& poses,
                           const Vector4d& anchor_world, const std::set<int>& allowed_classes);

/// Exact Euclidean distance (pixels) from each cell to the nearest cell where
/// `inside` is false; cells outside the grid count as outside.
Raster<float> distance_to_boundary(const Raster<std::uint8_t>& inside);

struct ObjectPlacementOptions {
    std::optional<double> yaw_deg;  // about the plane normal; default follows the camera heading
    double ground_offset = 0.0;     // meters above the plane for the mesh's lowest point
    double scale = 1.0;             // uniform; R below then carries the scale
    bool snap_to_plane = true;      // move the anchor onto the plane first
    enum class UpAxis { Y, Z } up_axis = UpAxis::Y;  // mesh axis that should align with the plane normal
};

struct ObjectFrame {
    Matrix3d R = Matrix3d::Identity();  // object -> world
    Vector3d t = Vector3d::Zero();
};

/// Object-to-world transform putting the mesh's lowest point on the plane at
/// the anchor, with its up axis along the plane normal and its forward axis
/// (object +X after the up remap) along the reference camera heading.
ObjectFrame place_object(const std::vector<Vector3d>& mesh_vertices, const Vector4d& anchor,
                         const Plane& ground, const CameraPose& reference_camera,
                         const ObjectPlacementOptions& options);

}  // namespace scenecomp
