// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "scenecomp/bvh.hpp"
#include "scenecomp/geometry.hpp"
#include "scenecomp/mesh.hpp"
#include "scenecomp/panorama.hpp"
#include "scenecomp/raster.hpp"

namespace scenecomp {

/// Object-to-world rigid transform: x_world = R * x_object + t.
struct RigidTransform {
    Matrix3d R = Matrix3d::Identity();
    Vector3d t = Vector3d::Zero();

    Vector3d apply(const Vector3d& p) const { return R * p + t; }
};

/// A mesh placed in the world with its acceleration structure. Built once per
/// run and shared read-only across frames and threads.
class PlacedMesh {
public:
    PlacedMesh() = default;
    PlacedMesh(const ObjectMesh& mesh, const RigidTransform& object_to_world);

    bool empty() const { return bvh_.empty(); }
    const TriangleBvh& bvh() const { return bvh_; }
    const ObjectMesh& mesh() const { return *mesh_; }
    const RigidTransform& transform() const { return transform_; }

    /// Interpolated world-space shading normal at a hit.
    Vector3d shading_normal(const RayHit& hit) const;
    /// Unit geometric normal of the hit triangle in world space (winding order).
    Vector3d geometric_normal(int triangle) const;

private:
    const ObjectMesh* mesh_ = nullptr;
    RigidTransform transform_;
    TriangleBvh bvh_;
    std::vector<Vector3d> world_normals_;
};

struct RenderSettings {
    int width = 0;
    int height = 0;
    int samples = 64;       // hemisphere samples per shading point
    int subpixels = 2;      // per axis; alpha resolution is 1 / subpixels^2
    std::uint64_t seed = 0;
};

/// RGBA (straight alpha) plus camera-frame depth; depth is +inf where uncovered.
struct ObjectLayer {
    ImageF rgba;
    DepthMap depth;
};

/// Lambertian image-based shading: albedo / pi times a cosine-weighted Monte
/// Carlo estimate of the hemisphere irradiance, with self-occlusion by ray
/// casting. Sampling is stratified (Hammersley with a per-pixel rotation
/// derived from the seed), so output is bit-identical for a given seed.
ObjectLayer render_object(const PlacedMesh& placed, const Matrix3d& K, const CameraPose& camera,
                          const HdrPanorama& env, const RenderSettings& settings);

struct ShadowSettings {
    int width = 0;
    int height = 0;
    int samples = 1;              // rays per receiving point
    double angular_radius = 0.0;  // light cone half-angle, radians; 0 = hard shadow
    std::uint64_t seed = 0;
    /// Optional scene depth: plane points farther than depth * (1 + tolerance)
    /// are hidden behind real geometry and receive no shadow.
    const DepthMap* scene_depth = nullptr;
    double depth_tolerance = 0.05;
};

/// Fraction of sun light blocked by the mesh at the ground-plane point seen
/// through each pixel center. Zero where the plane is not hit, where the mesh
/// hides the plane point, and everywhere when the sun is below the plane.
/// `toward_sun` is the unit direction from the ground toward the light.
ImageF cast_shadow(const PlacedMesh& placed, const Plane& plane, const Vector3d& toward_sun,
                   const Matrix3d& K, const CameraPose& camera, const ShadowSettings& settings);

struct CompositeOutput {
    ImageF rgb;           // linear RGB
    ImageF object_mask;   // [0, 1]
    ImageF shadow_mask;   // [0, 1], zero where object_mask == 1
    DepthMap object_depth;
};

/// background * (1 - k * shadow), then the object blended over with its alpha
/// where the object is nearer than the scene (scene depth 0 or non-finite
/// counts as infinitely far). Throws DimensionMismatch.
CompositeOutput composite_frame(const ImageF& background, const ObjectLayer& layer,
                                const ImageF& shadow, const DepthMap& scene_depth,
                                double shadow_strength);

}  // namespace scenecomp
