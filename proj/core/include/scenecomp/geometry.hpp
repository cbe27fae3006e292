// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <span>
#include <vector>

#include "scenecomp/raster.hpp"

namespace scenecomp {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::Vector4d;

/// World-to-camera rigid transform: x_cam = R * x_world + t.
struct CameraPose {
    Matrix3d R = Matrix3d::Identity();
    Vector3d t = Vector3d::Zero();

    Vector3d to_camera(const Vector3d& world) const { return R * world + t; }
    Vector3d to_world(const Vector3d& cam) const { return R.transpose() * (cam - t); }
    /// Camera center in world coordinates.
    Vector3d center() const { return -R.transpose() * t; }
    /// Optical axis (+z of the camera) in world coordinates.
    Vector3d forward() const { return R.row(2).transpose(); }

    CameraPose inverse() const { return {R.transpose(), -R.transpose() * t}; }
    /// Builds the world-to-camera pose from a camera-to-world rotation and center.
    static CameraPose from_camera_to_world(const Matrix3d& R_cw, const Vector3d& center) {
        return {R_cw.transpose(), -R_cw.transpose() * center};
    }
};

/// True when R^T R = I and det(R) = +1 within tol.
bool is_rotation(const Matrix3d& R, double tol = 1e-6);

/// Nearest rotation (SVD projection onto SO(3)).
Matrix3d orthonormalize(const Matrix3d& R);

/// Rodrigues exponential map.
Matrix3d rotation_from_axis_angle(const Vector3d& omega);

/// Geodesic angle between two rotations, radians.
double rotation_angle_between(const Matrix3d& a, const Matrix3d& b);

struct Projection {
    Vector2d pixel = Vector2d::Zero();
    double depth = 0.0;  // camera-frame z
    /// False signals BehindCamera: the point is not visible, pixel is undefined.
    bool in_front = false;
};

/// Pinhole projection pixel = dehom(K [R|t] P). P is homogeneous; scaling P by
/// any nonzero factor yields the same result.
Projection project_point(const Matrix3d& K, const CameraPose& pose, const Vector4d& P_world);
Projection project_point(const Matrix3d& K, const CameraPose& pose, const Vector3d& P_world);

/// World point seen at pixel (u, v) with camera-frame depth z.
Vector3d backproject_pixel(const Matrix3d& K, const CameraPose& pose, const Vector2d& pixel,
                           double depth);

/// World points for every stride-th pixel with a valid (finite, > 0) depth.
std::vector<Vector3d> backproject_depth(const Matrix3d& K, const CameraPose& pose,
                                        const DepthMap& depth, int stride = 1);

/// Plane normal . x + d = 0 with |normal| = 1.
struct Plane {
    Vector3d normal = Vector3d::UnitZ();
    double d = 0.0;

    double signed_distance(const Vector3d& p) const { return normal.dot(p) + d; }
    Vector3d project(const Vector3d& p) const { return p - signed_distance(p) * normal; }
};

/// Total least squares plane (smallest principal axis of centered points).
/// The normal points toward `viewpoint` when given (signed distance > 0);
/// otherwise, or when the viewpoint lies on the plane, positive C wins, then
/// positive B, then positive A. Throws DegenerateInput for < 3 or collinear points.
Plane fit_plane(std::span<const Vector3d> points,
                const std::optional<Vector3d>& viewpoint = std::nullopt);

/// Forward intersection of a ray with a plane; nullopt when parallel or behind.
std::optional<Vector3d> ray_plane_intersect(const Vector3d& origin, const Vector3d& direction,
                                            const Plane& plane);

/// Unit direction of the camera ray through a pixel, in world coordinates.
Vector3d pixel_ray_direction(const Matrix3d& K, const CameraPose& pose, const Vector2d& pixel);

}  // namespace scenecomp
