// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

#include "scenecomp/error.hpp"

namespace scenecomp {

bool is_rotation(const Matrix3d& R, double tol) {
    if (!R.allFinite()) return false;
    const double ortho = (R.transpose() * R - Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Matrix3d orthonormalize(const Matrix3d& R) {
    Eigen::JacobiSVD<Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix3d U = svd.matrixU();
    const Matrix3d V = svd.matrixV();
    if ((U * V.transpose()).determinant() < 0) U.col(2) *= -1.0;
    return U * V.transpose();
}

Matrix3d rotation_from_axis_angle(const Vector3d& omega) {
    const double angle = omega.norm();
    if (angle < 1e-300) return Matrix3d::Identity();
    return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

double rotation_angle_between(const Matrix3d& a, const Matrix3d& b) {
    return Eigen::AngleAxisd(a.transpose() * b).angle();
}

Projection project_point(const Matrix3d& K, const CameraPose& pose, const Vector4d& P_world) {
    return project_point(K, pose, Vector3d(P_world.head<3>() / P_world.w()));
}

Projection project_point(const Matrix3d& K, const CameraPose& pose, const Vector3d& P_world) {
    const Vector3d cam = pose.to_camera(P_world);
    Projection out;
    out.depth = cam.z();
    out.in_front = cam.z() > 0.0;
    if (out.in_front) {
        const Vector3d h = K * cam;
        out.pixel = h.head<2>() / h.z();
    }
    return out;
}

Vector3d backproject_pixel(const Matrix3d& K, const CameraPose& pose, const Vector2d& pixel,
                           double depth) {
    const Vector3d ray = K.inverse() * Vector3d(pixel.x(), pixel.y(), 1.0);
    return pose.to_world(ray * (depth / ray.z()));
}

std::vector<Vector3d> backproject_depth(const Matrix3d& K, const CameraPose& pose,
                                        const DepthMap& depth, int stride) {
    std::vector<Vector3d> out;
    const Matrix3d Kinv = K.inverse();
    const Matrix3d Rt = pose.R.transpose();
    stride = std::max(1, stride);
    for (int y = 0; y < depth.height(); y += stride) {
        for (int x = 0; x < depth.width(); x += stride) {
            const double z = depth(x, y);
            if (!(z > 0.0) || !std::isfinite(z)) continue;
            const Vector3d ray = Kinv * Vector3d(x, y, 1.0);
            out.push_back(Rt * (ray * (z / ray.z()) - pose.t));
        }
    }
    return out;
}

Plane fit_plane(std::span<const Vector3d> points, const std::optional<Vector3d>& viewpoint) {
    if (points.size() < 3) {
        throw Error(ErrorKind::DegenerateInput, "plane fit needs at least 3 points");
    }
    Vector3d mean = Vector3d::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(points.size());
    Matrix3d scatter = Matrix3d::Zero();
    for (const auto& p : points) {
        const Vector3d q = p - mean;
        scatter += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix3d> eig(scatter);
    const Vector3d ev = eig.eigenvalues();  // ascending
    if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
        throw Error(ErrorKind::DegenerateInput, "points are coincident or collinear");
    }
    Plane plane;
    plane.normal = eig.eigenvectors().col(0).normalized();
    plane.d = -plane.normal.dot(mean);

    auto flip = [&] {
        plane.normal = -plane.normal;
        plane.d = -plane.d;
    };
    auto canonical_sign = [&] {
        const Vector3d& n = plane.normal;
        const double pick = n.z() != 0.0 ? n.z() : (n.y() != 0.0 ? n.y() : n.x());
        if (pick < 0.0) flip();
    };
    if (viewpoint) {
        const double s = plane.signed_distance(*viewpoint);
        const double scale = 1.0 + viewpoint->norm() + mean.norm();
        if (std::abs(s) <= 1e-12 * scale) {
            canonical_sign();
        } else if (s < 0.0) {
            flip();
        }
    } else {
        canonical_sign();
    }
    return plane;
}

std::optional<Vector3d> ray_plane_intersect(const Vector3d& origin, const Vector3d& direction,
                                            const Plane& plane) {
    const double denom = plane.normal.dot(direction);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double t = -plane.signed_distance(origin) / denom;
    if (t < 0.0) return std::nullopt;
    return origin + t * direction;
}

Vector3d pixel_ray_direction(const Matrix3d& K, const CameraPose& pose, const Vector2d& pixel) {
    const Vector3d ray = K.inverse() * Vector3d(pixel.x(), pixel.y(), 1.0);
    return (pose.R.transpose() * ray).normalized();
}

}  // namespace scenecomp
