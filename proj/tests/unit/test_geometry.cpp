// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scenecomp/error.hpp"
#include "scenecomp/geometry.hpp"

using namespace scenecomp;

namespace {

Matrix3d intrinsics(double f, double cx = 0.0, double cy = 0.0) {
    Matrix3d K;
    K << f, 0, cx, 0, f, cy, 0, 0, 1;
    return K;
}

Matrix3d random_rotation(std::mt19937_64& rng, double max_angle = M_PI) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, max_angle);
    Vector3d axis(n(rng), n(rng), n(rng));
    return rotation_from_axis_angle(axis.normalized() * u(rng));
}

}  // namespace

TEST(ProjectPoint, PrincipalAxisPoint) {
    const auto p = project_point(intrinsics(100), CameraPose{}, Vector4d(0, 0, 2, 1));
    ASSERT_TRUE(p.in_front);
    EXPECT_DOUBLE_EQ(p.pixel.x(), 0.0);
    EXPECT_DOUBLE_EQ(p.pixel.y(), 0.0);
    EXPECT_DOUBLE_EQ(p.depth, 2.0);
}

TEST(ProjectPoint, OffAxisHandEvaluation) {
    const auto p = project_point(intrinsics(100), CameraPose{}, Vector4d(1, -1, 2, 1));
    ASSERT_TRUE(p.in_front);
    EXPECT_NEAR(p.pixel.x(), 50.0, 1e-12);
    EXPECT_NEAR(p.pixel.y(), -50.0, 1e-12);
}

TEST(ProjectPoint, BehindCameraIsFlagged) {
    const auto p = project_point(intrinsics(100), CameraPose{}, Vector4d(0, 0, -1, 1));
    EXPECT_FALSE(p.in_front);
    EXPECT_DOUBLE_EQ(p.depth, -1.0);
}

TEST(ProjectPoint, InvariantUnderHomogeneousScaling) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const Matrix3d K = intrinsics(320, 160, 120);
    for (int i = 0; i < 200; ++i) {
        CameraPose pose{random_rotation(rng), Vector3d(u(rng), u(rng), u(rng))};
        const Vector4d P(u(rng), u(rng), u(rng) + 6.0, 1.0);
        const auto a = project_point(K, pose, P);
        for (double s : {0.5, -3.0, 1e3}) {
            const auto b = project_point(K, pose, Vector4d(s * P));
            EXPECT_EQ(a.in_front, b.in_front);
            EXPECT_NEAR((a.pixel - b.pixel).norm(), 0.0, 1e-9);
            EXPECT_NEAR(a.depth, b.depth, 1e-12 * std::abs(a.depth) + 1e-12);
        }
    }
}

TEST(BackprojectDepth, ExamplePoints) {
    DepthMap depth(101, 1, 1, 0.0f);
    depth(0, 0) = 2.0f;
    depth(50, 0) = 2.0f;
    // Principal point at the image origin so pixel (u, 0) has X = u Z / f.
    const auto pts = backproject_depth(intrinsics(100), CameraPose{}, depth);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_NEAR((pts[0] - Vector3d(0, 0, 2)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((pts[1] - Vector3d(1, 0, 2)).norm(), 0.0, 1e-12);
}

TEST(BackprojectDepth, ZeroDepthGivesEmptyCloud) {
    DepthMap depth(20, 10, 1, 0.0f);
    EXPECT_TRUE(backproject_depth(intrinsics(100), CameraPose{}, depth).empty());
}

TEST(BackprojectDepth, StrideAndInvalidValuesSkipped) {
    DepthMap depth(10, 10, 1, 1.0f);
    depth(0, 0) = std::numeric_limits<float>::quiet_NaN();
    depth(2, 0) = -1.0f;
    const auto pts = backproject_depth(intrinsics(100), CameraPose{}, depth, 2);
    EXPECT_EQ(pts.size(), 25u - 2u);
}

TEST(BackprojectDepth, RoundTripWithProjection) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.5, 50.0), px(0.0, 640.0);
    const Matrix3d K = intrinsics(500, 320, 240);
    for (int i = 0; i < 1000; ++i) {
        CameraPose pose{random_rotation(rng), Vector3d(u(rng), u(rng), u(rng)) * 5.0};
        const Vector2d pixel(px(rng), 0.75 * px(rng));
        const Vector3d X = backproject_pixel(K, pose, pixel, z(rng));
        const auto p = project_point(K, pose, X);
        ASSERT_TRUE(p.in_front);
        EXPECT_LT((p.pixel - pixel).norm(), 1e-6);
    }
}

TEST(FitPlane, ExactSquare) {
    const std::vector<Vector3d> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    const Plane pl = fit_plane(pts);
    EXPECT_NEAR(std::abs(pl.normal.z()), 1.0, 1e-12);
    EXPECT_NEAR(pl.d, 0.0, 1e-12);
}

TEST(FitPlane, TiltedExactPlane) {
    std::vector<Vector3d> pts;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) pts.emplace_back(i * 0.3, j * 0.2, 1.0 - i * 0.3 - j * 0.2);
    const Plane pl = fit_plane(pts, Vector3d(1, 1, 1));
    const Vector3d expected = Vector3d(1, 1, 1) / std::sqrt(3.0);
    EXPECT_NEAR((pl.normal - expected).norm(), 0.0, 1e-9);
    EXPECT_NEAR(pl.d, -1.0 / std::sqrt(3.0), 1e-9);
}

TEST(FitPlane, NoisyPlaneMatchesSvdOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<Vector3d> pts;
    for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), u(rng), noise(rng));
    const Plane pl = fit_plane(pts, Vector3d(0, 0, 10));

    // Oracle: smallest right singular vector of the centred data matrix.
    Eigen::MatrixXd A(pts.size(), 3);
    Vector3d mean = Vector3d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= double(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) A.row(i) = (pts[i] - mean).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    Vector3d n = svd.matrixV().col(2);
    if (n.z() < 0) n = -n;
    EXPECT_NEAR((pl.normal - n).norm(), 0.0, 1e-9);
    EXPECT_LT(std::acos(std::min(1.0, pl.normal.z())), M_PI / 180.0);
}

TEST(FitPlane, DegenerateInputs) {
    const std::vector<Vector3d> two{{0, 0, 0}, {1, 0, 0}};
    const std::vector<Vector3d> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
    for (const auto* pts : {&two, &line}) {
        try {
            fit_plane(*pts);
            FAIL() << "expected DegenerateInput";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
        }
    }
}

TEST(FitPlane, OrientationTieBreakPrefersPositiveC) {
    const std::vector<Vector3d> pts{{0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
    EXPECT_GT(fit_plane(pts).normal.z(), 0.0);
    // A viewpoint on the plane falls back to the same rule.
    EXPECT_GT(fit_plane(pts, Vector3d(3, 3, 1)).normal.z(), 0.0);
    // A viewpoint below flips it.
    EXPECT_LT(fit_plane(pts, Vector3d(0, 0, -4)).normal.z(), 0.0);
}

TEST(FitPlane, RigidTransformCovariance) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vector3d> pts;
        for (int i = 0; i < 60; ++i) pts.emplace_back(u(rng), u(rng), 0.3 * u(rng) + noise(rng));
        const Matrix3d R = random_rotation(rng);
        const Vector3d t(u(rng), u(rng), u(rng));
        std::vector<Vector3d> moved;
        for (const auto& p : pts) moved.push_back(R * p + t);
        const Vector3d view(0.5, -0.2, 20.0);
        const Plane a = fit_plane(pts, view);
        const Plane b = fit_plane(moved, R * view + t);
        // Transform the first fit: n' = R n, d' = d - n'.t.
        const Vector3d n = R * a.normal;
        const double d = a.d - n.dot(t);
        EXPECT_NEAR((b.normal - n).norm(), 0.0, 1e-9);
        EXPECT_NEAR(b.d, d, 1e-9);
    }
}

TEST(RayPlane, Examples) {
    const Plane ground{Vector3d::UnitZ(), 0.0};
    const auto down = ray_plane_intersect(Vector3d(0, 0, 1), Vector3d(0, 0, -1), ground);
    ASSERT_TRUE(down);
    EXPECT_NEAR(down->norm(), 0.0, 1e-15);
    EXPECT_FALSE(ray_plane_intersect(Vector3d(0, 0, 1), Vector3d(1, 0, 0), ground));
    const auto slant =
        ray_plane_intersect(Vector3d(0, 0, 2), Vector3d(1, 0, -1).normalized(), ground);
    ASSERT_TRUE(slant);
    EXPECT_NEAR((*slant - Vector3d(2, 0, 0)).norm(), 0.0, 1e-12);
    // Plane behind the ray origin.
    EXPECT_FALSE(ray_plane_intersect(Vector3d(0, 0, 1), Vector3d(0, 0, 1), ground));
}

TEST(Rotation, OrthonormalizeAndAngle) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const Matrix3d R = random_rotation(rng);
        EXPECT_TRUE(is_rotation(R, 1e-12));
        Matrix3d noisy = R;
        noisy(0, 1) += 1e-4;
        EXPECT_FALSE(is_rotation(noisy, 1e-6));
        EXPECT_TRUE(is_rotation(orthonormalize(noisy), 1e-12));
    }
    const Matrix3d Rz = rotation_from_axis_angle(Vector3d(0, 0, 0.3));
    EXPECT_NEAR(rotation_angle_between(Matrix3d::Identity(), Rz), 0.3, 1e-12);
    EXPECT_FALSE(is_rotation(-Matrix3d::Identity()));
}

TEST(CameraPose, ConventionHelpers) {
    const Matrix3d R_cw = rotation_from_axis_angle(Vector3d(0.1, -0.4, 0.2));
    const Vector3d c(1, 2, 3);
    const CameraPose pose = CameraPose::from_camera_to_world(R_cw, c);
    EXPECT_NEAR((pose.center() - c).norm(), 0.0, 1e-12);
    EXPECT_NEAR((pose.to_camera(c)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((pose.forward() - R_cw.col(2)).norm(), 0.0, 1e-12);
    const Vector3d p(0.3, -2, 7);
    EXPECT_NEAR((pose.to_world(pose.to_camera(p)) - p).norm(), 0.0, 1e-12);
    EXPECT_NEAR((pose.inverse().center() - pose.t).norm(), 0.0, 1e-12);
}

TEST(PixelRay, PassesThroughPixel) {
    const Matrix3d K = intrinsics(200, 100, 80);
    const CameraPose pose = CameraPose::from_camera_to_world(rotation_from_axis_angle(Vector3d(0.2, 0.1, -0.3)),
                                                             Vector3d(1, 1, 1));
    const Vector2d px(37.5, 12.25);
    const Vector3d d = pixel_ray_direction(K, pose, px);
    EXPECT_NEAR(d.norm(), 1.0, 1e-12);
    const auto p = project_point(K, pose, Vector3d(pose.center() + 4.0 * d));
    EXPECT_NEAR((p.pixel - px).norm(), 0.0, 1e-9);
}
