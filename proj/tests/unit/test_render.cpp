// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "scenecomp/error.hpp"
#include "scenecomp/mesh.hpp"
#include "scenecomp/render.hpp"

using namespace scenecomp;

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

Matrix3d intrinsics(double f, double cx, double cy) {
    Matrix3d K;
    K << f, 0, cx, 0, f, cy, 0, 0, 1;
    return K;
}

CameraPose look_at(const Vector3d& eye, const Vector3d& target) {
    const Vector3d z = (target - eye).normalized();
    const Vector3d x = z.cross(Vector3d::UnitZ()).normalized();
    Matrix3d R_cw;
    R_cw << x, z.cross(x), z;
    return CameraPose::from_camera_to_world(R_cw, eye);
}

RigidTransform at(const Vector3d& t) { return {Matrix3d::Identity(), t}; }

HdrPanorama gradient_env() {
    HdrPanorama env(64, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 3; ++c)
                env.radiance(x, y, c) = 0.2f + 0.05f * y + 0.01f * x * (c + 1);
    return env;
}

// Independent reference: plain Moller-Trumbore over every triangle.
bool brute_force_hit(const std::vector<Vector3d>& v, const std::vector<std::array<int, 3>>& tris,
                     const Vector3d& o, const Vector3d& d, double t_min, double t_max) {
    for (const auto& t : tris) {
        const Vector3d e1 = v[t[1]] - v[t[0]], e2 = v[t[2]] - v[t[0]];
        const Vector3d p = d.cross(e2);
        const double det = e1.dot(p);
        if (std::abs(det) < 1e-15) continue;
        const Vector3d s = o - v[t[0]];
        const double a = s.dot(p) / det;
        if (a < 0 || a > 1) continue;
        const Vector3d q = s.cross(e1);
        const double b = d.dot(q) / det;
        if (b < 0 || a + b > 1) continue;
        const double dist = e2.dot(q) / det;
        if (dist > t_min && dist < t_max) return true;
    }
    return false;
}

}  // namespace

TEST(RenderObject, EmptyMeshIsTransparent) {
    const PlacedMesh empty;
    const ObjectLayer layer = render_object(empty, intrinsics(50, 10, 10), CameraPose{}, gradient_env(),
                                            RenderSettings{21, 21, 4, 2, 0});
    for (int y = 0; y < 21; ++y)
        for (int x = 0; x < 21; ++x) {
            EXPECT_EQ(layer.rgba(x, y, 3), 0.0f);
            EXPECT_EQ(layer.depth(x, y), kInf);
        }
}

TEST(RenderObject, ConstantEnvironmentGivesAlbedoTimesRadiance) {
    const ObjectMesh sphere = make_uv_sphere(1.0, 48, 24, {0.5, 0.3, 0.8});
    const PlacedMesh placed(sphere, at(Vector3d(0, 0, 4)));
    const HdrPanorama env(64, 32, 2.0f);
    const ObjectLayer layer =
        render_object(placed, intrinsics(40, 15, 15), CameraPose{}, env, RenderSettings{31, 31, 1024, 1, 7});
    int checked = 0;
    for (int y = 0; y < 31; ++y)
        for (int x = 0; x < 31; ++x) {
            if (layer.rgba(x, y, 3) < 1.0f) continue;
            ++checked;
            EXPECT_NEAR(layer.rgba(x, y, 0), 1.0, 0.02);
            EXPECT_NEAR(layer.rgba(x, y, 1), 0.6, 0.012);
            EXPECT_NEAR(layer.rgba(x, y, 2), 1.6, 0.032);
        }
    EXPECT_GT(checked, 50);
}

TEST(RenderObject, SphereSilhouetteRadius) {
    const ObjectMesh sphere = make_uv_sphere(1.0, 96, 48);
    const PlacedMesh placed(sphere, at(Vector3d(0, 0, 10)));
    const ObjectLayer layer = render_object(placed, intrinsics(100, 20, 20), CameraPose{}, HdrPanorama(16, 8, 1.0f),
                                            RenderSettings{41, 41, 1, 4, 0});
    double area = 0;
    for (int y = 0; y < 41; ++y)
        for (int x = 0; x < 41; ++x) area += layer.rgba(x, y, 3);
    const double expected = 100.0 * 1.0 / std::sqrt(100.0 - 1.0);
    EXPECT_NEAR(std::sqrt(area / M_PI), expected, 1.0);
    EXPECT_EQ(layer.rgba(20, 20, 3), 1.0f);
    EXPECT_NEAR(layer.depth(20, 20), 9.0, 1e-2);
}

TEST(RenderObject, LinearAndMonotoneInRadiance) {
    const ObjectMesh box = make_box(Vector3d(1.0, 0.8, 0.6), {0.7, 0.5, 0.3});
    RigidTransform xf{rotation_from_axis_angle(Vector3d(0.4, 0.7, 0.1)), Vector3d(0, 0, 3)};
    const PlacedMesh placed(box, xf);
    const RenderSettings rs{25, 25, 16, 2, 3};
    const Matrix3d K = intrinsics(30, 12, 12);
    const HdrPanorama env = gradient_env();
    HdrPanorama doubled = env, brighter = env;
    for (float& v : doubled.radiance.data()) v *= 2.0f;
    for (int y = 0; y < 16; ++y)
        for (int x = 20; x < 40; ++x)
            for (int c = 0; c < 3; ++c) brighter.radiance(x, y, c) += 5.0f;
    const ObjectLayer a = render_object(placed, K, CameraPose{}, env, rs);
    const ObjectLayer b = render_object(placed, K, CameraPose{}, doubled, rs);
    const ObjectLayer c = render_object(placed, K, CameraPose{}, brighter, rs);
    int covered = 0;
    for (int y = 0; y < 25; ++y)
        for (int x = 0; x < 25; ++x) {
            if (a.rgba(x, y, 3) > 0) ++covered;
            for (int ch = 0; ch < 3; ++ch) {
                EXPECT_EQ(b.rgba(x, y, ch), 2.0f * a.rgba(x, y, ch));
                EXPECT_GE(c.rgba(x, y, ch), a.rgba(x, y, ch));
            }
        }
    EXPECT_GT(covered, 20);
    // Same seed, same bits.
    EXPECT_EQ(render_object(placed, K, CameraPose{}, env, rs).rgba, a.rgba);
}

namespace {

struct ShadowScene {
    ObjectMesh sphere = make_uv_sphere(1.0, 64, 32);
    Plane ground{Vector3d::UnitZ(), 0.0};
    Matrix3d K = intrinsics(60, 47.5, 35.5);
    CameraPose camera = look_at(Vector3d(0.5, -5, 4), Vector3d(0, 0, 0.5));
    ShadowSettings hard{96, 72, 1, 0.0, 0};
};

}  // namespace

TEST(CastShadow, HardShadowMatchesRayCastOracle) {
    ShadowScene s;
    const PlacedMesh placed(s.sphere, at(Vector3d(0, 0, 1)));
    const Vector3d sun = Vector3d::UnitZ();
    const ImageF shadow = cast_shadow(placed, s.ground, sun, s.K, s.camera, s.hard);

    std::vector<Vector3d> world;
    for (const auto& v : s.sphere.vertices) world.push_back(v + Vector3d(0, 0, 1));
    const Vector3d eye = s.camera.center();
    int mismatches = 0, shadowed = 0;
    double max_radius = 0.0;  // of shadowed ground points around the sphere's foot
    for (int y = 0; y < 72; ++y)
        for (int x = 0; x < 96; ++x) {
            const Vector3d d = pixel_ray_direction(s.K, s.camera, Vector2d(x, y));
            const auto q = ray_plane_intersect(eye, d, s.ground);
            float expect = 0.0f;
            if (q && !brute_force_hit(world, s.sphere.triangles, eye, d, 0.0, (*q - eye).norm() * (1 - 1e-9)) &&
                brute_force_hit(world, s.sphere.triangles, *q, sun, 1e-9, INFINITY)) {
                expect = 1.0f;
            }
            if (shadow(x, y) != expect) ++mismatches;
            if (shadow(x, y) > 0 && q) {
                ++shadowed;
                const double r = q->head<2>().norm();
                EXPECT_LE(r, 1.0 + 1e-9);
                max_radius = std::max(max_radius, r);
            }
            EXPECT_TRUE(shadow(x, y) >= 0.0f && shadow(x, y) <= 1.0f);
        }
    EXPECT_EQ(mismatches, 0);
    EXPECT_GT(shadowed, 30);
    // The visible part of the disc reaches out to its one-metre rim.
    EXPECT_GT(max_radius, 0.95);
}

TEST(CastShadow, TrivialCases) {
    ShadowScene s;
    const PlacedMesh empty;
    const ImageF none = cast_shadow(empty, s.ground, Vector3d::UnitZ(), s.K, s.camera, s.hard);
    for (float v : none.data()) EXPECT_EQ(v, 0.0f);
    const PlacedMesh placed(s.sphere, at(Vector3d(0, 0, 1)));
    const ImageF night = cast_shadow(placed, s.ground, Vector3d(0.3, 0, -1).normalized(), s.K, s.camera, s.hard);
    for (float v : night.data()) EXPECT_EQ(v, 0.0f);
}

TEST(CastShadow, SofterLightNeverDeepensUmbraCentre) {
    ShadowScene s;
    const PlacedMesh placed(s.sphere, at(Vector3d(0, 0, 1.5)));
    const Vector3d sun = Vector3d(0.6, 0.0, 1.0).normalized();
    // Ground point whose sun ray passes through the sphere centre.
    const Vector3d ground_point = Vector3d(0, 0, 1.5) - 1.5 / sun.z() * sun;
    const auto p = project_point(s.K, s.camera, ground_point);
    const int px = int(std::lround(p.pixel.x())), py = int(std::lround(p.pixel.y()));
    float prev = 2.0f;
    for (double radius : {0.0, 0.1, 0.3, 0.6, 1.0}) {
        ShadowSettings soft = s.hard;
        soft.samples = 64;
        soft.angular_radius = radius;
        const ImageF shadow = cast_shadow(placed, s.ground, sun, s.K, s.camera, soft);
        for (float v : shadow.data()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
        EXPECT_LE(shadow(px, py), prev) << radius;
        prev = shadow(px, py);
    }
    EXPECT_LT(prev, 1.0f);
}

TEST(CastShadow, SceneDepthHidesShadow) {
    ShadowScene s;
    const PlacedMesh placed(s.sphere, at(Vector3d(0, 0, 1)));
    ShadowSettings occluded = s.hard;
    DepthMap near(96, 72, 1, 0.5f);  // a wall right in front of the camera
    occluded.scene_depth = &near;
    const ImageF shadow = cast_shadow(placed, s.ground, Vector3d::UnitZ(), s.K, s.camera, occluded);
    for (float v : shadow.data()) EXPECT_EQ(v, 0.0f);
}

TEST(CompositeFrame, Examples) {
    const int w = 4, h = 3;
    ImageF bg(w, h, 3, 0.5f);
    ObjectLayer layer{ImageF(w, h, 4, 0.0f), DepthMap(w, h, 1, kInf)};
    ImageF shadow(w, h, 1, 0.0f);
    const DepthMap scene(w, h, 1, 10.0f);

    // Nothing to add: background passes through untouched.
    auto out = composite_frame(bg, layer, shadow, scene, 0.7);
    EXPECT_EQ(out.rgb, bg);

    // Opaque nearer object wins outright.
    for (int c = 0; c < 3; ++c) layer.rgba(1, 1, c) = 0.1f * (c + 1);
    layer.rgba(1, 1, 3) = 1.0f;
    layer.depth(1, 1) = 3.0f;
    // Object behind scene geometry is hidden.
    layer.rgba(2, 1, 0) = 0.9f;
    layer.rgba(2, 1, 3) = 1.0f;
    layer.depth(2, 1) = 12.0f;
    shadow(0, 0) = 1.0f;
    shadow(1, 1) = 1.0f;
    out = composite_frame(bg, layer, shadow, scene, 0.6);
    for (int c = 0; c < 3; ++c) EXPECT_FLOAT_EQ(out.rgb(1, 1, c), 0.1f * (c + 1));
    EXPECT_EQ(out.object_mask(1, 1), 1.0f);
    EXPECT_EQ(out.shadow_mask(1, 1), 0.0f);
    EXPECT_EQ(out.rgb(2, 1, 0), 0.5f);
    EXPECT_EQ(out.object_mask(2, 1), 0.0f);
    EXPECT_NEAR(out.rgb(0, 0, 0), 0.2f, 1e-6);
    EXPECT_EQ(out.shadow_mask(0, 0), 1.0f);
    for (float v : out.object_mask.data()) EXPECT_TRUE(v >= 0 && v <= 1);
}

TEST(CompositeFrame, InfiniteSceneDepthKeepsRawCoverage) {
    const int w = 5, h = 5;
    ObjectLayer layer{ImageF(w, h, 4, 0.3f), DepthMap(w, h, 1, 50.0f)};
    for (int i = 0; i < w * h; ++i) layer.rgba.data()[i * 4 + 3] = (i % 5) / 4.0f;
    const auto out = composite_frame(ImageF(w, h, 3, 0.1f), layer, ImageF(w, h, 1, 0.0f),
                                     DepthMap(w, h, 1, kInf), 0.7);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) EXPECT_EQ(out.object_mask(x, y), layer.rgba(x, y, 3));
    // Zero depth counts as "no geometry" as well.
    const auto zero = composite_frame(ImageF(w, h, 3, 0.1f), layer, ImageF(w, h, 1, 0.0f),
                                      DepthMap(w, h, 1, 0.0f), 0.7);
    EXPECT_EQ(zero.object_mask, out.object_mask);
}

TEST(CompositeFrame, DimensionMismatch) {
    ObjectLayer layer{ImageF(4, 4, 4, 0.0f), DepthMap(4, 4, 1, kInf)};
    try {
        composite_frame(ImageF(4, 3, 3), layer, ImageF(4, 4, 1), DepthMap(4, 4, 1), 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
}
