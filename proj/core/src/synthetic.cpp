// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace scenecomp {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kRoadHalfWidth = 3.5;
constexpr double kLineHalfWidth = 0.08;

struct GroundSample {
    Vector3d rgb;
    int cls;
};

// World-fixed multi-scale texture. Frequencies stay low enough for the
// supersampled renderer near the camera; content never depends on the
// viewpoint, so brightness constancy holds exactly between frames.
double asphalt(double x, double y) {
    static constexpr double kWaves[][4] = {
        // kx, ky (rad/m), phase, amplitude
        {2.1, 0.7, 0.0, 0.050},  {-2.9, 1.3, 1.0, 0.045}, {4.3, 3.1, 2.0, 0.045},
        {0.5, 5.7, 0.4, 0.040},  {7.9, -4.1, 2.7, 0.040}, {-6.3, -8.2, 1.9, 0.035},
        {11.7, 5.3, 0.8, 0.030}, {-3.8, 13.1, 2.2, 0.030},
    };
    double v = 0.30;
    for (const auto& w : kWaves) v += w[3] * std::sin(w[0] * x + w[1] * y + w[2]);
    return v;
}

// Fraction of [a, b] covered after Gaussian blur of width sigma centred at t.
double blurred_interval(double t, double a, double b, double sigma) {
    const double s = std::numbers::sqrt2 * sigma;
    return 0.5 * (std::erf((b - t) / s) - std::erf((a - t) / s));
}

// Markings have soft world-space edges so no edge is sharper than the
// supersampling can resolve near the camera.
GroundSample ground(double x, double y) {
    constexpr double kEdgeSigma = 0.03;
    const double ay = std::abs(y);
    const double edge = blurred_interval(ay, kRoadHalfWidth - kLineHalfWidth, kRoadHalfWidth + kLineHalfWidth, kEdgeSigma);
    const double phase = std::fmod(std::fmod(x, 6.0) + 6.0, 6.0);
    // Neighbouring dashes matter only at the period wrap.
    const double dash = blurred_interval(phase, 0.0, 3.0, kEdgeSigma) + blurred_interval(phase, 6.0, 9.0, kEdgeSigma) +
                        blurred_interval(phase, -6.0, -3.0, kEdgeSigma);
    const double center = blurred_interval(y, -kLineHalfWidth, kLineHalfWidth, kEdgeSigma) * dash;
    const double line = std::clamp(edge + center, 0.0, 1.0);

    const double on_road = blurred_interval(ay, -kRoadHalfWidth, kRoadHalfWidth, kEdgeSigma);
    const double road_v = asphalt(x, y);
    const double g = 0.5 * asphalt(0.8 * x + 3.0, 0.8 * y);
    const Vector3d road_rgb(road_v, road_v, 1.05 * road_v);
    const Vector3d verge_rgb(0.6 * g, 1.1 * g + 0.05, 0.4 * g);
    const double lv = 0.75 + 0.05 * std::sin(3.0 * x);
    const Vector3d lane_rgb(lv, lv, 0.97 * lv);
    const Vector3d base = on_road * road_rgb + (1.0 - on_road) * verge_rgb;
    const Vector3d rgb = line * lane_rgb + (1.0 - line) * base;

    const bool edge_line = std::abs(ay - kRoadHalfWidth) < kLineHalfWidth;
    const bool center_line = ay < kLineHalfWidth && phase < 3.0;
    const int cls = (edge_line || center_line) ? kClassLane : (ay < kRoadHalfWidth ? kClassRoad : kClassVerge);
    return {rgb, cls};
}

Vector3d sky(const Vector3d& dir, const Vector3d& sun) {
    const double up = std::clamp(dir.z(), 0.0, 1.0);
    Vector3d c = (1.0 - up) * Vector3d(0.55, 0.62, 0.75) + up * Vector3d(0.22, 0.36, 0.70);
    const double cosang = dir.normalized().dot(sun);
    const double disc = std::cos(2.0 * kDeg);
    if (cosang > disc) return Vector3d::Ones();
    const double glow = std::exp(-(1.0 - cosang) * 80.0);
    return (c + 0.3 * glow * Vector3d::Ones()).cwiseMin(1.0);
}

Vector3d hit_ground(const Vector3d& c, const Vector3d& dir) { return c - (c.z() / dir.z()) * dir; }

Matrix3d random_rotation(std::mt19937_64& rng, double angle) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vector3d axis(n(rng), n(rng), n(rng));
    axis.normalize();
    return rotation_from_axis_angle(axis * angle);
}

Vector3d random_direction(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Vector3d(n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

CameraPose synthetic_camera_pose(const SyntheticSceneOptions& o, int n) {
    const double p = o.pitch_deg * kDeg;
    const Vector3d x_cam(0.0, -1.0, 0.0);
    const Vector3d z_cam(std::cos(p), 0.0, -std::sin(p));
    const Vector3d y_cam = z_cam.cross(x_cam);
    Matrix3d R_cw;
    R_cw.col(0) = x_cam;
    R_cw.col(1) = y_cam;
    R_cw.col(2) = z_cam;
    return CameraPose::from_camera_to_world(R_cw, Vector3d(n * o.step, 0.0, o.camera_height));
}

SyntheticScene make_synthetic_scene(const SyntheticSceneOptions& o) {
    SyntheticScene out;
    ScenePackage& s = out.scene;
    const int frames = o.n_target + o.n_reference;
    s.K << o.focal, 0.0, 0.5 * (o.width - 1), 0.0, o.focal, 0.5 * (o.height - 1), 0.0, 0.0, 1.0;
    s.frame_rate = o.frame_rate;
    s.n_target = o.n_target;
    s.n_reference = o.n_reference;
    s.decode_gamma = 2.2;
    s.class_ids = {{"road", kClassRoad}, {"lane", kClassLane}, {"sky", kClassSky}, {"verge", kClassVerge}};
    const double el = o.sun_elevation_deg * kDeg, az = o.sun_azimuth_deg * kDeg;
    out.toward_sun = Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));

    const Matrix3d Kinv = s.K.inverse();
    const int ss = std::max(1, o.supersample);
    for (int n = 0; n < frames; ++n) {
        const CameraPose pose = synthetic_camera_pose(o, n);
        out.true_poses.push_back(pose);
        const Vector3d c = pose.center();
        const Matrix3d R_cw = pose.R.transpose();
        ImageF img(o.width, o.height, 3);
        DepthMap depth(o.width, o.height, 1, 0.0f);
        ClassMask mask(o.width, o.height, 1, kClassSky);
        for (int y = 0; y < o.height; ++y)
            for (int x = 0; x < o.width; ++x) {
                Vector3d acc = Vector3d::Zero();
                for (int sy = 0; sy < ss; ++sy)
                    for (int sx = 0; sx < ss; ++sx) {
                        const double u = x + (sx + 0.5) / ss - 0.5;
                        const double v = y + (sy + 0.5) / ss - 0.5;
                        const Vector3d dir = R_cw * (Kinv * Vector3d(u, v, 1.0));
                        if (dir.z() < 0.0) {
                            const Vector3d p = hit_ground(c, dir);
                            acc += ground(p.x(), p.y()).rgb;
                        } else {
                            acc += sky(dir, out.toward_sun);
                        }
                    }
                acc /= double(ss * ss);
                for (int ch = 0; ch < 3; ++ch) img(x, y, ch) = static_cast<float>(acc[ch]);
                const Vector3d ray_cam = Kinv * Vector3d(x, y, 1.0);
                const Vector3d dir = R_cw * ray_cam;
                if (dir.z() < 0.0) {
                    const double t = -c.z() / dir.z();
                    const Vector3d p = c + t * dir;
                    depth(x, y) = static_cast<float>(t * ray_cam.z());
                    mask(x, y) = static_cast<std::uint16_t>(ground(p.x(), p.y()).cls);
                }
            }
        s.frames.push_back(std::move(img));
        s.depth_maps.push_back(std::move(depth));
        s.seg_masks.push_back(std::move(mask));
        s.frame_names.push_back("synthetic_" + std::to_string(n));
    }

    s.poses = out.true_poses;
    if (o.jitter_rotation_deg > 0.0 || o.jitter_translation > 0.0) {
        std::mt19937_64 rng(o.seed);
        for (int n = 0; n < o.n_target; ++n) {
            const Matrix3d dR = random_rotation(rng, o.jitter_rotation_deg * kDeg);
            const Vector3d dt = random_direction(rng) * o.jitter_translation;
            CameraPose& p = s.poses[n];
            // Perturb the camera-to-world motion: rotate about the camera center, then shift it.
            const Matrix3d R_cw = p.R.transpose() * dR;
            p = CameraPose::from_camera_to_world(R_cw, p.center() + dt);
        }
    }
    return out;
}

ObjectMesh synthetic_object() {
    return make_box(Vector3d(1.0, 1.0, 1.0), Vector3d(0.75, 0.18, 0.12));
}

}  // namespace scenecomp
