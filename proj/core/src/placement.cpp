// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/placement.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "scenecomp/error.hpp"

namespace scenecomp {

namespace {

bool depth_valid(float z) { return z > 0.0f && std::isfinite(z); }

// Squared distance transform of a 1-D sampled function (lower envelope of parabolas).
void dt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto intersect = [&](int q, int p) {
        return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
    };
    for (int q = 1; q < n; ++q) {
        double s = intersect(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const int p = v[k];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

}  // namespace

Raster<float> distance_to_boundary(const Raster<std::uint8_t>& inside) {
    const int w = inside.width() + 2, h = inside.height() + 2;
    const double big = 1e20;
    std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < inside.height(); ++y)
        for (int x = 0; x < inside.width(); ++x)
            grid[(y + 1) * w + (x + 1)] = inside(x, y) ? big : 0.0;
    std::vector<double> f, d;
    f.resize(h);
    d.resize(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = grid[y * w + x];
        dt_1d(f, d);
        for (int y = 0; y < h; ++y) grid[y * w + x] = d[y];
    }
    f.resize(w);
    d.resize(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = grid[y * w + x];
        dt_1d(f, d);
        for (int x = 0; x < w; ++x) grid[y * w + x] = d[x];
    }
    Raster<float> out(inside.width(), inside.height(), 1);
    for (int y = 0; y < inside.height(); ++y)
        for (int x = 0; x < inside.width(); ++x)
            out(x, y) = static_cast<float>(std::sqrt(grid[(y + 1) * w + (x + 1)]));
    return out;
}

Plane fit_ground_plane(const ScenePackage& scene, const std::set<int>& allowed, int stride,
                       std::size_t max_points) {
    std::vector<Vector3d> points;
    stride = std::max(1, stride);
    const Matrix3d Kinv = scene.K.inverse();
    Vector3d mean_center = Vector3d::Zero();
    for (int n = 0; n < scene.frame_count(); ++n) {
        const CameraPose& pose = scene.poses[n];
        mean_center += pose.center();
        const DepthMap& depth = scene.depth_maps[n];
        const ClassMask& mask = scene.seg_masks[n];
        for (int y = 0; y < depth.height(); y += stride) {
            for (int x = 0; x < depth.width(); x += stride) {
                if (!depth_valid(depth(x, y)) || !allowed.contains(mask(x, y))) continue;
                const Vector3d ray = Kinv * Vector3d(x, y, 1.0);
                points.push_back(pose.to_world(ray * (depth(x, y) / ray.z())));
            }
        }
    }
    mean_center /= std::max(1, scene.frame_count());
    if (points.empty()) {
        throw Error(ErrorKind::NoPlaceableRegion, "no allowed-class pixels with valid depth");
    }
    if (max_points > 0 && points.size() > max_points) {
        const std::size_t step = (points.size() + max_points - 1) / max_points;
        std::vector<Vector3d> thinned;
        for (std::size_t i = 0; i < points.size(); i += step) thinned.push_back(points[i]);
        points = std::move(thinned);
    }
    try {
        return fit_plane(points, mean_center);
    } catch (const Error& e) {
        throw Error(ErrorKind::PlaneFitFailed, e.what());
    }
}

Vector4d select_placement_point(const ScenePackage& scene, const PlacementOptions& options) {
    switch (options.strategy) {
        case PlacementStrategy::Fixed: {
            if (!options.fixed_point) {
                throw Error(ErrorKind::InvalidConfig, "fixed placement needs a world point");
            }
            return options.fixed_point->homogeneous();
        }
        case PlacementStrategy::FutureCamera: {
            const Vector3d center = scene.poses[scene.reference_index()].center();
            if (!options.drop_to_ground) return center.homogeneous();
            const Plane ground = fit_ground_plane(scene, options.allowed_classes,
                                                  options.plane_stride, options.max_plane_points);
            return ground.project(center).homogeneous();
        }
        case PlacementStrategy::MaskRegion: {
            const int n = std::max(0, scene.n_target - 1);
            const ClassMask& mask = scene.seg_masks[n];
            const DepthMap& depth = scene.depth_maps[n];
            Raster<std::uint8_t> inside(mask.width(), mask.height(), 1, 0);
            for (int y = 0; y < mask.height(); ++y)
                for (int x = 0; x < mask.width(); ++x)
                    inside(x, y) = options.allowed_classes.contains(mask(x, y)) ? 1 : 0;
            const Raster<float> dist = distance_to_boundary(inside);
            int best_x = -1, best_y = -1;
            float best = -1.0f;
            for (int y = 0; y < mask.height(); ++y) {
                for (int x = 0; x < mask.width(); ++x) {
                    if (!inside(x, y) || !depth_valid(depth(x, y))) continue;
                    if (dist(x, y) > best) {
                        best = dist(x, y);
                        best_x = x;
                        best_y = y;
                    }
                }
            }
            if (best_x < 0) {
                throw Error(ErrorKind::NoPlaceableRegion,
                            "no allowed pixel with valid depth in frame " + std::to_string(n));
            }
            return backproject_pixel(scene.K, scene.poses[n], Vector2d(best_x, best_y),
                                     depth(best_x, best_y))
                .homogeneous();
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown placement strategy");
}

bool occlusion_check(const ClassMask& mask, const Vector2d& pixel, const std::set<int>& allowed) {
    if (!pixel.allFinite()) return false;
    const double rx = std::round(pixel.x());
    const double ry = std::round(pixel.y());
    if (rx < 0.0 || ry < 0.0 || rx >= mask.width() || ry >= mask.height()) return false;
    return allowed.contains(mask(static_cast<int>(rx), static_cast<int>(ry)));
}

PlacementTrack build_track(const ScenePackage& scene, const Vector4d& anchor_world,
                           const std::set<int>& allowed) {
    return build_track(scene, scene.poses, anchor_world, allowed);
}

PlacementTrack build_track(const ScenePackage& scene, const std::vector<CameraPose>& poses,
                           const Vector4d& anchor_world, const std::set<int>& allowed) {
    PlacementTrack track;
    track.anchor_world = anchor_world;
    track.entries.resize(scene.n_target);
    for (int n = 0; n < scene.n_target; ++n) {
        const Projection p = project_point(scene.K, poses[n], anchor_world);
        TrackEntry& e = track.entries[n];
        e.pixel = p.pixel;
        e.depth = p.depth;
        e.visible = p.in_front;
        e.valid_class = e.visible && occlusion_check(scene.seg_masks[n], e.pixel, allowed);
    }
    return track;
}

ObjectFrame place_object(const std::vector<Vector3d>& mesh_vertices, const Vector4d& anchor,
                         const Plane& ground, const CameraPose& reference_camera,
                         const ObjectPlacementOptions& options) {
    // Mesh coordinates -> canonical (forward, left, up).
    Matrix3d to_canonical = Matrix3d::Identity();
    if (options.up_axis == ObjectPlacementOptions::UpAxis::Y) {
        to_canonical << 1, 0, 0,
                        0, 0, -1,
                        0, 1, 0;
    }
    const Vector3d cam = reference_camera.center();
    const Vector3d up = ground.signed_distance(cam) >= 0.0 ? ground.normal : Vector3d(-ground.normal);
    Vector3d heading = reference_camera.forward();
    heading -= heading.dot(up) * up;
    if (heading.norm() < 1e-9) {
        // Camera looking straight along the normal: fall back to its image x axis.
        heading = reference_camera.R.row(0).transpose();
        heading -= heading.dot(up) * up;
    }
    heading.normalize();
    if (options.yaw_deg) {
        const double yaw = *options.yaw_deg * std::numbers::pi / 180.0;
        heading = Eigen::AngleAxisd(yaw, up) * heading;
    }
    const Vector3d left = up.cross(heading);
    Matrix3d world_axes;
    world_axes.col(0) = heading;
    world_axes.col(1) = left;
    world_axes.col(2) = up;

    ObjectFrame frame;
    frame.R = options.scale * world_axes * to_canonical;
    double min_up = 0.0;
    bool first = true;
    for (const auto& v : mesh_vertices) {
        const double h = options.scale * (to_canonical * v).z();
        if (first || h < min_up) min_up = h;
        first = false;
    }
    Vector3d base = anchor.head<3>() / anchor.w();
    if (options.snap_to_plane) base = ground.project(base);
    frame.t = base + up * (options.ground_offset - min_up);
    return frame;
}

}  // namespace scenecomp
