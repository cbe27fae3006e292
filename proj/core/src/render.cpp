// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/render.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "scenecomp/error.hpp"

namespace scenecomp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double unit_from_bits(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

double radical_inverse2(std::uint32_t i) {
    std::uint32_t b = i;
    b = (b << 16) | (b >> 16);
    b = ((b & 0x00ff00ffu) << 8) | ((b & 0xff00ff00u) >> 8);
    b = ((b & 0x0f0f0f0fu) << 4) | ((b & 0xf0f0f0f0u) >> 4);
    b = ((b & 0x33333333u) << 2) | ((b & 0xccccccccu) >> 2);
    b = ((b & 0x55555555u) << 1) | ((b & 0xaaaaaaaau) >> 1);
    return static_cast<double>(b) * 0x1.0p-32;
}

/// Cranley-Patterson rotated Hammersley point i of n.
Eigen::Vector2d hammersley(int i, int n, const Eigen::Vector2d& shift) {
    double u = (i + 0.5) / n + shift.x();
    double v = radical_inverse2(static_cast<std::uint32_t>(i)) + shift.y();
    return {u - std::floor(u), v - std::floor(v)};
}

Eigen::Vector2d pixel_shift(std::uint64_t seed, std::uint64_t stream, std::uint64_t pixel) {
    const std::uint64_t h = mix64(seed ^ mix64(stream ^ mix64(pixel)));
    return {unit_from_bits(h), unit_from_bits(mix64(h))};
}

void orthonormal_basis(const Vector3d& n, Vector3d& t, Vector3d& b) {
    const Vector3d a = std::abs(n.x()) > 0.9 ? Vector3d::UnitY() : Vector3d::UnitX();
    t = n.cross(a).normalized();
    b = n.cross(t);
}

double ray_epsilon(const Vector3d& p) { return 1e-7 * (1.0 + p.cwiseAbs().maxCoeff()); }

}  // namespace

PlacedMesh::PlacedMesh(const ObjectMesh& mesh, const RigidTransform& object_to_world)
    : mesh_(&mesh), transform_(object_to_world) {
    std::vector<Vector3d> world(mesh.vertices.size());
    for (std::size_t i = 0; i < world.size(); ++i) world[i] = object_to_world.apply(mesh.vertices[i]);
    world_normals_.resize(mesh.normals.size());
    for (std::size_t i = 0; i < world_normals_.size(); ++i) {
        world_normals_[i] = (object_to_world.R * mesh.normals[i]).normalized();
    }
    bvh_ = TriangleBvh(std::move(world), mesh.triangles);
}

Vector3d PlacedMesh::shading_normal(const RayHit& hit) const {
    const auto& t = mesh_->triangles[hit.triangle];
    const Vector3d n = (1.0 - hit.b1 - hit.b2) * world_normals_[t[0]] +
                       hit.b1 * world_normals_[t[1]] + hit.b2 * world_normals_[t[2]];
    const double len = n.norm();
    return len > 0.0 ? Vector3d(n / len) : geometric_normal(hit.triangle);
}

Vector3d PlacedMesh::geometric_normal(int triangle) const {
    const auto& v = bvh_.vertices();
    const auto& t = bvh_.triangles()[triangle];
    return (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]).normalized();
}

ObjectLayer render_object(const PlacedMesh& placed, const Matrix3d& K, const CameraPose& camera,
                          const HdrPanorama& env, const RenderSettings& s) {
    ObjectLayer layer{ImageF(s.width, s.height, 4, 0.0f),
                      DepthMap(s.width, s.height, 1, std::numeric_limits<float>::infinity())};
    if (placed.empty() || s.width <= 0 || s.height <= 0) return layer;
    const int samples = std::max(1, s.samples);
    const int sub = std::max(1, s.subpixels);
    const Vector3d eye = camera.center();
    const Matrix3d Kinv = K.inverse();
    const Matrix3d Rt = camera.R.transpose();
    const Vector3d forward = camera.forward();

    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const std::uint64_t pixel = static_cast<std::uint64_t>(y) * s.width + x;
            Vector3d color = Vector3d::Zero();
            int covered = 0;
            double nearest = kInf;
            for (int sy = 0; sy < sub; ++sy) {
                for (int sx = 0; sx < sub; ++sx) {
                    const double u = x + (sx + 0.5) / sub - 0.5;
                    const double v = y + (sy + 0.5) / sub - 0.5;
                    Ray ray;
                    ray.origin = eye;
                    ray.direction = (Rt * (Kinv * Vector3d(u, v, 1.0))).normalized();
                    const auto hit = placed.bvh().closest_hit(ray);
                    if (!hit) continue;
                    ++covered;
                    const Vector3d p = ray.origin + hit->t * ray.direction;
                    nearest = std::min(nearest, (p - eye).dot(forward));
                    Vector3d n = placed.shading_normal(*hit);
                    Vector3d ng = placed.geometric_normal(hit->triangle);
                    if (ng.dot(ray.direction) > 0.0) ng = -ng;
                    if (n.dot(ng) < 0.0) n = -n;
                    Vector3d tx, bx;
                    orthonormal_basis(n, tx, bx);
                    const Eigen::Vector2d shift =
                        pixel_shift(s.seed, 1, pixel * sub * sub + sy * sub + sx);
                    Vector3d irradiance_sum = Vector3d::Zero();
                    const Vector3d origin = p + ray_epsilon(p) * ng;
                    for (int i = 0; i < samples; ++i) {
                        const Eigen::Vector2d q = hammersley(i, samples, shift);
                        const double r = std::sqrt(q.x());
                        const double phi = 2.0 * kPi * q.y();
                        const double z = std::sqrt(std::max(0.0, 1.0 - q.x()));
                        const Vector3d dir =
                            (r * std::cos(phi) * tx + r * std::sin(phi) * bx + z * n).normalized();
                        Ray shadow_ray;
                        shadow_ray.origin = origin;
                        shadow_ray.direction = dir;
                        shadow_ray.t_min = 0.0;
                        if (dir.dot(ng) <= 0.0 || placed.bvh().any_hit(shadow_ray)) continue;
                        irradiance_sum += env.lookup(dir);
                    }
                    // Cosine-weighted pdf cos/pi cancels the pi in albedo/pi.
                    const Vector3d albedo =
                        placed.mesh().albedo_at(hit->triangle, hit->b1, hit->b2);
                    color += albedo.cwiseProduct(irradiance_sum) / samples;
                }
            }
            if (covered == 0) continue;
            color /= covered;
            for (int c = 0; c < 3; ++c) layer.rgba(x, y, c) = static_cast<float>(color[c]);
            layer.rgba(x, y, 3) = static_cast<float>(covered) / (sub * sub);
            layer.depth(x, y) = static_cast<float>(nearest);
        }
    }
    return layer;
}

ImageF cast_shadow(const PlacedMesh& placed, const Plane& plane, const Vector3d& toward_sun,
                   const Matrix3d& K, const CameraPose& camera, const ShadowSettings& s) {
    ImageF out(s.width, s.height, 1, 0.0f);
    if (placed.empty() || s.width <= 0 || s.height <= 0) return out;
    const Vector3d sun = toward_sun.normalized();
    // The receiving side of the plane faces the camera.
    const Vector3d eye = camera.center();
    const Vector3d up = plane.signed_distance(eye) >= 0.0 ? plane.normal : Vector3d(-plane.normal);
    if (sun.dot(up) <= 0.0) return out;
    const int samples = s.angular_radius > 0.0 ? std::max(1, s.samples) : 1;
    const double cos_max = std::cos(s.angular_radius);
    Vector3d tx, bx;
    orthonormal_basis(sun, tx, bx);
    const Matrix3d Kinv = K.inverse();
    const Matrix3d Rt = camera.R.transpose();
    const Vector3d forward = camera.forward();

    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
            const Vector3d dir = (Rt * (Kinv * Vector3d(x, y, 1.0))).normalized();
            const auto q = ray_plane_intersect(eye, dir, plane);
            if (!q) continue;
            const double dist = (*q - eye).norm();
            Ray view;
            view.origin = eye;
            view.direction = dir;
            view.t_max = dist * (1.0 - 1e-9);
            if (placed.bvh().any_hit(view)) continue;
            if (s.scene_depth) {
                const double zd = (*s.scene_depth)(x, y);
                const double zq = (*q - eye).dot(forward);
                if (zd > 0.0 && std::isfinite(zd) && zq > zd * (1.0 + s.depth_tolerance)) continue;
            }
            const Vector3d origin = *q + ray_epsilon(*q) * up;
            const Eigen::Vector2d shift =
                pixel_shift(s.seed, 2, static_cast<std::uint64_t>(y) * s.width + x);
            int blocked = 0;
            for (int i = 0; i < samples; ++i) {
                Vector3d l = sun;
                if (s.angular_radius > 0.0) {
                    const Eigen::Vector2d h = hammersley(i, samples, shift);
                    const double ct = 1.0 - h.x() * (1.0 - cos_max);
                    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
                    const double phi = 2.0 * kPi * h.y();
                    l = (st * std::cos(phi) * tx + st * std::sin(phi) * bx + ct * sun).normalized();
                }
                Ray r;
                r.origin = origin;
                r.direction = l;
                if (placed.bvh().any_hit(r)) ++blocked;
            }
            out(x, y) = static_cast<float>(blocked) / samples;
        }
    }
    return out;
}

CompositeOutput composite_frame(const ImageF& background, const ObjectLayer& layer,
                                const ImageF& shadow, const DepthMap& scene_depth,
                                double shadow_strength) {
    const int w = background.width(), h = background.height();
    if (!layer.rgba.same_shape(w, h) || !layer.depth.same_shape(w, h) || !shadow.same_shape(w, h) ||
        !scene_depth.same_shape(w, h) || layer.rgba.channels() != 4 || background.channels() != 3) {
        throw Error(ErrorKind::DimensionMismatch, "composite inputs differ in size");
    }
    const float k = static_cast<float>(std::clamp(shadow_strength, 0.0, 1.0));
    CompositeOutput out{ImageF(w, h, 3), ImageF(w, h, 1, 0.0f), ImageF(w, h, 1, 0.0f),
                        layer.depth};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float s = std::clamp(shadow(x, y), 0.0f, 1.0f);
            float alpha = std::clamp(layer.rgba(x, y, 3), 0.0f, 1.0f);
            const float zs = scene_depth(x, y);
            const bool scene_valid = zs > 0.0f && std::isfinite(zs);
            if (alpha > 0.0f && scene_valid && !(layer.depth(x, y) < zs)) alpha = 0.0f;
            const float darken = 1.0f - k * s;
            for (int c = 0; c < 3; ++c) {
                const float bg = background(x, y, c) * darken;
                out.rgb(x, y, c) =
                    alpha > 0.0f ? alpha * layer.rgba(x, y, c) + (1.0f - alpha) * bg : bg;
            }
            out.object_mask(x, y) = alpha;
            out.shadow_mask(x, y) = s * (1.0f - alpha);
        }
    }
    return out;
}

}  // namespace scenecomp
