// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using Eigen::Vector3d;

namespace scenecomp {

// Watertight test: vertices move into a ray-aligned shear frame, where the
// three 2D edge functions of a shared edge are exact negations of each other,
// so a ray can never pass between two triangles that share that edge.
bool intersect_triangle(const Ray& ray, const Vector3d& v0, const Vector3d& v1,
                        const Vector3d& v2, double& t, double& b1, double& b2) {
    const Vector3d& d = ray.direction;
    int kz = 0;
    d.cwiseAbs().maxCoeff(&kz);
    int kx = (kz + 1) % 3, ky = (kx + 1) % 3;
    if (d[kz] < 0.0) std::swap(kx, ky);
    if (d[kz] == 0.0) return false;
    const double sx = d[kx] / d[kz], sy = d[ky] / d[kz], sz = 1.0 / d[kz];

    const Vector3d a = v0 - ray.origin, b = v1 - ray.origin, c = v2 - ray.origin;
    const double ax = a[kx] - sx * a[kz], ay = a[ky] - sy * a[kz];
    const double bx = b[kx] - sx * b[kz], by = b[ky] - sy * b[kz];
    const double cx = c[kx] - sx * c[kz], cy = c[ky] - sy * c[kz];
    const double u = cx * by - cy * bx;
    const double v = ax * cy - ay * cx;
    const double w = bx * ay - by * ax;
    if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return false;
    const double det = u + v + w;
    if (det == 0.0) return false;
    const double inv = 1.0 / det;
    t = (u * sz * a[kz] + v * sz * b[kz] + w * sz * c[kz]) * inv;
    b1 = v * inv;
    b2 = w * inv;
    return t >= ray.t_min && t <= ray.t_max;
}

namespace {

bool slab_test(const Vector3d& lo, const Vector3d& hi, const Vector3d& origin,
               const Vector3d& inv_dir, double t_min, double t_max) {
    for (int a = 0; a < 3; ++a) {
        double t0 = (lo[a] - origin[a]) * inv_dir[a];
        double t1 = (hi[a] - origin[a]) * inv_dir[a];
        if (t0 > t1) std::swap(t0, t1);
        // NaN from 0 * inf keeps the current interval.
        if (t0 > t_min) t_min = t0;
        if (t1 < t_max) t_max = t1;
        if (t_min > t_max) return false;
    }
    return true;
}

}  // namespace

TriangleBvh::TriangleBvh(std::vector<Vector3d> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    if (triangles_.empty()) return;
    order_.resize(triangles_.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<Vector3d> centroids(triangles_.size());
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
        const auto& t = triangles_[i];
        centroids[i] = (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
    }
    nodes_.reserve(2 * triangles_.size());
    build(0, static_cast<int>(order_.size()), centroids);
}

int TriangleBvh::build(int begin, int end, std::vector<Vector3d>& centroids) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Vector3d lo = Vector3d::Constant(std::numeric_limits<double>::infinity());
    Vector3d hi = -lo;
    Vector3d clo = lo, chi = hi;
    for (int i = begin; i < end; ++i) {
        const auto& t = triangles_[order_[i]];
        for (int k : t) {
            lo = lo.cwiseMin(vertices_[k]);
            hi = hi.cwiseMax(vertices_[k]);
        }
        clo = clo.cwiseMin(centroids[order_[i]]);
        chi = chi.cwiseMax(centroids[order_[i]]);
    }
    // Pad so flat boxes still pass the slab test robustly.
    const Vector3d pad = Vector3d::Constant(1e-9 * (1.0 + (hi - lo).norm()));
    nodes_[index].lo = lo - pad;
    nodes_[index].hi = hi + pad;
    const int count = end - begin;
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    if (count <= 4 || chi[axis] - clo[axis] <= 0.0) {
        nodes_[index].first = begin;
        nodes_[index].count = count;
        return index;
    }
    const int mid = begin + count / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         if (centroids[a][axis] != centroids[b][axis]) {
                             return centroids[a][axis] < centroids[b][axis];
                         }
                         return a < b;
                     });
    build(begin, mid, centroids);  // left child is index + 1
    const int right = build(mid, end, centroids);
    nodes_[index].first = right;
    nodes_[index].count = 0;
    return index;
}

template <bool AnyHit>
bool TriangleBvh::traverse(const Ray& ray, RayHit* best) const {
    if (nodes_.empty()) return false;
    const Vector3d inv_dir = ray.direction.cwiseInverse();
    double t_max = ray.t_max;
    bool found = false;
    int stack[128];
    int sp = 0;
    stack[sp++] = 0;
    Ray local = ray;
    while (sp > 0) {
        const Node& node = nodes_[stack[--sp]];
        if (!slab_test(node.lo, node.hi, ray.origin, inv_dir, ray.t_min, t_max)) continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                const int tri = order_[i];
                const auto& t = triangles_[tri];
                double th, b1, b2;
                local.t_max = t_max;
                if (intersect_triangle(local, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]], th,
                                       b1, b2)) {
                    if constexpr (AnyHit) return true;
                    // Equal distances resolve to the lower triangle index.
                    if (!found || th < t_max || (th == t_max && tri < best->triangle)) {
                        found = true;
                        t_max = th;
                        *best = {th, tri, b1, b2};
                    }
                }
            }
        } else {
            const int self = static_cast<int>(&node - nodes_.data());
            stack[sp++] = node.first;
            stack[sp++] = self + 1;
        }
    }
    return found;
}

std::optional<RayHit> TriangleBvh::closest_hit(const Ray& ray) const {
    RayHit hit;
    if (traverse<false>(ray, &hit)) return hit;
    return std::nullopt;
}

bool TriangleBvh::any_hit(const Ray& ray) const { return traverse<true>(ray, nullptr); }

Vector3d TriangleBvh::bounds_min() const {
    return nodes_.empty() ? Vector3d::Zero() : nodes_.front().lo;
}

Vector3d TriangleBvh::bounds_max() const {
    return nodes_.empty() ? Vector3d::Zero() : nodes_.front().hi;
}

}  // namespace scenecomp
