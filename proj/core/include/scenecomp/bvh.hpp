// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <limits>
#include <optional>
#include <vector>

namespace scenecomp {

struct Ray {
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
};

struct RayHit {
    double t = 0.0;
    int triangle = -1;
    double b1 = 0.0;  // barycentric weight of vertex 1
    double b2 = 0.0;  // barycentric weight of vertex 2
};

/// Moller-Trumbore, two-sided. Returns the ray parameter and barycentrics.
bool intersect_triangle(const Ray& ray, const Eigen::Vector3d& v0, const Eigen::Vector3d& v1,
                        const Eigen::Vector3d& v2, double& t, double& b1, double& b2);

/// Axis-aligned bounding volume hierarchy over a static triangle soup.
/// Immutable after construction; queries are thread-safe.
class TriangleBvh {
public:
    TriangleBvh() = default;
    TriangleBvh(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> triangles);

    bool empty() const { return triangles_.empty(); }
    const std::vector<Eigen::Vector3d>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

    std::optional<RayHit> closest_hit(const Ray& ray) const;
    bool any_hit(const Ray& ray) const;

    Eigen::Vector3d bounds_min() const;
    Eigen::Vector3d bounds_max() const;

private:
    struct Node {
        Eigen::Vector3d lo, hi;
        int first = 0;   // leaf: first index into order_; inner: right child
        int count = 0;   // > 0 marks a leaf
    };

    int build(int begin, int end, std::vector<Eigen::Vector3d>& centroids);
    template <bool AnyHit>
    bool traverse(const Ray& ray, RayHit* best) const;

    std::vector<Eigen::Vector3d> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace scenecomp
