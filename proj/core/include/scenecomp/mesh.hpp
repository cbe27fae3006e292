// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scenecomp/raster.hpp"

namespace scenecomp {

struct Material {
    std::string name = "default";
    Eigen::Vector3d albedo{0.8, 0.8, 0.8};  // Lambertian reflectance in [0, 1]
    std::optional<ImageF> texture;           // linear RGB, sampled by vertex UVs
    std::string texture_file;                // as referenced by the source file
};

/// Triangle mesh in the object frame (meters). Vertices carry unit normals and,
/// optionally, UVs; each triangle references a material.
struct ObjectMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3d> normals;
    std::vector<Eigen::Vector2d> uvs;  // empty or one per vertex
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> triangle_material;  // one per triangle
    std::vector<Material> materials;     // at least one when triangles exist

    bool empty() const { return triangles.empty(); }

    /// Albedo at barycentric (b1, b2) of triangle tri (texture-modulated if present).
    Eigen::Vector3d albedo_at(std::size_t tri, double b1, double b2) const;

    /// Throws ParseError on out-of-range indices or mismatched attribute arrays.
    void validate() const;
};

struct MeshLoadOptions {
    double degenerate_area = 1e-12;        // m^2; smaller triangles count as zero-area
    double max_degenerate_fraction = 0.1;  // more than this raises DegenerateMesh
    double texture_gamma = 2.2;
};

/// Loads Wavefront OBJ (with optional .mtl: Kd, map_Kd) or PLY (ascii or
/// binary_little_endian). Missing normals are computed (area-weighted).
/// Zero-area triangles are dropped while their share stays within the limit.
ObjectMesh load_mesh(const std::filesystem::path& path, const MeshLoadOptions& options = {});

/// OBJ writer; emits a sibling .mtl (and texture PNGs) when materials exist.
void save_obj(const std::filesystem::path& path, const ObjectMesh& mesh);
/// ASCII PLY writer (positions, normals, UVs; materials are not stored).
void save_ply(const std::filesystem::path& path, const ObjectMesh& mesh);

/// Area-weighted per-vertex normals. Unreferenced vertices get +Z.
std::vector<Eigen::Vector3d> compute_vertex_normals(
    const std::vector<Eigen::Vector3d>& vertices,
    const std::vector<std::array<int, 3>>& triangles);

/// Axis-aligned box centered at the origin.
ObjectMesh make_box(const Eigen::Vector3d& size, const Eigen::Vector3d& albedo = {0.8, 0.8, 0.8});
/// UV sphere centered at the origin with outward normals.
ObjectMesh make_uv_sphere(double radius, int segments, int rings,
                          const Eigen::Vector3d& albedo = {0.8, 0.8, 0.8});

}  // namespace scenecomp
