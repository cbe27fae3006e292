// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include "scenecomp/error.hpp"
#include "scenecomp/raster_io.hpp"

namespace fs = std::filesystem;
using Eigen::Vector2d;
using Eigen::Vector3d;

namespace scenecomp {

Vector3d ObjectMesh::albedo_at(std::size_t tri, double b1, double b2) const {
    const int mi = triangle_material.empty() ? 0 : triangle_material[tri];
    if (materials.empty()) return {0.8, 0.8, 0.8};
    const Material& m = materials[mi];
    if (!m.texture || uvs.empty()) return m.albedo;
    const auto& t = triangles[tri];
    const Vector2d uv = (1.0 - b1 - b2) * uvs[t[0]] + b1 * uvs[t[1]] + b2 * uvs[t[2]];
    const ImageF& tex = *m.texture;
    // Repeat wrap; v = 0 at the bottom row as in OBJ.
    const double u = uv.x() - std::floor(uv.x());
    const double v = uv.y() - std::floor(uv.y());
    const double px = u * tex.width() - 0.5;
    const double py = (1.0 - v) * tex.height() - 0.5;
    Vector3d out;
    for (int c = 0; c < 3; ++c) {
        out[c] = m.albedo[c] * sample_bilinear(tex, px, py, std::min(c, tex.channels() - 1));
    }
    return out;
}

void ObjectMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& t : triangles) {
        for (int i : t) {
            if (i < 0 || i >= n) throw Error(ErrorKind::ParseError, "triangle index out of range");
        }
    }
    if (normals.size() != vertices.size()) {
        throw Error(ErrorKind::ParseError, "normal count does not match vertex count");
    }
    if (!uvs.empty() && uvs.size() != vertices.size()) {
        throw Error(ErrorKind::ParseError, "uv count does not match vertex count");
    }
    if (triangle_material.size() != triangles.size()) {
        throw Error(ErrorKind::ParseError, "material assignment count mismatch");
    }
    for (int m : triangle_material) {
        if (m < 0 || m >= static_cast<int>(materials.size())) {
            throw Error(ErrorKind::ParseError, "material index out of range");
        }
    }
}

std::vector<Vector3d> compute_vertex_normals(const std::vector<Vector3d>& vertices,
                                             const std::vector<std::array<int, 3>>& triangles) {
    std::vector<Vector3d> acc(vertices.size(), Vector3d::Zero());
    for (const auto& t : triangles) {
        // Cross product length is twice the area: area weighting for free.
        const Vector3d n =
            (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
        for (int i : t) acc[i] += n;
    }
    for (auto& n : acc) {
        const double len = n.norm();
        n = len > 0.0 ? Vector3d(n / len) : Vector3d::UnitZ();
    }
    return acc;
}

namespace {

double triangle_area(const ObjectMesh& m, const std::array<int, 3>& t) {
    return 0.5 * (m.vertices[t[1]] - m.vertices[t[0]])
                     .cross(m.vertices[t[2]] - m.vertices[t[0]])
                     .norm();
}

void finalize_mesh(ObjectMesh& mesh, bool have_normals, const MeshLoadOptions& opt,
                   const std::string& source) {
    if (mesh.materials.empty()) mesh.materials.push_back(Material{});
    if (mesh.triangle_material.size() != mesh.triangles.size()) {
        mesh.triangle_material.assign(mesh.triangles.size(), 0);
    }
    const int nv = static_cast<int>(mesh.vertices.size());
    for (const auto& t : mesh.triangles) {
        for (int i : t) {
            if (i < 0 || i >= nv) {
                throw Error(ErrorKind::ParseError, source + ": triangle index out of range");
            }
        }
    }
    std::size_t degenerate = 0;
    for (const auto& t : mesh.triangles) {
        if (triangle_area(mesh, t) < opt.degenerate_area) ++degenerate;
    }
    if (!mesh.triangles.empty() && static_cast<double>(degenerate) >
                                       opt.max_degenerate_fraction * mesh.triangles.size()) {
        throw Error(ErrorKind::DegenerateMesh,
                    source + ": " + std::to_string(degenerate) + " of " +
                        std::to_string(mesh.triangles.size()) + " triangles have zero area");
    }
    if (degenerate > 0) {
        std::vector<std::array<int, 3>> tris;
        std::vector<int> mats;
        for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
            if (triangle_area(mesh, mesh.triangles[i]) >= opt.degenerate_area) {
                tris.push_back(mesh.triangles[i]);
                mats.push_back(mesh.triangle_material[i]);
            }
        }
        mesh.triangles = std::move(tris);
        mesh.triangle_material = std::move(mats);
    }
    if (have_normals && mesh.normals.size() == mesh.vertices.size()) {
        for (auto& n : mesh.normals) {
            const double len = n.norm();
            if (!(len > 1e-12) || !std::isfinite(len)) {
                have_normals = false;
                break;
            }
            n /= len;
        }
    } else {
        have_normals = false;
    }
    if (!have_normals) mesh.normals = compute_vertex_normals(mesh.vertices, mesh.triangles);
    mesh.validate();
}

// ---- OBJ -----------------------------------------------------------------

int resolve_obj_index(long idx, std::size_t count, const std::string& source) {
    const long n = static_cast<long>(count);
    const long resolved = idx > 0 ? idx - 1 : n + idx;
    if (idx == 0 || resolved < 0 || resolved >= n) {
        throw Error(ErrorKind::ParseError, source + ": face index " + std::to_string(idx) +
                                               " out of range");
    }
    return static_cast<int>(resolved);
}

void load_mtl(const fs::path& path, std::vector<Material>& materials,
              std::map<std::string, int>& by_name, const MeshLoadOptions& opt) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingAsset, path.string());
    std::string line;
    Material* current = nullptr;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key) || key[0] == '#') continue;
        if (key == "newmtl") {
            Material m;
            ss >> m.name;
            by_name[m.name] = static_cast<int>(materials.size());
            materials.push_back(m);
            current = &materials.back();
        } else if (current && key == "Kd") {
            ss >> current->albedo.x() >> current->albedo.y() >> current->albedo.z();
            if (!ss) throw Error(ErrorKind::ParseError, path.string() + ": bad Kd");
        } else if (current && key == "map_Kd") {
            std::string file;
            std::getline(ss >> std::ws, file);
            current->texture_file = file;
            current->texture = decode_gamma(read_png_u8(path.parent_path() / file), opt.texture_gamma);
        }
    }
}

ObjectMesh load_obj(const fs::path& path, const MeshLoadOptions& opt) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingAsset, path.string());
    const std::string source = path.string();
    std::vector<Vector3d> pos, nrm;
    std::vector<Vector2d> tex;
    ObjectMesh mesh;
    std::map<std::string, int> material_ids;
    std::map<std::tuple<int, int, int>, int> corner_ids;
    int current_material = -1;
    bool all_corners_have_normals = true;
    bool any_uv = false;
    std::vector<Vector2d> out_uv;
    std::vector<Vector3d> out_n;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key) || key[0] == '#') continue;
        auto fail = [&](const std::string& what) {
            throw Error(ErrorKind::ParseError,
                        source + ":" + std::to_string(line_no) + ": " + what);
        };
        if (key == "v") {
            Vector3d p;
            if (!(ss >> p.x() >> p.y() >> p.z())) fail("bad vertex");
            pos.push_back(p);
        } else if (key == "vn") {
            Vector3d n;
            if (!(ss >> n.x() >> n.y() >> n.z())) fail("bad normal");
            nrm.push_back(n);
        } else if (key == "vt") {
            Vector2d t;
            if (!(ss >> t.x() >> t.y())) fail("bad texcoord");
            tex.push_back(t);
        } else if (key == "mtllib") {
            std::string file;
            std::getline(ss >> std::ws, file);
            load_mtl(path.parent_path() / file, mesh.materials, material_ids, opt);
        } else if (key == "usemtl") {
            std::string name;
            ss >> name;
            auto it = material_ids.find(name);
            if (it == material_ids.end()) {
                Material m;
                m.name = name;
                material_ids[name] = static_cast<int>(mesh.materials.size());
                mesh.materials.push_back(m);
                it = material_ids.find(name);
            }
            current_material = it->second;
        } else if (key == "f") {
            std::vector<int> face;
            std::string corner;
            while (ss >> corner) {
                long vi = 0, ti = 0, ni = 0;
                int field = 0;
                std::size_t start = 0;
                for (std::size_t i = 0; i <= corner.size(); ++i) {
                    if (i == corner.size() || corner[i] == '/') {
                        if (i > start) {
                            long value = 0;
                            auto [p, ec] =
                                std::from_chars(corner.data() + start, corner.data() + i, value);
                            if (ec != std::errc() || p != corner.data() + i) fail("bad face index");
                            (field == 0 ? vi : field == 1 ? ti : ni) = value;
                        }
                        ++field;
                        start = i + 1;
                    }
                }
                const int v = resolve_obj_index(vi, pos.size(), source);
                const int t = ti != 0 ? resolve_obj_index(ti, tex.size(), source) : -1;
                const int n = ni != 0 ? resolve_obj_index(ni, nrm.size(), source) : -1;
                if (n < 0) all_corners_have_normals = false;
                if (t >= 0) any_uv = true;
                auto key3 = std::make_tuple(v, t, n);
                auto it = corner_ids.find(key3);
                if (it == corner_ids.end()) {
                    const int id = static_cast<int>(mesh.vertices.size());
                    mesh.vertices.push_back(pos[v]);
                    out_uv.push_back(t >= 0 ? tex[t] : Vector2d::Zero());
                    out_n.push_back(n >= 0 ? nrm[n] : Vector3d::Zero());
                    it = corner_ids.emplace(key3, id).first;
                }
                face.push_back(it->second);
            }
            if (face.size() < 3) fail("face with fewer than 3 corners");
            for (std::size_t i = 1; i + 1 < face.size(); ++i) {
                mesh.triangles.push_back({face[0], face[i], face[i + 1]});
                mesh.triangle_material.push_back(std::max(current_material, 0));
            }
        }
    }
    if (mesh.triangles.empty() && mesh.vertices.empty()) {
        // Keep standalone vertices so an explicitly empty mesh still loads.
        mesh.vertices = pos;
        out_n.assign(pos.size(), Vector3d::Zero());
        out_uv.clear();
    }
    if (any_uv) mesh.uvs = std::move(out_uv);
    mesh.normals = std::move(out_n);
    finalize_mesh(mesh, all_corners_have_normals && !mesh.triangles.empty(), opt, source);
    return mesh;
}

// ---- PLY -----------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_ply_type(const std::string& s, const std::string& source) {
    if (s == "char" || s == "int8") return PlyType::Int8;
    if (s == "uchar" || s == "uint8") return PlyType::UInt8;
    if (s == "short" || s == "int16") return PlyType::Int16;
    if (s == "ushort" || s == "uint16") return PlyType::UInt16;
    if (s == "int" || s == "int32") return PlyType::Int32;
    if (s == "uint" || s == "uint32") return PlyType::UInt32;
    if (s == "float" || s == "float32") return PlyType::Float32;
    if (s == "double" || s == "float64") return PlyType::Float64;
    throw Error(ErrorKind::ParseError, source + ": unknown PLY type " + s);
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

class PlyReader {
public:
    PlyReader(std::istream& in, bool binary, std::string source)
        : in_(in), binary_(binary), source_(std::move(source)) {}

    double read(PlyType type) {
        if (!binary_) {
            double v = 0.0;
            if (!(in_ >> v)) throw Error(ErrorKind::ParseError, source_ + ": truncated PLY body");
            return v;
        }
        switch (type) {
            case PlyType::Int8: return raw<std::int8_t>();
            case PlyType::UInt8: return raw<std::uint8_t>();
            case PlyType::Int16: return raw<std::int16_t>();
            case PlyType::UInt16: return raw<std::uint16_t>();
            case PlyType::Int32: return raw<std::int32_t>();
            case PlyType::UInt32: return raw<std::uint32_t>();
            case PlyType::Float32: return raw<float>();
            case PlyType::Float64: return raw<double>();
        }
        return 0.0;
    }

private:
    template <typename T>
    double raw() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!in_) throw Error(ErrorKind::ParseError, source_ + ": truncated PLY body");
        return static_cast<double>(v);
    }

    std::istream& in_;
    bool binary_;
    std::string source_;
};

ObjectMesh load_ply(const fs::path& path, const MeshLoadOptions& opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingAsset, path.string());
    const std::string source = path.string();
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw Error(ErrorKind::ParseError, source + ": not a PLY file");
    bool binary = false;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "binary_little_endian") {
                binary = true;
            } else if (fmt != "ascii") {
                throw Error(ErrorKind::ParseError, source + ": unsupported PLY format " + fmt);
            }
        } else if (key == "element") {
            PlyElement e;
            ss >> e.name >> e.count;
            elements.push_back(e);
        } else if (key == "property") {
            if (elements.empty()) throw Error(ErrorKind::ParseError, source + ": stray property");
            PlyProperty p;
            std::string type;
            ss >> type;
            if (type == "list") {
                std::string ct, it;
                ss >> ct >> it >> p.name;
                p.is_list = true;
                p.count_type = parse_ply_type(ct, source);
                p.type = parse_ply_type(it, source);
            } else {
                p.type = parse_ply_type(type, source);
                ss >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (key == "end_header") {
            break;
        }
    }
    ObjectMesh mesh;
    PlyReader reader(in, binary, source);
    bool have_normals = false;
    bool have_uv = false;
    for (const auto& e : elements) {
        for (std::size_t i = 0; i < e.count; ++i) {
            Vector3d p = Vector3d::Zero(), n = Vector3d::Zero();
            Vector2d uv = Vector2d::Zero();
            std::vector<int> face;
            for (const auto& prop : e.props) {
                if (prop.is_list) {
                    const auto count = static_cast<std::size_t>(reader.read(prop.count_type));
                    for (std::size_t k = 0; k < count; ++k) {
                        face.push_back(static_cast<int>(reader.read(prop.type)));
                    }
                    continue;
                }
                const double v = reader.read(prop.type);
                const std::string& nm = prop.name;
                if (nm == "x") p.x() = v;
                else if (nm == "y") p.y() = v;
                else if (nm == "z") p.z() = v;
                else if (nm == "nx") n.x() = v, have_normals = true;
                else if (nm == "ny") n.y() = v;
                else if (nm == "nz") n.z() = v;
                else if (nm == "u" || nm == "s" || nm == "texture_u") uv.x() = v, have_uv = true;
                else if (nm == "v" || nm == "t" || nm == "texture_v") uv.y() = v;
            }
            if (e.name == "vertex") {
                mesh.vertices.push_back(p);
                mesh.normals.push_back(n);
                mesh.uvs.push_back(uv);
            } else if (e.name == "face") {
                if (face.size() < 3) {
                    throw Error(ErrorKind::ParseError, source + ": face with < 3 corners");
                }
                for (std::size_t k = 1; k + 1 < face.size(); ++k) {
                    mesh.triangles.push_back({face[0], face[k], face[k + 1]});
                }
            }
        }
    }
    if (!have_uv) mesh.uvs.clear();
    finalize_mesh(mesh, have_normals, opt, source);
    return mesh;
}

std::string lower_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ObjectMesh load_mesh(const fs::path& path, const MeshLoadOptions& options) {
    if (!fs::exists(path)) throw Error(ErrorKind::MissingAsset, path.string());
    const std::string ext = lower_ext(path);
    if (ext == ".obj") return load_obj(path, options);
    if (ext == ".ply") return load_ply(path, options);
    throw Error(ErrorKind::ParseError, "unsupported mesh format: " + path.string());
}

void save_obj(const fs::path& path, const ObjectMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    const bool write_mtl = !mesh.materials.empty();
    if (write_mtl) {
        const fs::path mtl = fs::path(path).replace_extension(".mtl");
        std::ofstream m(mtl);
        if (!m) throw Error(ErrorKind::IoError, "cannot open " + mtl.string());
        for (std::size_t i = 0; i < mesh.materials.size(); ++i) {
            const Material& mat = mesh.materials[i];
            m << "newmtl " << mat.name << "\nKd " << fmt_double(mat.albedo.x()) << ' '
              << fmt_double(mat.albedo.y()) << ' ' << fmt_double(mat.albedo.z()) << "\n";
            if (mat.texture) {
                const std::string file = path.stem().string() + "_tex" + std::to_string(i) + ".png";
                write_png(path.parent_path() / file, encode_gamma(*mat.texture, 2.2));
                m << "map_Kd " << file << "\n";
            }
        }
        out << "mtllib " << mtl.filename().string() << "\n";
    }
    for (const auto& v : mesh.vertices) {
        out << "v " << fmt_double(v.x()) << ' ' << fmt_double(v.y()) << ' ' << fmt_double(v.z())
            << "\n";
    }
    const bool uv = !mesh.uvs.empty();
    for (const auto& t : mesh.uvs) {
        out << "vt " << fmt_double(t.x()) << ' ' << fmt_double(t.y()) << "\n";
    }
    for (const auto& n : mesh.normals) {
        out << "vn " << fmt_double(n.x()) << ' ' << fmt_double(n.y()) << ' ' << fmt_double(n.z())
            << "\n";
    }
    int current = -1;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const int mi = mesh.triangle_material.empty() ? 0 : mesh.triangle_material[i];
        if (write_mtl && mi != current) {
            out << "usemtl " << mesh.materials[mi].name << "\n";
            current = mi;
        }
        out << "f";
        for (int idx : mesh.triangles[i]) {
            const int k = idx + 1;
            out << ' ' << k << '/' << (uv ? std::to_string(k) : std::string()) << '/' << k;
        }
        out << "\n";
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

void save_ply(const fs::path& path, const ObjectMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    const bool uv = !mesh.uvs.empty();
    out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
        << "\nproperty double x\nproperty double y\nproperty double z\n"
        << "property double nx\nproperty double ny\nproperty double nz\n";
    if (uv) out << "property double u\nproperty double v\n";
    out << "element face " << mesh.triangles.size()
        << "\nproperty list uchar int vertex_indices\nend_header\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& p = mesh.vertices[i];
        const auto& n = mesh.normals[i];
        out << fmt_double(p.x()) << ' ' << fmt_double(p.y()) << ' ' << fmt_double(p.z()) << ' '
            << fmt_double(n.x()) << ' ' << fmt_double(n.y()) << ' ' << fmt_double(n.z());
        if (uv) out << ' ' << fmt_double(mesh.uvs[i].x()) << ' ' << fmt_double(mesh.uvs[i].y());
        out << "\n";
    }
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

ObjectMesh make_box(const Vector3d& size, const Vector3d& albedo) {
    ObjectMesh mesh;
    const Vector3d h = 0.5 * size;
    for (int i = 0; i < 8; ++i) {
        mesh.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                                   (i & 4) ? h.z() : -h.z());
    }
    // Counter-clockwise seen from outside.
    mesh.triangles = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
                      {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
    mesh.materials.push_back(Material{"box", albedo, std::nullopt, {}});
    mesh.triangle_material.assign(mesh.triangles.size(), 0);
    mesh.normals = compute_vertex_normals(mesh.vertices, mesh.triangles);
    return mesh;
}

ObjectMesh make_uv_sphere(double radius, int segments, int rings, const Vector3d& albedo) {
    ObjectMesh mesh;
    segments = std::max(3, segments);
    rings = std::max(2, rings);
    const double pi = std::numbers::pi;
    mesh.vertices.emplace_back(0.0, 0.0, radius);
    mesh.normals.emplace_back(0.0, 0.0, 1.0);
    for (int r = 1; r < rings; ++r) {
        const double theta = pi * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * pi * s / segments;
            const Vector3d n(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                             std::cos(theta));
            mesh.vertices.push_back(radius * n);
            mesh.normals.push_back(n);
        }
    }
    mesh.vertices.emplace_back(0.0, 0.0, -radius);
    mesh.normals.emplace_back(0.0, 0.0, -1.0);
    const int south = static_cast<int>(mesh.vertices.size()) - 1;
    auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) {
        mesh.triangles.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
    }
    for (int r = 1; r < rings - 1; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
            const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
            mesh.triangles.push_back({a, c, d});
            mesh.triangles.push_back({a, d, b});
        }
    }
    for (int s = 0; s < segments; ++s) {
        mesh.triangles.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
    }
    mesh.materials.push_back(Material{"sphere", albedo, std::nullopt, {}});
    mesh.triangle_material.assign(mesh.triangles.size(), 0);
    return mesh;
}

}  // namespace scenecomp
