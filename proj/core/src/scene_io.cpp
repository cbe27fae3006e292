// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "scenecomp/error.hpp"
#include "scenecomp/parallel.hpp"
#include "scenecomp/raster_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scenecomp {

namespace {

constexpr const char* kSceneFormat = "scenecomp.scene/1";

Matrix3d parse_mat3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::ParseError, what + ": expected 3x3");
    Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3) {
            throw Error(ErrorKind::ParseError, what + ": expected 3x3");
        }
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Vector3d parse_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::ParseError, what + ": expected 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json mat3_json(const Matrix3d& m) {
    json out = json::array();
    for (int r = 0; r < 3; ++r) out.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return out;
}

struct FrameEntry {
    long index = 0;
    fs::path image, depth, mask;
    Matrix3d rotation;
    Vector3d translation;
};

ClassMask load_mask(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png" || ext == ".PNG") {
        Raster<std::uint16_t> raw = read_png_u16(path);
        if (raw.channels() == 1) return raw;
        ClassMask out(raw.width(), raw.height(), 1);
        for (int y = 0; y < raw.height(); ++y)
            for (int x = 0; x < raw.width(); ++x) out(x, y) = raw(x, y, 0);
        return out;
    }
    throw Error(ErrorKind::ParseError, "unsupported mask format: " + path.string());
}

DepthMap load_depth(const fs::path& path) {
    ImageF raw = read_float_raster(path);
    if (raw.channels() == 1) return raw;
    DepthMap out(raw.width(), raw.height(), 1);
    for (int y = 0; y < raw.height(); ++y)
        for (int x = 0; x < raw.width(); ++x) out(x, y) = raw(x, y, 0);
    return out;
}

}  // namespace

void ScenePackage::validate() const {
    const int n = frame_count();
    if (n == 0) throw Error(ErrorKind::DimensionMismatch, "scene has no frames");
    if (static_cast<int>(poses.size()) != n || static_cast<int>(depth_maps.size()) != n ||
        static_cast<int>(seg_masks.size()) != n) {
        throw Error(ErrorKind::DimensionMismatch, "per-frame asset counts differ");
    }
    if (n_reference < 1 || n_target < 0 || n_target + n_reference != n) {
        throw Error(ErrorKind::DimensionMismatch,
                    "n_target + n_reference (" + std::to_string(n_target) + " + " +
                        std::to_string(n_reference) + ") must equal frame count " +
                        std::to_string(n) + " with n_reference >= 1");
    }
    const int w = width(), h = height();
    for (int i = 0; i < n; ++i) {
        if (!frames[i].same_shape(w, h) || !depth_maps[i].same_shape(w, h) ||
            !seg_masks[i].same_shape(w, h)) {
            throw Error(ErrorKind::DimensionMismatch,
                        "frame " + std::to_string(i) + " assets differ from " + std::to_string(w) +
                            "x" + std::to_string(h));
        }
        if (!is_rotation(poses[i].R, 1e-6) || !poses[i].t.allFinite()) {
            throw Error(ErrorKind::InvalidPose, "frame " + std::to_string(i) +
                                                    " rotation is not orthonormal with det +1");
        }
    }
    if (!K.allFinite() || K(2, 0) != 0.0 || K(2, 1) != 0.0 || K(2, 2) != 1.0 || K(0, 0) <= 0.0 ||
        K(1, 1) <= 0.0) {
        throw Error(ErrorKind::ParseError, "intrinsics must be [[fx,s,cx],[0,fy,cy],[0,0,1]]");
    }
}

std::set<int> ScenePackage::resolve_classes(const std::vector<std::string>& names) const {
    std::set<int> out;
    for (const auto& name : names) {
        if (auto it = class_ids.find(name); it != class_ids.end()) {
            out.insert(it->second);
            continue;
        }
        try {
            std::size_t pos = 0;
            const int id = std::stoi(name, &pos);
            if (pos == name.size()) {
                out.insert(id);
                continue;
            }
        } catch (const std::exception&) {
        }
        throw Error(ErrorKind::InvalidConfig, "unknown class name '" + name + "'");
    }
    return out;
}

ScenePackage load_scene_package(const fs::path& manifest_path, const SceneLoadOptions& options) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorKind::MissingAsset, manifest_path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, manifest_path.string() + ": " + e.what());
    }
    const fs::path root = manifest_path.parent_path();
    ScenePackage scene;
    std::vector<FrameEntry> entries;
    std::string convention;
    double target_rate = 0.0;
    try {
        if (doc.contains("format") && doc.at("format").get<std::string>() != kSceneFormat) {
            throw Error(ErrorKind::ParseError, "unsupported manifest format " +
                                                   doc.at("format").get<std::string>());
        }
        scene.frame_rate = doc.at("frame_rate").get<double>();
        scene.n_target = doc.at("n_target").get<int>();
        scene.n_reference = doc.at("n_reference").get<int>();
        scene.decode_gamma = doc.value("decode_gamma", 2.2);
        scene.K = parse_mat3(doc.at("intrinsics"), "intrinsics");
        convention = doc.value("pose_convention", std::string("camera_to_world"));
        if (convention != "camera_to_world" && convention != "world_to_camera") {
            throw Error(ErrorKind::ParseError, "pose_convention must be camera_to_world or world_to_camera");
        }
        if (doc.contains("classes")) {
            for (const auto& [name, id] : doc.at("classes").items()) scene.class_ids[name] = id.get<int>();
        }
        target_rate = doc.value("target_frame_rate", 0.0);
        for (const auto& f : doc.at("frames")) {
            FrameEntry e;
            e.index = f.at("index").get<long>();
            e.image = root / f.at("image").get<std::string>();
            e.depth = root / f.at("depth").get<std::string>();
            e.mask = root / f.at("mask").get<std::string>();
            e.rotation = parse_mat3(f.at("rotation"), "frame rotation");
            e.translation = parse_vec3(f.at("translation"), "frame translation");
            entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, manifest_path.string() + ": " + e.what());
    }
    if (options.decode_gamma) scene.decode_gamma = *options.decode_gamma;
    if (options.target_frame_rate) target_rate = *options.target_frame_rate;

    // Manifest enumeration order is irrelevant: frames are ordered by index.
    std::sort(entries.begin(), entries.end(),
              [](const FrameEntry& a, const FrameEntry& b) { return a.index < b.index; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].index == entries[i - 1].index) {
            throw Error(ErrorKind::ParseError, "duplicate frame index " + std::to_string(entries[i].index));
        }
    }
    if (target_rate > 0.0 && target_rate < scene.frame_rate) {
        const double ratio = scene.frame_rate / target_rate;
        const long step = std::lround(ratio);
        if (std::abs(ratio - static_cast<double>(step)) > 1e-9) {
            throw Error(ErrorKind::ParseError, "frame_rate / target_frame_rate must be an integer");
        }
        // N and T are stated at the source rate; they split the kept frames at the same position.
        std::vector<FrameEntry> kept;
        int kept_targets = 0;
        for (std::size_t i = 0; i < entries.size(); i += step) {
            kept.push_back(entries[i]);
            if (static_cast<int>(i) < scene.n_target) ++kept_targets;
        }
        scene.n_reference = static_cast<int>(kept.size()) - kept_targets;
        scene.n_target = kept_targets;
        entries = std::move(kept);
        scene.frame_rate = target_rate;
    }

    for (const auto& e : entries) {
        for (const fs::path& p : {e.image, e.depth, e.mask}) {
            if (!fs::exists(p)) throw Error(ErrorKind::MissingAsset, p.string());
        }
    }

    const std::size_t n = entries.size();
    scene.frames.resize(n);
    scene.depth_maps.resize(n);
    scene.seg_masks.resize(n);
    scene.poses.resize(n);
    scene.frame_names.resize(n);
    parallel_for(n, options.jobs, [&](std::size_t i) {
        const FrameEntry& e = entries[i];
        Raster<std::uint8_t> rgb8 = read_png_u8(e.image);
        if (rgb8.channels() != 3 && rgb8.channels() != 4 && rgb8.channels() != 1) {
            throw Error(ErrorKind::ParseError, e.image.string() + ": unsupported channel count");
        }
        ImageF lin = decode_gamma(rgb8, scene.decode_gamma);
        ImageF rgb(lin.width(), lin.height(), 3);
        for (int y = 0; y < lin.height(); ++y)
            for (int x = 0; x < lin.width(); ++x)
                for (int c = 0; c < 3; ++c) rgb(x, y, c) = lin(x, y, std::min(c, lin.channels() - 1));
        scene.frames[i] = std::move(rgb);
        scene.depth_maps[i] = load_depth(e.depth);
        scene.seg_masks[i] = load_mask(e.mask);
        scene.frame_names[i] = e.image.stem().string();
    });
    for (std::size_t i = 0; i < n; ++i) {
        const FrameEntry& e = entries[i];
        if (!is_rotation(e.rotation, 1e-6)) {
            throw Error(ErrorKind::InvalidPose,
                        "frame index " + std::to_string(e.index) + ": rotation is not orthonormal");
        }
        scene.poses[i] = convention == "camera_to_world"
                             ? CameraPose::from_camera_to_world(e.rotation, e.translation)
                             : CameraPose{e.rotation, e.translation};
    }
    scene.validate();
    return scene;
}

fs::path save_scene_package(const fs::path& dir, const ScenePackage& scene) {
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    fs::create_directories(dir / "depth", ec);
    fs::create_directories(dir / "masks", ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    json doc;
    doc["format"] = kSceneFormat;
    doc["frame_rate"] = scene.frame_rate;
    doc["n_target"] = scene.n_target;
    doc["n_reference"] = scene.n_reference;
    doc["decode_gamma"] = scene.decode_gamma;
    doc["pose_convention"] = "camera_to_world";
    doc["intrinsics"] = mat3_json(scene.K);
    doc["classes"] = json::object();
    for (const auto& [name, id] : scene.class_ids) doc["classes"][name] = id;
    doc["frames"] = json::array();
    for (int i = 0; i < scene.frame_count(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%04d", i);
        const std::string image = std::string("frames/") + stem + ".png";
        const std::string depth = std::string("depth/") + stem + ".pfm";
        const std::string mask = std::string("masks/") + stem + ".png";
        write_png(dir / image, encode_gamma(scene.frames[i], scene.decode_gamma));
        write_pfm(dir / depth, scene.depth_maps[i]);
        write_png(dir / mask, scene.seg_masks[i]);
        const CameraPose inv = scene.poses[i].inverse();
        doc["frames"].push_back({{"index", i},
                                 {"image", image},
                                 {"depth", depth},
                                 {"mask", mask},
                                 {"rotation", mat3_json(inv.R)},
                                 {"translation", {inv.t.x(), inv.t.y(), inv.t.z()}}});
    }
    const fs::path manifest = dir / "scene.json";
    std::ofstream out(manifest);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + manifest.string());
    out << doc.dump(2) << "\n";
    return manifest;
}

}  // namespace scenecomp
