// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/outputs.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "scenecomp/error.hpp"
#include "scenecomp/raster_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace scenecomp {

std::string sha256_hex(std::string_view text) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), text.data(), text.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw Error(ErrorKind::IoError, "sha256 failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

fs::path write_outputs(const fs::path& out_dir, std::span<const CompositeOutput> frames,
                       const RunRecord& record) {
    std::error_code ec;
    fs::create_directories(out_dir / "frames", ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    ordered_json manifest;
    manifest["format"] = "scenecomp.run/1";
    manifest["config_hash"] = sha256_hex(record.effective_config_json);
    manifest["seed"] = record.seed;
    manifest["encode_gamma"] = record.encode_gamma;
    manifest["frame_count"] = frames.size();
    ordered_json entries = ordered_json::array();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const CompositeOutput& f = frames[i];
        const int index = i < record.frames.size() ? record.frames[i].index : static_cast<int>(i);
        char stem[16];
        std::snprintf(stem, sizeof(stem), "%04d", index);
        const std::string rgb = std::string("frames/rgb_") + stem + ".png";
        const std::string obj = std::string("frames/object_mask_") + stem + ".png";
        const std::string shd = std::string("frames/shadow_mask_") + stem + ".png";
        write_png(out_dir / rgb, encode_gamma(f.rgb, record.encode_gamma));
        write_png(out_dir / obj, quantize_unit(f.object_mask));
        write_png(out_dir / shd, quantize_unit(f.shadow_mask));
        ordered_json e;
        e["index"] = index;
        e["rgb"] = rgb;
        e["object_mask"] = obj;
        e["shadow_mask"] = shd;
        if (i < record.frames.size()) {
            const FrameRecord& r = record.frames[i];
            e["placement_pixel"] = {r.placement_pixel.x(), r.placement_pixel.y()};
            e["placement_depth"] = r.placement_depth;
            e["visible"] = r.visible;
            e["valid_class"] = r.valid_class;
        }
        entries.push_back(std::move(e));
    }
    manifest["frames"] = std::move(entries);
    try {
        manifest["config"] = ordered_json::parse(record.effective_config_json);
        manifest["diagnostics"] = ordered_json::parse(record.diagnostics_json);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::IoError, std::string("run record is not valid JSON: ") + e.what());
    }
    const fs::path path = out_dir / "run_manifest.json";
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << manifest.dump(2) << "\n";
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
    return path;
}

}  // namespace scenecomp
