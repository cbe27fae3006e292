// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenecomp/render.hpp"

namespace scenecomp {

struct FrameRecord {
    int index = 0;
    Eigen::Vector2d placement_pixel = Eigen::Vector2d::Zero();
    double placement_depth = 0.0;
    bool visible = false;
    bool valid_class = false;
};

struct RunRecord {
    std::string effective_config_json = "{}";  // hashed and embedded verbatim (parsed)
    std::uint64_t seed = 0;
    double encode_gamma = 2.2;
    std::vector<FrameRecord> frames;  // parallel to the composited frames
    std::string diagnostics_json = "{}";
};

/// Lowercase hex SHA-256 of `text`.
std::string sha256_hex(std::string_view text);

/// Writes frames/rgb_NNNN.png (gamma-encoded), frames/object_mask_NNNN.png and
/// frames/shadow_mask_NNNN.png (8-bit), plus run_manifest.json holding the
/// config hash, seed, and per-frame placement pixels. Output bytes depend only
/// on the inputs. Returns the manifest path; throws IoError.
std::filesystem::path write_outputs(const std::filesystem::path& out_dir,
                                    std::span<const CompositeOutput> frames,
                                    const RunRecord& record);

}  // namespace scenecomp
