// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "scenecomp/geometry.hpp"
#include "scenecomp/raster.hpp"

namespace scenecomp {

/// Dense displacement field from frame `from` to frame `to`: the content at
/// pixel p of `from` appears at p + flow(p) in `to`.
struct FlowField {
    int from = 0;
    int to = 0;
    Raster<float> flow;        // 2 channels (dx, dy), pixels
    Raster<float> confidence;  // 1 channel, [0, 1]

    int width() const { return flow.width(); }
    int height() const { return flow.height(); }
    Vector2d at(double x, double y) const {
        return {sample_bilinear(flow, x, y, 0), sample_bilinear(flow, x, y, 1)};
    }
    double confidence_at(double x, double y) const { return sample_bilinear(confidence, x, y); }
    /// Throws InvalidConfig on shape mismatch, out-of-range confidence or non-finite flow.
    void validate() const;
};

struct FlowOptions {
    int levels = 3;
    int window = 15;  // odd, pixels
    double window_sigma = 0.0;  // Gaussian window weight; <= 0 selects window / 4
    bool affine = true;         // affine window model at the finest level
    int max_iterations = 20;
    double epsilon = 1e-3;  // update norm that ends the per-level iteration
    int jobs = 1;
};

/// Gaussian pyramid with the 5-tap binomial kernel; level 0 is the input.
std::vector<Raster<float>> build_pyramid(const Raster<float>& gray, int levels);

/// Pyramidal Lucas-Kanade flow a -> b. Confidence is the minimum eigenvalue of
/// the Gaussian-windowed structure tensor of `a`, divided by its image maximum.
FlowField estimate_flow(const ImageF& a, const ImageF& b, const FlowOptions& options = {});

/// Flow files hold three float channels (dx, dy, confidence) in any format
/// accepted by read_float_raster; the name for a pair is flow_{from}_{to}.
std::filesystem::path flow_file_name(const std::filesystem::path& dir, int from, int to,
                                     const std::string& extension = ".exr");
FlowField read_flow_file(const std::filesystem::path& path, int from, int to);
void write_flow_file(const std::filesystem::path& path, const FlowField& field);

}  // namespace scenecomp
