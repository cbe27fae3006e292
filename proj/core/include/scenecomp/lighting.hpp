// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "scenecomp/geometry.hpp"
#include "scenecomp/panorama.hpp"
#include "scenecomp/subprocess.hpp"

namespace scenecomp {

struct SunModelParams {
    double tau = 1.0;    // transmittance
    double beta = 0.02;  // sharpness

    /// Throws OutOfRangeInput unless both are finite and > 0.
    void validate() const;
};

/// Per-pixel sun probability over an equirectangular grid, values in [0, 1].
struct SunProbabilityMap {
    Raster<double> x;

    int width() const { return x.width(); }
    int height() const { return x.height(); }
};

/// tau / (beta sqrt(pi)) * exp(-(1 - x)^2 / beta).
double sun_radiance(double x, const SunModelParams& params);

HdrPanorama sun_radiance_map(const SunProbabilityMap& prob, const SunModelParams& params);

/// (luminance / max)^exponent, max-normalised; all-zero input gives all zeros.
SunProbabilityMap detect_sun_fallback(const ImageF& ldr_pano, double exponent = 8.0);

/// Direction of the most probable pixel; the first in raster order wins ties.
Vector3d sun_direction(const SunProbabilityMap& prob);

/// radiance = scale * ldr^gamma. Throws OutOfRangeInput for values outside [0, 1].
HdrPanorama inverse_tone_map(const ImageF& ldr, double gamma = 2.2, double scale = 1.0);

/// Throws DimensionMismatch. Result is sky + sun with non-finite or negative
/// sums replaced by 0 and +inf clamped to the float maximum.
HdrPanorama blend_hdr(const HdrPanorama& sun, const HdrPanorama& sky);

struct PanoramaView {
    ImageF image;  // RGB
    CameraPose pose;
    Matrix3d K = Matrix3d::Identity();
};

struct StitchResult {
    HdrPanorama panorama;
    Raster<float> coverage;  // 1 where any view contributes
};

/// Blends every view that sees a pano pixel's direction, weighted by the
/// angular distance of that direction to the view's frustum boundary and
/// normalised to sum to one. Uncovered pixels stay zero.
StitchResult stitch_panorama(std::span<const PanoramaView> views, int width, int height,
                             int jobs = 1);

/// Per-view blend weights at one direction (unnormalised angular margins,
/// zero outside a frustum); exposed for inspection and tests.
std::vector<double> view_margins(std::span<const PanoramaView> views, const Vector3d& direction);

struct LightingPlugins {
    PluginSpec inpaint;  // stitched LDR pano + coverage -> full LDR pano
    PluginSpec sky;      // full LDR pano -> sky HDR
    PluginSpec ldr2hdr;  // full LDR pano -> HDR (replaces inverse tone mapping)
};

struct LightingOptions {
    SunModelParams sun;
    double gamma = 2.2;
    double scale = 1.0;
    double sun_exponent = 8.0;
    int pano_width = 256;
    bool use_plugins = true;
    LightingPlugins plugins;
    int jobs = 1;
};

struct Environment {
    HdrPanorama radiance;
    HdrPanorama sky;
    HdrPanorama sun;
    SunProbabilityMap probability;
    Vector3d sun_direction = Vector3d::UnitZ();
    Raster<float> coverage;
    std::vector<std::string> stages;  // "plugin:<name>" or "fallback:<name>" per stage
};

/// Display-encoded views -> environment. Each plugin stage runs only when
/// configured and `use_plugins` is set; the fallbacks are mean-fill of the
/// uncovered area, inverse tone mapping and the luminance sun detector.
Environment build_environment(std::span<const PanoramaView> ldr_views,
                              const LightingOptions& options);

}  // namespace scenecomp
