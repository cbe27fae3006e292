// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/lighting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "json.hpp"

#include "scenecomp/error.hpp"
#include "scenecomp/parallel.hpp"
#include "scenecomp/raster_io.hpp"

namespace fs = std::filesystem;

namespace scenecomp {

void SunModelParams::validate() const {
    if (!(std::isfinite(tau) && tau > 0.0 && std::isfinite(beta) && beta > 0.0)) {
        throw Error(ErrorKind::OutOfRangeInput, "sun parameters must be finite and positive");
    }
}

double sun_radiance(double x, const SunModelParams& p) {
    const double peak = p.tau / (p.beta * std::sqrt(std::numbers::pi));
    const double e = 1.0 - x;
    return peak * std::exp(-(e * e) / p.beta);
}

HdrPanorama sun_radiance_map(const SunProbabilityMap& prob, const SunModelParams& params) {
    params.validate();
    HdrPanorama out(prob.width(), prob.height());
    for (int y = 0; y < prob.height(); ++y)
        for (int x = 0; x < prob.width(); ++x) {
            const float v = static_cast<float>(sun_radiance(prob.x(x, y), params));
            for (int c = 0; c < 3; ++c) out.radiance(x, y, c) = v;
        }
    return out;
}

SunProbabilityMap detect_sun_fallback(const ImageF& ldr_pano, double exponent) {
    const Raster<float> lum = luminance(ldr_pano);
    SunProbabilityMap out{Raster<double>(lum.width(), lum.height(), 1, 0.0)};
    double peak = 0.0;
    for (float v : lum.data()) peak = std::max(peak, double(v));
    if (!(peak > 0.0)) return out;
    double top = 0.0;
    for (int y = 0; y < lum.height(); ++y)
        for (int x = 0; x < lum.width(); ++x) {
            const double v = std::pow(std::max(0.0, double(lum(x, y))) / peak, exponent);
            out.x(x, y) = v;
            top = std::max(top, v);
        }
    if (top > 0.0)
        for (double& v : out.x.data()) v = std::min(1.0, v / top);
    return out;
}

Vector3d sun_direction(const SunProbabilityMap& prob) {
    int bx = 0, by = 0;
    double best = -1.0;
    for (int y = 0; y < prob.height(); ++y)
        for (int x = 0; x < prob.width(); ++x)
            if (prob.x(x, y) > best) {
                best = prob.x(x, y);
                bx = x;
                by = y;
            }
    return pano_direction(bx, by, prob.width(), prob.height());
}

HdrPanorama inverse_tone_map(const ImageF& ldr, double gamma, double scale) {
    if (!(gamma > 0.0) || !(scale >= 0.0) || !std::isfinite(gamma) || !std::isfinite(scale)) {
        throw Error(ErrorKind::OutOfRangeInput, "inverse tone map needs gamma > 0 and scale >= 0");
    }
    ImageF out(ldr.width(), ldr.height(), ldr.channels());
    for (std::size_t i = 0; i < ldr.data().size(); ++i) {
        const float v = ldr.data()[i];
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw Error(ErrorKind::OutOfRangeInput, "LDR value outside [0,1]: " + std::to_string(v));
        }
        out.data()[i] = static_cast<float>(scale * std::pow(double(v), gamma));
    }
    return HdrPanorama(std::move(out));
}

HdrPanorama blend_hdr(const HdrPanorama& sun, const HdrPanorama& sky) {
    if (!sun.radiance.same_shape(sky.radiance) || sun.radiance.channels() != sky.radiance.channels()) {
        throw Error(ErrorKind::DimensionMismatch, "sun and sky panoramas differ in shape");
    }
    HdrPanorama out(sky.radiance);
    auto& d = out.radiance.data();
    const auto& s = sun.radiance.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        float v = d[i] + s[i];
        if (std::isnan(v) || v < 0.0f) v = 0.0f;
        if (std::isinf(v)) v = std::numeric_limits<float>::max();
        d[i] = v;
    }
    return out;
}

namespace {

struct Frustum {
    std::array<Vector3d, 4> inward;  // unit normals of the four side planes, camera frame
};

Frustum make_frustum(const PanoramaView& v) {
    const Matrix3d Kinv = v.K.inverse();
    const double w = v.image.width() - 1, h = v.image.height() - 1;
    const Vector3d c00 = Kinv * Vector3d(0, 0, 1), c10 = Kinv * Vector3d(w, 0, 1);
    const Vector3d c11 = Kinv * Vector3d(w, h, 1), c01 = Kinv * Vector3d(0, h, 1);
    const Vector3d center = Kinv * Vector3d(0.5 * w, 0.5 * h, 1);
    Frustum f;
    const std::array<std::pair<Vector3d, Vector3d>, 4> edges{
        {{c00, c10}, {c10, c11}, {c11, c01}, {c01, c00}}};
    for (int i = 0; i < 4; ++i) {
        Vector3d n = edges[i].first.cross(edges[i].second).normalized();
        if (n.dot(center) < 0.0) n = -n;
        f.inward[i] = n;
    }
    return f;
}

double margin(const PanoramaView& v, const Frustum& f, const Vector3d& dir_world) {
    const Vector3d dc = (v.pose.R * dir_world).normalized();
    if (dc.z() <= 0.0) return 0.0;
    double m = std::numeric_limits<double>::infinity();
    for (const auto& n : f.inward) m = std::min(m, std::asin(std::clamp(n.dot(dc), -1.0, 1.0)));
    return std::max(0.0, m);
}

}  // namespace

std::vector<double> view_margins(std::span<const PanoramaView> views, const Vector3d& direction) {
    std::vector<double> out;
    for (const auto& v : views) out.push_back(margin(v, make_frustum(v), direction));
    return out;
}

StitchResult stitch_panorama(std::span<const PanoramaView> views, int width, int height, int jobs) {
    if (views.empty()) throw Error(ErrorKind::EmptyInput, "no views to stitch");
    if (width != 2 * height || height <= 0) {
        throw Error(ErrorKind::DimensionMismatch, "panorama must be 2:1");
    }
    std::vector<Frustum> frusta;
    for (const auto& v : views) frusta.push_back(make_frustum(v));
    StitchResult res{HdrPanorama(width, height), Raster<float>(width, height, 1, 0.0f)};
    parallel_for(static_cast<std::size_t>(height), jobs, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        std::vector<std::array<double, 4>> contrib;  // weight, r, g, b
        for (int x = 0; x < width; ++x) {
            const Vector3d dir = pano_direction(x, y, width, height);
            contrib.clear();
            for (std::size_t i = 0; i < views.size(); ++i) {
                const double w = margin(views[i], frusta[i], dir);
                if (w <= 0.0) continue;
                const Vector3d q = views[i].K * (views[i].pose.R * dir);
                const double u = q.x() / q.z(), v = q.y() / q.z();
                const ImageF& img = views[i].image;
                std::array<double, 4> c{w, 0, 0, 0};
                for (int ch = 0; ch < 3; ++ch)
                    c[ch + 1] = sample_bilinear(img, u, v, std::min(ch, img.channels() - 1));
                contrib.push_back(c);
            }
            if (contrib.empty()) continue;
            // Summation in sorted order keeps the result independent of view order.
            std::sort(contrib.begin(), contrib.end());
            double total = 0.0;
            for (const auto& c : contrib) total += c[0];
            double rgb[3] = {0, 0, 0};
            for (const auto& c : contrib)
                for (int ch = 0; ch < 3; ++ch) rgb[ch] += (c[0] / total) * c[ch + 1];
            for (int ch = 0; ch < 3; ++ch) res.panorama.radiance(x, y, ch) = static_cast<float>(rgb[ch]);
            res.coverage(x, y) = 1.0f;
        }
    });
    return res;
}

namespace {

void write_meta(const fs::path& dir, const std::string& stage, int w, int h, double gamma) {
    nlohmann::ordered_json meta{{"stage", stage}, {"width", w}, {"height", h}, {"gamma", gamma},
                                {"projection", "equirectangular"},
                                {"azimuth", "+X toward +Y"}, {"row0", "+Z"}};
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

HdrPanorama read_plugin_pano(const fs::path& path, int w, int h) {
    if (!fs::exists(path)) {
        throw Error(ErrorKind::BadPluginOutput, "plugin did not write " + path.string());
    }
    ImageF img;
    try {
        img = read_float_raster(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::BadPluginOutput, e.what());
    }
    if (img.width() != w || img.height() != h) {
        throw Error(ErrorKind::BadPluginOutput, "plugin output has the wrong size: " + path.string());
    }
    if (img.channels() == 1) {
        ImageF rgb(w, h, 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) rgb(x, y, c) = img(x, y);
        img = std::move(rgb);
    }
    HdrPanorama out(std::move(img));
    try {
        out.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::BadPluginOutput, e.what());
    }
    return out;
}

HdrPanorama run_pano_plugin(const PluginSpec& spec, const std::string& stage, const ImageF& input,
                            const Raster<float>* coverage, double gamma) {
    const fs::path dir = make_workdir("scenecomp-" + stage);
    struct Cleanup {
        fs::path dir;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(dir, ec);
        }
    } cleanup{dir};
    write_float_raster(dir / "input.exr", input);
    if (coverage) write_float_raster(dir / "coverage.exr", *coverage);
    write_meta(dir, stage, input.width(), input.height(), gamma);
    PluginSpec s = spec;
    s.timeout_seconds = plugin_timeout_from_env(spec.timeout_seconds);
    run_plugin(s, dir);
    return read_plugin_pano(dir / "output.exr", input.width(), input.height());
}

}  // namespace

Environment build_environment(std::span<const PanoramaView> ldr_views,
                              const LightingOptions& options) {
    options.sun.validate();
    const int w = std::max(2, options.pano_width / 2 * 2), h = w / 2;
    Environment env;
    StitchResult stitched = stitch_panorama(ldr_views, w, h, options.jobs);
    env.coverage = stitched.coverage;
    ImageF ldr = stitched.panorama.radiance;
    for (float& v : ldr.data()) v = std::clamp(v, 0.0f, 1.0f);

    const bool plugins = options.use_plugins;
    if (plugins && options.plugins.inpaint.enabled()) {
        ldr = run_pano_plugin(options.plugins.inpaint, "inpaint", ldr, &env.coverage, options.gamma)
                  .radiance;
        for (float& v : ldr.data()) v = std::clamp(v, 0.0f, 1.0f);
        env.stages.push_back("plugin:inpaint");
    } else {
        double sum[3] = {0, 0, 0};
        std::size_t n = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (env.coverage(x, y) > 0.0f) {
                    for (int c = 0; c < 3; ++c) sum[c] += ldr(x, y, c);
                    ++n;
                }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (env.coverage(x, y) == 0.0f)
                    for (int c = 0; c < 3; ++c)
                        ldr(x, y, c) = n ? static_cast<float>(sum[c] / n) : 0.0f;
        env.stages.push_back("fallback:inpaint");
    }

    env.probability = detect_sun_fallback(ldr, options.sun_exponent);
    env.sun_direction = sun_direction(env.probability);
    env.sun = sun_radiance_map(env.probability, options.sun);

    if (plugins && options.plugins.sky.enabled()) {
        env.sky = run_pano_plugin(options.plugins.sky, "sky", ldr, nullptr, options.gamma);
        env.stages.push_back("plugin:sky");
    } else if (plugins && options.plugins.ldr2hdr.enabled()) {
        env.sky = run_pano_plugin(options.plugins.ldr2hdr, "ldr2hdr", ldr, nullptr, options.gamma);
        env.stages.push_back("plugin:ldr2hdr");
    } else {
        env.sky = inverse_tone_map(ldr, options.gamma, options.scale);
        env.stages.push_back("fallback:ldr2hdr");
    }
    env.radiance = blend_hdr(env.sun, env.sky);
    return env;
}

}  // namespace scenecomp
