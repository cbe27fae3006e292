// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/style_transfer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "scenecomp/error.hpp"
#include "scenecomp/raster_io.hpp"

namespace fs = std::filesystem;

namespace scenecomp {

ImageF InpaintTriple::reconstruct() const {
    ImageF out = background_blacked;
    const auto& f = foreground_blacked.data();
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += f[i];
    return out;
}

InpaintTriple assemble_inpaint_inputs(const ImageF& composite, const Mask8& object_mask) {
    if (!composite.same_shape(object_mask) || object_mask.channels() != 1) {
        throw Error(ErrorKind::DimensionMismatch, "composite and mask differ in size");
    }
    InpaintTriple t;
    t.background_blacked = ImageF(composite.width(), composite.height(), composite.channels(), 0.0f);
    t.foreground_blacked = t.background_blacked;
    t.fg_mask = Mask8(composite.width(), composite.height(), 1, 0);
    for (int y = 0; y < composite.height(); ++y)
        for (int x = 0; x < composite.width(); ++x) {
            const bool fg = object_mask(x, y) != 0;
            t.fg_mask(x, y) = fg ? 1 : 0;
            ImageF& dst = fg ? t.foreground_blacked : t.background_blacked;
            for (int c = 0; c < composite.channels(); ++c) dst(x, y, c) = composite(x, y, c);
        }
    return t;
}

Mask8 binarize_alpha(const ImageF& alpha, double threshold) {
    Mask8 m(alpha.width(), alpha.height(), 1, 0);
    for (int y = 0; y < alpha.height(); ++y)
        for (int x = 0; x < alpha.width(); ++x) m(x, y) = alpha(x, y) >= threshold ? 1 : 0;
    return m;
}

Grid penalty_mask_from_object_mask(const Mask8& object_mask) {
    Grid m(object_mask.height(), object_mask.width());
    for (int y = 0; y < object_mask.height(); ++y)
        for (int x = 0; x < object_mask.width(); ++x) m(y, x) = object_mask(x, y) ? 0.0 : 1.0;
    return m;
}

WganLosses wgan_losses(std::span<const double> real, std::span<const double> fake) {
    if (real.empty() || fake.empty()) throw Error(ErrorKind::EmptyBatch, "critic score list is empty");
    const double mr = std::accumulate(real.begin(), real.end(), 0.0) / double(real.size());
    const double mf = std::accumulate(fake.begin(), fake.end(), 0.0) / double(fake.size());
    WganLosses l;
    l.critic_objective = mr - mf;
    l.loss_d = -l.critic_objective;
    l.loss_g = -mf;
    return l;
}

WganLosses wgan_losses(const StyleBatch& batch) {
    return wgan_losses(batch.critic_real, batch.critic_fake);
}

Grid interpolate_samples(const Grid& x_real, const Grid& x_fake, double u) {
    if (x_real.rows() != x_fake.rows() || x_real.cols() != x_fake.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "real and fake samples differ in shape");
    }
    if (!(u >= 0.0 && u <= 1.0)) throw Error(ErrorKind::OutOfRangeInput, "u must lie in [0,1]");
    if (u == 1.0) return x_real;
    if (u == 0.0) return x_fake;
    return u * x_real + (1.0 - u) * x_fake;
}

Grid critic_gradient(const Critic& critic, const Grid& x, double h) {
    Grid g;
    if (auto analytic = critic.gradient(x)) {
        g = std::move(*analytic);
        if (g.rows() != x.rows() || g.cols() != x.cols()) {
            throw Error(ErrorKind::ShapeMismatch, "critic gradient has the wrong shape");
        }
    } else {
        g.resize(x.rows(), x.cols());
        Grid probe = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double orig = probe.data()[i];
            probe.data()[i] = orig + h;
            const double up = critic(probe);
            probe.data()[i] = orig - h;
            const double down = critic(probe);
            probe.data()[i] = orig;
            g.data()[i] = (up - down) / (2.0 * h);
        }
    }
    if (!g.allFinite()) throw Error(ErrorKind::NonFiniteGradient, "critic gradient is not finite");
    return g;
}

double gradient_penalty(const Critic& critic, const Grid& x_hat, const Grid& m, double lambda) {
    if (m.rows() != x_hat.rows() || m.cols() != x_hat.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "mask and sample differ in shape");
    }
    if (!(lambda >= 0.0)) throw Error(ErrorKind::OutOfRangeInput, "lambda must be >= 0");
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m.data()[i];
        if (v != 0.0 && v != 1.0) throw Error(ErrorKind::OutOfRangeInput, "mask must be binary");
    }
    const Grid g = critic_gradient(critic, x_hat);
    const double norm = g.cwiseProduct((Grid::Ones(m.rows(), m.cols()) - m)).norm();
    return lambda * (norm - 1.0) * (norm - 1.0);
}

double gradient_penalty(const Critic& critic, const StyleBatch& batch) {
    if (batch.interpolates.empty()) throw Error(ErrorKind::EmptyBatch, "no interpolates");
    double sum = 0.0;
    for (const auto& x : batch.interpolates) sum += gradient_penalty(critic, x, batch.mask, batch.lambda);
    return sum / double(batch.interpolates.size());
}

ImageF refine_frame_external(const InpaintTriple& triple, const ExternalRefineOptions& options,
                             const fs::path& workdir) {
    if (!options.plugin.enabled()) {
        if (options.identity_fallback) return triple.reconstruct();
        throw Error(ErrorKind::PluginNotFound, "no refinement plugin configured");
    }
    const int w = triple.background_blacked.width(), h = triple.background_blacked.height();
    fs::path dir = workdir;
    // Generated directories are removed on every exit path unless kept.
    struct Cleanup {
        fs::path dir;
        ~Cleanup() {
            std::error_code ec;
            if (!dir.empty()) fs::remove_all(dir, ec);
        }
    } cleanup;
    if (dir.empty()) {
        dir = make_workdir("scenecomp-refine");
        if (!options.keep_workdir) cleanup.dir = dir;
    } else {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (!fs::is_directory(dir) || !fs::is_empty(dir)) {
            throw Error(ErrorKind::IoError, "work directory is not fresh: " + dir.string());
        }
    }
    write_png(dir / "bg.png", encode_gamma(triple.background_blacked, options.gamma));
    write_png(dir / "fg.png", encode_gamma(triple.foreground_blacked, options.gamma));
    Mask8 mask(w, h, 1, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) mask(x, y) = triple.fg_mask(x, y) ? 255 : 0;
    write_png(dir / "mask.png", mask);
    nlohmann::ordered_json meta{{"width", w},
                                {"height", h},
                                {"gamma", options.gamma},
                                {"mask", "255 = inserted object"},
                                {"output", "refined.png"}};
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';

    PluginSpec spec = options.plugin;
    spec.timeout_seconds = plugin_timeout_from_env(spec.timeout_seconds);
    run_plugin(spec, dir);

    const fs::path out = dir / "refined.png";
    if (!fs::exists(out)) throw Error(ErrorKind::BadPluginOutput, "plugin did not write refined.png");
    Raster<std::uint8_t> img;
    try {
        img = read_png_u8(out);
    } catch (const Error& e) {
        throw Error(ErrorKind::BadPluginOutput, e.what());
    }
    if (img.width() != w || img.height() != h || img.channels() < 3) {
        throw Error(ErrorKind::BadPluginOutput,
                    "refined.png is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        ", expected " + std::to_string(w) + "x" + std::to_string(h) + " RGB");
    }
    if (img.channels() != 3) {
        Raster<std::uint8_t> rgb(w, h, 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) rgb(x, y, c) = img(x, y, c);
        img = std::move(rgb);
    }
    return decode_gamma(img, options.gamma);
}

}  // namespace scenecomp
