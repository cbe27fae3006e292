// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/flow.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "scenecomp/error.hpp"
#include "scenecomp/parallel.hpp"
#include "scenecomp/raster_io.hpp"

namespace scenecomp {

namespace {

Raster<float> blur_decimate(const Raster<float>& in) {
    static constexpr float kTaps[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
    const int w = in.width(), h = in.height();
    Raster<float> horiz(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float s = 0.f;
            for (int k = -2; k <= 2; ++k) s += kTaps[k + 2] * in(std::clamp(x + k, 0, w - 1), y);
            horiz(x, y) = s;
        }
    const int ow = (w + 1) / 2, oh = (h + 1) / 2;
    Raster<float> out(ow, oh, 1);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            float s = 0.f;
            for (int k = -2; k <= 2; ++k)
                s += kTaps[k + 2] * horiz(2 * x, std::clamp(2 * y + k, 0, h - 1));
            out(x, y) = s;
        }
    return out;
}

// Central-difference gradients with one-sided differences at the border.
void gradients(const Raster<float>& img, Raster<float>& gx, Raster<float>& gy) {
    const int w = img.width(), h = img.height();
    gx = Raster<float>(w, h, 1);
    gy = Raster<float>(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
            gx(x, y) = xr > xl ? (img(xr, y) - img(xl, y)) / float(xr - xl) : 0.f;
            gy(x, y) = yd > yu ? (img(x, yd) - img(x, yu)) / float(yd - yu) : 0.f;
        }
}

struct LevelData {
    Raster<float> a, b, gx, gy;
    // Windowed structure tensor entries per pixel.
    Raster<double> gxx, gxy, gyy;
    std::vector<double> weights;
};

// Window weights for offsets -radius..radius.
std::vector<double> window_weights(int radius, double sigma) {
    std::vector<double> wts(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k) wts[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    return wts;
}

// Separable weighted sums over the clipped window.
Raster<double> window_sum(const Raster<double>& v, const std::vector<double>& wts) {
    const int w = v.width(), h = v.height();
    const int radius = static_cast<int>(wts.size()) / 2;
    Raster<double> horiz(w, h, 1), out(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = std::max(-radius, -x); k <= std::min(radius, w - 1 - x); ++k) s += wts[k + radius] * v(x + k, y);
            horiz(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = std::max(-radius, -y); k <= std::min(radius, h - 1 - y); ++k) s += wts[k + radius] * horiz(x, y + k);
            out(x, y) = s;
        }
    return out;
}

LevelData prepare_level(Raster<float> a, Raster<float> b, const std::vector<double>& wts) {
    LevelData L;
    L.weights = wts;
    L.a = std::move(a);
    L.b = std::move(b);
    gradients(L.a, L.gx, L.gy);
    const int w = L.a.width(), h = L.a.height();
    Raster<double> xx(w, h, 1), xy(w, h, 1), yy(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            xx(x, y) = double(L.gx(x, y)) * L.gx(x, y);
            xy(x, y) = double(L.gx(x, y)) * L.gy(x, y);
            yy(x, y) = double(L.gy(x, y)) * L.gy(x, y);
        }
    L.gxx = window_sum(xx, wts);
    L.gxy = window_sum(xy, wts);
    L.gyy = window_sum(yy, wts);
    return L;
}

double min_eigen(double a, double b, double c) {
    return 0.5 * (a + c - std::sqrt((a - c) * (a - c) + 4.0 * b * b));
}

// Iterative LK refinement of displacement d at pixel (x, y) of one level.
// Ill-conditioned windows keep the initial guess; an iteration that runs
// away from it (farther than the window radius) is abandoned.
Vector2d refine_pixel(const LevelData& L, int x, int y, const Vector2d& guess, int radius,
                      const FlowOptions& opt) {
    const double a11 = L.gxx(x, y), a12 = L.gxy(x, y), a22 = L.gyy(x, y);
    const double det = a11 * a22 - a12 * a12;
    const double trace = a11 + a22;
    if (trace <= 0.0 || !(min_eigen(a11, a12, a22) > 1e-4 * trace)) return guess;
    const int w = L.a.width(), h = L.a.height();
    const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
    const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
    const int nx = x1 - x0 + 1, ny = y1 - y0 + 1;
    // The window shifts rigidly, so its resampling is separable: interpolate
    // every referenced row of b horizontally once, then each column vertically.
    std::vector<CubicTaps> tx(nx), ty(ny);
    std::vector<double> rows;
    Vector2d d = guess;
    for (int it = 0; it < opt.max_iterations; ++it) {
        for (int i = 0; i < nx; ++i) tx[i] = cubic_taps(x0 + i + d.x(), w);
        for (int j = 0; j < ny; ++j) ty[j] = cubic_taps(y0 + j + d.y(), h);
        const int r0 = ty.front().index[0], r1 = ty.back().index[3];
        rows.assign(static_cast<std::size_t>(r1 - r0 + 1) * nx, 0.0);
        for (int r = r0; r <= r1; ++r)
            for (int i = 0; i < nx; ++i) {
                const CubicTaps& k = tx[i];
                rows[static_cast<std::size_t>(r - r0) * nx + i] =
                    k.weight[0] * L.b(k.index[0], r) + k.weight[1] * L.b(k.index[1], r) +
                    k.weight[2] * L.b(k.index[2], r) + k.weight[3] * L.b(k.index[3], r);
            }
        double bx = 0.0, by = 0.0;
        for (int j = 0; j < ny; ++j) {
            const int yy = y0 + j;
            const CubicTaps& k = ty[j];
            const double wy = L.weights[yy - y + radius];
            for (int i = 0; i < nx; ++i) {
                const int xx = x0 + i;
                double warped = 0.0;
                for (int t = 0; t < 4; ++t) warped += k.weight[t] * rows[static_cast<std::size_t>(k.index[t] - r0) * nx + i];
                const double diff = wy * L.weights[xx - x + radius] * (L.a(xx, yy) - warped);
                bx += diff * L.gx(xx, yy);
                by += diff * L.gy(xx, yy);
            }
        }
        const Vector2d step((a22 * bx - a12 * by) / det, (a11 * by - a12 * bx) / det);
        d += step;
        if (!d.allFinite() || (d - guess).norm() > radius) return guess;
        if (step.norm() < opt.epsilon) break;
    }
    return d;
}

// Affine-window refinement seeded by the translational estimate `d0`. The
// window may stretch and shear, so displacement gradients across the window
// (divergence under forward motion) no longer bias the centre estimate.
// Windows that cannot constrain all six parameters keep `d0`.
Vector2d refine_pixel_affine(const LevelData& L, int x, int y, const Vector2d& d0, int radius,
                             const FlowOptions& opt) {
    using Vec6 = Eigen::Matrix<double, 6, 1>;
    using Mat6 = Eigen::Matrix<double, 6, 6>;
    const int w = L.a.width(), h = L.a.height();
    const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
    const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
    const double inv_r = 1.0 / radius;
    auto jacobian = [&](int xx, int yy) {
        const double ox = (xx - x) * inv_r, oy = (yy - y) * inv_r;
        const double gx = L.gx(xx, yy), gy = L.gy(xx, yy);
        Vec6 j;
        j << gx, gy, gx * ox, gx * oy, gy * ox, gy * oy;
        return j;
    };
    Mat6 H = Mat6::Zero();
    for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) {
            const Vec6 j = jacobian(xx, yy);
            H.noalias() += L.weights[xx - x + radius] * L.weights[yy - y + radius] * j * j.transpose();
        }
    // Pivot spread of the factorization stands in for the condition number.
    const Eigen::LDLT<Mat6> solver(H);
    const Vec6 piv = solver.vectorD();
    if (solver.info() != Eigen::Success || !(piv.minCoeff() > 1e-5 * piv.maxCoeff())) return d0;

    Vec6 p = Vec6::Zero();
    p.head<2>() = d0;
    // Seeded by a converged translation, so few iterations are needed.
    const int iterations = std::min(opt.max_iterations, 6);
    for (int it = 0; it < iterations; ++it) {
        Vec6 b = Vec6::Zero();
        for (int yy = y0; yy <= y1; ++yy)
            for (int xx = x0; xx <= x1; ++xx) {
                const double ox = (xx - x) * inv_r, oy = (yy - y) * inv_r;
                const double u = xx + p(0) + p(2) * ox + p(3) * oy;
                const double v = yy + p(1) + p(4) * ox + p(5) * oy;
                const double wt = L.weights[xx - x + radius] * L.weights[yy - y + radius];
                b += wt * (L.a(xx, yy) - sample_bicubic(L.b, u, v)) * jacobian(xx, yy);
            }
        const Vec6 step = solver.solve(b);
        p += step;
        // Deformation beyond a third of the window radius, or a centre that
        // leaves the translational basin, means the model does not fit.
        if (!p.allFinite() || (p.head<2>() - d0).norm() > 1.0 || p.tail<4>().cwiseAbs().maxCoeff() > radius / 3.0) {
            return d0;
        }
        if (step.head<2>().norm() < opt.epsilon && step.tail<4>().norm() < opt.epsilon) break;
    }
    return p.head<2>();
}

}  // namespace

void FlowField::validate() const {
    if (flow.channels() != 2 || confidence.channels() != 1 || !flow.same_shape(confidence)) {
        throw Error(ErrorKind::InvalidConfig, "flow field shape mismatch");
    }
    for (float v : flow.data())
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidConfig, "non-finite flow value");
    for (float v : confidence.data())
        if (!(v >= 0.f && v <= 1.f)) throw Error(ErrorKind::InvalidConfig, "flow confidence outside [0,1]");
}

std::vector<Raster<float>> build_pyramid(const Raster<float>& gray, int levels) {
    std::vector<Raster<float>> pyr{gray};
    for (int l = 1; l < levels; ++l) {
        const auto& top = pyr.back();
        if (top.width() < 8 || top.height() < 8) break;
        pyr.push_back(blur_decimate(top));
    }
    return pyr;
}

FlowField estimate_flow(const ImageF& a, const ImageF& b, const FlowOptions& options) {
    if (!a.same_shape(b)) throw Error(ErrorKind::DimensionMismatch, "flow frames differ in size");
    const int radius = std::max(1, options.window / 2);
    const double sigma = options.window_sigma > 0.0 ? options.window_sigma : 0.25 * options.window;
    const auto wts = window_weights(radius, sigma);
    const auto pa = build_pyramid(luminance(a), std::max(1, options.levels));
    const auto pb = build_pyramid(luminance(b), static_cast<int>(pa.size()));

    Raster<float> prev;  // flow at the next-coarser level
    FlowField out;
    for (int l = static_cast<int>(pa.size()) - 1; l >= 0; --l) {
        const LevelData L = prepare_level(pa[l], pb[l], wts);
        const int w = L.a.width(), h = L.a.height();
        Raster<float> cur(w, h, 2);
        parallel_for(static_cast<std::size_t>(h), options.jobs, [&](std::size_t row) {
            const int y = static_cast<int>(row);
            for (int x = 0; x < w; ++x) {
                Vector2d guess = Vector2d::Zero();
                if (!prev.empty()) {
                    guess = 2.0 * Vector2d(sample_bilinear(prev, 0.5 * x, 0.5 * y, 0),
                                           sample_bilinear(prev, 0.5 * x, 0.5 * y, 1));
                }
                Vector2d d = refine_pixel(L, x, y, guess, radius, options);
                if (l == 0 && options.affine) d = refine_pixel_affine(L, x, y, d, radius, options);
                cur(x, y, 0) = static_cast<float>(d.x());
                cur(x, y, 1) = static_cast<float>(d.y());
            }
        });
        prev = std::move(cur);
        if (l == 0) {
            out.confidence = Raster<float>(w, h, 1);
            double peak = 0.0;
            Raster<double> lam(w, h, 1);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    lam(x, y) = std::max(0.0, min_eigen(L.gxx(x, y), L.gxy(x, y), L.gyy(x, y)));
                    peak = std::max(peak, lam(x, y));
                }
            if (peak > 0.0)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        out.confidence(x, y) = static_cast<float>(lam(x, y) / peak);
        }
    }
    for (float& v : prev.data())
        if (!std::isfinite(v)) v = 0.f;
    out.flow = std::move(prev);
    return out;
}

std::filesystem::path flow_file_name(const std::filesystem::path& dir, int from, int to,
                                     const std::string& extension) {
    return dir / ("flow_" + std::to_string(from) + "_" + std::to_string(to) + extension);
}

FlowField read_flow_file(const std::filesystem::path& path, int from, int to) {
    const ImageF raw = read_float_raster(path);
    if (raw.channels() < 2) {
        throw Error(ErrorKind::ParseError, "flow file needs at least two channels: " + path.string());
    }
    FlowField f;
    f.from = from;
    f.to = to;
    f.flow = Raster<float>(raw.width(), raw.height(), 2);
    f.confidence = Raster<float>(raw.width(), raw.height(), 1, 1.0f);
    for (int y = 0; y < raw.height(); ++y)
        for (int x = 0; x < raw.width(); ++x) {
            f.flow(x, y, 0) = raw(x, y, 0);
            f.flow(x, y, 1) = raw(x, y, 1);
            if (raw.channels() >= 3) f.confidence(x, y) = std::clamp(raw(x, y, 2), 0.f, 1.f);
        }
    f.validate();
    return f;
}

void write_flow_file(const std::filesystem::path& path, const FlowField& field) {
    field.validate();
    ImageF raw(field.width(), field.height(), 3);
    for (int y = 0; y < raw.height(); ++y)
        for (int x = 0; x < raw.width(); ++x) {
            raw(x, y, 0) = field.flow(x, y, 0);
            raw(x, y, 1) = field.flow(x, y, 1);
            raw(x, y, 2) = field.confidence(x, y);
        }
    write_float_raster(path, raw);
}

}  // namespace scenecomp
