// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace scenecomp {

/// Row-major interleaved raster. Pixel (x, y) has its center at integer
/// coordinates, so continuous coordinate u = x lands on the pixel center.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;
    Raster(int width, int height, int channels = 1, T fill = T{})
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * height_;
    }

    bool same_shape(int w, int h) const noexcept { return width_ == w && height_ == h; }
    template <typename U>
    bool same_shape(const Raster<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    T& operator()(int x, int y, int c = 0) noexcept {
        assert(contains(x, y) && c < channels_);
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    const T& operator()(int x, int y, int c = 0) const noexcept {
        assert(contains(x, y) && c < channels_);
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool operator==(const Raster&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

using ImageF = Raster<float>;            // linear RGB or single-channel float
using DepthMap = Raster<float>;          // meters, 0 = invalid
using ClassMask = Raster<std::uint16_t>;  // per-pixel class id
using Mask8 = Raster<std::uint8_t>;

/// Bilinear sample of channel c with clamp-to-edge addressing.
template <typename T>
double sample_bilinear(const Raster<T>& img, double u, double v, int c = 0) {
    const double uc = std::clamp(u, 0.0, static_cast<double>(img.width() - 1));
    const double vc = std::clamp(v, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(std::floor(uc));
    const int y0 = static_cast<int>(std::floor(vc));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = uc - x0;
    const double fy = vc - y0;
    const double top = (1.0 - fx) * img(x0, y0, c) + fx * img(x1, y0, c);
    const double bottom = (1.0 - fx) * img(x0, y1, c) + fx * img(x1, y1, c);
    return (1.0 - fy) * top + fy * bottom;
}

/// Four Catmull-Rom taps along one axis of length n at coordinate u, with
/// the coordinate clamped to [0, n-1] and tap indices clamped to the edge.
struct CubicTaps {
    int index[4];
    double weight[4];
};

inline CubicTaps cubic_taps(double u, int n) {
    const double uc = std::clamp(u, 0.0, static_cast<double>(n - 1));
    const int i0 = static_cast<int>(std::floor(uc));
    const double t = uc - i0, t2 = t * t, t3 = t2 * t;
    CubicTaps k;
    k.weight[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    k.weight[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    k.weight[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    k.weight[3] = 0.5 * (t3 - t2);
    for (int i = 0; i < 4; ++i) k.index[i] = std::clamp(i0 - 1 + i, 0, n - 1);
    return k;
}

/// Catmull-Rom bicubic sample of channel c with clamp-to-edge addressing.
/// Interpolates exactly at pixel centres and reproduces quadratics.
template <typename T>
double sample_bicubic(const Raster<T>& img, double u, double v, int c = 0) {
    const CubicTaps kx = cubic_taps(u, img.width());
    const CubicTaps ky = cubic_taps(v, img.height());
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
        double row = 0.0;
        for (int i = 0; i < 4; ++i) row += kx.weight[i] * img(kx.index[i], ky.index[j], c);
        sum += ky.weight[j] * row;
    }
    return sum;
}

/// Rec. 709 luminance of a linear RGB raster (or passthrough for 1 channel).
inline Raster<float> luminance(const ImageF& rgb) {
    Raster<float> out(rgb.width(), rgb.height(), 1);
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            if (rgb.channels() >= 3) {
                out(x, y) = 0.2126f * rgb(x, y, 0) + 0.7152f * rgb(x, y, 1) +
                            0.0722f * rgb(x, y, 2);
            } else {
                out(x, y) = rgb(x, y, 0);
            }
        }
    }
    return out;
}

}  // namespace scenecomp
