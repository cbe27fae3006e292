// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/panorama.hpp"

#include <cmath>
#include <numbers>

#include "scenecomp/error.hpp"

using Eigen::Vector2d;
using Eigen::Vector3d;

namespace scenecomp {

namespace {
constexpr double kPi = std::numbers::pi;
}

Vector3d pano_direction(double u, double v, int width, int height) {
    const double phi = 2.0 * kPi * (u + 0.5) / width;
    const double theta = kPi * (v + 0.5) / height;
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Vector2d direction_to_pano(const Vector3d& direction, int width, int height) {
    const Vector3d d = direction.normalized();
    double phi = std::atan2(d.y(), d.x());
    if (phi < 0.0) phi += 2.0 * kPi;
    const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
    double u = phi * width / (2.0 * kPi) - 0.5;
    if (u >= width - 0.5) u -= width;
    return {u, theta * height / kPi - 0.5};
}

double pano_pixel_solid_angle(int v, int width, int height) {
    const double t0 = kPi * v / height;
    const double t1 = kPi * (v + 1) / height;
    return (2.0 * kPi / width) * (std::cos(t0) - std::cos(t1));
}

void HdrPanorama::validate() const {
    if (radiance.channels() != 3 || radiance.width() != 2 * radiance.height() ||
        radiance.height() <= 0) {
        throw Error(ErrorKind::DimensionMismatch, "panorama must be RGB with W = 2H");
    }
    for (float v : radiance.data()) {
        if (!std::isfinite(v) || v < 0.0f) {
            throw Error(ErrorKind::OutOfRangeInput, "panorama radiance must be finite and >= 0");
        }
    }
}

Vector3d HdrPanorama::lookup(const Vector3d& direction) const {
    const int w = width(), h = height();
    const Vector2d uv = direction_to_pano(direction, w, h);
    const double u = uv.x();
    const double v = std::clamp(uv.y(), 0.0, static_cast<double>(h - 1));
    const double uf = std::floor(u);
    const double fx = u - uf;
    int x0 = static_cast<int>(uf) % w;
    if (x0 < 0) x0 += w;
    const int x1 = (x0 + 1) % w;
    const int y0 = static_cast<int>(std::floor(v));
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = v - y0;
    Vector3d out;
    for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * radiance(x0, y0, c) + fx * radiance(x1, y0, c);
        const double bot = (1.0 - fx) * radiance(x0, y1, c) + fx * radiance(x1, y1, c);
        out[c] = (1.0 - fy) * top + fy * bot;
    }
    return out;
}

}  // namespace scenecomp
