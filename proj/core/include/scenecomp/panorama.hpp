// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "scenecomp/raster.hpp"

namespace scenecomp {

// Equirectangular convention, shared by every module:
//   column u (pixel centers at integers) -> azimuth phi = 2*pi*(u + 0.5) / W,
//     measured from world +X toward +Y;
//   row v -> polar angle theta = pi*(v + 0.5) / H, row 0 at the zenith (+Z).
//   direction = (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)).

/// Unit world direction for continuous pano coordinates (u, v).
Eigen::Vector3d pano_direction(double u, double v, int width, int height);
/// Continuous pano coordinates of a direction; u in [-0.5, W - 0.5).
Eigen::Vector2d direction_to_pano(const Eigen::Vector3d& direction, int width, int height);
/// Solid angle subtended by pano row v (all pixels in a row are equal).
double pano_pixel_solid_angle(int v, int width, int height);

/// Linear RGB radiance over the sphere, W = 2H, all values finite and >= 0.
struct HdrPanorama {
    ImageF radiance;  // 3 channels

    HdrPanorama() = default;
    explicit HdrPanorama(ImageF r) : radiance(std::move(r)) {}
    HdrPanorama(int width, int height, float fill = 0.0f) : radiance(width, height, 3, fill) {}

    int width() const { return radiance.width(); }
    int height() const { return radiance.height(); }

    /// Throws DimensionMismatch (W != 2H, not RGB) or OutOfRangeInput (negative/non-finite).
    void validate() const;

    /// Bilinear lookup with azimuth wrap-around and polar clamp.
    Eigen::Vector3d lookup(const Eigen::Vector3d& direction) const;
};

}  // namespace scenecomp
