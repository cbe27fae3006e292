// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "scenecomp/raster.hpp"

namespace scenecomp {

// PNG. 8-bit and 16-bit, 1 (gray), 3 (RGB) or 4 (RGBA) channels.
Raster<std::uint8_t> read_png_u8(const std::filesystem::path& path);
/// Reads 8- or 16-bit PNG widening samples to 16 bits (used for class masks).
Raster<std::uint16_t> read_png_u16(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Raster<std::uint8_t>& image);
void write_png(const std::filesystem::path& path, const Raster<std::uint16_t>& image);

// Float rasters. PFM and EXR hold 1 or 3 channels losslessly (32-bit float);
// Radiance HDR is RGBE and therefore lossy at ~1% relative precision.
ImageF read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImageF& image);
ImageF read_exr(const std::filesystem::path& path);
void write_exr(const std::filesystem::path& path, const ImageF& image);
ImageF read_hdr(const std::filesystem::path& path);
void write_hdr(const std::filesystem::path& path, const ImageF& image);

/// Dispatches on extension: .pfm, .exr, .hdr/.pic.
ImageF read_float_raster(const std::filesystem::path& path);
void write_float_raster(const std::filesystem::path& path, const ImageF& image);

/// Display-encoded 8-bit to linear light: (v / 255)^gamma.
ImageF decode_gamma(const Raster<std::uint8_t>& image, double gamma);
/// Linear light to display-encoded 8-bit: round(255 * clamp(v, 0, 1)^(1 / gamma)).
Raster<std::uint8_t> encode_gamma(const ImageF& image, double gamma);
/// Unit-interval float (e.g. a mask) to 8-bit without gamma.
Raster<std::uint8_t> quantize_unit(const ImageF& image);

}  // namespace scenecomp
