// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/raster_io.hpp"

#include <png.h>

#include <ImfChannelList.h>
#include <ImfFrameBuffer.h>
#include <ImfHeader.h>
#include <ImfInputFile.h>
#include <ImfOutputFile.h>
#include <Iex.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "scenecomp/error.hpp"

namespace fs = std::filesystem;

namespace scenecomp {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_or_throw(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        if (mode[0] == 'r' && !fs::exists(path)) {
            throw Error(ErrorKind::MissingAsset, path.string());
        }
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    if (what) *what = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct PngPixels {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> bytes;  // 16-bit samples stored big-endian
};

PngPixels read_png_raw(const fs::path& path) {
    FilePtr file = open_or_throw(path, "rb");
    std::string what;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &what, png_error_fn, png_warning_fn);
    if (!png) throw Error(ErrorKind::IoError, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    PngPixels out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::ParseError, path.string() + ": " + what);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    out.bytes.resize(row_bytes * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + row_bytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png_raw(const fs::path& path, int width, int height, int channels, int bit_depth,
                   const std::uint8_t* bytes) {
    if (channels < 1 || channels > 4 || channels == 2) {
        throw Error(ErrorKind::IoError, "unsupported PNG channel count");
    }
    FilePtr file = open_or_throw(path, "wb");
    std::string what;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &what, png_error_fn, png_warning_fn);
    if (!png) throw Error(ErrorKind::IoError, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::IoError, path.string() + ": " + what);
    }
    png_init_io(png, file.get());
    const int color_type = channels == 1   ? PNG_COLOR_TYPE_GRAY
                           : channels == 3 ? PNG_COLOR_TYPE_RGB
                                           : PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const std::size_t row_bytes =
        static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(bytes + row_bytes * y));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) {
        throw Error(ErrorKind::IoError, "write failed: " + path.string());
    }
}

std::string lower_extension(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

}  // namespace

Raster<std::uint8_t> read_png_u8(const fs::path& path) {
    PngPixels px = read_png_raw(path);
    Raster<std::uint8_t> out(px.width, px.height, px.channels);
    if (px.bit_depth == 8) {
        out.data() = std::move(px.bytes);
    } else {
        // Keep the high byte of each big-endian 16-bit sample.
        for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = px.bytes[2 * i];
    }
    return out;
}

Raster<std::uint16_t> read_png_u16(const fs::path& path) {
    PngPixels px = read_png_raw(path);
    Raster<std::uint16_t> out(px.width, px.height, px.channels);
    auto& d = out.data();
    if (px.bit_depth == 8) {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = px.bytes[i];
    } else {
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] = static_cast<std::uint16_t>((px.bytes[2 * i] << 8) | px.bytes[2 * i + 1]);
        }
    }
    return out;
}

void write_png(const fs::path& path, const Raster<std::uint8_t>& image) {
    write_png_raw(path, image.width(), image.height(), image.channels(), 8,
                  image.data().data());
}

void write_png(const fs::path& path, const Raster<std::uint16_t>& image) {
    std::vector<std::uint8_t> bytes(image.data().size() * 2);
    for (std::size_t i = 0; i < image.data().size(); ++i) {
        bytes[2 * i] = static_cast<std::uint8_t>(image.data()[i] >> 8);
        bytes[2 * i + 1] = static_cast<std::uint8_t>(image.data()[i] & 0xff);
    }
    write_png_raw(path, image.width(), image.height(), image.channels(), 16, bytes.data());
}

// PFM stores rows bottom-to-top; a negative scale marks little-endian data.
ImageF read_pfm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!fs::exists(path)) throw Error(ErrorKind::MissingAsset, path.string());
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    in.get();
    if (!in || (magic != "PF" && magic != "Pf") || width <= 0 || height <= 0 || scale == 0.0) {
        throw Error(ErrorKind::ParseError, path.string() + ": bad PFM header");
    }
    const int channels = magic == "PF" ? 3 : 1;
    const bool little = scale < 0.0;
    ImageF out(width, height, channels);
    std::vector<std::uint32_t> row(static_cast<std::size_t>(width) * channels);
    for (int r = 0; r < height; ++r) {
        in.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(std::uint32_t));
        if (!in) throw Error(ErrorKind::ParseError, path.string() + ": truncated PFM");
        const int y = height - 1 - r;
        for (int i = 0; i < width * channels; ++i) {
            std::uint32_t bits = row[i];
            if (little != (std::endian::native == std::endian::little)) {
                bits = __builtin_bswap32(bits);
            }
            out(i / channels, y, i % channels) = std::bit_cast<float>(bits);
        }
    }
    return out;
}

void write_pfm(const fs::path& path, const ImageF& image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw Error(ErrorKind::IoError, "PFM supports 1 or 3 channels");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    out << (image.channels() == 3 ? "PF" : "Pf") << "\n"
        << image.width() << " " << image.height() << "\n-1.0\n";
    static_assert(std::endian::native == std::endian::little);
    const std::size_t row = static_cast<std::size_t>(image.width()) * image.channels();
    for (int y = image.height() - 1; y >= 0; --y) {
        out.write(reinterpret_cast<const char*>(image.data().data() + row * y),
                  row * sizeof(float));
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

ImageF read_exr(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::MissingAsset, path.string());
    try {
        Imf::InputFile file(path.c_str());
        const Imath::Box2i dw = file.header().dataWindow();
        const int width = dw.max.x - dw.min.x + 1;
        const int height = dw.max.y - dw.min.y + 1;
        const Imf::ChannelList& channels = file.header().channels();
        std::vector<std::string> names;
        if (channels.findChannel("R") && channels.findChannel("G") && channels.findChannel("B")) {
            names = {"R", "G", "B"};
        } else if (channels.findChannel("Y")) {
            names = {"Y"};
        } else if (channels.begin() != channels.end()) {
            names = {channels.begin().name()};
        } else {
            throw Error(ErrorKind::ParseError, path.string() + ": EXR without channels");
        }
        const int nc = static_cast<int>(names.size());
        ImageF out(width, height, nc);
        Imf::FrameBuffer fb;
        char* base = reinterpret_cast<char*>(out.data().data()) -
                     (static_cast<std::ptrdiff_t>(dw.min.y) * width + dw.min.x) * nc *
                         static_cast<std::ptrdiff_t>(sizeof(float));
        for (int c = 0; c < nc; ++c) {
            fb.insert(names[c],
                      Imf::Slice(Imf::FLOAT, base + c * sizeof(float), sizeof(float) * nc,
                                 sizeof(float) * nc * width));
        }
        file.setFrameBuffer(fb);
        file.readPixels(dw.min.y, dw.max.y);
        return out;
    } catch (const Iex::BaseExc& e) {
        throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

void write_exr(const fs::path& path, const ImageF& image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw Error(ErrorKind::IoError, "EXR writer supports 1 or 3 channels");
    }
    try {
        const int nc = image.channels();
        Imf::Header header(image.width(), image.height());
        header.compression() = Imf::ZIP_COMPRESSION;
        const std::array<const char*, 3> rgb = {"R", "G", "B"};
        std::vector<std::string> names;
        if (nc == 3) {
            names.assign(rgb.begin(), rgb.end());
        } else {
            names = {"Y"};
        }
        for (const auto& n : names) header.channels().insert(n, Imf::Channel(Imf::FLOAT));
        Imf::OutputFile file(path.c_str(), header);
        Imf::FrameBuffer fb;
        char* base = const_cast<char*>(reinterpret_cast<const char*>(image.data().data()));
        for (int c = 0; c < nc; ++c) {
            fb.insert(names[c], Imf::Slice(Imf::FLOAT, base + c * sizeof(float),
                                           sizeof(float) * nc, sizeof(float) * nc * image.width()));
        }
        file.setFrameBuffer(fb);
        file.writePixels(image.height());
    } catch (const Iex::BaseExc& e) {
        throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
    }
}

// Radiance RGBE. Reads flat and new-style RLE scanlines; writes flat.
ImageF read_hdr(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!fs::exists(path)) throw Error(ErrorKind::MissingAsset, path.string());
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line.rfind("#?", 0) != 0) throw Error(ErrorKind::ParseError, path.string() + ": not HDR");
    while (std::getline(in, line) && !line.empty()) {
        if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe") {
            throw Error(ErrorKind::ParseError, path.string() + ": unsupported " + line);
        }
    }
    std::getline(in, line);
    std::istringstream res(line);
    std::string ya, xa;
    int height = 0, width = 0;
    res >> ya >> height >> xa >> width;
    if (ya != "-Y" || xa != "+X" || width <= 0 || height <= 0) {
        throw Error(ErrorKind::ParseError, path.string() + ": unsupported resolution line");
    }
    ImageF out(width, height, 3);
    std::vector<std::array<std::uint8_t, 4>> scan(width);
    auto get = [&]() -> std::uint8_t {
        const int c = in.get();
        if (c == EOF) throw Error(ErrorKind::ParseError, path.string() + ": truncated HDR");
        return static_cast<std::uint8_t>(c);
    };
    for (int y = 0; y < height; ++y) {
        std::array<std::uint8_t, 4> head{get(), get(), get(), get()};
        const bool rle = width >= 8 && width < 32768 && head[0] == 2 && head[1] == 2 &&
                         (head[2] & 0x80) == 0;
        if (rle) {
            if (((head[2] << 8) | head[3]) != width) {
                throw Error(ErrorKind::ParseError, path.string() + ": bad RLE scanline");
            }
            for (int c = 0; c < 4; ++c) {
                int x = 0;
                while (x < width) {
                    int count = get();
                    if (count > 128) {
                        count -= 128;
                        const std::uint8_t v = get();
                        if (x + count > width) throw Error(ErrorKind::ParseError, "RLE overrun");
                        for (int i = 0; i < count; ++i) scan[x++][c] = v;
                    } else {
                        if (count == 0 || x + count > width) {
                            throw Error(ErrorKind::ParseError, "RLE overrun");
                        }
                        for (int i = 0; i < count; ++i) scan[x++][c] = get();
                    }
                }
            }
        } else {
            scan[0] = head;
            for (int x = 1; x < width; ++x) scan[x] = {get(), get(), get(), get()};
        }
        for (int x = 0; x < width; ++x) {
            const auto& p = scan[x];
            if (p[3] == 0) {
                out(x, y, 0) = out(x, y, 1) = out(x, y, 2) = 0.0f;
            } else {
                const float f = std::ldexp(1.0f, p[3] - (128 + 8));
                for (int c = 0; c < 3; ++c) out(x, y, c) = (p[c] + 0.5f) * f;
            }
        }
    }
    return out;
}

void write_hdr(const fs::path& path, const ImageF& image) {
    if (image.channels() != 3) throw Error(ErrorKind::IoError, "HDR requires 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << image.height() << " +X "
        << image.width() << "\n";
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const float r = std::max(0.0f, image(x, y, 0));
            const float g = std::max(0.0f, image(x, y, 1));
            const float b = std::max(0.0f, image(x, y, 2));
            const float m = std::max({r, g, b});
            std::array<std::uint8_t, 4> p{0, 0, 0, 0};
            if (m >= 1e-32f) {
                int e = 0;
                const float scale = std::frexp(m, &e) * 256.0f / m;
                p = {static_cast<std::uint8_t>(r * scale), static_cast<std::uint8_t>(g * scale),
                     static_cast<std::uint8_t>(b * scale), static_cast<std::uint8_t>(e + 128)};
            }
            out.write(reinterpret_cast<const char*>(p.data()), 4);
        }
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

ImageF read_float_raster(const fs::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".pfm") return read_pfm(path);
    if (ext == ".exr") return read_exr(path);
    if (ext == ".hdr" || ext == ".pic") return read_hdr(path);
    throw Error(ErrorKind::ParseError, "unsupported float raster: " + path.string());
}

void write_float_raster(const fs::path& path, const ImageF& image) {
    const std::string ext = lower_extension(path);
    if (ext == ".pfm") return write_pfm(path, image);
    if (ext == ".exr") return write_exr(path, image);
    if (ext == ".hdr" || ext == ".pic") return write_hdr(path, image);
    throw Error(ErrorKind::IoError, "unsupported float raster: " + path.string());
}

ImageF decode_gamma(const Raster<std::uint8_t>& image, double gamma) {
    std::array<float, 256> lut{};
    for (int i = 0; i < 256; ++i) lut[i] = static_cast<float>(std::pow(i / 255.0, gamma));
    ImageF out(image.width(), image.height(), image.channels());
    for (std::size_t i = 0; i < image.data().size(); ++i) out.data()[i] = lut[image.data()[i]];
    return out;
}

Raster<std::uint8_t> encode_gamma(const ImageF& image, double gamma) {
    Raster<std::uint8_t> out(image.width(), image.height(), image.channels());
    const double inv = 1.0 / gamma;
    for (std::size_t i = 0; i < image.data().size(); ++i) {
        double v = image.data()[i];
        v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : (v > 0 ? 1.0 : 0.0);
        out.data()[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::pow(v, inv)));
    }
    return out;
}

Raster<std::uint8_t> quantize_unit(const ImageF& image) {
    Raster<std::uint8_t> out(image.width(), image.height(), image.channels());
    for (std::size_t i = 0; i < image.data().size(); ++i) {
        const double v = std::clamp(static_cast<double>(image.data()[i]), 0.0, 1.0);
        out.data()[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
    return out;
}

}  // namespace scenecomp
