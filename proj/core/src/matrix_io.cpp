// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "scenecomp/error.hpp"

namespace scenecomp {

namespace {
constexpr char kMagic[4] = {'F', 'M', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;
static_assert(std::endian::native == std::endian::little, "fmat I/O assumes little-endian host");
}  // namespace

Eigen::MatrixXd read_feature_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!std::filesystem::exists(path)) throw Error(ErrorKind::MissingAsset, path.string());
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    char magic[4];
    std::uint32_t version = 0, dim = 0, reserved = 0;
    std::uint64_t count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&reserved), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kVersion) {
        throw Error(ErrorKind::ParseError, path.string() + ": not an fmat v1 file");
    }
    std::vector<float> values(static_cast<std::size_t>(count) * dim);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!in) throw Error(ErrorKind::ParseError, path.string() + ": truncated fmat payload");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::uint64_t r = 0; r < count; ++r) {
        for (std::uint32_t c = 0; c < dim; ++c) out(r, c) = values[r * dim + c];
    }
    return out;
}

void write_feature_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    const std::uint32_t dim = static_cast<std::uint32_t>(rows.cols());
    const std::uint32_t reserved = 0;
    const std::uint64_t count = static_cast<std::uint64_t>(rows.rows());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&reserved), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    std::vector<float> row(dim);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (std::uint32_t c = 0; c < dim; ++c) row[c] = static_cast<float>(rows(r, c));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

}  // namespace scenecomp
