// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <filesystem>

namespace scenecomp {

/// Feature/descriptor matrix file (.fmat), little-endian:
///   bytes 0..3   magic "FMAT"
///   bytes 4..7   uint32 version (1)
///   bytes 8..11  uint32 d (columns, descriptor dimension)
///   bytes 12..15 uint32 reserved (0)
///   bytes 16..23 uint64 count (rows)
///   then count * d float32 values, row-major.
/// Rows are samples. Values are widened to double on read.
Eigen::MatrixXd read_feature_matrix(const std::filesystem::path& path);
void write_feature_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& rows);

}  // namespace scenecomp
