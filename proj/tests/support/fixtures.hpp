// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "scenecomp/raster.hpp"
#include "scenecomp/synthetic.hpp"

namespace scenecomp::testing {

/// Unique directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "scenecomp-test");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Smooth multi-frequency texture defined on the continuous plane.
double texture_value(double x, double y);

/// Grey image whose pixel p holds texture_value(p - shift): the content at p
/// in the unshifted image appears at p + shift here.
ImageF textured_image(int width, int height, double shift_x = 0.0, double shift_y = 0.0);

/// Writes the procedural scene (scene.json plus assets) and cube.obj into
/// `dir`; returns the manifest path.
std::filesystem::path write_synthetic_fixture(const std::filesystem::path& dir,
                                              const SyntheticSceneOptions& options = {});

std::string read_file(const std::filesystem::path& path);

/// Relative path -> file bytes for every regular file under `root`.
std::map<std::string, std::string> read_tree(const std::filesystem::path& root);

/// Runs a shell command; returns its exit status (or -1 if it did not exit).
int run_command(const std::string& command);

}  // namespace scenecomp::testing
