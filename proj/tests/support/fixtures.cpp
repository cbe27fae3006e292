// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "support/fixtures.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scenecomp/mesh.hpp"
#include "scenecomp/scene_io.hpp"
#include "scenecomp/subprocess.hpp"

namespace fs = std::filesystem;

namespace scenecomp::testing {

TempDir::TempDir(const std::string& prefix) : path_(make_workdir(prefix)) {}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

double texture_value(double x, double y) {
    // Wavelengths 6..30 px in several orientations; every window of a few
    // pixels has gradient energy in both axes.
    return 0.5 + 0.12 * std::sin(0.23 * x + 0.11 * y) + 0.10 * std::sin(-0.07 * x + 0.31 * y + 1.0) +
           0.08 * std::sin(0.41 * x - 0.29 * y + 2.0) + 0.06 * std::cos(0.52 * x + 0.47 * y + 0.5) +
           0.05 * std::sin(0.19 * x + 0.83 * y + 1.7);
}

ImageF textured_image(int width, int height, double shift_x, double shift_y) {
    ImageF img(width, height, 1);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            img(x, y) = static_cast<float>(texture_value(x - shift_x, y - shift_y));
    return img;
}

fs::path write_synthetic_fixture(const fs::path& dir, const SyntheticSceneOptions& options) {
    const SyntheticScene s = make_synthetic_scene(options);
    const fs::path manifest = save_scene_package(dir, s.scene);
    save_obj(dir / "cube.obj", synthetic_object());
    return manifest;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
    return out;
}

int run_command(const std::string& command) {
    const int status = std::system(command.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

}  // namespace scenecomp::testing
