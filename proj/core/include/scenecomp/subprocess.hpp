// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

namespace scenecomp {

/// External command run through /bin/sh. A `{workdir}` placeholder in the
/// command is replaced by the quoted work directory; otherwise the quoted
/// directory is appended as the last argument.
struct PluginSpec {
    std::string command;
    double timeout_seconds = 300.0;

    bool enabled() const { return !command.empty(); }
};

/// Timeout after SCENECOMP_PLUGIN_TIMEOUT (seconds) when set, else `fallback`.
double plugin_timeout_from_env(double fallback);

/// Fresh, empty directory under SCENECOMP_TMPDIR (or the system temp dir).
std::filesystem::path make_workdir(const std::string& prefix);

/// Single-quotes a string for /bin/sh.
std::string shell_quote(const std::string& s);

/// Runs the plugin with `workdir` and waits. The whole process group is killed
/// on timeout. Throws PluginNotFound (shell reports 126/127 or the leading
/// absolute path is missing), PluginTimeout, or BadPluginOutput on any other
/// nonzero exit.
void run_plugin(const PluginSpec& spec, const std::filesystem::path& workdir);

}  // namespace scenecomp
