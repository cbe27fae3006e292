// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/subprocess.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "scenecomp/error.hpp"

namespace fs = std::filesystem;

namespace scenecomp {

double plugin_timeout_from_env(double fallback) {
    if (const char* v = std::getenv("SCENECOMP_PLUGIN_TIMEOUT")) {
        char* end = nullptr;
        const double t = std::strtod(v, &end);
        if (end != v && t > 0.0) return t;
    }
    return fallback;
}

fs::path make_workdir(const std::string& prefix) {
    fs::path base;
    if (const char* v = std::getenv("SCENECOMP_TMPDIR"); v && *v) {
        base = v;
    } else {
        base = fs::temp_directory_path();
    }
    std::error_code ec;
    fs::create_directories(base, ec);
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
        const fs::path dir = base / (prefix + "-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(counter++) + "-" + std::to_string(rd() % 100000));
        if (fs::create_directory(dir, ec)) return dir;
    }
    throw Error(ErrorKind::IoError, "cannot create a work directory under " + base.string());
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

void run_plugin(const PluginSpec& spec, const fs::path& workdir) {
    if (!spec.enabled()) throw Error(ErrorKind::PluginNotFound, "no plugin command configured");
    const std::string first = spec.command.substr(0, spec.command.find_first_of(" \t"));
    if (!first.empty() && first.front() == '/' && ::access(first.c_str(), X_OK) != 0) {
        throw Error(ErrorKind::PluginNotFound, "plugin executable not found: " + first);
    }
    std::string cmd = spec.command;
    const std::string quoted = shell_quote(workdir.string());
    if (const auto pos = cmd.find("{workdir}"); pos != std::string::npos) {
        cmd.replace(pos, 9, quoted);
    } else {
        cmd += " " + quoted;
    }

    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorKind::IoError, "fork failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);

    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration<double>(spec.timeout_seconds);
    int status = 0;
    for (;;) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0 && errno != EINTR) throw Error(ErrorKind::IoError, "waitpid failed");
        if (clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw Error(ErrorKind::PluginTimeout,
                        "plugin exceeded " + std::to_string(spec.timeout_seconds) + " s: " + spec.command);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFEXITED(status)) {
        const int code = WEXITSTATUS(status);
        if (code == 0) return;
        if (code == 126 || code == 127) {
            throw Error(ErrorKind::PluginNotFound, "plugin command not runnable: " + spec.command);
        }
        throw Error(ErrorKind::BadPluginOutput,
                    "plugin exited with status " + std::to_string(code) + ": " + spec.command);
    }
    throw Error(ErrorKind::BadPluginOutput, "plugin terminated by a signal: " + spec.command);
}

}  // namespace scenecomp
