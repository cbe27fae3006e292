// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/stabilization.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "scenecomp/error.hpp"
#include "scenecomp/parallel.hpp"

namespace scenecomp {

int AnchorSet::alive_count(int frame) const {
    if (frame < 0 || frame >= static_cast<int>(alive.size())) return 0;
    return static_cast<int>(std::count(alive[frame].begin(), alive[frame].end(), 1));
}

namespace {

bool inside_image(const Vector2d& p, int w, int h) {
    return p.allFinite() && p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= w - 1 && p.y() <= h - 1;
}

Raster<double> min_eigen_map(const Raster<float>& gray, int radius) {
    const int w = gray.width(), h = gray.height();
    Raster<double> out(w, h, 1, 0.0);
    auto gx = [&](int x, int y) {
        return 0.5 * (gray(std::min(x + 1, w - 1), y) - gray(std::max(x - 1, 0), y));
    };
    auto gy = [&](int x, int y) {
        return 0.5 * (gray(x, std::min(y + 1, h - 1)) - gray(x, std::max(y - 1, 0)));
    };
    for (int y = radius + 1; y < h - radius - 1; ++y)
        for (int x = radius + 1; x < w - radius - 1; ++x) {
            double a = 0, b = 0, c = 0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const double ix = gx(x + dx, y + dy), iy = gy(x + dx, y + dy);
                    a += ix * ix;
                    b += ix * iy;
                    c += iy * iy;
                }
            out(x, y) = 0.5 * (a + c - std::sqrt((a - c) * (a - c) + 4.0 * b * b));
        }
    return out;
}

Eigen::Matrix3d skew(const Vector3d& v) {
    Eigen::Matrix3d S;
    S << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return S;
}

struct Observations {
    std::vector<Vector4d> world;
    std::vector<Vector2d> pixels;
};

double total_cost(const Matrix3d& K, const CameraPose& pose, const Observations& obs) {
    double cost = 0.0;
    for (std::size_t i = 0; i < obs.world.size(); ++i) {
        const Vector3d q = K * pose.to_camera(obs.world[i].head<3>() / obs.world[i].w());
        const Vector2d r = q.head<2>() / q.z() - obs.pixels[i];
        cost += r.squaredNorm();
    }
    return cost;
}

}  // namespace

AnchorSet select_anchors(const ScenePackage& scene, const Vector4d& placement_anchor,
                         const std::set<int>& allowed, const AnchorSelectionOptions& options) {
    const int n = scene.n_target;
    if (n < 0 || n >= scene.frame_count()) {
        throw Error(ErrorKind::InsufficientAnchors, "scene has no frame after the target frames");
    }
    const Raster<float> gray = luminance(scene.frames[n]);
    const DepthMap& depth = scene.depth_maps[n];
    const ClassMask& mask = scene.seg_masks[n];
    const int w = gray.width(), h = gray.height();
    const Raster<double> strength = min_eigen_map(gray, std::max(1, options.window / 2));

    Vector2d center(0.5 * (w - 1), 0.5 * (h - 1));
    const Projection proj = project_point(scene.K, scene.poses[n], placement_anchor);
    if (proj.in_front && proj.pixel.allFinite()) {
        center = Vector2d(std::clamp(proj.pixel.x(), 0.0, double(w - 1)),
                          std::clamp(proj.pixel.y(), 0.0, double(h - 1)));
    }
    const double peak = *std::max_element(strength.data().begin(), strength.data().end());

    // Integral image of "allowed with valid depth" for the support test.
    std::vector<int> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    auto I = [&](int x, int y) -> int& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float z = depth(x, y);
            const int ok = allowed.contains(mask(x, y)) && z > 0.0f && std::isfinite(z);
            I(x + 1, y + 1) = ok + I(x, y + 1) + I(x + 1, y) - I(x, y);
        }
    const int sr = std::max(0, options.support_radius);
    auto supported = [&](int x, int y) {
        if (x - sr < 0 || y - sr < 0 || x + sr >= w || y + sr >= h) return false;
        const int x0 = x - sr, y0 = y - sr, x1 = x + sr + 1, y1 = y + sr + 1;
        return I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0) == (2 * sr + 1) * (2 * sr + 1);
    };

    struct Candidate {
        int x, y;
        double s;
    };
    std::vector<Candidate> cand;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double s = strength(x, y);
            if (s <= 0.0 || s < options.min_relative_strength * peak) continue;
            if (!supported(x, y)) continue;
            if (options.search_radius > 0.0 &&
                (Vector2d(x, y) - center).norm() > options.search_radius)
                continue;
            cand.push_back({x, y, s});
        }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const Candidate& a, const Candidate& b) { return a.s > b.s; });

    AnchorSet set;
    std::vector<Vector2d> picked;
    const double sep2 = options.min_separation * options.min_separation;
    for (const auto& c : cand) {
        if (static_cast<int>(picked.size()) >= options.count) break;
        const Vector2d p(c.x, c.y);
        bool clear = true;
        for (const auto& q : picked)
            if ((q - p).squaredNorm() < sep2) {
                clear = false;
                break;
            }
        if (!clear) continue;
        picked.push_back(p);
        set.world.push_back(backproject_pixel(scene.K, scene.poses[n], p, depth(c.x, c.y)).homogeneous());
    }
    project_anchors(set, scene.K, scene.poses, n + 1);
    return set;
}

void project_anchors(AnchorSet& anchors, const Matrix3d& K, std::span<const CameraPose> poses,
                     int frames) {
    const std::size_t m = anchors.size();
    anchors.projected.assign(frames, std::vector<Vector2d>(m, Vector2d::Zero()));
    anchors.alive.assign(frames, std::vector<std::uint8_t>(m, 0));
    for (int f = 0; f < frames; ++f)
        for (std::size_t i = 0; i < m; ++i) {
            const Projection p = project_point(K, poses[f], anchors.world[i]);
            anchors.projected[f][i] = p.pixel;
            anchors.alive[f][i] = p.in_front ? 1 : 0;
        }
    anchors.observed = anchors.projected;
}

std::vector<FlowField> estimate_backward_flows(const ScenePackage& scene,
                                               const FlowOptions& options, int jobs) {
    const int pairs = std::min(scene.n_target, scene.frame_count() - 1);
    std::vector<FlowField> flows(std::max(0, pairs));
    FlowOptions inner = options;
    inner.jobs = 1;
    parallel_for(flows.size(), jobs, [&](std::size_t i) {
        const int n = static_cast<int>(i);
        flows[i] = estimate_flow(scene.frames[n + 1], scene.frames[n], inner);
        flows[i].from = n + 1;
        flows[i].to = n;
    });
    return flows;
}

AnchorSet track_anchors(const AnchorSet& anchors, std::span<const FlowField> backward_flows,
                        double min_confidence) {
    AnchorSet out = anchors;
    const int last = anchors.frames() - 1;
    if (last < 0) return out;
    if (static_cast<int>(backward_flows.size()) < last) {
        throw Error(ErrorKind::InvalidConfig, "missing flow fields for anchor tracking");
    }
    const std::size_t m = anchors.size();
    for (std::size_t i = 0; i < m; ++i) {
        const FlowField& ref = backward_flows[last - 1];
        Vector2d p = anchors.projected[last][i];
        bool alive = anchors.alive[last][i] && inside_image(p, ref.width(), ref.height());
        out.observed[last][i] = p;
        out.alive[last][i] = alive ? 1 : 0;
        for (int n = last - 1; n >= 0; --n) {
            const FlowField& f = backward_flows[n];
            if (alive) {
                const double conf = f.confidence_at(p.x(), p.y());
                p += f.at(p.x(), p.y());
                alive = conf >= min_confidence && inside_image(p, f.width(), f.height());
            }
            out.observed[n][i] = p;
            out.alive[n][i] = alive ? 1 : 0;
        }
    }
    return out;
}

double reprojection_rms(const Matrix3d& K, const CameraPose& pose,
                        std::span<const Vector4d> world, std::span<const Vector2d> observed) {
    if (world.empty()) return 0.0;
    Observations obs{{world.begin(), world.end()}, {observed.begin(), observed.end()}};
    return std::sqrt(total_cost(K, pose, obs) / (2.0 * world.size()));
}

RefineResult refine_pose(const Matrix3d& K, const AnchorSet& anchors, int frame,
                         const CameraPose& init, const RefineOptions& options) {
    Observations obs;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (frame < anchors.frames() && anchors.alive[frame][i]) {
            obs.world.push_back(anchors.world[i]);
            obs.pixels.push_back(anchors.observed[frame][i]);
        }
    }
    const int m = static_cast<int>(obs.world.size());
    if (m < 4) {
        throw Error(ErrorKind::InsufficientAnchors,
                    "frame " + std::to_string(frame) + " has " + std::to_string(m) + " alive anchors");
    }

    RefineResult res;
    res.anchors_used = m;
    CameraPose pose = init;
    double cost = total_cost(K, pose, obs);
    res.initial_rms = std::sqrt(cost / (2.0 * m));
    res.cost_history.push_back(cost);
    res.orthonormality_error.push_back((pose.R.transpose() * pose.R - Matrix3d::Identity()).norm());
    double lambda = options.initial_lambda;
    bool capped = true;

    for (int it = 0; it < options.max_iterations; ++it) {
        res.iterations = it + 1;
        if (cost <= 1e-30) {
            capped = false;
            break;
        }
        Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
        for (int i = 0; i < m; ++i) {
            const Vector3d Xc = pose.to_camera(obs.world[i].head<3>() / obs.world[i].w());
            const Vector3d q = K * Xc;
            Eigen::Matrix<double, 2, 3> dproj;
            dproj << 1.0 / q.z(), 0.0, -q.x() / (q.z() * q.z()),
                     0.0, 1.0 / q.z(), -q.y() / (q.z() * q.z());
            Eigen::Matrix<double, 3, 6> dX;
            dX.leftCols<3>() = -skew(Xc);
            dX.rightCols<3>() = Matrix3d::Identity();
            const Eigen::Matrix<double, 2, 6> J = dproj * K * dX;
            const Vector2d r = q.head<2>() / q.z() - obs.pixels[i];
            H += J.transpose() * J;
            g += J.transpose() * r;
        }
        bool accepted = false;
        while (!accepted) {
            Eigen::Matrix<double, 6, 6> A = H;
            for (int k = 0; k < 6; ++k) A(k, k) += lambda * std::max(H(k, k), 1e-12);
            const Eigen::Matrix<double, 6, 1> delta = A.ldlt().solve(-g);
            const Matrix3d dR = rotation_from_axis_angle(delta.head<3>());
            CameraPose cand;
            cand.R = orthonormalize(dR * pose.R);
            cand.t = dR * pose.t + delta.tail<3>();
            const double c = total_cost(K, cand, obs);
            if (std::isfinite(c) && c < cost) {
                const double drop = cost - c;
                pose = cand;
                cost = c;
                lambda = std::max(lambda * 0.1, 1e-12);
                res.cost_history.push_back(cost);
                res.orthonormality_error.push_back(
                    (pose.R.transpose() * pose.R - Matrix3d::Identity()).norm());
                accepted = true;
                if (delta.norm() < 1e-14 || drop <= 1e-16 * cost) capped = false;
            } else {
                lambda *= 10.0;
                if (lambda > 1e12) break;
            }
        }
        if (!accepted || !capped) {
            capped = false;
            break;
        }
    }
    res.pose = pose;
    res.final_rms = std::sqrt(cost / (2.0 * m));
    res.status = (capped && res.final_rms > options.residual_threshold) ? RefineStatus::NonConvergence
                                                                        : RefineStatus::Converged;
    return res;
}

StabilizationResult stabilize_track(const ScenePackage& scene, const PlacementTrack& track,
                                    const AnchorSet& anchors, const std::set<int>& allowed,
                                    const RefineOptions& options, int jobs) {
    StabilizationResult out;
    out.poses = scene.poses;
    const int n_target = static_cast<int>(track.entries.size());
    out.frames.resize(n_target);
    parallel_for(static_cast<std::size_t>(n_target), jobs, [&](std::size_t i) {
        const int n = static_cast<int>(i);
        FrameRefinement& fr = out.frames[i];
        fr.frame = n;
        try {
            fr.result = refine_pose(scene.K, anchors, n, scene.poses[n], options);
            if (fr.result.status == RefineStatus::NonConvergence) {
                fr.warning = "NonConvergence: rms " + std::to_string(fr.result.final_rms) + " px";
            } else {
                fr.refined = true;
            }
        } catch (const Error& e) {
            fr.warning = e.what();
        }
    });
    for (const auto& fr : out.frames)
        if (fr.refined) out.poses[fr.frame] = fr.result.pose;

    out.track = build_track(scene, out.poses, track.anchor_world, allowed);
    out.track.entries.resize(n_target);
    for (int n = 0; n < n_target; ++n)
        if (!out.frames[n].refined) out.track.entries[n] = track.entries[n];
    return out;
}

void write_residual_csv(const std::filesystem::path& path, const StabilizationResult& result) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    os << "frame,refined,anchors,initial_rms,final_rms,iterations,warning\n";
    char buf[64];
    for (const auto& fr : result.frames) {
        os << fr.frame << ',' << (fr.refined ? 1 : 0) << ',' << fr.result.anchors_used << ',';
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,", fr.result.initial_rms, fr.result.final_rms);
        os << buf << fr.result.iterations << ',';
        std::string w = fr.warning;
        std::replace(w.begin(), w.end(), ',', ';');
        std::replace(w.begin(), w.end(), '\n', ' ');
        os << w << '\n';
    }
}

}  // namespace scenecomp
