// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "scenecomp/mesh.hpp"
#include "scenecomp/outputs.hpp"
#include "scenecomp/parallel.hpp"
#include "scenecomp/raster_io.hpp"
#include "scenecomp/render.hpp"
#include "scenecomp/style_transfer.hpp"
#include "scenecomp/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace scenecomp {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr const char* kBuiltinCube = "builtin:cube";

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw Error(ErrorKind::InvalidConfig, section + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw Error(ErrorKind::InvalidConfig, "unknown key " + section + "." + it.key());
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& out) {
    if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

json vec_json(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

void require(bool ok, const std::string& message) {
    if (!ok) throw Error(ErrorKind::InvalidConfig, message);
}

template <typename Fn>
auto stage(const std::string& name, int frame, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, frame, e);
    } catch (const std::exception& e) {
        throw StageError(name, frame, Error(ErrorKind::IoError, e.what()));
    }
}

json track_json(const PlacementTrack& t) {
    json arr = json::array();
    for (std::size_t n = 0; n < t.entries.size(); ++n) {
        const auto& e = t.entries[n];
        arr.push_back({{"index", n},
                       {"pixel", {e.pixel.x(), e.pixel.y()}},
                       {"depth", e.depth},
                       {"visible", e.visible},
                       {"valid_class", e.valid_class}});
    }
    return arr;
}

json pose_json(const CameraPose& p) {
    json R = json::array();
    for (int r = 0; r < 3; ++r) R.push_back({p.R(r, 0), p.R(r, 1), p.R(r, 2)});
    return {{"rotation", R}, {"translation", vec_json(p.t)}};
}

ImageF encode_ldr(const ImageF& linear, double gamma) {
    ImageF out(linear.width(), linear.height(), linear.channels());
    for (std::size_t i = 0; i < linear.data().size(); ++i) {
        const double v = std::clamp(double(linear.data()[i]), 0.0, 1.0);
        out.data()[i] = static_cast<float>(std::pow(v, 1.0 / gamma));
    }
    return out;
}

std::uint64_t frame_seed(std::uint64_t seed, int n, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ull) ^ (static_cast<std::uint64_t>(n) << 32);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

StageError::StageError(std::string stage, int frame, const Error& cause)
    : Error(cause.kind(), "stage " + stage + (frame >= 0 ? " frame " + std::to_string(frame) : "") +
                              ": " + cause.what()),
      stage_(std::move(stage)),
      frame_(frame) {}

namespace {

// Kinds raised while reading or checking user-supplied inputs.
bool is_input_error(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidConfig:
        case ErrorKind::MissingAsset:
        case ErrorKind::ParseError:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::InvalidPose:
        case ErrorKind::DegenerateMesh:
            return true;
        default:
            return false;
    }
}

}  // namespace

int exit_code_for(const std::exception& e) {
    // Loading is where the inputs get validated; any later stage failure is a processing failure.
    if (const auto* se = dynamic_cast<const StageError*>(&e))
        return se->stage() == "load" && is_input_error(se->kind()) ? kExitValidation : kExitStage;
    if (const auto* err = dynamic_cast<const Error*>(&e)) return is_input_error(err->kind()) ? kExitValidation : kExitStage;
    return kExitStage;
}

PipelineConfig parse_pipeline_config(const std::string& text) {
    PipelineConfig c;
    try {
        const json j = json::parse(text);
        check_keys(j, "config",
                   {"scene", "mesh", "output_dir", "seed", "target_frame_rate", "plugin_timeout", "jobs",
                    "max_plugin_jobs", "placement", "stabilization", "lighting", "render", "style"});
        read(j, "scene", c.scene);
        read(j, "mesh", c.mesh);
        read(j, "output_dir", c.output_dir);
        read(j, "seed", c.seed);
        read(j, "target_frame_rate", c.target_frame_rate);
        read(j, "plugin_timeout", c.plugin_timeout);
        read(j, "jobs", c.jobs);
        read(j, "max_plugin_jobs", c.max_plugin_jobs);
        if (j.contains("placement")) {
            const json& p = j.at("placement");
            check_keys(p, "placement",
                       {"strategy", "allowed_classes", "fixed_point", "drop_to_ground", "yaw_deg",
                        "ground_offset", "scale", "up_axis", "plane_stride"});
            auto& o = c.placement;
            read(p, "strategy", o.strategy);
            read(p, "allowed_classes", o.allowed_classes);
            read(p, "fixed_point", o.fixed_point);
            read(p, "drop_to_ground", o.drop_to_ground);
            read(p, "yaw_deg", o.yaw_deg);
            read(p, "ground_offset", o.ground_offset);
            read(p, "scale", o.scale);
            read(p, "up_axis", o.up_axis);
            read(p, "plane_stride", o.plane_stride);
        }
        if (j.contains("stabilization")) {
            const json& s = j.at("stabilization");
            check_keys(s, "stabilization",
                       {"enabled", "anchors", "levels", "window", "min_confidence", "max_iterations",
                        "residual_threshold", "search_radius", "flow_dir"});
            auto& o = c.stabilization;
            read(s, "enabled", o.enabled);
            read(s, "anchors", o.anchors);
            read(s, "levels", o.levels);
            read(s, "window", o.window);
            read(s, "min_confidence", o.min_confidence);
            read(s, "max_iterations", o.max_iterations);
            read(s, "residual_threshold", o.residual_threshold);
            read(s, "search_radius", o.search_radius);
            read(s, "flow_dir", o.flow_dir);
        }
        if (j.contains("lighting")) {
            const json& l = j.at("lighting");
            check_keys(l, "lighting",
                       {"tau", "beta", "gamma", "scale", "sun_exponent", "pano_width", "use_plugins",
                        "inpaint_plugin", "sky_plugin", "ldr2hdr_plugin"});
            auto& o = c.lighting;
            read(l, "tau", o.tau);
            read(l, "beta", o.beta);
            read(l, "gamma", o.gamma);
            read(l, "scale", o.scale);
            read(l, "sun_exponent", o.sun_exponent);
            read(l, "pano_width", o.pano_width);
            read(l, "use_plugins", o.use_plugins);
            read(l, "inpaint_plugin", o.inpaint_plugin);
            read(l, "sky_plugin", o.sky_plugin);
            read(l, "ldr2hdr_plugin", o.ldr2hdr_plugin);
        }
        if (j.contains("render")) {
            const json& r = j.at("render");
            check_keys(r, "render",
                       {"samples", "subpixels", "shadow", "shadow_strength", "softness_deg", "shadow_samples"});
            auto& o = c.render;
            read(r, "samples", o.samples);
            read(r, "subpixels", o.subpixels);
            read(r, "shadow", o.shadow);
            read(r, "shadow_strength", o.shadow_strength);
            read(r, "softness_deg", o.softness_deg);
            read(r, "shadow_samples", o.shadow_samples);
        }
        if (j.contains("style")) {
            const json& s = j.at("style");
            check_keys(s, "style", {"enabled", "plugin"});
            read(s, "enabled", c.style.enabled);
            read(s, "plugin", c.style.plugin);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
    }
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::MissingAsset, "config not found: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_pipeline_config(ss.str());
}

std::string effective_config_json(const PipelineConfig& c) {
    ordered_json j;
    j["scene"] = c.scene;
    j["mesh"] = c.mesh;
    j["seed"] = c.seed;
    j["target_frame_rate"] = c.target_frame_rate ? json(*c.target_frame_rate) : json(nullptr);
    j["plugin_timeout"] = c.plugin_timeout;
    const auto& p = c.placement;
    j["placement"] = {{"strategy", p.strategy},
                      {"allowed_classes", p.allowed_classes},
                      {"fixed_point", p.fixed_point ? json(*p.fixed_point) : json(nullptr)},
                      {"drop_to_ground", p.drop_to_ground},
                      {"yaw_deg", p.yaw_deg ? json(*p.yaw_deg) : json(nullptr)},
                      {"ground_offset", p.ground_offset},
                      {"scale", p.scale},
                      {"up_axis", p.up_axis},
                      {"plane_stride", p.plane_stride}};
    const auto& s = c.stabilization;
    j["stabilization"] = {{"enabled", s.enabled},
                          {"anchors", s.anchors},
                          {"levels", s.levels},
                          {"window", s.window},
                          {"min_confidence", s.min_confidence},
                          {"max_iterations", s.max_iterations},
                          {"residual_threshold", s.residual_threshold},
                          {"search_radius", s.search_radius},
                          {"flow_dir", s.flow_dir}};
    const auto& l = c.lighting;
    j["lighting"] = {{"tau", l.tau},
                     {"beta", l.beta},
                     {"gamma", l.gamma},
                     {"scale", l.scale},
                     {"sun_exponent", l.sun_exponent},
                     {"pano_width", l.pano_width},
                     {"use_plugins", l.use_plugins},
                     {"inpaint_plugin", l.inpaint_plugin},
                     {"sky_plugin", l.sky_plugin},
                     {"ldr2hdr_plugin", l.ldr2hdr_plugin}};
    const auto& r = c.render;
    j["render"] = {{"samples", r.samples},
                   {"subpixels", r.subpixels},
                   {"shadow", r.shadow},
                   {"shadow_strength", r.shadow_strength},
                   {"softness_deg", r.softness_deg},
                   {"shadow_samples", r.shadow_samples}};
    j["style"] = {{"enabled", c.style.enabled}, {"plugin", c.style.plugin}};
    return j.dump();
}

void PipelineConfig::validate() const {
    require(!scene.empty(), "scene path is required");
    if (!fs::is_regular_file(scene)) throw Error(ErrorKind::MissingAsset, "scene manifest not found: " + scene);
    if (mesh != kBuiltinCube && !fs::is_regular_file(mesh)) {
        throw Error(ErrorKind::MissingAsset, "mesh not found: " + mesh);
    }
    if (!stabilization.flow_dir.empty() && !fs::is_directory(stabilization.flow_dir)) {
        throw Error(ErrorKind::MissingAsset, "flow directory not found: " + stabilization.flow_dir);
    }
    const auto& p = placement;
    require(p.strategy == "future-camera" || p.strategy == "mask-region" || p.strategy == "fixed",
            "placement.strategy must be future-camera, mask-region or fixed");
    require(p.strategy != "fixed" || p.fixed_point.has_value(), "fixed placement needs placement.fixed_point");
    require(!p.allowed_classes.empty(), "placement.allowed_classes is empty");
    require(p.scale > 0.0 && std::isfinite(p.scale), "placement.scale must be > 0");
    require(std::isfinite(p.ground_offset), "placement.ground_offset must be finite");
    require(p.up_axis == "y" || p.up_axis == "z", "placement.up_axis must be y or z");
    require(p.plane_stride >= 1, "placement.plane_stride must be >= 1");
    const auto& s = stabilization;
    require(s.anchors >= 4, "stabilization.anchors must be >= 4");
    require(s.levels >= 1 && s.levels <= 8, "stabilization.levels must be in [1, 8]");
    require(s.window >= 3 && s.window % 2 == 1, "stabilization.window must be odd and >= 3");
    require(s.min_confidence >= 0.0 && s.min_confidence <= 1.0, "stabilization.min_confidence must be in [0, 1]");
    require(s.max_iterations >= 1, "stabilization.max_iterations must be >= 1");
    require(s.residual_threshold > 0.0, "stabilization.residual_threshold must be > 0");
    const auto& l = lighting;
    require(l.tau > 0.0 && std::isfinite(l.tau), "lighting.tau must be > 0");
    require(l.beta > 0.0 && std::isfinite(l.beta), "lighting.beta must be > 0");
    require(l.gamma > 0.0 && std::isfinite(l.gamma), "lighting.gamma must be > 0");
    require(l.scale >= 0.0 && std::isfinite(l.scale), "lighting.scale must be >= 0");
    require(l.sun_exponent > 0.0, "lighting.sun_exponent must be > 0");
    require(l.pano_width >= 8 && l.pano_width % 2 == 0, "lighting.pano_width must be even and >= 8");
    const auto& r = render;
    require(r.samples >= 1, "render.samples must be >= 1");
    require(r.subpixels >= 1 && r.subpixels <= 16, "render.subpixels must be in [1, 16]");
    require(r.shadow_strength >= 0.0 && r.shadow_strength <= 1.0, "render.shadow_strength must be in [0, 1]");
    require(r.softness_deg >= 0.0 && r.softness_deg < 90.0, "render.softness_deg must be in [0, 90)");
    require(r.shadow_samples >= 1, "render.shadow_samples must be >= 1");
    require(plugin_timeout > 0.0, "plugin_timeout must be > 0");
    require(!target_frame_rate || *target_frame_rate > 0.0, "target_frame_rate must be > 0");
    require(jobs >= 1, "jobs must be >= 1");
    require(max_plugin_jobs >= 1, "max_plugin_jobs must be >= 1");
}

ScenePackage load_pipeline_scene(const PipelineConfig& config) {
    SceneLoadOptions opt;
    opt.target_frame_rate = config.target_frame_rate;
    opt.jobs = config.jobs;
    return load_scene_package(config.scene, opt);
}

PlacementStage run_placement_stage(const ScenePackage& scene, const PipelineConfig& config) {
    const auto& pc = config.placement;
    PlacementStage out;
    try {
        out.allowed = scene.resolve_classes(pc.allowed_classes);
    } catch (const Error& e) {
        throw Error(ErrorKind::InvalidConfig, e.what());
    }
    out.ground = fit_ground_plane(scene, out.allowed, pc.plane_stride);
    PlacementOptions po;
    po.strategy = pc.strategy == "mask-region" ? PlacementStrategy::MaskRegion
                  : pc.strategy == "fixed"     ? PlacementStrategy::Fixed
                                               : PlacementStrategy::FutureCamera;
    po.allowed_classes = out.allowed;
    po.drop_to_ground = pc.drop_to_ground;
    po.plane_stride = pc.plane_stride;
    if (pc.fixed_point) po.fixed_point = Vector3d((*pc.fixed_point)[0], (*pc.fixed_point)[1], (*pc.fixed_point)[2]);
    out.anchor = select_placement_point(scene, po);
    out.raw_track = build_track(scene, out.anchor, out.allowed);
    return out;
}

StabilizationStage run_stabilization_stage(const ScenePackage& scene, const PipelineConfig& config,
                                           const PlacementStage& placement) {
    StabilizationStage out;
    out.result.poses = scene.poses;
    out.result.track = placement.raw_track;
    const auto& sc = config.stabilization;
    if (!sc.enabled) return out;
    out.enabled = true;

    std::vector<FlowField> flows;
    if (!sc.flow_dir.empty()) {
        for (int n = 0; n < scene.n_target; ++n) {
            fs::path file;
            for (const char* ext : {".exr", ".pfm", ".hdr"}) {
                const fs::path f = flow_file_name(sc.flow_dir, n + 1, n, ext);
                if (fs::exists(f)) {
                    file = f;
                    break;
                }
            }
            if (file.empty()) {
                throw Error(ErrorKind::MissingAsset, "missing flow file flow_" + std::to_string(n + 1) + "_" +
                                                         std::to_string(n) + " in " + sc.flow_dir);
            }
            flows.push_back(read_flow_file(file, n + 1, n));
            if (flows.back().width() != scene.width() || flows.back().height() != scene.height()) {
                throw Error(ErrorKind::DimensionMismatch, "flow file size differs from frames: " + file.string());
            }
        }
    } else {
        FlowOptions fo;
        fo.levels = sc.levels;
        fo.window = sc.window;
        flows = estimate_backward_flows(scene, fo, config.jobs);
    }
    AnchorSelectionOptions ao;
    ao.count = sc.anchors;
    ao.search_radius = sc.search_radius;
    out.anchors = select_anchors(scene, placement.anchor, placement.allowed, ao);
    out.anchors = track_anchors(out.anchors, flows, sc.min_confidence);
    RefineOptions ro;
    ro.max_iterations = sc.max_iterations;
    ro.residual_threshold = sc.residual_threshold;
    out.result = stabilize_track(scene, placement.raw_track, out.anchors, placement.allowed, ro, config.jobs);
    return out;
}

Environment run_lighting_stage(const ScenePackage& scene, std::span<const CameraPose> poses,
                               const PipelineConfig& config) {
    std::vector<PanoramaView> views;
    for (int n = 0; n < scene.frame_count(); ++n)
        views.push_back({encode_ldr(scene.frames[n], scene.decode_gamma), poses[n], scene.K});
    LightingOptions lo;
    const auto& lc = config.lighting;
    lo.sun = {lc.tau, lc.beta};
    lo.gamma = lc.gamma;
    lo.scale = lc.scale;
    lo.sun_exponent = lc.sun_exponent;
    lo.pano_width = lc.pano_width;
    lo.use_plugins = lc.use_plugins;
    lo.plugins.inpaint = {lc.inpaint_plugin, config.plugin_timeout};
    lo.plugins.sky = {lc.sky_plugin, config.plugin_timeout};
    lo.plugins.ldr2hdr = {lc.ldr2hdr_plugin, config.plugin_timeout};
    lo.jobs = config.jobs;
    return build_environment(views, lo);
}

void write_environment(const fs::path& dir, const Environment& env) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string());
    write_exr(dir / "environment.exr", env.radiance.radiance);
    write_exr(dir / "coverage.exr", env.coverage);
    ordered_json j{{"sun_direction", vec_json(env.sun_direction)}, {"stages", env.stages}};
    std::ofstream(dir / "sun.json") << j.dump(2) << '\n';
}

void write_stabilization(const fs::path& dir, const PlacementStage& placement,
                         const StabilizationStage& stage) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string());
    ordered_json j;
    j["anchor_world"] = vec_json(placement.anchor.head<3>() / placement.anchor.w());
    j["raw_track"] = track_json(placement.raw_track);
    j["stabilized_track"] = track_json(stage.result.track);
    json poses = json::array();
    for (const auto& p : stage.result.poses) poses.push_back(pose_json(p));
    j["poses"] = poses;
    j["anchors"] = stage.anchors.size();
    std::ofstream(dir / "track.json") << j.dump(2) << '\n';
    if (stage.enabled) write_residual_csv(dir / "stabilization_residuals.csv", stage.result);
}

PipelineResult run_insert_pipeline(const PipelineConfig& config, const Logger& log) {
    auto note = [&](const std::string& s) {
        if (log) log(s);
    };
    config.validate();
    require(!config.output_dir.empty(), "output_dir is required");
    PipelineResult result;

    const ScenePackage scene = stage("load", -1, [&] { return load_pipeline_scene(config); });
    const ObjectMesh mesh = stage("load", -1, [&] {
        return config.mesh == kBuiltinCube ? synthetic_object() : load_mesh(config.mesh);
    });
    note("loaded " + std::to_string(scene.frame_count()) + " frames");

    const PlacementStage placement = stage("place", -1, [&] { return run_placement_stage(scene, config); });
    const StabilizationStage stab =
        stage("stabilize", -1, [&] { return run_stabilization_stage(scene, config, placement); });
    for (const auto& fr : stab.result.frames)
        if (!fr.warning.empty()) result.warnings.push_back("frame " + std::to_string(fr.frame) + ": " + fr.warning);
    const std::vector<CameraPose>& poses = stab.result.poses;

    const Environment env = stage("light", -1, [&] { return run_lighting_stage(scene, poses, config); });
    note("lighting: sun direction (" + std::to_string(env.sun_direction.x()) + ", " +
         std::to_string(env.sun_direction.y()) + ", " + std::to_string(env.sun_direction.z()) + ")");

    const auto& pc = config.placement;
    ObjectPlacementOptions op;
    op.yaw_deg = pc.yaw_deg;
    op.ground_offset = pc.ground_offset;
    op.scale = pc.scale;
    op.snap_to_plane = pc.drop_to_ground;
    op.up_axis = pc.up_axis == "z" ? ObjectPlacementOptions::UpAxis::Z : ObjectPlacementOptions::UpAxis::Y;
    const ObjectFrame of = place_object(mesh.vertices, placement.anchor, placement.ground,
                                        poses[scene.reference_index()], op);
    const PlacedMesh placed(mesh, RigidTransform{of.R, of.t});

    const int n_target = scene.n_target;
    std::vector<CompositeOutput> frames(n_target);
    const auto& rc = config.render;
    parallel_for(static_cast<std::size_t>(n_target), config.jobs, [&](std::size_t i) {
        const int n = static_cast<int>(i);
        const ObjectLayer layer = stage("render", n, [&] {
            RenderSettings rs{scene.width(), scene.height(), rc.samples, rc.subpixels, frame_seed(config.seed, n, 1)};
            return render_object(placed, scene.K, poses[n], env.radiance, rs);
        });
        const ImageF shadow = stage("shadow", n, [&] {
            if (!rc.shadow) return ImageF(scene.width(), scene.height(), 1, 0.0f);
            ShadowSettings ss;
            ss.width = scene.width();
            ss.height = scene.height();
            ss.angular_radius = rc.softness_deg * kDeg;
            ss.samples = rc.softness_deg > 0.0 ? rc.shadow_samples : 1;
            ss.seed = frame_seed(config.seed, n, 2);
            ss.scene_depth = &scene.depth_maps[n];
            return cast_shadow(placed, placement.ground, env.sun_direction, scene.K, poses[n], ss);
        });
        frames[i] = stage("composite", n, [&] {
            return composite_frame(scene.frames[n], layer, shadow, scene.depth_maps[n], rc.shadow_strength);
        });
    });

    const bool refine = config.style.enabled && !config.style.plugin.empty();
    if (refine) {
        parallel_for(static_cast<std::size_t>(n_target), config.max_plugin_jobs, [&](std::size_t i) {
            const int n = static_cast<int>(i);
            frames[i].rgb = stage("refine", n, [&] {
                const InpaintTriple triple =
                    assemble_inpaint_inputs(frames[i].rgb, binarize_alpha(frames[i].object_mask));
                ExternalRefineOptions eo;
                eo.plugin = {config.style.plugin, config.plugin_timeout};
                eo.gamma = scene.decode_gamma;
                eo.identity_fallback = false;
                return refine_frame_external(triple, eo);
            });
        });
    }

    RunRecord record;
    record.effective_config_json = effective_config_json(config);
    record.seed = config.seed;
    record.encode_gamma = scene.decode_gamma;
    for (int n = 0; n < n_target; ++n) {
        const auto& e = stab.result.track.entries[n];
        record.frames.push_back({n, e.pixel, e.depth, e.visible, e.valid_class});
    }
    ordered_json diag;
    const Plane& g = placement.ground;
    diag["ground_plane"] = {g.normal.x(), g.normal.y(), g.normal.z(), g.d};
    diag["anchor_world"] = vec_json(placement.anchor.head<3>() / placement.anchor.w());
    json R = json::array();
    for (int r = 0; r < 3; ++r) R.push_back({of.R(r, 0), of.R(r, 1), of.R(r, 2)});
    diag["object_transform"] = {{"R", R}, {"t", vec_json(of.t)}};
    diag["raw_track"] = track_json(placement.raw_track);
    json sframes = json::array();
    for (const auto& fr : stab.result.frames) {
        sframes.push_back({{"frame", fr.frame},
                           {"refined", fr.refined},
                           {"anchors", fr.result.anchors_used},
                           {"initial_rms", fr.result.initial_rms},
                           {"final_rms", fr.result.final_rms},
                           {"iterations", fr.result.iterations},
                           {"warning", fr.warning}});
    }
    diag["stabilization"] = {{"enabled", stab.enabled}, {"anchors", stab.anchors.size()}, {"frames", sframes}};
    diag["lighting"] = {{"stages", env.stages}, {"sun_direction", vec_json(env.sun_direction)}};
    diag["shadow"] = rc.shadow;
    diag["refine"] = refine ? "plugin" : (config.style.enabled ? "identity" : "disabled");
    diag["warnings"] = result.warnings;
    record.diagnostics_json = diag.dump();

    const fs::path out(config.output_dir);
    result.manifest = stage("write", -1, [&] {
        const fs::path m = write_outputs(out, frames, record);
        write_environment(out / "lighting", env);
        write_stabilization(out / "stabilization", placement, stab);
        return m;
    });
    note("wrote " + result.manifest.string());
    return result;
}

}  // namespace scenecomp
