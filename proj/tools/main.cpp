// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

// scenecomp: insert a 3D object into a driving video and run individual
// pipeline stages on intermediate files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "scenecomp/matrix_io.hpp"
#include "scenecomp/metrics.hpp"
#include "scenecomp/mesh.hpp"
#include "scenecomp/parallel.hpp"
#include "scenecomp/pipeline.hpp"
#include "scenecomp/raster_io.hpp"
#include "scenecomp/retrieval.hpp"
#include "scenecomp/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace scenecomp;

namespace {

struct PipelineFlags {
    std::string config;
    std::optional<std::string> scene, mesh, out, strategy, style_plugin, sky_plugin, inpaint_plugin,
        ldr2hdr_plugin, flow_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples, anchors, jobs, max_plugin_jobs;
    std::optional<double> shadow_strength, softness, tau, beta, target_fps, plugin_timeout;
    std::vector<std::string> allowed;
    bool no_stabilize = false, no_shadow = false, no_refine = false, no_light_plugins = false;
};

void add_pipeline_flags(CLI::App* app, PipelineFlags& f, bool with_output) {
    app->add_option("-c,--config", f.config, "JSON pipeline config; flags override its values");
    app->add_option("--scene", f.scene, "scene manifest (scene.json)");
    app->add_option("--mesh", f.mesh, "object mesh (.obj/.ply) or builtin:cube");
    if (with_output) app->add_option("-o,--out", f.out, "output directory");
    app->add_option("--seed", f.seed, "render seed");
    app->add_option("--strategy", f.strategy, "placement: future-camera | mask-region | fixed");
    app->add_option("--allowed", f.allowed, "allowed class names or ids for placement");
    app->add_option("--samples", f.samples, "hemisphere samples per shading point");
    app->add_option("--shadow-strength", f.shadow_strength, "shadow darkening k in [0,1]");
    app->add_option("--softness", f.softness, "sun cone half-angle in degrees");
    app->add_option("--tau", f.tau, "sun transmittance");
    app->add_option("--beta", f.beta, "sun sharpness");
    app->add_option("--anchors", f.anchors, "anchor count for stabilization");
    app->add_option("--flow-dir", f.flow_dir, "directory of precomputed flow_{n+1}_{n} files");
    app->add_option("--target-fps", f.target_fps, "downsample frames to this rate");
    app->add_option("--style-plugin", f.style_plugin, "refinement command");
    app->add_option("--sky-plugin", f.sky_plugin, "sky HDR estimation command");
    app->add_option("--inpaint-plugin", f.inpaint_plugin, "panorama inpainting command");
    app->add_option("--ldr2hdr-plugin", f.ldr2hdr_plugin, "LDR to HDR command");
    app->add_option("--plugin-timeout", f.plugin_timeout, "seconds before a plugin is killed");
    app->add_flag("--no-stabilize", f.no_stabilize, "skip pose refinement (raw placement track)");
    app->add_flag("--no-shadow", f.no_shadow, "skip the shadow stage");
    app->add_flag("--no-refine", f.no_refine, "skip the style refinement stage");
    app->add_flag("--no-light-plugins", f.no_light_plugins, "use the analytic lighting fallbacks only");
    app->add_option("-j,--jobs", f.jobs, "worker threads (default: logical cores)");
    app->add_option("--max-plugin-jobs", f.max_plugin_jobs, "concurrent plugin processes");
}

PipelineConfig build_config(const PipelineFlags& f) {
    PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_pipeline_config(f.config);
    c.jobs = default_jobs();
    if (f.scene) c.scene = *f.scene;
    if (f.mesh) c.mesh = *f.mesh;
    if (f.out) c.output_dir = *f.out;
    if (f.seed) c.seed = *f.seed;
    if (f.strategy) c.placement.strategy = *f.strategy;
    if (!f.allowed.empty()) c.placement.allowed_classes = f.allowed;
    if (f.samples) c.render.samples = *f.samples;
    if (f.shadow_strength) c.render.shadow_strength = *f.shadow_strength;
    if (f.softness) c.render.softness_deg = *f.softness;
    if (f.tau) c.lighting.tau = *f.tau;
    if (f.beta) c.lighting.beta = *f.beta;
    if (f.anchors) c.stabilization.anchors = *f.anchors;
    if (f.flow_dir) c.stabilization.flow_dir = *f.flow_dir;
    if (f.target_fps) c.target_frame_rate = *f.target_fps;
    if (f.style_plugin) c.style.plugin = *f.style_plugin;
    if (f.sky_plugin) c.lighting.sky_plugin = *f.sky_plugin;
    if (f.inpaint_plugin) c.lighting.inpaint_plugin = *f.inpaint_plugin;
    if (f.ldr2hdr_plugin) c.lighting.ldr2hdr_plugin = *f.ldr2hdr_plugin;
    if (f.plugin_timeout) c.plugin_timeout = *f.plugin_timeout;
    if (f.no_stabilize) c.stabilization.enabled = false;
    if (f.no_shadow) c.render.shadow = false;
    if (f.no_refine) c.style.enabled = false;
    if (f.no_light_plugins) c.lighting.use_plugins = false;
    if (f.jobs) c.jobs = *f.jobs;
    if (f.max_plugin_jobs) c.max_plugin_jobs = *f.max_plugin_jobs;
    return c;
}

void log_line(const std::string& s) { std::cerr << "scenecomp: " << s << '\n'; }

int cmd_simulate(const PipelineFlags& f) {
    const PipelineConfig c = build_config(f);
    const PipelineResult r = run_insert_pipeline(c, log_line);
    for (const auto& w : r.warnings) log_line("warning: " + w);
    std::cout << r.manifest.string() << '\n';
    return kExitOk;
}

int cmd_stabilize(const PipelineFlags& f) {
    PipelineConfig c = build_config(f);
    c.stabilization.enabled = true;
    c.validate();
    if (c.output_dir.empty()) throw Error(ErrorKind::InvalidConfig, "--out is required");
    const ScenePackage scene = load_pipeline_scene(c);
    const PlacementStage placement = run_placement_stage(scene, c);
    const StabilizationStage stage = run_stabilization_stage(scene, c, placement);
    write_stabilization(c.output_dir, placement, stage);
    for (const auto& fr : stage.result.frames)
        if (!fr.warning.empty()) log_line("frame " + std::to_string(fr.frame) + ": " + fr.warning);
    std::cout << (fs::path(c.output_dir) / "track.json").string() << '\n';
    return kExitOk;
}

int cmd_light(const PipelineFlags& f) {
    const PipelineConfig c = build_config(f);
    c.validate();
    if (c.output_dir.empty()) throw Error(ErrorKind::InvalidConfig, "--out is required");
    const ScenePackage scene = load_pipeline_scene(c);
    const Environment env = run_lighting_stage(scene, scene.poses, c);
    write_environment(c.output_dir, env);
    std::cout << (fs::path(c.output_dir) / "environment.exr").string() << '\n';
    return kExitOk;
}

int cmd_retrieve_index(const std::vector<std::string>& files, int k, std::uint64_t seed, bool idf,
                       int max_iterations, const std::string& out) {
    if (files.empty()) throw Error(ErrorKind::InvalidConfig, "no descriptor files given");
    std::vector<Eigen::MatrixXd> mats;
    Eigen::Index rows = 0, cols = -1;
    for (const auto& f : files) {
        mats.push_back(read_feature_matrix(f));
        if (mats.back().rows() == 0) continue;
        if (cols >= 0 && mats.back().cols() != cols) {
            throw Error(ErrorKind::DimensionMismatch, "descriptor width differs in " + f);
        }
        cols = mats.back().cols();
        rows += mats.back().rows();
    }
    Eigen::MatrixXd all(rows, std::max<Eigen::Index>(cols, 0));
    Eigen::Index r = 0;
    for (const auto& m : mats) {
        if (m.rows() == 0) continue;
        all.middleRows(r, m.rows()) = m;
        r += m.rows();
    }
    RetrievalIndex index;
    index.use_idf = idf;
    index.vocab = build_vocabulary(all, k, seed, KMeansOptions{max_iterations});
    for (std::size_t i = 0; i < files.size(); ++i)
        index.videos.push_back(encode_histogram(fs::path(files[i]).stem().string(), mats[i], index.vocab));
    index.save(out);
    std::cout << out << '\n';
    return kExitOk;
}

int cmd_retrieve_query(const std::string& index_path, const std::string& query, std::size_t top) {
    const RetrievalIndex index = RetrievalIndex::load(index_path);
    const VideoHistogram q =
        encode_histogram(fs::path(query).stem().string(), read_feature_matrix(query), index.vocab);
    ordered_json j = ordered_json::array();
    for (const auto& r : index.query(q, top)) j.push_back({{"id", r.id}, {"score", r.score}});
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_fid(const std::string& a, const std::string& b) {
    const Eigen::MatrixXd fa = read_feature_matrix(a), fb = read_feature_matrix(b);
    if (fa.cols() != fb.cols()) throw Error(ErrorKind::DimensionMismatch, "feature widths differ");
    const double fid = fid_score(feature_stats(fa), feature_stats(fb));
    ordered_json j{{"fid", fid}, {"n_a", fa.rows()}, {"n_b", fb.rows()}, {"d", fa.cols()}};
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

ordered_json stats_json(const ImageF& img) {
    const ImageStats s = image_stats(img);
    ordered_json mean = ordered_json::array(), sd = ordered_json::array();
    for (int c = 0; c < std::min(s.channels, 4); ++c) {
        mean.push_back(s.mean[c]);
        sd.push_back(s.stddev[c]);
    }
    return {{"width", s.width}, {"height", s.height}, {"channels", s.channels}, {"mean", mean},
            {"stddev", sd},     {"min", s.min},       {"max", s.max},           {"nonzero_fraction", s.nonzero_fraction}};
}

int cmd_inspect(const std::string& path) {
    const fs::path p(path);
    const std::string ext = p.extension().string();
    ordered_json j;
    if (ext == ".json") {
        std::ifstream is(p);
        if (!is) throw Error(ErrorKind::MissingAsset, "not found: " + path);
        const auto doc = nlohmann::json::parse(is);
        const std::string format = doc.value("format", "");
        if (format == "scenecomp.run/1") {
            j = {{"kind", "run"},
                 {"config_hash", doc.at("config_hash")},
                 {"seed", doc.at("seed")},
                 {"frame_count", doc.at("frame_count")},
                 {"frames", doc.at("frames")}};
        } else {
            const ScenePackage s = load_scene_package(p);
            j = {{"kind", "scene"},
                 {"frames", s.frame_count()},
                 {"n_target", s.n_target},
                 {"n_reference", s.n_reference},
                 {"width", s.width()},
                 {"height", s.height()},
                 {"frame_rate", s.frame_rate},
                 {"classes", s.class_ids}};
        }
    } else if (ext == ".fmat") {
        const Eigen::MatrixXd m = read_feature_matrix(p);
        j = {{"kind", "features"}, {"rows", m.rows()}, {"cols", m.cols()}};
    } else if (ext == ".obj" || ext == ".ply") {
        const ObjectMesh m = load_mesh(p);
        j = {{"kind", "mesh"}, {"vertices", m.vertices.size()}, {"triangles", m.triangles.size()},
             {"materials", m.materials.size()}};
    } else if (ext == ".png") {
        const auto img = read_png_u8(p);
        ImageF f(img.width(), img.height(), img.channels());
        for (std::size_t i = 0; i < img.data().size(); ++i) f.data()[i] = img.data()[i] / 255.0f;
        j = stats_json(f);
        j["kind"] = "image";
    } else {
        j = stats_json(read_float_raster(p));
        j["kind"] = "raster";
    }
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_synth_scene(const std::string& out, const SyntheticSceneOptions& o) {
    const SyntheticScene s = make_synthetic_scene(o);
    const fs::path dir(out);
    const fs::path manifest = save_scene_package(dir, s.scene);
    save_obj(dir / "cube.obj", synthetic_object());
    ordered_json cfg{{"scene", manifest.string()}, {"mesh", (dir / "cube.obj").string()}, {"seed", 0}};
    std::ofstream(dir / "pipeline.json") << cfg.dump(2) << '\n';
    std::cout << manifest.string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scenecomp: composite a 3D object into a driving video"};
    app.require_subcommand(1);

    PipelineFlags sim, stab, light;
    auto* c_sim = app.add_subcommand("simulate", "run the full insertion pipeline");
    add_pipeline_flags(c_sim, sim, true);
    auto* c_stab = app.add_subcommand("stabilize", "place the anchor and refine target poses");
    add_pipeline_flags(c_stab, stab, true);
    auto* c_light = app.add_subcommand("light", "build the HDR environment for a scene");
    add_pipeline_flags(c_light, light, true);

    std::vector<std::string> idx_files;
    int idx_k = 64, idx_iter = 100;
    std::uint64_t idx_seed = 0;
    bool idx_idf = false;
    std::string idx_out = "index.json";
    auto* c_idx = app.add_subcommand("retrieve-index", "build a bag-of-visual-words index");
    c_idx->add_option("descriptors", idx_files, "one .fmat descriptor file per video")->required();
    c_idx->add_option("-k", idx_k, "vocabulary size");
    c_idx->add_option("--seed", idx_seed, "k-means seed");
    c_idx->add_option("--max-iterations", idx_iter, "Lloyd iteration cap");
    c_idx->add_flag("--idf", idx_idf, "weight words by inverse document frequency");
    c_idx->add_option("-o,--out", idx_out, "index file");

    std::string q_index, q_file;
    std::size_t q_top = 10;
    auto* c_query = app.add_subcommand("retrieve-query", "rank indexed videos against a query");
    c_query->add_option("--index", q_index, "index file")->required();
    c_query->add_option("query", q_file, "query .fmat")->required();
    c_query->add_option("--top", q_top, "number of results");

    std::string fid_a, fid_b;
    auto* c_fid = app.add_subcommand("fid", "Frechet distance between two feature files");
    c_fid->add_option("a", fid_a, "first .fmat")->required();
    c_fid->add_option("b", fid_b, "second .fmat")->required();

    std::string inspect_path;
    auto* c_inspect = app.add_subcommand("inspect", "summarize a scene, run manifest, image, mesh or feature file");
    c_inspect->add_option("path", inspect_path, "file to inspect")->required();

    std::string synth_out;
    SyntheticSceneOptions so;
    auto* c_synth = app.add_subcommand("synth-scene", "write the procedural demo scene and a cube mesh");
    c_synth->add_option("-o,--out", synth_out, "output directory")->required();
    c_synth->add_option("--targets", so.n_target, "target frame count");
    c_synth->add_option("--references", so.n_reference, "reference frame count");
    c_synth->add_option("--width", so.width, "image width");
    c_synth->add_option("--height", so.height, "image height");
    c_synth->add_option("--jitter-deg", so.jitter_rotation_deg, "target pose rotation jitter");
    c_synth->add_option("--jitter-m", so.jitter_translation, "target pose translation jitter");
    c_synth->add_option("--seed", so.seed, "jitter seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*c_sim) return cmd_simulate(sim);
        if (*c_stab) return cmd_stabilize(stab);
        if (*c_light) return cmd_light(light);
        if (*c_idx) return cmd_retrieve_index(idx_files, idx_k, idx_seed, idx_idf, idx_iter, idx_out);
        if (*c_query) return cmd_retrieve_query(q_index, q_file, q_top);
        if (*c_fid) return cmd_fid(fid_a, fid_b);
        if (*c_inspect) return cmd_inspect(inspect_path);
        if (*c_synth) return cmd_synth_scene(synth_out, so);
    } catch (const std::exception& e) {
        std::cerr << "scenecomp: error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}
