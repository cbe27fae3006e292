// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdio>
#include <memory>

#include "json.hpp"
#include "scenecomp/error.hpp"
#include "scenecomp/geometry.hpp"
#include "scenecomp/outputs.hpp"
#include "scenecomp/pipeline.hpp"
#include "scenecomp/raster_io.hpp"
#include "scenecomp/scene_io.hpp"
#include "support/fixtures.hpp"

using namespace scenecomp;
using scenecomp::testing::read_file;
using scenecomp::testing::read_tree;
using scenecomp::testing::TempDir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class PipelineTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = std::make_unique<TempDir>("scenecomp-pipeline");
        SyntheticSceneOptions o;
        o.jitter_rotation_deg = 0.3;
        o.jitter_translation = 0.02;
        manifest_ = scenecomp::testing::write_synthetic_fixture(dir_->path() / "scene", o);
    }
    static void TearDownTestSuite() { dir_.reset(); }

    PipelineConfig config(const std::string& out) const {
        PipelineConfig c;
        c.scene = manifest_.string();
        c.mesh = (manifest_.parent_path() / "cube.obj").string();
        c.output_dir = (dir_->path() / out).string();
        c.render.samples = 16;
        return c;
    }

    static std::unique_ptr<TempDir> dir_;
    static fs::path manifest_;
};

std::unique_ptr<TempDir> PipelineTest::dir_;
fs::path PipelineTest::manifest_;

json manifest_of(const fs::path& out) { return json::parse(read_file(out / "run_manifest.json")); }

Mask8 mask_png(const fs::path& out, const std::string& kind, int n) {
    char name[64];
    std::snprintf(name, sizeof(name), "frames/%s_%04d.png", kind.c_str(), n);
    return read_png_u8(out / name);
}

bool any_nonzero(const Mask8& m) {
    for (auto v : m.data())
        if (v) return true;
    return false;
}

}  // namespace

TEST(PipelineConfig, StrictParsing) {
    EXPECT_NO_THROW(parse_pipeline_config(R"({"scene": "a.json", "render": {"samples": 8}})"));
    for (const char* bad : {R"({"scnee": "a.json"})", R"({"render": {"sample": 8}})", R"({"render": {"samples": "x"}})",
                            "not json"}) {
        try {
            parse_pipeline_config(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig) << bad;
        }
    }
}

TEST(PipelineConfig, ValidationRanges) {
    TempDir dir;
    const fs::path manifest = scenecomp::testing::write_synthetic_fixture(dir.path(), {});
    PipelineConfig c;
    c.scene = manifest.string();
    EXPECT_NO_THROW(c.validate());
    auto expect_invalid = [&](auto mutate) {
        PipelineConfig bad = c;
        mutate(bad);
        try {
            bad.validate();
            ADD_FAILURE();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
        }
    };
    expect_invalid([](PipelineConfig& b) { b.render.shadow_strength = 1.5; });
    expect_invalid([](PipelineConfig& b) { b.render.samples = 0; });
    expect_invalid([](PipelineConfig& b) { b.lighting.tau = 0.0; });
    expect_invalid([](PipelineConfig& b) { b.stabilization.anchors = 3; });
    expect_invalid([](PipelineConfig& b) { b.stabilization.window = 4; });
    expect_invalid([](PipelineConfig& b) { b.placement.strategy = "anywhere"; });

    PipelineConfig missing = c;
    missing.scene = (dir.path() / "nope.json").string();
    try {
        missing.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingAsset);
        EXPECT_EQ(exit_code_for(e), kExitValidation);
    }
}

TEST(PipelineConfig, EffectiveConfigIgnoresExecutionSettings) {
    PipelineConfig a, b;
    a.scene = b.scene = "s.json";
    b.output_dir = "elsewhere";
    b.jobs = 7;
    b.max_plugin_jobs = 3;
    EXPECT_EQ(effective_config_json(a), effective_config_json(b));
    b.seed = 5;
    EXPECT_NE(effective_config_json(a), effective_config_json(b));
    // Round trip through the parser.
    const PipelineConfig c = parse_pipeline_config(effective_config_json(b));
    EXPECT_EQ(effective_config_json(c), effective_config_json(b));
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(Error(ErrorKind::InvalidConfig, "x")), kExitValidation);
    EXPECT_EQ(exit_code_for(StageError("render", 2, Error(ErrorKind::IoError, "x"))), kExitStage);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitStage);
    EXPECT_EQ(exit_code_for(Error(ErrorKind::DimensionMismatch, "x")), kExitValidation);
    EXPECT_EQ(exit_code_for(StageError("load", -1, Error(ErrorKind::ParseError, "x"))), kExitValidation);
    EXPECT_EQ(exit_code_for(StageError("load", -1, Error(ErrorKind::IoError, "x"))), kExitStage);
    EXPECT_EQ(exit_code_for(Error(ErrorKind::NumericalFailure, "x")), kExitStage);
}

TEST_F(PipelineTest, EndToEndSyntheticScene) {
    const PipelineConfig c = config("e2e");
    const PipelineResult r = run_insert_pipeline(c);
    const fs::path out = c.output_dir;
    EXPECT_EQ(r.manifest, out / "run_manifest.json");
    const json m = manifest_of(out);
    ASSERT_EQ(m["frame_count"], 5);
    bool shadow_seen = false;
    for (int n = 0; n < 5; ++n) {
        EXPECT_TRUE(any_nonzero(mask_png(out, "object_mask", n))) << n;
        shadow_seen = shadow_seen || any_nonzero(mask_png(out, "shadow_mask", n));
        EXPECT_TRUE(m["frames"][n]["visible"].get<bool>());
    }
    EXPECT_TRUE(shadow_seen);
    EXPECT_EQ(m["config_hash"], sha256_hex(effective_config_json(c)));
    for (const char* f : {"lighting/environment.exr", "lighting/coverage.exr", "lighting/sun.json",
                          "stabilization/track.json", "stabilization/stabilization_residuals.csv"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    // Every target frame was refined from tracked anchors.
    for (const auto& fr : m["diagnostics"]["stabilization"]["frames"]) EXPECT_TRUE(fr["refined"].get<bool>());
}

TEST_F(PipelineTest, DeterministicAcrossRunsAndJobCounts) {
    PipelineConfig a = config("det_a"), b = config("det_b");
    a.jobs = 1;
    b.jobs = 3;
    run_insert_pipeline(a);
    run_insert_pipeline(b);
    const auto ta = read_tree(a.output_dir), tb = read_tree(b.output_dir);
    EXPECT_FALSE(ta.empty());
    EXPECT_EQ(ta, tb);
}

TEST_F(PipelineTest, MissingManifestWritesNothing) {
    PipelineConfig c = config("missing");
    c.scene = (fs::path(c.output_dir).parent_path() / "no_such_scene.json").string();
    try {
        run_insert_pipeline(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(exit_code_for(e), kExitValidation);
    }
    EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST_F(PipelineTest, NoShadowAblation) {
    PipelineConfig with = config("shadow_on"), without = config("shadow_off");
    with.stabilization.enabled = without.stabilization.enabled = false;
    without.render.shadow = false;
    run_insert_pipeline(with);
    run_insert_pipeline(without);
    bool any_shadow = false;
    for (int n = 0; n < 5; ++n) {
        const Mask8 off = mask_png(without.output_dir, "shadow_mask", n);
        EXPECT_FALSE(any_nonzero(off));
        const Mask8 on = mask_png(with.output_dir, "shadow_mask", n);
        any_shadow = any_shadow || any_nonzero(on);
        const Mask8 rgb_on = mask_png(with.output_dir, "rgb", n), rgb_off = mask_png(without.output_dir, "rgb", n);
        for (int y = 0; y < on.height(); ++y)
            for (int x = 0; x < on.width(); ++x)
                if (on(x, y) == 0)
                    for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(rgb_on(x, y, ch), rgb_off(x, y, ch));
        EXPECT_EQ(mask_png(with.output_dir, "object_mask", n), mask_png(without.output_dir, "object_mask", n));
    }
    EXPECT_TRUE(any_shadow);
}

TEST_F(PipelineTest, NoStabilizeReproducesRawTrack) {
    PipelineConfig c = config("raw");
    c.stabilization.enabled = false;
    run_insert_pipeline(c);
    const json m = manifest_of(c.output_dir);
    const ScenePackage scene = load_scene_package(manifest_);
    const auto& anchor = m["diagnostics"]["anchor_world"];
    const Vector4d O(anchor[0].get<double>(), anchor[1].get<double>(), anchor[2].get<double>(), 1.0);
    for (int n = 0; n < 5; ++n) {
        const auto p = project_point(scene.K, scene.poses[n], O);
        EXPECT_NEAR(m["frames"][n]["placement_pixel"][0].get<double>(), p.pixel.x(), 1e-9);
        EXPECT_NEAR(m["frames"][n]["placement_pixel"][1].get<double>(), p.pixel.y(), 1e-9);
    }
    EXPECT_FALSE(m["diagnostics"]["stabilization"]["enabled"].get<bool>());
}

TEST_F(PipelineTest, LightingPluginsAndFallback) {
    PipelineConfig with = config("sky_plugin"), without = config("sky_fallback");
    with.stabilization.enabled = without.stabilization.enabled = false;
    with.lighting.sky_plugin = std::string(SCENECOMP_TEST_PLUGIN) + " pano-const 0.8";
    without.lighting.sky_plugin = with.lighting.sky_plugin;
    without.lighting.use_plugins = false;
    run_insert_pipeline(with);
    run_insert_pipeline(without);
    const auto stages_with = manifest_of(with.output_dir)["diagnostics"]["lighting"]["stages"];
    const auto stages_without = manifest_of(without.output_dir)["diagnostics"]["lighting"]["stages"];
    EXPECT_EQ(stages_with, json({"fallback:inpaint", "plugin:sky"}));
    EXPECT_EQ(stages_without, json({"fallback:inpaint", "fallback:ldr2hdr"}));

    // The fallback path is the same deterministic lighting as a run that never configured plugins.
    PipelineConfig plain = config("no_plugins");
    plain.stabilization.enabled = false;
    run_insert_pipeline(plain);
    EXPECT_EQ(read_file(fs::path(plain.output_dir) / "lighting/environment.exr"),
              read_file(fs::path(without.output_dir) / "lighting/environment.exr"));
}

TEST_F(PipelineTest, StyleRefinementStage) {
    PipelineConfig id = config("refine_id"), off = config("refine_off");
    id.stabilization.enabled = off.stabilization.enabled = false;
    id.style.plugin = std::string(SCENECOMP_TEST_PLUGIN) + " refine-identity";
    off.style.enabled = false;
    off.style.plugin = id.style.plugin;
    run_insert_pipeline(id);
    run_insert_pipeline(off);
    for (int n = 0; n < 5; ++n)
        EXPECT_EQ(mask_png(id.output_dir, "rgb", n), mask_png(off.output_dir, "rgb", n)) << n;
    EXPECT_EQ(manifest_of(id.output_dir)["diagnostics"]["refine"], "plugin");
    EXPECT_EQ(manifest_of(off.output_dir)["diagnostics"]["refine"], "disabled");

    PipelineConfig failing = config("refine_fail");
    failing.stabilization.enabled = false;
    failing.style.plugin = std::string(SCENECOMP_TEST_PLUGIN) + " fail";
    try {
        run_insert_pipeline(failing);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "refine");
        EXPECT_GE(e.frame(), 0);
        EXPECT_EQ(exit_code_for(e), kExitStage);
    }
}
