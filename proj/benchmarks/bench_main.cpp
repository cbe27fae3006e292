// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "scenecomp/flow.hpp"
#include "scenecomp/mesh.hpp"
#include "scenecomp/metrics.hpp"
#include "scenecomp/render.hpp"
#include "scenecomp/retrieval.hpp"

using namespace scenecomp;

namespace {

ImageF texture(int w, int h, double shift) {
    ImageF img(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = x - shift;
            img(x, y) = static_cast<float>(0.5 + 0.2 * std::sin(0.31 * u + 0.17 * y) + 0.15 * std::cos(0.11 * u - 0.23 * y));
        }
    return img;
}

Eigen::MatrixXd samples(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = g(rng);
    return m;
}

void BM_EstimateFlow(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0)), h = w * 3 / 4;
    const ImageF a = texture(w, h, 0.0), b = texture(w, h, 2.5);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_flow(a, b));
    state.SetItemsProcessed(state.iterations() * w * h);
}
BENCHMARK(BM_EstimateFlow)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_RenderSphere(benchmark::State& state) {
    const ObjectMesh sphere = make_uv_sphere(1.0, 48, 24);
    const PlacedMesh placed(sphere, {Matrix3d::Identity(), Vector3d(0, 0, 4)});
    Matrix3d K;
    K << 80, 0, 32, 0, 80, 32, 0, 0, 1;
    const HdrPanorama env(128, 64, 1.0f);
    const int samples = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(render_object(placed, K, CameraPose{}, env, RenderSettings{64, 64, samples, 1, 1}));
}
BENCHMARK(BM_RenderSphere)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FidScore(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const FeatureStats a = feature_stats(samples(4 * d, d, 1)), b = feature_stats(samples(4 * d, d, 2));
    for (auto _ : state) benchmark::DoNotOptimize(fid_score(a, b));
}
BENCHMARK(BM_FidScore)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
    const Eigen::MatrixXd x = samples(static_cast<int>(state.range(0)), 64, 3);
    for (auto _ : state) benchmark::DoNotOptimize(build_vocabulary(x, 32, 7));
}
BENCHMARK(BM_KMeans)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
