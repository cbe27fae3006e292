// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "scenecomp/error.hpp"
#include "scenecomp/flow.hpp"
#include "support/fixtures.hpp"

using namespace scenecomp;
using scenecomp::testing::textured_image;

namespace {

// Odd sizes at every level keep the decimation grid symmetric under flips.
constexpr int kW = 129, kH = 97;
constexpr int kMargin = 20;

Vector2d interior_mean(const FlowField& f) {
    Vector2d sum = Vector2d::Zero();
    int n = 0;
    for (int y = kMargin; y < f.height() - kMargin; ++y)
        for (int x = kMargin; x < f.width() - kMargin; ++x) {
            sum += Vector2d(f.flow(x, y, 0), f.flow(x, y, 1));
            ++n;
        }
    return sum / n;
}

ImageF flip_horizontal(const ImageF& img) {
    ImageF out(img.width(), img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) out(img.width() - 1 - x, y, c) = img(x, y, c);
    return out;
}

}  // namespace

TEST(EstimateFlow, IdenticalFramesGiveZeroFlow) {
    const ImageF a = textured_image(kW, kH);
    const FlowField f = estimate_flow(a, a);
    EXPECT_NO_THROW(f.validate());
    double max_abs = 0.0;
    for (float v : f.flow.data()) max_abs = std::max(max_abs, double(std::abs(v)));
    EXPECT_LT(max_abs, 1e-6);
    for (int y = kMargin; y < kH - kMargin; ++y)
        for (int x = kMargin; x < kW - kMargin; ++x) {
            EXPECT_GT(f.confidence(x, y), 0.0f);
            EXPECT_LE(f.confidence(x, y), 1.0f);
        }
}

TEST(EstimateFlow, RecoversIntegerTranslation) {
    const FlowField f = estimate_flow(textured_image(kW, kH), textured_image(kW, kH, 3.0, 0.0));
    const Vector2d m = interior_mean(f);
    EXPECT_NEAR(m.x(), 3.0, 0.25);
    EXPECT_NEAR(m.y(), 0.0, 0.25);
}

TEST(EstimateFlow, RecoversSubpixelTranslation) {
    const FlowField f = estimate_flow(textured_image(kW, kH), textured_image(kW, kH, 1.5, -0.5));
    const Vector2d m = interior_mean(f);
    EXPECT_NEAR(m.x(), 1.5, 0.25);
    EXPECT_NEAR(m.y(), -0.5, 0.25);
}

TEST(EstimateFlow, TranslationsUpToFourPixels) {
    const ImageF a = textured_image(kW, kH);
    for (const Vector2d& d : {Vector2d(4, 0), Vector2d(0, -4), Vector2d(2.8, 2.8), Vector2d(-3.3, 1.2)}) {
        const Vector2d m = interior_mean(estimate_flow(a, textured_image(kW, kH, d.x(), d.y())));
        EXPECT_LT((m - d).norm(), 0.25) << d.transpose();
    }
}

TEST(EstimateFlow, TranslationalModelAlsoRecoversShift) {
    FlowOptions opts;
    opts.affine = false;
    const Vector2d m = interior_mean(estimate_flow(textured_image(kW, kH), textured_image(kW, kH, -2.25, 1.75), opts));
    EXPECT_NEAR(m.x(), -2.25, 0.25);
    EXPECT_NEAR(m.y(), 1.75, 0.25);
}

TEST(EstimateFlow, HorizontalFlipNegatesXFlow) {
    const ImageF a = textured_image(kW, kH), b = textured_image(kW, kH, 1.7, 0.6);
    const FlowField f = estimate_flow(a, b);
    const FlowField g = estimate_flow(flip_horizontal(a), flip_horizontal(b));
    double worst = 0.0;
    for (int y = kMargin; y < kH - kMargin; ++y)
        for (int x = kMargin; x < kW - kMargin; ++x) {
            const int xf = kW - 1 - x;
            worst = std::max(worst, double(std::abs(g.flow(xf, y, 0) + f.flow(x, y, 0))));
            worst = std::max(worst, double(std::abs(g.flow(xf, y, 1) - f.flow(x, y, 1))));
        }
    EXPECT_LT(worst, 0.05);
}

TEST(EstimateFlow, FlatImageHasZeroConfidence) {
    const ImageF flat(40, 30, 1, 0.5f);
    const FlowField f = estimate_flow(flat, flat);
    for (float c : f.confidence.data()) EXPECT_EQ(c, 0.0f);
    for (float v : f.flow.data()) EXPECT_EQ(v, 0.0f);
}

TEST(EstimateFlow, SizeMismatchThrows) {
    EXPECT_THROW(estimate_flow(ImageF(10, 10, 1), ImageF(11, 10, 1)), Error);
}

TEST(BuildPyramid, HalvesEachLevel) {
    const auto pyr = build_pyramid(Raster<float>(129, 97, 1, 1.0f), 3);
    ASSERT_EQ(pyr.size(), 3u);
    EXPECT_EQ(pyr[1].width(), 65);
    EXPECT_EQ(pyr[1].height(), 49);
    EXPECT_EQ(pyr[2].width(), 33);
    // The binomial kernel preserves constants.
    for (float v : pyr[2].data()) EXPECT_NEAR(v, 1.0f, 1e-6f);
}

TEST(FlowFile, RoundTrip) {
    scenecomp::testing::TempDir dir;
    const FlowField f = estimate_flow(textured_image(41, 31), textured_image(41, 31, 1.0, 0.5));
    const auto path = flow_file_name(dir.path(), 3, 2);
    EXPECT_EQ(path.filename(), "flow_3_2.exr");
    write_flow_file(path, f);
    const FlowField g = read_flow_file(path, 3, 2);
    EXPECT_EQ(g.from, 3);
    EXPECT_EQ(g.to, 2);
    EXPECT_EQ(g.flow, f.flow);
    EXPECT_EQ(g.confidence, f.confidence);
}

TEST(FlowFile, ValidateRejectsBadFields) {
    FlowField f;
    f.flow = Raster<float>(4, 4, 2, 0.0f);
    f.confidence = Raster<float>(4, 4, 1, 0.5f);
    EXPECT_NO_THROW(f.validate());
    f.confidence(1, 1) = 1.5f;
    EXPECT_THROW(f.validate(), Error);
    f.confidence(1, 1) = 0.5f;
    f.flow(2, 2, 0) = std::nanf("");
    EXPECT_THROW(f.validate(), Error);
    f.flow = Raster<float>(4, 3, 2, 0.0f);
    EXPECT_THROW(f.validate(), Error);
}
