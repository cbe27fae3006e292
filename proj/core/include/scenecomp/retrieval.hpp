// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scenecomp/raster.hpp"

namespace scenecomp {

struct Vocabulary {
    Eigen::MatrixXd centroids;  // k x d
    std::uint64_t seed = 0;
    int iterations = 0;
    std::vector<double> inertia_history;  // one entry per assignment step

    int k() const { return static_cast<int>(centroids.rows()); }
    int d() const { return static_cast<int>(centroids.cols()); }
    double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

struct KMeansOptions {
    int max_iterations = 100;
};

/// k-means++ seeding from a mt19937_64 stream, then Lloyd iterations until the
/// assignment is a fixed point or the cap is reached. An emptied cluster is
/// re-seeded with the point farthest from its centroid. Rows are descriptors.
/// Throws InsufficientData when there are fewer rows than k or k < 1.
Vocabulary build_vocabulary(const Eigen::MatrixXd& descriptors, int k, std::uint64_t seed,
                            const KMeansOptions& options = {});

/// Nearest centroid by Euclidean distance; the lowest index wins ties.
int nearest_word(const Vocabulary& vocab, const Eigen::Ref<const Eigen::VectorXd>& descriptor);

struct VideoHistogram {
    std::string id;
    Eigen::VectorXd counts;  // k entries, >= 0
};

/// Throws DimensionMismatch when descriptor width differs from the vocabulary.
VideoHistogram encode_histogram(const std::string& id, const Eigen::MatrixXd& descriptors,
                                const Vocabulary& vocab);

struct RankedVideo {
    std::string id;
    double score = 0.0;
};

/// Inverse document frequency log(N / (1 + df)) clamped at zero, per word.
Eigen::VectorXd compute_idf(std::span<const VideoHistogram> corpus);

/// Cosine similarity, highest first; equal scores order by id. Zero-norm
/// histograms score 0. Optional per-word weights multiply both sides.
std::vector<RankedVideo> query_videos(std::span<const VideoHistogram> corpus,
                                      const VideoHistogram& query, std::size_t top_n,
                                      const Eigen::VectorXd* weights = nullptr);

struct RetrievalIndex {
    Vocabulary vocab;
    std::vector<VideoHistogram> videos;
    bool use_idf = false;

    std::vector<RankedVideo> query(const VideoHistogram& q, std::size_t top_n) const;
    void save(const std::filesystem::path& path) const;
    static RetrievalIndex load(const std::filesystem::path& path);
};

/// Zero-mean, unit-norm luminance patches on a regular grid; flat patches are
/// kept as zeros.
Eigen::MatrixXd raw_patch_descriptors(const ImageF& image, int patch = 8, int stride = 8);

}  // namespace scenecomp
