// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "scenecomp/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "json.hpp"

#include "scenecomp/error.hpp"

namespace fs = std::filesystem;

namespace scenecomp {

namespace {

int nearest_row(const Eigen::MatrixXd& centroids, const Eigen::Ref<const Eigen::VectorXd>& x,
                double* dist2 = nullptr) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < centroids.rows(); ++j) {
        const double d = (centroids.row(j).transpose() - x).squaredNorm();
        if (d < bd) {
            bd = d;
            best = j;
        }
    }
    if (dist2) *dist2 = bd;
    return best;
}

}  // namespace

Vocabulary build_vocabulary(const Eigen::MatrixXd& X, int k, std::uint64_t seed,
                            const KMeansOptions& options) {
    const Eigen::Index n = X.rows();
    if (k < 1 || n < k) {
        throw Error(ErrorKind::InsufficientData, std::to_string(n) + " descriptors for k = " + std::to_string(k));
    }
    if (!X.allFinite()) throw Error(ErrorKind::InsufficientData, "descriptors must be finite");
    std::mt19937_64 rng(seed);
    Vocabulary v;
    v.seed = seed;
    v.centroids.resize(k, X.cols());

    // k-means++ seeding.
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    v.centroids.row(0) = X.row(first(rng));
    std::vector<double> d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (X.row(i) - v.centroids.row(0)).squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double r = unit(rng) * total;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                r -= d2[i];
                if (r < 0.0 && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        v.centroids.row(c) = X.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (X.row(i) - v.centroids.row(c)).squaredNorm());
    }

    std::vector<int> labels(n, -1), prev;
    std::vector<double> dist(n);
    for (int it = 0; it < options.max_iterations; ++it) {
        prev = labels;
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            labels[i] = nearest_row(v.centroids, X.row(i).transpose(), &dist[i]);
            inertia += dist[i];
        }
        v.inertia_history.push_back(inertia);
        v.iterations = it + 1;
        if (labels == prev) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
        std::vector<Eigen::Index> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[i]) += X.row(i);
            ++counts[labels[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                v.centroids.row(c) = sums.row(c) / double(counts[c]);
                continue;
            }
            Eigen::Index far = 0;
            for (Eigen::Index i = 1; i < n; ++i)
                if (dist[i] > dist[far]) far = i;
            v.centroids.row(c) = X.row(far);
            dist[far] = 0.0;
            labels[far] = c;  // forces another assignment pass
        }
    }
    return v;
}

int nearest_word(const Vocabulary& vocab, const Eigen::Ref<const Eigen::VectorXd>& descriptor) {
    if (descriptor.size() != vocab.d()) {
        throw Error(ErrorKind::DimensionMismatch, "descriptor width differs from the vocabulary");
    }
    return nearest_row(vocab.centroids, descriptor);
}

VideoHistogram encode_histogram(const std::string& id, const Eigen::MatrixXd& descriptors,
                                const Vocabulary& vocab) {
    VideoHistogram h{id, Eigen::VectorXd::Zero(vocab.k())};
    if (descriptors.rows() == 0) return h;
    if (descriptors.cols() != vocab.d()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "descriptors have " + std::to_string(descriptors.cols()) + " columns, vocabulary " +
                        std::to_string(vocab.d()));
    }
    for (Eigen::Index i = 0; i < descriptors.rows(); ++i)
        h.counts[nearest_row(vocab.centroids, descriptors.row(i).transpose())] += 1.0;
    return h;
}

Eigen::VectorXd compute_idf(std::span<const VideoHistogram> corpus) {
    if (corpus.empty()) return {};
    const Eigen::Index k = corpus.front().counts.size();
    Eigen::VectorXd idf(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double df = 0.0;
        for (const auto& h : corpus)
            if (h.counts[j] > 0.0) df += 1.0;
        idf[j] = std::max(0.0, std::log(double(corpus.size()) / (1.0 + df)));
    }
    return idf;
}

std::vector<RankedVideo> query_videos(std::span<const VideoHistogram> corpus,
                                      const VideoHistogram& query, std::size_t top_n,
                                      const Eigen::VectorXd* weights) {
    auto weighted = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        if (weights && weights->size() == v.size()) return v.cwiseProduct(*weights);
        return v;
    };
    const Eigen::VectorXd q = weighted(query.counts);
    const double qn = q.norm();
    std::vector<RankedVideo> out;
    out.reserve(corpus.size());
    for (const auto& h : corpus) {
        if (h.counts.size() != q.size()) {
            throw Error(ErrorKind::DimensionMismatch, "histogram size differs for video " + h.id);
        }
        const Eigen::VectorXd v = weighted(h.counts);
        const double vn = v.norm();
        const double s = (qn > 0.0 && vn > 0.0) ? q.dot(v) / (qn * vn) : 0.0;
        out.push_back({h.id, s});
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedVideo& a, const RankedVideo& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (out.size() > top_n) out.resize(top_n);
    return out;
}

std::vector<RankedVideo> RetrievalIndex::query(const VideoHistogram& q, std::size_t top_n) const {
    if (use_idf) {
        const Eigen::VectorXd idf = compute_idf(videos);
        return query_videos(videos, q, top_n, &idf);
    }
    return query_videos(videos, q, top_n);
}

void RetrievalIndex::save(const fs::path& path) const {
    nlohmann::ordered_json j;
    j["format"] = "scenecomp.bovw/1";
    j["k"] = vocab.k();
    j["d"] = vocab.d();
    j["seed"] = vocab.seed;
    j["iterations"] = vocab.iterations;
    j["inertia_history"] = vocab.inertia_history;
    j["use_idf"] = use_idf;
    auto& cents = j["centroids"] = nlohmann::ordered_json::array();
    for (int r = 0; r < vocab.k(); ++r) {
        std::vector<double> row(vocab.d());
        for (int c = 0; c < vocab.d(); ++c) row[c] = vocab.centroids(r, c);
        cents.push_back(row);
    }
    auto& vids = j["videos"] = nlohmann::ordered_json::array();
    for (const auto& h : videos) {
        std::vector<double> counts(h.counts.data(), h.counts.data() + h.counts.size());
        vids.push_back({{"id", h.id}, {"histogram", counts}});
    }
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    os << j.dump(1) << '\n';
    if (!os) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

RetrievalIndex RetrievalIndex::load(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::MissingAsset, "index not found: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
        if (j.at("format").get<std::string>() != "scenecomp.bovw/1") {
            throw Error(ErrorKind::ParseError, "unsupported index format in " + path.string());
        }
        RetrievalIndex idx;
        const int k = j.at("k").get<int>(), d = j.at("d").get<int>();
        idx.vocab.seed = j.at("seed").get<std::uint64_t>();
        idx.vocab.iterations = j.at("iterations").get<int>();
        idx.vocab.inertia_history = j.at("inertia_history").get<std::vector<double>>();
        idx.use_idf = j.value("use_idf", false);
        idx.vocab.centroids.resize(k, d);
        const auto& cents = j.at("centroids");
        if (static_cast<int>(cents.size()) != k) throw Error(ErrorKind::ParseError, "centroid count mismatch");
        for (int r = 0; r < k; ++r) {
            const auto row = cents.at(r).get<std::vector<double>>();
            if (static_cast<int>(row.size()) != d) throw Error(ErrorKind::ParseError, "centroid width mismatch");
            for (int c = 0; c < d; ++c) idx.vocab.centroids(r, c) = row[c];
        }
        for (const auto& v : j.at("videos")) {
            const auto counts = v.at("histogram").get<std::vector<double>>();
            if (static_cast<int>(counts.size()) != k) throw Error(ErrorKind::ParseError, "histogram size mismatch");
            idx.videos.push_back({v.at("id").get<std::string>(),
                                  Eigen::Map<const Eigen::VectorXd>(counts.data(), k)});
        }
        return idx;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("bad index file: ") + e.what());
    }
}

Eigen::MatrixXd raw_patch_descriptors(const ImageF& image, int patch, int stride) {
    const Raster<float> lum = luminance(image);
    std::vector<Eigen::VectorXd> rows;
    for (int y = 0; y + patch <= lum.height(); y += stride)
        for (int x = 0; x + patch <= lum.width(); x += stride) {
            Eigen::VectorXd v(patch * patch);
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx) v[dy * patch + dx] = lum(x + dx, y + dy);
            v.array() -= v.mean();
            const double nrm = v.norm();
            if (nrm > 1e-12) {
                v /= nrm;
            } else {
                v.setZero();
            }
            rows.push_back(std::move(v));
        }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), patch * patch);
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return out;
}

}  // namespace scenecomp
