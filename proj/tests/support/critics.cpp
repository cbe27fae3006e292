// Copyright 2026 The scenecomp Authors
// SPDX-License-Identifier: Apache-2.0

#include "support/critics.hpp"

#include <cmath>

namespace scenecomp::testing {

namespace {

// Deterministic weight in roughly [-0.5, 0.5].
double seeded(int i, double salt) { return 0.5 * std::sin(1.37 * i + salt) * std::cos(0.61 * i * salt + 0.3); }

Eigen::VectorXd flat(const Grid& x) { return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()); }

}  // namespace

TwoLayerCritic::TwoLayerCritic(int rows, int cols, int hidden)
    : rows_(rows), cols_(cols), w1_(hidden, rows * cols), b1_(hidden), w2_(hidden), b2_(0.1) {
    for (int h = 0; h < hidden; ++h) {
        for (int i = 0; i < rows * cols; ++i) w1_(h, i) = seeded(h * rows * cols + i, 0.7);
        b1_(h) = seeded(h, 2.3);
        w2_(h) = 1.5 * seeded(h, 4.1) + 0.2;
    }
}

double TwoLayerCritic::operator()(const Grid& x) const {
    const Eigen::VectorXd a = (w1_ * flat(x) + b1_).array().tanh().matrix();
    return w2_.dot(a) + b2_;
}

std::optional<Grid> TwoLayerCritic::gradient(const Grid& x) const {
    const Eigen::VectorXd t = (w1_ * flat(x) + b1_).array().tanh().matrix();
    const Eigen::VectorXd dpre = w2_.array() * (1.0 - t.array().square());
    const Eigen::VectorXd g = w1_.transpose() * dpre;
    return Grid(Eigen::Map<const Grid>(g.data(), rows_, cols_));
}

QuadraticCritic::QuadraticCritic(int rows, int cols) : rows_(rows), cols_(cols) {
    const int n = rows * cols;
    Eigen::MatrixXd l(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) l(i, j) = seeded(i * n + j, 1.9);
    a_ = 0.5 * (l + l.transpose()) / std::sqrt(double(n));
    b_.resize(n);
    for (int i = 0; i < n; ++i) b_(i) = seeded(i, 3.3);
}

double QuadraticCritic::operator()(const Grid& x) const {
    const Eigen::VectorXd v = flat(x);
    return 0.5 * v.dot(a_ * v) + b_.dot(v);
}

std::optional<Grid> QuadraticCritic::gradient(const Grid& x) const {
    const Eigen::VectorXd g = a_ * flat(x) + b_;
    return Grid(Eigen::Map<const Grid>(g.data(), rows_, cols_));
}

Grid fd_gradient(const Critic& critic, const Grid& x, double h) {
    Grid g(x.rows(), x.cols());
    Grid p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = p.data()[i];
        p.data()[i] = v + h;
        const double up = critic(p);
        p.data()[i] = v - h;
        const double down = critic(p);
        p.data()[i] = v;
        g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double penalty_from_gradient(const Grid& g, const Grid& m, double lambda) {
    const double norm = g.cwiseProduct((1.0 - m.array()).matrix()).norm();
    return lambda * (norm - 1.0) * (norm - 1.0);
}

}  // namespace scenecomp::testing
