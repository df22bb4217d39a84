#pragma once

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core_model.hpp"
#include "errors.hpp"
#include "rng.hpp"

/**
 * @file datagen.hpp
 * @brief Gaussian mixture generator for single- and multi-view clustering scenarios.
 */
namespace orkm {

struct SimSpec {
    int n = 300;
    int k = 3;
    int v = 1;
    int j = 2;
    /// Distance between adjacent cluster means, in units of sigma.
    double separation = 6.0;
    double sigma = 1.0;
    /// Cluster proportions; empty means uniform.
    std::vector<double> mix;
    std::uint64_t seed = 0;

    void check() const {
        if (k < 1 || n < k) throw ConfigError("simulation needs n >= k >= 1");
        if (v < 1 || j < 1) throw ConfigError("simulation needs v >= 1 and j >= 1");
        if (!(separation > 0.0)) throw ConfigError("separation must be > 0");
        if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
        if (!mix.empty()) {
            if (static_cast<int>(mix.size()) != k) throw ConfigError("mix must have k entries");
            double total = 0.0;
            for (double p : mix) {
                if (!(p >= 0.0)) throw ConfigError("mix entries must be >= 0");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mix must sum to 1");
        }
    }
};

/**
 * Cluster means for one view, `separation * sigma` apart, in a random orthonormal frame.
 * k <= j: scaled orthonormal directions, so every pair is that far apart. k > j >= 2:
 * a regular k-gon in a random plane with adjacent vertices that far apart. j = 1: equally
 * spaced on the line.
 */
inline Matrix cluster_means(const SimSpec& spec, int view) {
    KeyedStream stream(spec.seed, "datagen-means", static_cast<std::uint64_t>(view));
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix gaussian(spec.j, spec.j);
    for (Eigen::Index a = 0; a < gaussian.rows(); ++a)
        for (Eigen::Index b = 0; b < gaussian.cols(); ++b) gaussian(a, b) = normal(stream);
    const Matrix basis = Eigen::HouseholderQR<Matrix>(gaussian).householderQ(); // j x j orthonormal

    const double gap = spec.separation * spec.sigma;
    Matrix means(spec.k, spec.j);
    if (spec.k <= spec.j) {
        for (int c = 0; c < spec.k; ++c) means.row(c) = gap / std::sqrt(2.0) * basis.col(c).transpose();
    } else if (spec.j >= 2) {
        const double pi = std::acos(-1.0);
        const double radius = gap / (2.0 * std::sin(pi / spec.k));
        for (int c = 0; c < spec.k; ++c) {
            const double angle = 2.0 * pi * c / spec.k;
            means.row(c) = radius * (std::cos(angle) * basis.col(0) + std::sin(angle) * basis.col(1)).transpose();
        }
    } else {
        for (int c = 0; c < spec.k; ++c) means(c, 0) = gap * static_cast<double>(c) * basis(0, 0);
    }
    return means;
}

inline std::vector<int> draw_labels(const SimSpec& spec) {
    KeyedStream stream(spec.seed, "datagen-labels");
    std::vector<double> mix = spec.mix;
    if (mix.empty()) mix.assign(static_cast<std::size_t>(spec.k), 1.0 / spec.k);
    std::discrete_distribution<int> pick(mix.begin(), mix.end());
    std::vector<int> labels(static_cast<std::size_t>(spec.n));
    for (auto& l : labels) l = pick(stream);
    return labels;
}

inline Matrix draw_view(const SimSpec& spec, int view, const std::vector<int>& labels) {
    const Matrix means = cluster_means(spec, view);
    KeyedStream stream(spec.seed, "datagen-noise", static_cast<std::uint64_t>(view));
    std::normal_distribution<double> normal(0.0, spec.sigma);
    Matrix x(static_cast<Eigen::Index>(labels.size()), spec.j);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = means(labels[static_cast<std::size_t>(i)], c) + normal(stream);
    return x;
}

/// Shared labels across views; x_i^v ~ Normal(mu^v_{label(i)}, sigma^2 I). Deterministic in the seed.
inline MultiViewDataset generate(const SimSpec& spec) {
    spec.check();
    MultiViewDataset data;
    data.name = "sim-n" + std::to_string(spec.n) + "-k" + std::to_string(spec.k) + "-v" + std::to_string(spec.v);
    const auto labels = draw_labels(spec);
    for (int view = 0; view < spec.v; ++view) data.views.push_back(draw_view(spec, view, labels));
    data.labels = labels;
    return data;
}

/**
 * Appends a view drawn from the same mixture but with the labels randomly permuted
 * across rows, so it carries cluster-shaped structure that is unrelated to the truth.
 */
inline MultiViewDataset with_noise_view(MultiViewDataset data, const SimSpec& spec) {
    if (!data.labels) throw ValidationError("noise view needs ground-truth labels");
    std::vector<int> shuffled = *data.labels;
    KeyedStream stream(spec.seed, "datagen-shuffle");
    std::shuffle(shuffled.begin(), shuffled.end(), stream);
    data.views.push_back(draw_view(spec, static_cast<int>(data.views.size()) + 1000, shuffled));
    return data;
}

struct Preset {
    std::string name;
    SimSpec spec;
    /// Initial batch size for online solvers; I in the (N, I, K, V, eta) tuples.
    int chushi = 0;
    double eta = 0.0;
    /// Non-empty for stability sweeps: the N values to generate (chushi = N/2 each).
    std::vector<int> n_grid;
};

inline Preset preset(const std::string& name) {
    Preset p;
    p.name = name;
    if (name == "case1-single") {
        p.spec.n = 840;
        p.spec.k = 3;
        p.spec.v = 1;
        p.chushi = 620;
        p.eta = 5.0;
    } else if (name == "case2-multi") {
        p.spec.n = 210;
        p.spec.k = 3;
        p.spec.v = 2;
        p.chushi = 130;
        p.eta = 20.0;
    } else if (name == "stability-single" || name == "stability-multi") {
        p.spec.k = 3;
        p.spec.v = name == "stability-single" ? 1 : 2;
        p.n_grid.push_back(100);
        for (int n = 120; n <= 960; n += 120) p.n_grid.push_back(n);
        p.n_grid.push_back(1000);
        p.spec.n = 1000;
        p.chushi = p.spec.n / 2;
        p.eta = 5.0;
    } else {
        throw UsageError("unknown preset '" + name +
                         "'; valid presets: case1-single, case2-multi, stability-single, stability-multi");
    }
    return p;
}

} // namespace orkm
