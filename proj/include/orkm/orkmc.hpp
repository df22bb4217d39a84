#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "core_model.hpp"
#include "metrics.hpp"
#include "optim_kernels.hpp"
#include "seeding.hpp"

/**
 * @file orkmc.hpp
 * @brief Online regularized K-means (ORKMC).
 *
 * After a warm start on an initial batch of `chushi` rows, each arriving sample gets
 * its indicator row from projected-gradient steps on the online objective
 *     sum_v alpha_v^r ||x^v - u M^v||^2 + eta ||u||^2,
 * then the winning center moves by a count-weighted running mean and the view weights
 * are refreshed from the cumulative per-view residuals. Earlier rows are never revisited.
 */
namespace orkm {

struct OnlineOptions {
    /// Projected-gradient steps per arriving sample.
    int n_grad = 10;
    /// Defaults to whether the initial batch is entirely nonnegative.
    std::optional<bool> enforce_center_nonneg;
};

struct OnlineCounters {
    std::uint64_t steps = 0;
    /// Multiply-adds spent in the most recent step (gradient, center and weight updates).
    std::uint64_t last_step_work = 0;
    std::uint64_t total_work = 0;
};

struct OnlineState {
    std::size_t t = 0;
    std::vector<Vector> u_rows;
    std::vector<int> labels;
    CenterSet centers;
    ViewWeights weights;
    std::vector<std::size_t> counts;
    /// Cumulative squared residual per view, measured against the centers at each row's step.
    Vector residuals;
    /// Running sum of ||u_i||^2 over processed rows.
    double regularizer = 0.0;
    /// Per-view Gram matrices M^v M^v^T, kept in sync with the centers.
    std::vector<Matrix> grams;
    HyperParams hyper;
    OnlineOptions options;
    /// Set once center drift over a chunk drops below epsilon; later arrivals leave the centers alone.
    bool centers_frozen = false;
    OnlineCounters counters;
};

/**
 * alpha_v proportional to D_v^{1/(1-r)}; uniform when r = 1. If some views have zero
 * residual they share all the weight. Computed in log space to avoid overflow.
 */
inline Vector update_weights(const Vector& residuals, double r) {
    const auto views = residuals.size();
    Vector alpha = Vector::Constant(views, 1.0 / static_cast<double>(views));
    if (views <= 1 || r == 1.0) return alpha;
    const double exponent = 1.0 / (1.0 - r);

    std::vector<Eigen::Index> zero;
    for (Eigen::Index v = 0; v < views; ++v)
        if (residuals(v) <= 0.0) zero.push_back(v);
    if (!zero.empty()) {
        alpha.setZero();
        for (auto v : zero) alpha(v) = 1.0 / static_cast<double>(zero.size());
        return alpha;
    }
    Vector logs = exponent * residuals.array().log();
    const double peak = logs.maxCoeff();
    alpha = (logs.array() - peak).exp();
    return alpha / alpha.sum();
}

namespace detail {

// 1/L with L the Gershgorin bound of 2(P G P + eta I), G = sum_v alpha_v^r M^v M^v^T and
// P = I - 11^T/K. The projection ignores constant shifts of the gradient, so only the
// curvature along the simplex matters; this keeps the step invariant to translating the data.
inline double online_step_size(const OnlineState& s, const Vector& scale) {
    if (s.hyper.gamma) return *s.hyper.gamma;
    const auto k = s.centers.clusters();
    Matrix g = Matrix::Zero(k, k);
    for (std::size_t v = 0; v < s.grams.size(); ++v) g += scale(static_cast<Eigen::Index>(v)) * s.grams[v];
    const Vector row_mean = g.rowwise().mean();
    Matrix h = g;
    h.colwise() -= row_mean;
    h.rowwise() -= row_mean.transpose();
    h.array() += row_mean.mean();
    h.diagonal().array() += s.hyper.eta;
    const double bound = 2.0 * gershgorin_bound(h);
    return bound > 0.0 ? 1.0 / bound : 1.0;
}

// Projected-gradient steps from the uniform row for one sample; returns u and adds work.
inline Vector online_indicator(const OnlineState& s, std::span<const Vector> x, const Vector& scale, double gamma,
                               std::uint64_t& work) {
    const auto k = s.centers.clusters();
    Vector u = Vector::Constant(k, 1.0 / static_cast<double>(k));
    Vector grad(k);
    for (int step = 0; step < s.options.n_grad; ++step) {
        grad = 2.0 * s.hyper.eta * u;
        for (std::size_t v = 0; v < x.size(); ++v) {
            const Matrix& m = s.centers.centers[v];
            const Vector residual = x[v] - m.transpose() * u;
            grad.noalias() -= 2.0 * scale(static_cast<Eigen::Index>(v)) * (m * residual);
            work += static_cast<std::uint64_t>(2 * m.size());
        }
        u = project_simplex(u - gamma * grad);
    }
    return u;
}

inline Vector view_scale(const ViewWeights& w) { return w.alpha.array().pow(w.r).matrix(); }

inline double row_residual(const CenterSet& m, std::span<const Vector> x, const Vector& u, std::size_t v) {
    return (x[v] - m.centers[v].transpose() * u).squaredNorm();
}

inline std::vector<Vector> sample_of(const MultiViewDataset& data, std::size_t i) {
    std::vector<Vector> x;
    for (const auto& view : data.views) x.push_back(view.row(static_cast<Eigen::Index>(i)).transpose());
    return x;
}

} // namespace detail

/**
 * Warm start on the initial batch: seed K centers from distinct prefix rows (D^2
 * sampling), then alternate two passes until the prefix labels stop changing or
 * max_iter passes have run: every prefix row gets its projected-gradient indicator
 * from the uniform row against the current centers, and every non-empty center moves
 * to the mean of its hard-assigned rows. Centers and counts then describe the same
 * running means. Weights start uniform.
 */
inline OnlineState orkmc_init(const MultiViewDataset& prefix, const HyperParams& hyper, const OnlineOptions& options = {}) {
    validate_dataset(prefix);
    hyper.check();
    if (options.n_grad < 1) throw ConfigError("n_grad must be >= 1");
    const auto t0 = prefix.num_rows();
    if (t0 < static_cast<std::size_t>(hyper.k))
        throw ConfigError("initial batch of " + std::to_string(t0) + " rows is smaller than K = " +
                          std::to_string(hyper.k));

    OnlineState s;
    s.hyper = hyper;
    s.options = options;
    const int k = hyper.k;
    const auto views = prefix.num_views();
    s.centers.nonneg_enforced = options.enforce_center_nonneg.value_or(prefix.min_entry() >= 0.0);
    s.centers.centers = centers_from_rows(prefix, choose_seed_rows(prefix, t0, k, hyper.seed, "orkmc-seed", SeedMethod::d2).rows);
    s.weights = ViewWeights::uniform(views, hyper.r);
    for (const auto& m : s.centers.centers) s.grams.push_back(m * m.transpose());

    std::vector<std::vector<Vector>> samples;
    for (std::size_t i = 0; i < t0; ++i) samples.push_back(detail::sample_of(prefix, i));
    const Vector scale = detail::view_scale(s.weights);
    std::uint64_t work = 0;
    for (int pass = 0; pass < hyper.max_iter; ++pass) {
        const double gamma = detail::online_step_size(s, scale);
        std::vector<Vector> rows;
        std::vector<int> labels;
        for (std::size_t i = 0; i < t0; ++i) {
            Vector u = detail::online_indicator(s, samples[i], scale, gamma, work);
            Eigen::Index best = 0;
            for (Eigen::Index c = 1; c < k; ++c)
                if (u(c) > u(best)) best = c;
            labels.push_back(static_cast<int>(best));
            rows.push_back(std::move(u));
        }
        const bool settled = labels == s.labels;
        s.u_rows = std::move(rows);
        s.labels = std::move(labels);

        s.counts.assign(static_cast<std::size_t>(k), 0);
        for (int label : s.labels) ++s.counts[static_cast<std::size_t>(label)];
        for (std::size_t v = 0; v < views; ++v) {
            Matrix sums = Matrix::Zero(k, prefix.views[v].cols());
            for (std::size_t i = 0; i < t0; ++i) sums.row(s.labels[i]) += prefix.views[v].row(static_cast<Eigen::Index>(i));
            for (int c = 0; c < k; ++c)
                if (s.counts[static_cast<std::size_t>(c)] > 0)
                    s.centers.centers[v].row(c) = sums.row(c) / static_cast<double>(s.counts[static_cast<std::size_t>(c)]);
            if (s.centers.nonneg_enforced) s.centers.centers[v] = s.centers.centers[v].cwiseMax(0.0);
            s.grams[v] = s.centers.centers[v] * s.centers.centers[v].transpose();
        }
        if (settled) break;
    }
    s.regularizer = 0.0;
    for (const auto& u : s.u_rows) s.regularizer += u.squaredNorm();

    s.residuals = Vector::Zero(static_cast<Eigen::Index>(views));
    for (std::size_t i = 0; i < t0; ++i)
        for (std::size_t v = 0; v < views; ++v)
            s.residuals(static_cast<Eigen::Index>(v)) += detail::row_residual(s.centers, samples[i], s.u_rows[i], v);
    s.t = t0;
    return s;
}

/**
 * Processes one arriving sample (one row per view). Throws ValidationError before
 * touching the state if the sample is malformed, so a rejected arrival leaves the
 * state unchanged.
 */
inline void orkmc_step(OnlineState& s, std::span<const Vector> x) {
    if (x.size() != s.centers.centers.size())
        throw DimensionError("arrival has " + std::to_string(x.size()) + " views, state has " +
                             std::to_string(s.centers.centers.size()));
    for (std::size_t v = 0; v < x.size(); ++v) {
        if (x[v].size() != s.centers.centers[v].cols())
            throw DimensionError("arrival view " + std::to_string(v + 1) + " has " + std::to_string(x[v].size()) +
                                 " features, expected " + std::to_string(s.centers.centers[v].cols()));
        if (!x[v].allFinite()) throw ValidationError("arrival view " + std::to_string(v + 1) + " is not finite");
    }

    std::uint64_t work = 0;
    const Vector scale = detail::view_scale(s.weights);
    const double gamma = detail::online_step_size(s, scale);
    Vector u = detail::online_indicator(s, x, scale, gamma, work);

    Eigen::Index winner = 0;
    for (Eigen::Index c = 1; c < u.size(); ++c)
        if (u(c) > u(winner)) winner = c;
    const auto w = static_cast<std::size_t>(winner);
    ++s.counts[w];

    for (std::size_t v = 0; v < x.size(); ++v) {
        s.residuals(static_cast<Eigen::Index>(v)) += detail::row_residual(s.centers, x, u, v);
        work += static_cast<std::uint64_t>(s.centers.centers[v].size());
    }

    if (!s.centers_frozen) {
        const double rate = 1.0 / static_cast<double>(s.counts[w]);
        for (std::size_t v = 0; v < x.size(); ++v) {
            Matrix& m = s.centers.centers[v];
            m.row(winner) += rate * (x[v].transpose() - m.row(winner));
            if (s.centers.nonneg_enforced) m.row(winner) = m.row(winner).cwiseMax(0.0);
            // only row/column `winner` of the Gram matrix changes
            const Vector g = m * m.row(winner).transpose();
            s.grams[v].row(winner) = g.transpose();
            s.grams[v].col(winner) = g;
            work += static_cast<std::uint64_t>(2 * m.size());
        }
    }

    s.weights.alpha = update_weights(s.residuals, s.weights.r);
    s.regularizer += u.squaredNorm();
    s.labels.push_back(static_cast<int>(winner));
    s.u_rows.push_back(std::move(u));
    ++s.t;
    ++s.counters.steps;
    s.counters.last_step_work = work;
    s.counters.total_work += work;
}

/// sum_v alpha_v^r D_v + eta * sum_i ||u_i||^2 using the residuals recorded at each step.
inline double online_objective_estimate(const OnlineState& s) {
    return detail::view_scale(s.weights).dot(s.residuals) + s.hyper.eta * s.regularizer;
}

inline ClusterResult assemble_online_result(const OnlineState& s, std::string algorithm) {
    ClusterResult result;
    result.algorithm = std::move(algorithm);
    const auto k = s.centers.clusters();
    Matrix u(static_cast<Eigen::Index>(s.u_rows.size()), k);
    for (std::size_t i = 0; i < s.u_rows.size(); ++i) u.row(static_cast<Eigen::Index>(i)) = s.u_rows[i].transpose();
    result.assignment = AssignmentMatrix(std::move(u));
    result.centers = s.centers;
    result.weights = s.weights;
    result.hyper = s.hyper;
    return result;
}

using OnlineObserver = std::function<void(const OnlineState&)>;

inline int resolve_chushi(const HyperParams& hyper, std::size_t n) {
    const int chushi = hyper.chushi.value_or(std::max(hyper.k, static_cast<int>(n / 2)));
    if (chushi < hyper.k) throw ConfigError("chushi must be >= K");
    if (static_cast<std::size_t>(chushi) > n)
        throw ConfigError("chushi = " + std::to_string(chushi) + " exceeds the number of rows " + std::to_string(n));
    return chushi;
}

/**
 * Streams rows chushi+1..N through orkmc_step in order. chunk_size only groups steps
 * for the objective trace and for the epsilon drift test; the updates are per sample.
 * The observer, if any, sees the state after the warm start and after every step.
 */
inline ClusterResult orkmc_run(const MultiViewDataset& data, const HyperParams& hyper, std::size_t chunk_size = 1,
                               const OnlineOptions& options = {}, const OnlineObserver& observer = {}) {
    const auto start = std::chrono::steady_clock::now();
    validate_dataset(data);
    hyper.check();
    if (chunk_size < 1) throw ConfigError("chunk size must be >= 1");
    const auto n = data.num_rows();
    const auto chushi = static_cast<std::size_t>(resolve_chushi(hyper, n));

    OnlineState s = orkmc_init(data.slice(0, chushi), hyper, options);
    std::vector<double> trace{online_objective_estimate(s)};
    if (observer) observer(s);

    CenterSet chunk_start = s.centers;
    for (std::size_t i = chushi; i < n; ++i) {
        const auto x = detail::sample_of(data, i);
        orkmc_step(s, x);
        if (observer) observer(s);
        const bool chunk_end = (i + 1 - chushi) % chunk_size == 0 || i + 1 == n;
        if (!chunk_end) continue;
        trace.push_back(online_objective_estimate(s));
        if (!s.centers_frozen) {
            double drift = 0.0;
            for (std::size_t v = 0; v < s.centers.centers.size(); ++v)
                drift = std::max(drift, (s.centers.centers[v] - chunk_start.centers[v]).norm());
            if (drift <= hyper.epsilon) s.centers_frozen = true;
            chunk_start = s.centers;
        }
    }

    ClusterResult result = assemble_online_result(s, "orkmc");
    result.objective_trace = std::move(trace);
    result.diagnostics.iterations = static_cast<int>(s.counters.steps);
    result.diagnostics.converged = s.centers_frozen;
    if (s.centers_frozen) result.diagnostics.warnings.push_back("centers frozen after drift fell below epsilon");
    result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (data.labels) result.nmi = nmi(result.assignment.hard_labels, *data.labels);
    return result;
}

} // namespace orkm
