#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core_model.hpp"
#include "metrics.hpp"
#include "seeding.hpp"

/**
 * @file baselines.hpp
 * @brief Comparison algorithms behind the same ClusterResult interface: Lloyd K-means,
 * power K-means, online gradient-descent K-means and online multiplicative-update NMF.
 */
namespace orkm {

namespace detail {

inline std::vector<Matrix> split_views(const MultiViewDataset& data, const Matrix& concatenated) {
    std::vector<Matrix> out;
    Eigen::Index col = 0;
    for (const auto& x : data.views) {
        out.push_back(concatenated.middleCols(col, x.cols()));
        col += x.cols();
    }
    return out;
}

inline Matrix one_hot(const std::vector<int>& labels, int k) {
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i) u(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    return u;
}

inline Matrix squared_distances(const Matrix& x, const Matrix& centers) {
    Matrix d(x.rows(), centers.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index c = 0; c < centers.rows(); ++c) d(i, c) = (x.row(i) - centers.row(c)).squaredNorm();
    return d;
}

inline std::vector<int> nearest_center(const Matrix& distances) {
    std::vector<int> labels(static_cast<std::size_t>(distances.rows()));
    for (Eigen::Index i = 0; i < distances.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < distances.cols(); ++c)
            if (distances(i, c) < distances(i, best)) best = c;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

inline void finish(ClusterResult& result, const MultiViewDataset& data, std::chrono::steady_clock::time_point start) {
    result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (data.labels) result.nmi = nmi(result.assignment.hard_labels, *data.labels);
}

inline void require_rows(const MultiViewDataset& data, int k) {
    validate_dataset(data);
    if (k < 1) throw ConfigError("K must be >= 1");
    if (static_cast<std::size_t>(k) > data.num_rows())
        throw ConfigError("K = " + std::to_string(k) + " exceeds the number of rows " + std::to_string(data.num_rows()));
}

inline void require_single_view(const MultiViewDataset& data, const char* algorithm) {
    if (data.num_views() != 1)
        throw ConfigError(std::string(algorithm) + " is single-view; got " + std::to_string(data.num_views()) + " views");
}

} // namespace detail

/// Within-cluster sum of squares of hard labels against centers (concatenated views).
inline double kmeans_sse(const Matrix& x, const Matrix& centers, const std::vector<int>& labels) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        total += (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

struct KmeansOptions {
    /// Overrides D^2 seeding; concatenated-view K x sum(J_v).
    std::optional<Matrix> initial_centers;
    bool record_label_history = false;
};

/**
 * Lloyd iterations on the column concatenation of all views. objective_trace holds the
 * SSE after each assignment step and after each center step, so it is non-increasing.
 * An empty cluster is re-seeded at the point farthest from its current center.
 */
inline ClusterResult kmeans_fit(const MultiViewDataset& data, int k, int max_iter, double epsilon, std::uint64_t seed,
                                const KmeansOptions& options = {}) {
    const auto start = std::chrono::steady_clock::now();
    detail::require_rows(data, k);
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    const Matrix x = data.concatenated();

    ClusterResult result;
    result.algorithm = "kmeans";
    result.hyper.k = k;
    result.hyper.max_iter = max_iter;
    result.hyper.epsilon = epsilon;
    result.hyper.seed = seed;

    Matrix centers;
    if (options.initial_centers) {
        centers = *options.initial_centers;
        if (centers.rows() != k || centers.cols() != x.cols()) throw DimensionError("initial centers have the wrong shape");
    } else {
        const auto seeds = choose_seed_rows(data, data.num_rows(), k, seed, "kmeans-seed", SeedMethod::d2);
        centers.resize(k, x.cols());
        for (int c = 0; c < k; ++c) centers.row(c) = x.row(static_cast<Eigen::Index>(seeds.rows[static_cast<std::size_t>(c)]));
    }

    std::vector<int> labels;
    for (int it = 1; it <= max_iter; ++it) {
        auto next = detail::nearest_center(detail::squared_distances(x, centers));
        const bool fixpoint = next == labels;
        labels = std::move(next);
        if (options.record_label_history) result.diagnostics.label_history.push_back(labels);
        result.objective_trace.push_back(kmeans_sse(x, centers, labels));
        result.diagnostics.iterations = it;
        if (fixpoint) {
            result.diagnostics.converged = true;
            break;
        }

        Matrix next_centers = Matrix::Zero(k, x.cols());
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            next_centers.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
            ++sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        bool reseeded = false;
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) {
                next_centers.row(c) /= sizes[static_cast<std::size_t>(c)];
                continue;
            }
            // farthest point from its assigned center; moving a center there cannot raise the SSE
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                const double d = (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            next_centers.row(c) = x.row(far);
            result.diagnostics.warnings.push_back("iteration " + std::to_string(it) + ": cluster " +
                                                  std::to_string(c + 1) + " empty; re-seeded at row " +
                                                  std::to_string(far + 1));
            reseeded = true;
        }
        const double change = (next_centers - centers).norm();
        centers = std::move(next_centers);
        if (!reseeded) result.objective_trace.push_back(kmeans_sse(x, centers, labels));
        if (!reseeded && change <= epsilon) {
            labels = detail::nearest_center(detail::squared_distances(x, centers));
            result.diagnostics.converged = true;
            break;
        }
    }

    result.assignment = AssignmentMatrix(detail::one_hot(labels, k));
    result.centers.centers = detail::split_views(data, centers);
    result.weights = ViewWeights::uniform(data.num_views(), result.hyper.r);
    detail::finish(result, data, start);
    return result;
}

struct PowerSchedule {
    double s0 = -1.0;
    double step_factor = 1.1;
    double s_min = -100.0;

    void check() const {
        if (!(s0 < 0.0)) throw ConfigError("power schedule: s0 must be < 0");
        if (!(step_factor > 1.0)) throw ConfigError("power schedule: step_factor must be > 1");
        if (!(s_min <= s0)) throw ConfigError("power schedule: s_min must be <= s0");
    }
};

/// Sum over points of the power mean M_s(d_i1..d_iK) = (K^-1 sum_k d_ik^s)^(1/s), with d squared distances.
inline double power_mean_objective(const Matrix& x, const Matrix& centers, double s) {
    const Matrix d = detail::squared_distances(x, centers);
    const double k = static_cast<double>(centers.rows());
    double total = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        if (d.row(i).minCoeff() <= 0.0) continue; // M_s -> 0 for s < 0
        const Eigen::ArrayXd logs = s * d.row(i).array().log();
        const double peak = logs.maxCoeff();
        const double log_mean = peak + std::log((logs - peak).exp().sum() / k);
        total += std::exp(log_mean / s);
    }
    return total;
}

/**
 * MM weights w_ik = d M_s / d d_ik = K^-1 d_ik^(s-1) (K^-1 sum_l d_il^s)^(1/s - 1).
 * A zero distance takes its limit: weight K^(-1/s) on that center, 0 elsewhere.
 */
inline Matrix power_mean_weights(const Matrix& x, const Matrix& centers, double s) {
    const Matrix d = detail::squared_distances(x, centers);
    const auto k = centers.rows();
    const double kd = static_cast<double>(k);
    Matrix w = Matrix::Zero(d.rows(), k);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        Eigen::Index zero_at = -1;
        for (Eigen::Index c = 0; c < k; ++c)
            if (d(i, c) <= 0.0) {
                zero_at = c;
                break;
            }
        if (zero_at >= 0) {
            w(i, zero_at) = std::pow(kd, -1.0 / s);
            continue;
        }
        const Eigen::ArrayXd logd = d.row(i).array().log();
        const Eigen::ArrayXd logs = s * logd;
        const double peak = logs.maxCoeff();
        const double log_mean = peak + std::log((logs - peak).exp().sum() / kd);
        for (Eigen::Index c = 0; c < k; ++c)
            w(i, c) = std::exp(-std::log(kd) + (s - 1.0) * logd(c) + (1.0 / s - 1.0) * log_mean);
    }
    return w;
}

/// One majorization-minimization step at fixed s: centers become MM-weighted means.
inline Matrix power_mean_step(const Matrix& x, const Matrix& centers, double s) {
    const Matrix w = power_mean_weights(x, centers, s);
    Matrix next = centers;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const double mass = w.col(c).sum();
        if (mass > 0.0) next.row(c) = (w.col(c).transpose() * x) / mass;
    }
    return next;
}

struct PkmeansTraceEntry {
    double s;
    double before;
    double after;
};

/**
 * Power K-means: MM steps on the power-mean objective while s is annealed from s0
 * towards s_min by step_factor. objective_trace holds the objective after each step;
 * `steps` (if given) receives the objective before and after each step at that step's s.
 */
inline ClusterResult pkmeans_fit(const MultiViewDataset& data, int k, const PowerSchedule& schedule, int max_iter,
                                 std::uint64_t seed, double epsilon = 1e-6,
                                 std::vector<PkmeansTraceEntry>* steps = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    detail::require_rows(data, k);
    detail::require_single_view(data, "pkmeans");
    schedule.check();
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    const Matrix& x = data.views.front();

    ClusterResult result;
    result.algorithm = "pkmeans";
    result.hyper.k = k;
    result.hyper.max_iter = max_iter;
    result.hyper.epsilon = epsilon;
    result.hyper.seed = seed;

    Matrix centers = centers_from_rows(data, choose_seed_rows(data, data.num_rows(), k, seed, "pkmeans-seed", SeedMethod::d2).rows)
                         .front();
    double s = schedule.s0;
    for (int it = 1; it <= max_iter; ++it) {
        const double before = power_mean_objective(x, centers, s);
        Matrix next = power_mean_step(x, centers, s);
        const double after = power_mean_objective(x, next, s);
        if (steps) steps->push_back({s, before, after});
        result.objective_trace.push_back(after);
        const double change = (next - centers).norm();
        centers = std::move(next);
        result.diagnostics.iterations = it;
        if (s <= schedule.s_min && change <= epsilon) {
            result.diagnostics.converged = true;
            break;
        }
        s = std::max(s * schedule.step_factor, schedule.s_min);
    }

    Matrix w = power_mean_weights(x, centers, s);
    for (Eigen::Index i = 0; i < w.rows(); ++i) w.row(i) /= w.row(i).sum();
    result.assignment = AssignmentMatrix(std::move(w));
    result.centers.centers = {centers};
    result.weights = ViewWeights::uniform(1, result.hyper.r);
    detail::finish(result, data, start);
    return result;
}

struct GammaSchedule {
    /// Unset: gamma_t = 1/(n_k + 1) with n_k the winner's count before the update.
    std::optional<double> constant;
};

inline constexpr int kPrefixPasses = 100;

/**
 * Online gradient-descent K-means. Centers are seeded from the first chushi rows and
 * refined by Lloyd passes over those rows until their labels settle (at most
 * kPrefixPasses); each later arrival moves its nearest center by gamma_t (x - M_k).
 */
inline ClusterResult ogd_fit(const MultiViewDataset& data, int k, const GammaSchedule& gamma, int chushi,
                             std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    detail::require_rows(data, k);
    detail::require_single_view(data, "ogd");
    if (chushi < k || static_cast<std::size_t>(chushi) > data.num_rows())
        throw ConfigError("ogd: chushi must lie in [K, N]");
    if (gamma.constant && !(*gamma.constant > 0.0 && *gamma.constant <= 1.0))
        throw ConfigError("ogd: constant gamma must lie in (0, 1]");
    const Matrix& x = data.views.front();

    ClusterResult result;
    result.algorithm = "ogd";
    result.hyper.k = k;
    result.hyper.chushi = chushi;
    result.hyper.seed = seed;
    result.hyper.gamma = gamma.constant;

    Matrix centers = centers_from_rows(data, choose_seed_rows(data, static_cast<std::size_t>(chushi), k, seed, "ogd-seed",
                                                              SeedMethod::d2).rows)
                         .front();
    const Matrix prefix = x.topRows(chushi);
    std::vector<int> labels;
    std::vector<std::size_t> counts;
    for (int pass = 0; pass < kPrefixPasses; ++pass) {
        auto next = detail::nearest_center(detail::squared_distances(prefix, centers));
        const bool settled = next == labels;
        labels = std::move(next);
        counts.assign(static_cast<std::size_t>(k), 0);
        Matrix sums = Matrix::Zero(k, x.cols());
        for (Eigen::Index i = 0; i < prefix.rows(); ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += prefix.row(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        if (settled) break;
    }

    for (Eigen::Index i = chushi; i < x.rows(); ++i) {
        Eigen::Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const double d = (x.row(i) - centers.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        auto& n = counts[static_cast<std::size_t>(best)];
        const double rate = gamma.constant.value_or(1.0 / static_cast<double>(n + 1));
        centers.row(best) += rate * (x.row(i) - centers.row(best));
        ++n;
        labels.push_back(static_cast<int>(best));
    }

    result.assignment = AssignmentMatrix(detail::one_hot(labels, k));
    result.centers.centers = {centers};
    result.weights = ViewWeights::uniform(1, result.hyper.r);
    result.objective_trace.push_back(kmeans_sse(x, centers, labels));
    result.diagnostics.iterations = static_cast<int>(x.rows() - chushi);
    detail::finish(result, data, start);
    return result;
}

struct OmuOptions {
    double delta = 1e-12;
    /// Arrivals grouped per multiplicative M update.
    std::size_t chunk_size = 1;
    /// Called after every multiplicative update with (new or prefix U rows, centers).
    std::function<void(const Matrix&, const std::vector<Matrix>&)> on_update;
};

// Lee-Seung multiplicative step on U for fixed centers: U <- U o (X M^T) / (U M M^T + delta).
inline void mu_update_indicator(Matrix& u, const std::vector<Matrix>& x, const std::vector<Matrix>& m, double delta) {
    Matrix numer = Matrix::Zero(u.rows(), u.cols());
    Matrix gram = Matrix::Zero(u.cols(), u.cols());
    for (std::size_t v = 0; v < x.size(); ++v) {
        numer.noalias() += x[v] * m[v].transpose();
        gram.noalias() += m[v] * m[v].transpose();
    }
    const Matrix denom = u * gram;
    u = u.cwiseProduct(numer).cwiseQuotient((denom.array() + delta).matrix());
}

// M^v <- M^v o A^v / (B M^v + delta), with A^v = U^T X^v and B = U^T U accumulated.
inline void mu_update_centers(std::vector<Matrix>& m, const std::vector<Matrix>& utx, const Matrix& utu, double delta) {
    for (std::size_t v = 0; v < m.size(); ++v) {
        const Matrix denom = utu * m[v];
        m[v] = m[v].cwiseProduct(utx[v]).cwiseQuotient((denom.array() + delta).matrix());
    }
}

namespace detail {

inline void normalize_rows(Matrix& u) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double total = u.row(i).sum();
        if (total > 0.0)
            u.row(i) /= total;
        else
            u.row(i).setConstant(1.0 / static_cast<double>(u.cols()));
    }
}

} // namespace detail

/// ||X - U M||_F^2 summed over views.
inline double reconstruction_error(const std::vector<Matrix>& x, const Matrix& u, const std::vector<Matrix>& m) {
    double total = 0.0;
    for (std::size_t v = 0; v < x.size(); ++v) total += (x[v] - u * m[v]).squaredNorm();
    return total;
}

/**
 * Plain Lee-Seung NMF on all views with a shared U, `iterations` rounds of U then M updates.
 * Returns the reconstruction error after every round (non-increasing up to delta effects).
 */
inline std::vector<double> nmf_offline(const std::vector<Matrix>& x, Matrix& u, std::vector<Matrix>& m, int iterations,
                                       double delta = 1e-12) {
    std::vector<double> trace;
    for (int it = 0; it < iterations; ++it) {
        mu_update_indicator(u, x, m, delta);
        std::vector<Matrix> utx;
        for (const auto& xv : x) utx.push_back(u.transpose() * xv);
        mu_update_centers(m, utx, u.transpose() * u, delta);
        trace.push_back(reconstruction_error(x, u, m));
    }
    return trace;
}

/**
 * Online multiplicative-update NMF clustering.
 *
 * Warm start: centers seeded from distinct prefix rows, max_iter offline MU rounds on the
 * prefix, rows normalized to the simplex. Each chunk of arrivals gets max_iter MU steps on
 * its own rows (centers fixed), is normalized, and is folded into the sufficient statistics
 * A^v = U^T X^v and B = U^T U that drive one multiplicative center update. Negative data is
 * shifted by its minimum first.
 */
inline ClusterResult omu_fit(const MultiViewDataset& data, int k, int chushi, int max_iter, std::uint64_t seed,
                             const OmuOptions& options = {}) {
    const auto start = std::chrono::steady_clock::now();
    detail::require_rows(data, k);
    if (chushi < k || static_cast<std::size_t>(chushi) > data.num_rows())
        throw ConfigError("omu: chushi must lie in [K, N]");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (options.chunk_size < 1) throw ConfigError("omu: chunk size must be >= 1");

    ClusterResult result;
    result.algorithm = "omu";
    result.hyper.k = k;
    result.hyper.chushi = chushi;
    result.hyper.max_iter = max_iter;
    result.hyper.seed = seed;

    MultiViewDataset shifted = data;
    const double lowest = data.min_entry();
    if (lowest < 0.0) {
        for (auto& xv : shifted.views) xv.array() -= lowest;
        result.diagnostics.warnings.push_back("negative entries: data shifted by " + std::to_string(-lowest));
    }
    const double delta = options.delta;
    const auto views = shifted.num_views();
    const auto n = static_cast<Eigen::Index>(shifted.num_rows());

    std::vector<Matrix> m = centers_from_rows(
        shifted, choose_seed_rows(shifted, static_cast<std::size_t>(chushi), k, seed, "omu-seed", SeedMethod::d2).rows);
    // a zero entry can never grow under multiplicative updates
    for (auto& mv : m) mv.array() += 1e-3 * std::max(1.0, mv.cwiseAbs().maxCoeff());

    std::vector<Matrix> prefix;
    for (const auto& xv : shifted.views) prefix.push_back(xv.topRows(chushi));
    Matrix u_prefix = Matrix::Constant(chushi, k, 1.0 / k);
    for (int it = 0; it < max_iter; ++it) {
        mu_update_indicator(u_prefix, prefix, m, delta);
        if (options.on_update) options.on_update(u_prefix, m);
        std::vector<Matrix> utx;
        for (const auto& xv : prefix) utx.push_back(u_prefix.transpose() * xv);
        mu_update_centers(m, utx, u_prefix.transpose() * u_prefix, delta);
        if (options.on_update) options.on_update(u_prefix, m);
    }
    detail::normalize_rows(u_prefix);

    std::vector<Matrix> utx;
    for (const auto& xv : prefix) utx.push_back(u_prefix.transpose() * xv);
    Matrix utu = u_prefix.transpose() * u_prefix;
    for (int it = 0; it < max_iter; ++it) {
        mu_update_centers(m, utx, utu, delta);
        if (options.on_update) options.on_update(u_prefix, m);
    }

    Matrix u_all(n, k);
    u_all.topRows(chushi) = u_prefix;
    for (Eigen::Index begin = chushi; begin < n; begin += static_cast<Eigen::Index>(options.chunk_size)) {
        const Eigen::Index rows = std::min<Eigen::Index>(static_cast<Eigen::Index>(options.chunk_size), n - begin);
        std::vector<Matrix> chunk;
        for (const auto& xv : shifted.views) chunk.push_back(xv.middleRows(begin, rows));
        Matrix u = Matrix::Constant(rows, k, 1.0 / k);
        for (int it = 0; it < max_iter; ++it) {
            mu_update_indicator(u, chunk, m, delta);
            if (options.on_update) options.on_update(u, m);
        }
        detail::normalize_rows(u);
        for (std::size_t v = 0; v < views; ++v) utx[v].noalias() += u.transpose() * chunk[v];
        utu.noalias() += u.transpose() * u;
        mu_update_centers(m, utx, utu, delta);
        if (options.on_update) options.on_update(u, m);
        u_all.middleRows(begin, rows) = u;
    }

    result.objective_trace.push_back(reconstruction_error(shifted.views, u_all, m));
    result.assignment = AssignmentMatrix(std::move(u_all));
    result.centers.centers = std::move(m);
    result.centers.nonneg_enforced = true;
    result.weights = ViewWeights::uniform(views, result.hyper.r);
    result.diagnostics.iterations = max_iter;
    detail::finish(result, data, start);
    return result;
}

} // namespace orkm
