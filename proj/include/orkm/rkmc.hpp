#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "core_model.hpp"
#include "metrics.hpp"
#include "optim_kernels.hpp"
#include "rng.hpp"
#include "seeding.hpp"

/**
 * @file rkmc.hpp
 * @brief Offline regularized K-means (RKMC).
 *
 * Block-coordinate descent on
 *     J = sum_v ||X^v - U M^v||_F^2 + eta * trace(U U^T),  rows of U on the simplex,
 * alternating exact row QPs for U and exact least-squares (or NNLS) subproblems for M^v.
 * Both blocks are solved exactly, so J never increases between iterations.
 */
namespace orkm {

enum class RkmcInit {
    kmeanspp_rows,    // K distinct rows by D^2 sampling
    random_rows,      // K distinct rows uniformly
    random_uniform_u, // random simplex rows for U, centers from one M update
};

struct RkmcConfig {
    HyperParams hyper;
    /// Defaults to whether the data is entirely nonnegative.
    std::optional<bool> enforce_center_nonneg;
    RkmcInit init = RkmcInit::kmeanspp_rows;
    /// Overrides the seeding step when set.
    std::optional<CenterSet> initial_centers;
    bool record_label_history = false;
    double qp_tol = 1e-10;
    int qp_max_inner = 20000;
    /// Consecutive iterations a cluster may hold no hard label before its center is re-seeded.
    int empty_patience = 3;
};

struct QpOptions {
    double tol = 1e-10;
    int max_inner = 20000;
};

namespace detail {

inline Matrix row_hessian(const CenterSet& m, double eta, const Vector* view_scale = nullptr) {
    const auto k = m.clusters();
    Matrix h = Matrix::Zero(k, k);
    for (std::size_t v = 0; v < m.centers.size(); ++v) {
        const double s = view_scale ? (*view_scale)(static_cast<Eigen::Index>(v)) : 1.0;
        h.noalias() += s * (m.centers[v] * m.centers[v].transpose());
    }
    h.diagonal().array() += eta;
    h *= 2.0;
    return 0.5 * (h + h.transpose());
}

} // namespace detail

/**
 * Exact U block: each row minimizes sum_v ||x_i^v - u M^v||^2 + eta ||u||^2 over the
 * simplex, warm-started from the previous row so the objective cannot increase.
 */
inline AssignmentMatrix update_U(const MultiViewDataset& data, const CenterSet& m, const AssignmentMatrix& u_prev,
                                 double eta, QpOptions options = {}, int* unconverged_rows = nullptr) {
    detail::check_conforming(data, u_prev.entries, m);
    const Matrix h = detail::row_hessian(m, eta);
    check_row_hessian(h);

    Matrix linear = Matrix::Zero(u_prev.rows(), u_prev.clusters());
    for (std::size_t v = 0; v < data.views.size(); ++v) linear.noalias() += data.views[v] * m.centers[v].transpose();
    linear *= 2.0;

    Matrix u(u_prev.rows(), u_prev.clusters());
    int unconverged = 0;
    RowQP qp{h, Vector()};
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        qp.linear = linear.row(i).transpose();
        const auto sol = solve_row_qp_unchecked(qp, u_prev.entries.row(i).transpose(), options.tol, options.max_inner);
        if (!sol.converged) ++unconverged;
        u.row(i) = sol.u.transpose();
    }
    if (unconverged_rows) *unconverged_rows = unconverged;
    return AssignmentMatrix(std::move(u));
}

struct CenterUpdate {
    CenterSet centers;
    /// Clusters whose U column carries no mass; their centers keep the previous value.
    std::vector<int> frozen_clusters;
    bool ridge_fallback = false;
};

/**
 * Exact M block: for every view and feature column, argmin ||X^v[:, j] - U m||^2,
 * with m >= 0 when nonnegativity is enforced. Clusters with an all-zero U column do not
 * affect the residual and keep their previous centers.
 */
inline CenterUpdate update_M(const MultiViewDataset& data, const AssignmentMatrix& u, const CenterSet& previous,
                             bool enforce_nonneg) {
    detail::check_conforming(data, u.entries, previous);
    const auto k = u.clusters();

    std::vector<Eigen::Index> active;
    CenterUpdate out;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (u.entries.col(c).squaredNorm() > 1e-24)
            active.push_back(c);
        else
            out.frozen_clusters.push_back(static_cast<int>(c));
    }
    out.centers = previous;
    out.centers.nonneg_enforced = enforce_nonneg;
    if (active.empty()) return out;

    const auto a = static_cast<Eigen::Index>(active.size());
    Matrix design(u.rows(), a);
    for (Eigen::Index c = 0; c < a; ++c) design.col(c) = u.entries.col(active[c]);
    Matrix gram = design.transpose() * design;
    const double scale = std::max(1.0, gram.diagonal().maxCoeff());

    Eigen::LDLT<Matrix> ldlt(gram);
    const bool singular = ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12 * scale;
    if (singular && !enforce_nonneg) {
        out.ridge_fallback = true;
        gram.diagonal().array() += 1e-10 * scale;
        ldlt.compute(gram);
    }

    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const Matrix rhs = design.transpose() * data.views[v]; // a x J_v
        Matrix solved(a, rhs.cols());
        if (enforce_nonneg) {
            for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
                const auto sol = nnls_gram(gram, rhs.col(j));
                out.ridge_fallback = out.ridge_fallback || sol.ridge_fallback;
                solved.col(j) = sol.x;
            }
        } else {
            solved = ldlt.solve(rhs);
        }
        for (Eigen::Index c = 0; c < a; ++c) out.centers.centers[v].row(active[c]) = solved.row(c);
    }
    return out;
}

namespace detail {

inline double max_center_change(const CenterSet& a, const CenterSet& b) {
    double change = 0.0;
    for (std::size_t v = 0; v < a.centers.size(); ++v)
        change = std::max(change, (a.centers[v] - b.centers[v]).norm());
    return change;
}

inline Matrix random_simplex_rows(const MultiViewDataset& data, std::size_t rows, int k, std::uint64_t seed,
                                  std::string_view tag) {
    Matrix u(static_cast<Eigen::Index>(rows), k);
    for (std::size_t i = 0; i < rows; ++i) {
        KeyedStream stream(seed, tag, row_fingerprint(data, i));
        // normalized exponentials = uniform draw on the simplex
        for (int c = 0; c < k; ++c) u(static_cast<Eigen::Index>(i), c) = -std::log(stream.uniform());
        u.row(static_cast<Eigen::Index>(i)) /= u.row(static_cast<Eigen::Index>(i)).sum();
    }
    return u;
}

} // namespace detail

inline ClusterResult rkmc_fit(const MultiViewDataset& data, const RkmcConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    validate_dataset(data);
    const HyperParams& hp = cfg.hyper;
    hp.check();
    const auto n = data.num_rows();
    const int k = hp.k;
    if (static_cast<std::size_t>(k) > n)
        throw ConfigError("K = " + std::to_string(k) + " exceeds the number of rows " + std::to_string(n));

    const bool nonneg = cfg.enforce_center_nonneg.value_or(data.min_entry() >= 0.0);
    const QpOptions qp{cfg.qp_tol, cfg.qp_max_inner};

    ClusterResult result;
    result.algorithm = "rkmc";
    result.hyper = hp;
    auto& diag = result.diagnostics;

    CenterSet m;
    m.nonneg_enforced = nonneg;
    AssignmentMatrix u(Matrix::Constant(static_cast<Eigen::Index>(n), k, 1.0 / k));

    if (cfg.initial_centers) {
        m = *cfg.initial_centers;
        m.nonneg_enforced = nonneg;
        detail::check_conforming(data, u.entries, m);
    } else if (cfg.init == RkmcInit::random_uniform_u) {
        u = AssignmentMatrix(detail::random_simplex_rows(data, n, k, hp.seed, "rkmc-init-u"));
        for (const auto& x : data.views) m.centers.push_back(Matrix::Zero(k, x.cols()));
        auto upd = update_M(data, u, m, nonneg);
        m = std::move(upd.centers);
        diag.ridge_fallback = diag.ridge_fallback || upd.ridge_fallback;
    } else {
        const auto seeds = choose_seed_rows(data, n, k, hp.seed, "rkmc-seed",
                                            cfg.init == RkmcInit::random_rows ? SeedMethod::uniform : SeedMethod::d2);
        if (seeds.duplicates) diag.warnings.push_back("fewer than K distinct rows; duplicate centers");
        m.centers = centers_from_rows(data, seeds.rows);
    }
    if (nonneg)
        for (auto& c : m.centers) c = c.cwiseMax(0.0);

    std::vector<int> empty_streak(static_cast<std::size_t>(k), 0);
    bool reseed_pending = false;

    for (int it = 1; it <= hp.max_iter; ++it) {
        int unconverged = 0;
        u = update_U(data, m, u, hp.eta, qp, &unconverged);
        if (unconverged > 0)
            diag.warnings.push_back("iteration " + std::to_string(it) + ": " + std::to_string(unconverged) +
                                    " row QPs hit the inner iteration cap");
        if (cfg.record_label_history) diag.label_history.push_back(u.hard_labels);

        auto upd = update_M(data, u, m, nonneg);
        diag.ridge_fallback = diag.ridge_fallback || upd.ridge_fallback;
        for (int c : upd.frozen_clusters)
            diag.warnings.push_back("iteration " + std::to_string(it) + ": cluster " + std::to_string(c + 1) +
                                    " is empty; center kept");
        const double change = detail::max_center_change(upd.centers, m);
        m = std::move(upd.centers);

        result.objective_trace.push_back(objective_rkmc(data, u, m, hp.eta));
        if (reseed_pending) {
            diag.reseed_steps.push_back(result.objective_trace.size() - 1);
            reseed_pending = false;
        }
        diag.iterations = it;

        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int label : u.hard_labels) ++sizes[static_cast<std::size_t>(label)];
        bool reseeded = false;
        for (int c = 0; c < k; ++c) {
            auto& streak = empty_streak[static_cast<std::size_t>(c)];
            streak = sizes[static_cast<std::size_t>(c)] == 0 ? streak + 1 : 0;
            if (streak < cfg.empty_patience || it == hp.max_iter) continue;
            // move the center onto the worst-fit row
            Vector row_residual = Vector::Zero(static_cast<Eigen::Index>(n));
            for (std::size_t v = 0; v < data.views.size(); ++v)
                row_residual += (data.views[v] - u.entries * m.centers[v]).rowwise().squaredNorm();
            Eigen::Index worst = 0;
            row_residual.maxCoeff(&worst);
            for (std::size_t v = 0; v < data.views.size(); ++v) {
                m.centers[v].row(c) = data.views[v].row(worst);
                if (nonneg) m.centers[v].row(c) = m.centers[v].row(c).cwiseMax(0.0);
            }
            diag.warnings.push_back("iteration " + std::to_string(it) + ": cluster " + std::to_string(c + 1) +
                                    " re-seeded at row " + std::to_string(worst + 1));
            streak = 0;
            reseeded = true;
        }
        if (reseeded) {
            reseed_pending = true;
            continue;
        }
        if (change <= hp.epsilon) {
            diag.converged = true;
            break;
        }
    }

    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int label : u.hard_labels) ++sizes[static_cast<std::size_t>(label)];
    if (k > 1 && std::count(sizes.begin(), sizes.end(), 0) == k - 1)
        diag.warnings.push_back("all rows share one cluster; centers may coincide");

    result.assignment = std::move(u);
    result.centers = std::move(m);
    result.weights = ViewWeights::uniform(data.num_views(), hp.r);
    result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (data.labels) result.nmi = nmi(result.assignment.hard_labels, *data.labels);
    return result;
}

} // namespace orkm
