#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

/**
 * @file core_model.hpp
 * @brief Shared data types, constraint checks and objective evaluations.
 *
 * A multi-view dataset is V aligned matrices X^v (N x J_v). Every solver in
 * the library produces a soft assignment U (N x K, rows on the probability
 * simplex), per-view centers M^v (K x J_v) and simplex view weights alpha.
 */
namespace orkm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kConstraintSlack = 1e-9;
inline constexpr double kArithmeticSlack = 1e-12;

struct MultiViewDataset {
    std::vector<Matrix> views;
    /// 0-based class ids, one per row; converted to 1-based only at file boundaries.
    std::optional<std::vector<int>> labels;
    std::string name;

    std::size_t num_rows() const { return views.empty() ? 0 : static_cast<std::size_t>(views.front().rows()); }
    std::size_t num_views() const { return views.size(); }
    std::size_t dim(std::size_t v) const { return static_cast<std::size_t>(views[v].cols()); }

    std::size_t total_dim() const {
        std::size_t total = 0;
        for (const auto& x : views) total += static_cast<std::size_t>(x.cols());
        return total;
    }

    double min_entry() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& x : views)
            if (x.size() > 0) m = std::min(m, x.minCoeff());
        return m;
    }

    /// Rows [begin, end) of every view, labels included.
    MultiViewDataset slice(std::size_t begin, std::size_t end) const {
        MultiViewDataset out;
        out.name = name;
        const auto count = static_cast<Eigen::Index>(end - begin);
        for (const auto& x : views) out.views.push_back(x.middleRows(static_cast<Eigen::Index>(begin), count));
        if (labels) out.labels = std::vector<int>(labels->begin() + static_cast<std::ptrdiff_t>(begin),
                                                  labels->begin() + static_cast<std::ptrdiff_t>(end));
        return out;
    }

    /// Column-wise concatenation of all views (N x sum J_v).
    Matrix concatenated() const {
        Matrix out(static_cast<Eigen::Index>(num_rows()), static_cast<Eigen::Index>(total_dim()));
        Eigen::Index col = 0;
        for (const auto& x : views) {
            out.middleCols(col, x.cols()) = x;
            col += x.cols();
        }
        return out;
    }
};

/// Throws ValidationError naming the first broken dataset invariant.
inline void validate_dataset(const MultiViewDataset& data) {
    if (data.views.empty()) throw ValidationError("dataset '" + data.name + "' has no views");
    const auto n = data.views.front().rows();
    if (n < 1) throw ValidationError("dataset '" + data.name + "' has no rows");
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const auto& x = data.views[v];
        if (x.rows() != n)
            throw ValidationError("view " + std::to_string(v + 1) + " has " + std::to_string(x.rows()) +
                                  " rows, expected " + std::to_string(n));
        if (x.cols() < 1) throw ValidationError("view " + std::to_string(v + 1) + " has no columns");
        if (!x.allFinite()) throw ValidationError("view " + std::to_string(v + 1) + " contains a non-finite entry");
    }
    if (data.labels && static_cast<Eigen::Index>(data.labels->size()) != n)
        throw ValidationError("label count " + std::to_string(data.labels->size()) + " does not match " +
                              std::to_string(n) + " rows");
}

/// Row-wise argmax with lowest-index tie-break.
inline std::vector<int> argmax_rows(const Matrix& u) {
    std::vector<int> labels(static_cast<std::size_t>(u.rows()));
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < u.cols(); ++k)
            if (u(i, k) > u(i, best)) best = k;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

struct AssignmentMatrix {
    Matrix entries; // N x K
    std::vector<int> hard_labels;

    AssignmentMatrix() = default;
    explicit AssignmentMatrix(Matrix u) : entries(std::move(u)), hard_labels(argmax_rows(entries)) {}

    Eigen::Index rows() const { return entries.rows(); }
    Eigen::Index clusters() const { return entries.cols(); }
};

struct CenterSet {
    std::vector<Matrix> centers; // view v: K x J_v
    bool nonneg_enforced = false;

    std::size_t num_views() const { return centers.size(); }
    Eigen::Index clusters() const { return centers.empty() ? 0 : centers.front().rows(); }
};

struct ViewWeights {
    Vector alpha;
    double r = 2.0;

    static ViewWeights uniform(std::size_t num_views, double r) {
        ViewWeights w;
        w.alpha = Vector::Constant(static_cast<Eigen::Index>(num_views), 1.0 / static_cast<double>(num_views));
        w.r = r;
        return w;
    }
};

struct HyperParams {
    int k = 2;
    double eta = 0.0;
    double r = 2.0;
    /// Projected-gradient step length; unset means 1/L from the Gershgorin bound of the row Hessian.
    std::optional<double> gamma;
    double epsilon = 1e-4;
    int max_iter = 100;
    /// Initial batch size for the online solvers; unset means max(K, N/2).
    std::optional<int> chushi;
    std::uint64_t seed = 0;

    void check() const {
        if (k < 1) throw ConfigError("K must be >= 1");
        if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta (yita) must be finite and >= 0");
        if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("r must be finite and > 0");
        if (gamma && !(*gamma > 0.0 && std::isfinite(*gamma))) throw ConfigError("gamma must be finite and > 0");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
        if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
        if (chushi && *chushi < k) throw ConfigError("chushi must be >= K");
    }
};

struct FitDiagnostics {
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
    /// Trace indices whose value may exceed the previous one because a center was re-seeded.
    std::vector<std::size_t> reseed_steps;
    /// Hard labels after every U update (filled only when requested).
    std::vector<std::vector<int>> label_history;
    bool ridge_fallback = false;
};

struct ClusterResult {
    std::string algorithm;
    AssignmentMatrix assignment;
    CenterSet centers;
    ViewWeights weights;
    std::vector<double> objective_trace;
    double elapsed_seconds = 0.0;
    std::optional<double> nmi;
    HyperParams hyper;
    FitDiagnostics diagnostics;
};

namespace detail {

inline void check_conforming(const MultiViewDataset& data, const Matrix& u, const CenterSet& m) {
    if (m.centers.size() != data.views.size())
        throw DimensionError("center set has " + std::to_string(m.centers.size()) + " views, data has " +
                             std::to_string(data.views.size()));
    if (u.rows() != static_cast<Eigen::Index>(data.num_rows()))
        throw DimensionError("U has " + std::to_string(u.rows()) + " rows, data has " +
                             std::to_string(data.num_rows()));
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const auto& c = m.centers[v];
        if (c.rows() != u.cols() || c.cols() != data.views[v].cols())
            throw DimensionError("center matrix of view " + std::to_string(v + 1) + " is " +
                                 std::to_string(c.rows()) + "x" + std::to_string(c.cols()) + ", expected " +
                                 std::to_string(u.cols()) + "x" + std::to_string(data.views[v].cols()));
    }
    if (!u.allFinite()) throw ValidationError("U contains a non-finite entry");
    for (const auto& c : m.centers)
        if (!c.allFinite()) throw ValidationError("center matrix contains a non-finite entry");
    for (const auto& x : data.views)
        if (!x.allFinite()) throw ValidationError("data contains a non-finite entry");
}

} // namespace detail

/// sum_v ||X^v - U M^v||_F^2 + eta * trace(U U^T)
inline double objective_rkmc(const MultiViewDataset& data, const AssignmentMatrix& u, const CenterSet& m,
                             double eta) {
    detail::check_conforming(data, u.entries, m);
    double total = 0.0;
    for (std::size_t v = 0; v < data.views.size(); ++v)
        total += (data.views[v] - u.entries * m.centers[v]).squaredNorm();
    return total + eta * u.entries.squaredNorm();
}

/// sum_v alpha_v^r ||X^v - U M^v||_F^2 + eta * trace(U U^T), over the rows seen so far.
inline double objective_online(const MultiViewDataset& data_prefix, const AssignmentMatrix& u, const CenterSet& m,
                               const ViewWeights& w, double eta) {
    detail::check_conforming(data_prefix, u.entries, m);
    if (w.alpha.size() != static_cast<Eigen::Index>(data_prefix.views.size()))
        throw DimensionError("weight vector length does not match view count");
    double total = 0.0;
    for (std::size_t v = 0; v < data_prefix.views.size(); ++v) {
        const double scale = std::pow(w.alpha(static_cast<Eigen::Index>(v)), w.r);
        total += scale * (data_prefix.views[v] - u.entries * m.centers[v]).squaredNorm();
    }
    return total + eta * u.entries.squaredNorm();
}

struct Violation {
    std::string invariant;
    std::vector<std::size_t> index;

    bool operator==(const Violation&) const = default;
};

/// Reports every broken invariant of a result; never throws.
inline std::vector<Violation> validate(const ClusterResult& result) {
    std::vector<Violation> out;
    const Matrix& u = result.assignment.entries;
    const auto n = static_cast<std::size_t>(u.rows());

    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const auto row = static_cast<std::size_t>(i);
        bool finite = true;
        for (Eigen::Index k = 0; k < u.cols(); ++k) {
            if (!std::isfinite(u(i, k))) {
                out.push_back({"assignment-finite", {row, static_cast<std::size_t>(k)}});
                finite = false;
            } else if (u(i, k) < -kArithmeticSlack) {
                out.push_back({"assignment-nonneg", {row, static_cast<std::size_t>(k)}});
            }
        }
        if (finite && std::abs(u.row(i).sum() - 1.0) > kConstraintSlack) out.push_back({"row-sum", {row}});
    }

    if (result.assignment.hard_labels.size() != n) {
        out.push_back({"hard-labels-length", {result.assignment.hard_labels.size()}});
    } else {
        const auto expected = argmax_rows(u);
        for (std::size_t i = 0; i < n; ++i)
            if (expected[i] != result.assignment.hard_labels[i]) out.push_back({"hard-labels-argmax", {i}});
    }

    const auto& cs = result.centers;
    for (std::size_t v = 0; v < cs.centers.size(); ++v) {
        const auto& c = cs.centers[v];
        if (c.rows() != u.cols()) out.push_back({"center-k", {v}});
        for (Eigen::Index k = 0; k < c.rows(); ++k)
            for (Eigen::Index j = 0; j < c.cols(); ++j) {
                const std::vector<std::size_t> idx{v, static_cast<std::size_t>(k), static_cast<std::size_t>(j)};
                if (!std::isfinite(c(k, j)))
                    out.push_back({"center-finite", idx});
                else if (cs.nonneg_enforced && c(k, j) < 0.0)
                    out.push_back({"center-nonneg", idx});
            }
    }

    const auto& a = result.weights.alpha;
    for (Eigen::Index v = 0; v < a.size(); ++v)
        if (!(a(v) >= 0.0)) out.push_back({"weight-nonneg", {static_cast<std::size_t>(v)}});
    if (a.size() == 0 || std::abs(a.sum() - 1.0) > kConstraintSlack) out.push_back({"weight-sum", {}});
    if (!cs.centers.empty() && static_cast<std::size_t>(a.size()) != cs.centers.size())
        out.push_back({"weight-length", {static_cast<std::size_t>(a.size())}});

    if (result.algorithm == "rkmc") {
        const auto& trace = result.objective_trace;
        const auto& skip = result.diagnostics.reseed_steps;
        for (std::size_t i = 1; i < trace.size(); ++i) {
            if (std::find(skip.begin(), skip.end(), i) != skip.end()) continue;
            if (trace[i] > trace[i - 1] + kConstraintSlack) out.push_back({"objective-monotone", {i}});
        }
    }
    return out;
}

} // namespace orkm
