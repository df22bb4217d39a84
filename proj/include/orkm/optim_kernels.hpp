#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "core_model.hpp"
#include "errors.hpp"

/**
 * @file optim_kernels.hpp
 * @brief Simplex projection, simplex-constrained row QPs and nonnegative least squares.
 */
namespace orkm {

/**
 * Euclidean projection of y onto {u >= 0, sum(u) = 1}.
 *
 * Sort-and-threshold: find the largest rho with y_(rho) - (sum_{i<=rho} y_(i) - 1)/rho > 0,
 * shift by that threshold and clamp. The result is renormalized so the sum is 1 to rounding.
 */
inline Vector project_simplex(const Vector& y) {
    const auto k = y.size();
    if (k == 0) throw DimensionError("cannot project an empty vector onto the simplex");
    if (!y.allFinite()) throw ValidationError("project_simplex: non-finite input");

    std::vector<double> sorted(y.data(), y.data() + k);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        cumulative += sorted[static_cast<std::size_t>(i)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) theta = candidate;
    }
    Vector u = (y.array() - theta).max(0.0);
    const double total = u.sum();
    if (total > 0.0) {
        u /= total;
    } else {
        // only reachable through underflow; the argmax vertex is the projection limit
        Eigen::Index best = 0;
        y.maxCoeff(&best);
        u.setZero();
        u(best) = 1.0;
    }
    return u;
}

/// Strictly convex (or, for eta = 0, convex) QP 0.5 u^T H u - c^T u over the simplex.
struct RowQP {
    Matrix hessian; // K x K, symmetric
    Vector linear;  // K

    double value(const Vector& u) const { return 0.5 * u.dot(hessian * u) - linear.dot(u); }
};

struct RowQPSolution {
    Vector u;
    bool converged = false;
    int iterations = 0;
    /// ||u - P(u - (Hu - c)/L)|| at the returned point.
    double residual = 0.0;
};

/// Gershgorin upper bound on the largest eigenvalue of a symmetric matrix.
inline double gershgorin_bound(const Matrix& h) {
    double bound = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) bound = std::max(bound, h.row(i).cwiseAbs().sum());
    return bound;
}

/// Throws NumericalError unless H is symmetric positive semi-definite.
inline void check_row_hessian(const Matrix& h) {
    if (h.rows() != h.cols()) throw DimensionError("row QP Hessian must be square");
    if (!h.allFinite()) throw NumericalError("row QP Hessian has a non-finite entry");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw NumericalError("row QP Hessian is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
        throw NumericalError("row QP Hessian is not positive semi-definite");
}

namespace detail {

inline double pg_residual(const RowQP& qp, const Vector& u, double lipschitz) {
    return (u - project_simplex(u - (qp.hessian * u - qp.linear) / lipschitz)).norm();
}

// Solves the equality-constrained QP restricted to the support of u. Returns false
// when the reduced KKT system is singular or the solution leaves the simplex.
inline bool polish_on_support(const RowQP& qp, const Vector& u, Vector& out) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index k = 0; k < u.size(); ++k)
        if (u(k) > 1e-14) support.push_back(k);
    const auto s = static_cast<Eigen::Index>(support.size());
    if (s == 0) return false;

    Matrix kkt = Matrix::Zero(s + 1, s + 1);
    Vector rhs(s + 1);
    for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = qp.hessian(support[a], support[b]);
        kkt(a, s) = 1.0;
        kkt(s, a) = 1.0;
        rhs(a) = qp.linear(support[a]);
    }
    rhs(s) = 1.0;
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) return false;
    const Vector sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;

    out = Vector::Zero(u.size());
    for (Eigen::Index a = 0; a < s; ++a) {
        if (sol(a) < 0.0) return false;
        out(support[a]) = sol(a);
    }
    out /= out.sum();
    return true;
}

} // namespace detail

/**
 * Minimizes 0.5 u^T H u - c^T u over the probability simplex.
 *
 * Projected gradient with fixed step 1/L (L = Gershgorin bound of H), warm-started
 * at u0, so every iterate is a descent step. The support of u0 is polished first, then
 * the current support every few iterations, by solving the reduced KKT system exactly;
 * a polished point is accepted once its fixed-point residual is within tol. The Hessian
 * is assumed to have been checked with check_row_hessian.
 */
inline RowQPSolution solve_row_qp_unchecked(const RowQP& qp, const Vector& u0, double tol, int max_inner) {
    double lipschitz = gershgorin_bound(qp.hessian);
    if (!(lipschitz > 0.0)) lipschitz = 1.0;

    RowQPSolution sol;
    Vector u = project_simplex(u0);
    const double start_value = qp.value(u);
    sol.residual = detail::pg_residual(qp, u, lipschitz);
    if (sol.residual <= tol) {
        sol.u = u;
        sol.converged = true;
        return sol;
    }

    Vector polished;
    if (detail::polish_on_support(qp, u, polished) && qp.value(polished) <= start_value &&
        detail::pg_residual(qp, polished, lipschitz) <= tol) {
        sol.u = polished;
        sol.residual = detail::pg_residual(qp, polished, lipschitz);
        sol.converged = true;
        return sol;
    }
    for (int it = 1; it <= max_inner; ++it) {
        const Vector next = project_simplex(u - (qp.hessian * u - qp.linear) / lipschitz);
        const double step = (next - u).norm();
        u = next;
        sol.iterations = it;
        if (step <= tol) {
            sol.converged = true;
            break;
        }
        if (it % 8 == 0 && detail::polish_on_support(qp, u, polished) && qp.value(polished) <= qp.value(u) &&
            detail::pg_residual(qp, polished, lipschitz) <= tol) {
            u = polished;
            sol.converged = true;
            break;
        }
    }
    if (sol.converged && detail::polish_on_support(qp, u, polished) && qp.value(polished) <= qp.value(u) &&
        detail::pg_residual(qp, polished, lipschitz) <= detail::pg_residual(qp, u, lipschitz))
        u = polished;

    if (qp.value(u) > start_value) u = project_simplex(u0);
    sol.u = u;
    sol.residual = detail::pg_residual(qp, u, lipschitz);
    sol.converged = sol.converged || sol.residual <= tol;
    return sol;
}

inline RowQPSolution solve_row_qp(const RowQP& qp, const Vector& u0, double tol = 1e-10, int max_inner = 10000) {
    const auto k = qp.hessian.rows();
    if (qp.linear.size() != k || u0.size() != k) throw DimensionError("row QP dimensions do not conform");
    if (!qp.linear.allFinite() || !u0.allFinite()) throw ValidationError("row QP has a non-finite input");
    if (!(tol > 0.0)) throw ConfigError("row QP tolerance must be > 0");
    check_row_hessian(qp.hessian);
    return solve_row_qp_unchecked(qp, u0, tol, max_inner);
}

struct NnlsSolution {
    Vector x;
    bool ridge_fallback = false;
    int iterations = 0;
};

/**
 * Lawson-Hanson active-set NNLS on the normal equations: minimizes
 * 0.5 x^T G x - h^T x over x >= 0, where G = A^T A and h = A^T b.
 * Working on the Gram form lets callers share G across many right-hand sides.
 */
inline NnlsSolution nnls_gram(const Matrix& gram, const Vector& h, double tol = 1e-10) {
    const auto k = gram.rows();
    if (gram.cols() != k || h.size() != k) throw DimensionError("nnls: Gram matrix and rhs do not conform");
    if (!gram.allFinite() || !h.allFinite()) throw ValidationError("nnls: non-finite input");

    NnlsSolution out;
    out.x = Vector::Zero(k);
    std::vector<bool> passive(static_cast<std::size_t>(k), false);
    const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
    const double kkt_tol = tol * scale;

    auto solve_passive = [&](Vector& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < k; ++i)
            if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
        const auto p = static_cast<Eigen::Index>(idx.size());
        Matrix g(p, p);
        Vector rhs(p);
        for (Eigen::Index a = 0; a < p; ++a) {
            rhs(a) = h(idx[a]);
            for (Eigen::Index b = 0; b < p; ++b) g(a, b) = gram(idx[a], idx[b]);
        }
        Eigen::LDLT<Matrix> ldlt(g);
        const double pivot_floor = 1e-12 * scale;
        bool singular = ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= pivot_floor;
        Vector sol;
        if (!singular) {
            sol = ldlt.solve(rhs);
            singular = !sol.allFinite();
        }
        if (singular) {
            out.ridge_fallback = true;
            g.diagonal().array() += 1e-10 * scale;
            sol = g.ldlt().solve(rhs);
        }
        z = Vector::Zero(k);
        for (Eigen::Index a = 0; a < p; ++a) z(idx[a]) = sol(a);
    };

    const int max_outer = static_cast<int>(3 * k + 10);
    for (int outer = 0; outer < max_outer; ++outer) {
        const Vector w = h - gram * out.x;
        Eigen::Index best = -1;
        double best_w = kkt_tol;
        for (Eigen::Index i = 0; i < k; ++i)
            if (!passive[static_cast<std::size_t>(i)] && w(i) > best_w) {
                best_w = w(i);
                best = i;
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        ++out.iterations;

        Vector z;
        solve_passive(z);
        for (int inner = 0; inner < 3 * k + 10; ++inner) {
            bool feasible = true;
            double alpha = 1.0;
            for (Eigen::Index i = 0; i < k; ++i)
                if (passive[static_cast<std::size_t>(i)] && z(i) <= 0.0) {
                    feasible = false;
                    const double denom = out.x(i) - z(i);
                    if (denom > 0.0) alpha = std::min(alpha, out.x(i) / denom);
                }
            if (feasible) break;
            out.x += alpha * (z - out.x);
            for (Eigen::Index i = 0; i < k; ++i)
                if (passive[static_cast<std::size_t>(i)] && out.x(i) <= 1e-15 * std::max(1.0, out.x.maxCoeff())) {
                    passive[static_cast<std::size_t>(i)] = false;
                    out.x(i) = 0.0;
                }
            solve_passive(z);
        }
        out.x = z.cwiseMax(0.0);
    }
    return out;
}

/// min ||A x - b||^2 subject to x >= 0.
inline NnlsSolution nnls(const Matrix& a, const Vector& b, double tol = 1e-10) {
    if (a.rows() != b.size()) throw DimensionError("nnls: A and b do not conform");
    return nnls_gram(a.transpose() * a, a.transpose() * b, tol);
}

} // namespace orkm
