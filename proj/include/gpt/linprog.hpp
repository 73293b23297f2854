// linprog.hpp
// Small dense two-phase simplex for standard-form problems
//     min c^T x   s.t.  A x = b,  x >= 0.
// The instances here are tiny (a dozen rows or so), so a revised-simplex
// with explicit basis refactorization each pivot is plenty fast and keeps
// the code short.

#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace gpt {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    double value = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd x;           // primal solution, size n
    Eigen::VectorXd multipliers; // dual vector pi with B^T pi = c_B, size m
    std::vector<int> basis;
};

namespace detail {

// One simplex phase on the (possibly augmented) data. Dantzig rule with a
// Bland fallback after a stall budget to rule out cycling.
// Columns >= n_price never enter the basis; phase 2 uses this to keep the
// artificial variables out once feasibility is established.
inline bool simplex_iterate(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& c, std::vector<int>& basis,
                            Eigen::VectorXd& x_basic, bool& unbounded, int n_price) {
    const int m = static_cast<int>(a.rows());
    const int n = n_price;
    const double tol = 1e-10;
    unbounded = false;

    Eigen::MatrixXd bmat(m, m);
    int stall = 0;
    for (int iter = 0; iter < 200 * (n + m); ++iter) {
        for (int i = 0; i < m; ++i) bmat.col(i) = a.col(basis[i]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        x_basic = lu.solve(b);

        Eigen::VectorXd cb(m);
        for (int i = 0; i < m; ++i) cb[i] = c[basis[i]];
        const Eigen::VectorXd pi = lu.transpose().solve(cb);

        // pricing
        const bool bland = stall > 2 * (n + m);
        int enter = -1;
        double best = -tol;
        for (int j = 0; j < n; ++j) {
            bool in_basis = false;
            for (int i : basis)
                if (i == j) { in_basis = true; break; }
            if (in_basis) continue;
            const double red = c[j] - pi.dot(a.col(j));
            if (bland) {
                if (red < -tol) { enter = j; break; }
            } else if (red < best) {
                best = red;
                enter = j;
            }
        }
        if (enter < 0) return true; // optimal

        const Eigen::VectorXd dir = lu.solve(a.col(enter));
        int leave = -1;
        double min_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (dir[i] > tol) {
                const double ratio = std::max(x_basic[i], 0.0) / dir[i];
                if (ratio < min_ratio - tol ||
                    (ratio < min_ratio + tol && (leave < 0 || basis[i] < basis[leave]))) {
                    min_ratio = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) {
            unbounded = true;
            return false;
        }
        if (min_ratio < tol) ++stall; else stall = 0;
        basis[leave] = enter;
    }
    return false; // iteration budget blown; treat as failure
}

} // namespace detail

inline LpSolution solve_lp(const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in,
                           const Eigen::VectorXd& c) {
    const int m = static_cast<int>(a_in.rows());
    const int n = static_cast<int>(a_in.cols());

    // Flip rows so b >= 0, then bring in artificial variables.
    Eigen::MatrixXd a = a_in;
    Eigen::VectorXd b = b_in;
    for (int i = 0; i < m; ++i)
        if (b[i] < 0.0) {
            a.row(i) = -a.row(i);
            b[i] = -b[i];
        }

    Eigen::MatrixXd a1(m, n + m);
    a1.leftCols(n) = a;
    a1.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
    c1.tail(m).setOnes();

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    LpSolution sol;
    Eigen::VectorXd x_basic;
    bool unbounded = false;
    if (!detail::simplex_iterate(a1, b, c1, basis, x_basic, unbounded, n + m)) return sol;

    double phase1 = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n) phase1 += x_basic[i];
    if (phase1 > 1e-8) return sol; // infeasible

    // Drive any residual (degenerate, zero-valued) artificials out of the basis.
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        Eigen::MatrixXd bmat(m, m);
        for (int r = 0; r < m; ++r) bmat.col(r) = a1.col(basis[r]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        bool swapped = false;
        for (int j = 0; j < n && !swapped; ++j) {
            bool in_basis = false;
            for (int r : basis)
                if (r == j) { in_basis = true; break; }
            if (in_basis) continue;
            const Eigen::VectorXd dir = lu.solve(a1.col(j));
            if (std::abs(dir[i]) > 1e-8) {
                basis[i] = j;
                swapped = true;
            }
        }
        if (!swapped) {
            // Row is redundant; the artificial stays at value zero and the
            // phase-2 cost of zero keeps it there.
        }
    }

    Eigen::VectorXd c2 = Eigen::VectorXd::Zero(n + m);
    c2.head(n) = c;
    if (!detail::simplex_iterate(a1, b, c2, basis, x_basic, unbounded, n)) {
        if (unbounded) sol.status = LpStatus::unbounded;
        return sol;
    }

    sol.status = LpStatus::optimal;
    sol.x = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd bmat(m, m);
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) {
        bmat.col(i) = a1.col(basis[i]);
        cb[i] = c2[basis[i]];
        if (basis[i] < n) sol.x[basis[i]] = std::max(x_basic[i], 0.0);
    }
    sol.value = c.dot(sol.x);
    Eigen::VectorXd pi = bmat.transpose().partialPivLu().solve(cb);
    for (int i = 0; i < m; ++i)
        if (b_in[i] < 0.0) pi[i] = -pi[i]; // undo the row flips
    sol.multipliers = pi;
    sol.basis = basis;
    return sol;
}

} // namespace gpt
