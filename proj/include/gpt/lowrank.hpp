// lowrank.hpp
// Weighted rank-constrained approximation of a frequency matrix by
// alternating least squares, train/test chi-squared errors, and rank
// selection.
//
// The unit-effect convention is structural: column 0 of E is pinned to the
// canonical basis vector and column 0 of S to ones, so D = S E reproduces
// the all-ones unit column exactly. Probability bounds 0 <= D_ij <= 1 are
// enforced by clipped-target penalty cells (a majorize-minimize step on
// the box-distance penalty) whose weight escalates until the bounds hold.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "gpt/experiment.hpp"
#include "gpt/rng.hpp"

namespace gpt {

struct GptModel {
    Eigen::MatrixXd S; // m x k, column 0 all ones
    Eigen::MatrixXd E; // k x (n+1), column 0 = canonical unit effect
    int rank = 0;

    Eigen::MatrixXd probabilities() const { return S * E; }
};

struct FitOptions {
    int max_iters = 400;
    double rel_tol = 1e-8;
    int n_restarts = 5;
    double clip_delta = 1e-9; // violation tolerance before a cell is pinned
    std::uint64_t seed = 0;
    const GptModel* warm_start = nullptr; // typically the rank-(k-1) fit
};

struct FitReport {
    int rank = 0;
    double chi2_train = 0.0;
    double chi2_test = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    int restarts_used = 0;
    bool converged = false;
    std::vector<double> chi2_history; // per-sweep training error of the best run
};

namespace detail {

inline Eigen::MatrixXd fit_weights(const FrequencyMatrix& fm) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(fm.rows(), fm.cols());
    for (int i = 0; i < fm.rows(); ++i)
        for (int j = 1; j < fm.cols(); ++j)
            if (fm.mask(i, j) && std::isfinite(fm.sigma(i, j)) && fm.sigma(i, j) > 0.0)
                w(i, j) = 1.0 / (fm.sigma(i, j) * fm.sigma(i, j));
    return w;
}

inline double weighted_chi2(const Eigen::MatrixXd& f, const Eigen::MatrixXd& w,
                            const Eigen::MatrixXd& d) {
    return (w.array() * (f - d).array().square()).sum();
}

// Ridge-stabilized weighted normal-equation solve.
inline Eigen::VectorXd solve_normal(const Eigen::MatrixXd& g, const Eigen::VectorXd& h) {
    Eigen::MatrixXd greg = g;
    greg.diagonal().array() += 1e-12 * (1.0 + g.trace());
    return greg.ldlt().solve(h);
}

// Rank-k truncated SVD start, with unprobed cells seeded at 0.5.
inline void svd_init(const FrequencyMatrix& fm, int k, Eigen::MatrixXd& s, Eigen::MatrixXd& e) {
    Eigen::MatrixXd fill = fm.f;
    for (int i = 0; i < fm.rows(); ++i)
        for (int j = 1; j < fm.cols(); ++j)
            if (!fm.mask(i, j)) fill(i, j) = 0.5;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(fill, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sq = svd.singularValues().head(k).array().max(0.0).sqrt();
    s = svd.matrixU().leftCols(k) * sq.asDiagonal();
    e = sq.asDiagonal() * svd.matrixV().leftCols(k).transpose();
}

// Gauge the factor pair so that E column 0 becomes the canonical unit
// effect and S column 0 becomes exactly ones.
inline void canonicalize_unit_column(Eigen::MatrixXd& s, Eigen::MatrixXd& e) {
    const int k = static_cast<int>(s.cols());
    Eigen::VectorXd t0 = e.col(0);
    if (t0.norm() > 1e-8) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(t0);
        Eigen::MatrixXd q = qr.householderQ();
        const double alpha = (q.transpose() * t0)(0);
        Eigen::MatrixXd trans = q;
        trans.col(0) *= alpha;
        s = s * trans;
        e = trans.partialPivLu().solve(e);
    }
    e.col(0).setZero();
    e(0, 0) = 1.0;
    s.col(0).setOnes();
    (void)k;
}

struct AlsRun {
    Eigen::MatrixXd s, e;
    double chi2 = std::numeric_limits<double>::infinity();
    double max_violation = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

inline double box_violation(const Eigen::MatrixXd& d) {
    return std::max({0.0, -d.minCoeff(), d.maxCoeff() - 1.0});
}

inline void contract_into_box(Eigen::MatrixXd& e, const Eigen::MatrixXd& s);

// Two phases. Phase one is plain weighted ALS, which is monotone because
// every row/column update is an exact least-squares solve; it runs to a
// relative plateau and in practice already lands (near) the box. If the
// settled iterate still violates [0, 1], phase two adds clipped-target
// penalty cells with an escalating weight. Penalty scales derive from the
// mean positive data weight, not the maximum: the sigma floor on zero-count
// cells produces weights orders of magnitude above typical, and a penalty
// stiff on that scale makes the sweeps oscillate instead of descend.
//
// Every iterate is scored after an exact feasibility contraction and the
// best such candidate is returned, so a wandering penalized tail can never
// degrade the result below the best point visited.
inline AlsRun run_als(const FrequencyMatrix& fm, const Eigen::MatrixXd& w, int k,
                      Eigen::MatrixXd s, Eigen::MatrixXd e, const FitOptions& opts) {
    const int m = fm.rows();
    const int ncols = fm.cols();
    double w_sum = 0.0;
    int w_n = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 1; j < ncols; ++j)
            if (w(i, j) > 0.0) {
                w_sum += w(i, j);
                ++w_n;
            }
    const double w_mean = (w_n > 0) ? w_sum / w_n : 1.0;
    const double w_pen_cap = 1e6 * w_mean;
    double w_pen = 0.0;

    AlsRun run;
    Eigen::MatrixXd d = s * e;
    double prev_obj = weighted_chi2(fm.f, w, d);
    bool have_baseline = true;
    run.history.push_back(prev_obj);

    Eigen::MatrixXd best_s, best_e;
    double best_chi2 = std::numeric_limits<double>::infinity();
    auto consider = [&](const Eigen::MatrixXd& s_cur, const Eigen::MatrixXd& e_cur) {
        Eigen::MatrixXd e_feas = e_cur;
        contract_into_box(e_feas, s_cur);
        const double chi2 = weighted_chi2(fm.f, w, s_cur * e_feas);
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best_s = s_cur;
            best_e = std::move(e_feas);
        }
    };
    consider(s, e);

    Eigen::MatrixXd y(m, ncols), weff(m, ncols);
    int sweeps_at_cap = 0;
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        // Effective targets: data cells plus clipped-target penalty cells on
        // entries of the current iterate that sit outside [0, 1].
        y = fm.f;
        weff = w;
        if (w_pen > 0.0) {
            for (int i = 0; i < m; ++i)
                for (int j = 1; j < ncols; ++j) {
                    const double v = d(i, j);
                    if (v < -opts.clip_delta || v > 1.0 + opts.clip_delta) {
                        const double target = std::clamp(v, 0.0, 1.0);
                        const double wd = w(i, j);
                        weff(i, j) = wd + w_pen;
                        y(i, j) = (wd * fm.f(i, j) + w_pen * target) / (wd + w_pen);
                    }
                }
        }

        // Row subproblems: S(i, 1..k-1), leading component fixed at 1.
        if (k > 1) {
            const Eigen::MatrixXd a = e.bottomRows(k - 1); // (k-1) x ncols
            for (int i = 0; i < m; ++i) {
                const Eigen::VectorXd wi = weff.row(i).transpose();
                const Eigen::VectorXd resid = y.row(i).transpose() - e.row(0).transpose();
                const Eigen::MatrixXd g = a * wi.asDiagonal() * a.transpose();
                const Eigen::VectorXd h = a * (wi.array() * resid.array()).matrix();
                s.row(i).tail(k - 1) = solve_normal(g, h).transpose();
            }
        }

        // Column subproblems: full E column, column 0 held fixed.
        for (int j = 1; j < ncols; ++j) {
            const Eigen::VectorXd wj = weff.col(j);
            if (wj.maxCoeff() <= 0.0) continue;
            const Eigen::MatrixXd g = s.transpose() * wj.asDiagonal() * s;
            const Eigen::VectorXd h = s.transpose() * (wj.array() * y.col(j).array()).matrix();
            e.col(j) = solve_normal(g, h);
        }

        run.iterations = iter;
        d = s * e;
        const double chi2 = weighted_chi2(fm.f, w, d);
        double obj = chi2;
        if (w_pen > 0.0) {
            const Eigen::ArrayXXd excess = (-d.array()).max(0.0).max((d.array() - 1.0).max(0.0));
            obj += w_pen * excess.rightCols(ncols - 1).square().sum();
        }
        run.history.push_back(chi2);
        consider(s, e);

        const double violation = box_violation(d);
        if (w_pen >= w_pen_cap && ++sweeps_at_cap > 60) {
            run.converged = true; // cycling at the cap; the best candidate stands
            break;
        }
        const double plateau_tol = (w_pen > 0.0 && violation > 1e-9)
                                       ? std::max(opts.rel_tol, 1e-4)
                                       : opts.rel_tol;
        if (have_baseline && std::abs(prev_obj - obj) <= plateau_tol * std::max(prev_obj, 1e-12)) {
            if (w_pen == 0.0 && violation > opts.clip_delta) {
                // Settled outside the box: switch the penalty on.
                w_pen = 100.0 * w_mean;
                have_baseline = false;
                continue;
            }
            if (violation <= 1e-9 || w_pen >= w_pen_cap) {
                run.converged = true;
                break;
            }
            w_pen = std::min(w_pen * 10.0, w_pen_cap);
            have_baseline = false;
            continue;
        }
        prev_obj = obj;
        have_baseline = true;
    }

    run.s = std::move(best_s);
    run.e = std::move(best_e);
    run.chi2 = best_chi2;
    run.max_violation = box_violation(run.s * run.e);
    return run;
}

// Exact feasibility polish: contract every non-unit effect column toward
// the unit-column midpoint until D = S E lies inside [0, 1]. Rank and the
// unit column are preserved; the contraction factor is 1 - O(violation).
inline void contract_into_box(Eigen::MatrixXd& e, const Eigen::MatrixXd& s) {
    const Eigen::MatrixXd d = s * e;
    const double dmax = d.rightCols(d.cols() - 1).maxCoeff();
    const double dmin = d.rightCols(d.cols() - 1).minCoeff();
    double c = 1.0;
    if (dmax > 1.0) c = std::min(c, 0.5 / (dmax - 0.5));
    if (dmin < 0.0) c = std::min(c, 0.5 / (0.5 - dmin));
    if (c >= 1.0) return;
    c *= 1.0 - 1e-12;
    for (int j = 1; j < e.cols(); ++j) {
        e.col(j) *= c;
        e(0, j) += (1.0 - c) * 0.5;
    }
}

} // namespace detail

// Weighted rank-k fit of a frequency matrix (mask-aware: unprobed cells
// carry weight 0 but remain bound to [0, 1]).
inline std::pair<GptModel, FitReport> fit_rank_k(const FrequencyMatrix& fm, int k,
                                                 const FitOptions& opts = {}) {
    const int m = fm.rows();
    int probed_cols = 0;
    for (int j = 1; j < fm.cols(); ++j)
        if (fm.mask.col(j).any()) ++probed_cols;
    if (k < 1) throw std::invalid_argument("fit_rank_k: rank must be >= 1");
    if (k > std::min(m, probed_cols + 1))
        throw std::invalid_argument("fit_rank_k: rank exceeds min(rows, probed columns)");

    const Eigen::MatrixXd w = detail::fit_weights(fm);

    Eigen::MatrixXd s0, e0;
    detail::svd_init(fm, k, s0, e0);
    detail::canonicalize_unit_column(s0, e0);

    std::optional<detail::AlsRun> best;
    int restarts_used = 0;
    auto consider = [&](Eigen::MatrixXd s, Eigen::MatrixXd e) {
        detail::AlsRun run = detail::run_als(fm, w, k, std::move(s), std::move(e), opts);
        ++restarts_used;
        auto score = [](const detail::AlsRun& r) {
            const double penalty = (r.max_violation > 1e-9) ? 1e6 * (1.0 + r.max_violation) : 0.0;
            return r.chi2 + penalty;
        };
        if (!best || score(run) < score(*best)) best = std::move(run);
    };

    consider(s0, e0);
    if (opts.warm_start != nullptr && opts.warm_start->rank == k - 1 && k > 1) {
        auto rng = substream(opts.seed, 0x3A57, static_cast<std::uint64_t>(k));
        std::normal_distribution<double> gauss(0.0, 1e-3);
        Eigen::MatrixXd s(m, k);
        s.leftCols(k - 1) = opts.warm_start->S;
        for (int i = 0; i < m; ++i) s(i, k - 1) = gauss(rng);
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(k, fm.cols());
        e.topRows(k - 1) = opts.warm_start->E;
        consider(std::move(s), std::move(e));
    }
    for (int r = 1; r < opts.n_restarts; ++r) {
        auto rng = substream(opts.seed, 0x5EED, static_cast<std::uint64_t>(r));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double scale = 0.1 * std::max(1.0, s0.norm() / std::sqrt(double(s0.size())));
        Eigen::MatrixXd s = s0;
        Eigen::MatrixXd e = e0;
        for (int i = 0; i < s.rows(); ++i)
            for (int c = 1; c < k; ++c) s(i, c) += scale * gauss(rng);
        for (int c = 0; c < k; ++c)
            for (int j = 1; j < e.cols(); ++j) e(c, j) += scale * gauss(rng);
        consider(std::move(s), std::move(e));
    }

    if (best->max_violation > 1e-9) detail::contract_into_box(best->e, best->s);
    GptModel model{best->s, best->e, k};
    FitReport report;
    report.rank = k;
    report.chi2_train = detail::weighted_chi2(fm.f, w, model.probabilities());
    report.iterations = best->iterations;
    report.restarts_used = restarts_used;
    report.converged = best->converged;
    report.chi2_history = best->history;
    return {std::move(model), std::move(report)};
}

// Alias emphasizing the mask-aware path (the mask travels inside the
// frequency matrix; unprobed cells already carry weight 0).
inline std::pair<GptModel, FitReport> fit_masked(const FrequencyMatrix& fm, int k,
                                                 const FitOptions& opts = {}) {
    return fit_rank_k(fm, k, opts);
}

// Weighted test error of a fitted model over the probed, non-unit cells of
// an independent data set.
inline double testing_error(const GptModel& model, const FrequencyMatrix& f_test) {
    if (model.S.rows() != f_test.rows() || model.E.cols() != f_test.cols())
        throw std::invalid_argument("testing_error: shape mismatch between model and test data");
    const Eigen::MatrixXd d = model.probabilities();
    double chi2 = 0.0;
    for (int i = 0; i < f_test.rows(); ++i)
        for (int j = 1; j < f_test.cols(); ++j) {
            if (!f_test.mask(i, j)) continue;
            const double r = (f_test.f(i, j) - d(i, j)) / f_test.sigma(i, j);
            chi2 += r * r;
        }
    return chi2;
}

struct RankSweepResult {
    std::vector<FitReport> reports;
    std::vector<GptModel> models;
    int selected_rank = 0;
    int selected_index = -1;
};

// Fit every candidate rank on the training set, score on the test set and
// pick the most predictive model. Fits warm-start from the previous rank,
// which keeps the best training error non-increasing in k. Tie-break:
// smallest rank within 0.1% of the minimal testing error.
inline RankSweepResult rank_sweep(const FrequencyMatrix& f_train, const FrequencyMatrix& f_test,
                                  const std::vector<int>& ranks, const FitOptions& opts = {}) {
    if (ranks.empty()) throw std::invalid_argument("rank_sweep: ranks must be nonempty");
    if (!std::is_sorted(ranks.begin(), ranks.end()))
        throw std::invalid_argument("rank_sweep: ranks must be ascending");
    if (f_train.mask.rows() != f_test.mask.rows() || f_train.mask.cols() != f_test.mask.cols() ||
        (f_train.mask != f_test.mask).any())
        throw std::invalid_argument("rank_sweep: train/test masks must agree");

    RankSweepResult result;
    for (std::size_t idx = 0; idx < ranks.size(); ++idx) {
        FitOptions o = opts;
        if (idx > 0 && ranks[idx] == ranks[idx - 1] + 1) o.warm_start = &result.models[idx - 1];
        auto [model, report] = fit_rank_k(f_train, ranks[idx], o);
        report.chi2_test = testing_error(model, f_test);
        result.models.push_back(std::move(model));
        result.reports.push_back(std::move(report));
    }
    double best_test = std::numeric_limits<double>::infinity();
    for (const auto& r : result.reports) best_test = std::min(best_test, r.chi2_test);
    for (std::size_t idx = 0; idx < result.reports.size(); ++idx) {
        if (result.reports[idx].chi2_test <= best_test * 1.001) {
            result.selected_rank = result.reports[idx].rank;
            result.selected_index = static_cast<int>(idx);
            break;
        }
    }
    return result;
}

} // namespace gpt
