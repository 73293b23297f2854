// geometry.hpp
// Convex-body machinery over the 9-dimensional generalized Bloch space:
// realized bodies as V-polytopes (vertex lists), consistent bodies as
// H-polytopes (their duals, given by inequality lists), exact ray shooting
// into both representations, linear dimension ratios and the straddling
// check along shared rays, 3D projections, and joint-numerical-range
// sampling of the reference qutrit bodies.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "gpt/errors.hpp"
#include "gpt/hull3d.hpp"
#include "gpt/linprog.hpp"
#include "gpt/qutrit.hpp"
#include "gpt/rng.hpp"

namespace gpt {

enum class AmbientTag { state_space, effect_space };

struct VPolytope {
    Eigen::MatrixXd vertices; // one 9-vector per row
    AmbientTag ambient_tag = AmbientTag::state_space;
};

struct HPolytope {
    struct Inequality {
        Vec9 a;
        double lo, hi; // lo <= a.x <= hi
    };
    struct Equality {
        Vec9 a;
        double b; // a.x = b
    };
    std::vector<Inequality> inequalities;
    std::vector<Equality> equalities;
};

struct RayProbe {
    Vec8 direction; // unit Bloch direction; the leading component is fixed at 0
    double t_realized = 0.0;
    double t_consistent = 0.0;
    double ratio = 0.0;
};

struct Projection3D {
    std::array<int, 3> axes{};
    std::vector<Eigen::Vector3d> points;
    HullMesh hull;
};

// --- body construction ------------------------------------------------------

// Rows of S_realized, renormalized so the leading component is exactly 1.
inline VPolytope realized_state_space(const Eigen::MatrixXd& s_realized) {
    if (s_realized.rows() == 0 || s_realized.cols() != 9)
        throw data_error("realized_state_space: need a nonempty m x 9 matrix");
    VPolytope body;
    body.ambient_tag = AmbientTag::state_space;
    body.vertices = s_realized;
    for (int i = 0; i < body.vertices.rows(); ++i) {
        const double s0 = body.vertices(i, 0);
        if (std::abs(s0 - 1.0) > 1e-6)
            throw data_error("realized_state_space: row " + std::to_string(i) +
                             " has leading component " + std::to_string(s0) +
                             ", expected 1 within 1e-6");
        body.vertices.row(i) /= s0;
    }
    return body;
}

// Columns of E_realized together with their complements u - e. The unit
// column is required; its complement contributes the zero effect.
inline VPolytope realized_effect_space(const Eigen::MatrixXd& e_realized) {
    if (e_realized.rows() != 9 || e_realized.cols() == 0)
        throw data_error("realized_effect_space: need a nonempty 9 x n matrix");
    const Vec9 u = unit_effect();
    if ((e_realized.col(0) - u).norm() > 1e-9)
        throw data_error("realized_effect_space: column 0 is not the unit effect");
    VPolytope body;
    body.ambient_tag = AmbientTag::effect_space;
    const int n = static_cast<int>(e_realized.cols());
    body.vertices.resize(2 * n, 9);
    body.vertices.topRows(n) = e_realized.transpose();
    body.vertices.bottomRows(n) = (u.replicate(1, n) - e_realized).transpose();
    return body;
}

// Dual of the realized effects: one 0 <= s.e <= 1 slab per effect column plus
// the normalization equality u.s = 1.
inline HPolytope consistent_state_space(const Eigen::MatrixXd& e_realized) {
    if (e_realized.rows() != 9 || e_realized.cols() == 0)
        throw data_error("consistent_state_space: need a nonempty 9 x n matrix");
    if ((e_realized.col(0) - unit_effect()).norm() > 1e-9)
        throw data_error("consistent_state_space: column 0 is not the unit effect");
    HPolytope body;
    for (int j = 0; j < e_realized.cols(); ++j)
        body.inequalities.push_back({e_realized.col(j), 0.0, 1.0});
    body.equalities.push_back({unit_effect(), 1.0});
    return body;
}

// Dual of the realized states: 0 <= s.e <= 1 per state row, no equality.
inline HPolytope consistent_effect_space(const Eigen::MatrixXd& s_realized) {
    if (s_realized.rows() == 0 || s_realized.cols() != 9)
        throw data_error("consistent_effect_space: need a nonempty m x 9 matrix");
    HPolytope body;
    for (int i = 0; i < s_realized.rows(); ++i)
        body.inequalities.push_back({s_realized.row(i).transpose(), 0.0, 1.0});
    return body;
}

// --- ray shooting -----------------------------------------------------------

// Closed-form intersection of the ray origin + t * direction (t >= 0) with an
// H-polytope boundary: each slab contributes an admissible t-interval; the
// answer is the smallest upper bound, or +inf when no slab constrains the ray.
inline double ray_shoot_h(const HPolytope& body, const Vec9& origin, const Vec9& direction) {
    constexpr double tol = 1e-9;
    for (const auto& eq : body.equalities)
        if (std::abs(eq.a.dot(direction)) > tol)
            throw std::invalid_argument("ray_shoot_h: direction leaves the equality hyperplane");
    double t_max = std::numeric_limits<double>::infinity();
    for (const auto& ineq : body.inequalities) {
        const double v = ineq.a.dot(origin);
        if (v < ineq.lo - tol || v > ineq.hi + tol)
            throw std::invalid_argument("ray_shoot_h: origin violates an inequality");
        const double d = ineq.a.dot(direction);
        if (d > tol)
            t_max = std::min(t_max, (ineq.hi - v) / d);
        else if (d < -tol)
            t_max = std::min(t_max, (ineq.lo - v) / d);
    }
    return std::max(t_max, 0.0);
}

// Largest t with origin + t * direction still a convex combination of the
// vertices, found by the linear program
//   max t  s.t.  V^T alpha - t * direction = origin,  1^T alpha = 1,  alpha,t >= 0.
inline double ray_shoot_v(const VPolytope& body, const Vec9& origin, const Vec9& direction) {
    const int n = static_cast<int>(body.vertices.rows());
    Eigen::MatrixXd a(10, n + 1);
    a.topLeftCorner(9, n) = body.vertices.transpose();
    a.topRightCorner(9, 1) = -direction;
    a.row(9).setOnes();
    a(9, n) = 0.0;
    Eigen::VectorXd b(10);
    b.head(9) = origin;
    b[9] = 1.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    c[n] = -1.0;
    const LpSolution sol = solve_lp(a, b, c);
    if (sol.status == LpStatus::infeasible)
        throw std::invalid_argument("ray_shoot_v: origin is not in the hull of the vertices");
    if (sol.status != LpStatus::optimal)
        throw numerical_error("ray_shoot_v: linear program did not reach an optimum");
    return -sol.value;
}

// --- ray statistics ---------------------------------------------------------

struct RayStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<RayProbe> probes;
};

namespace detail {

// Shared ray driver: shoot the same Haar-pure-state Bloch directions into
// the realized V-body and the consistent H-body from the center state.
// Each ray derives its direction from its own substream and writes into its
// own slot, so the result is identical at every thread count.
inline std::vector<RayProbe> probe_rays(const VPolytope& real_body, const HPolytope& cons_body,
                                        int n_rays, std::uint64_t seed, int n_threads = 1) {
    const Vec9 center = center_state();
    std::vector<RayProbe> probes(n_rays);
    std::exception_ptr failure = nullptr;
    std::mutex failure_mutex;
    auto worker = [&](int begin, int step) {
        for (int ray = begin; ray < n_rays; ray += step) {
            try {
                auto rng = substream(seed, static_cast<std::uint64_t>(ray));
                RayProbe probe;
                const Vec9 dir = haar_bloch_direction(rng);
                probe.direction = dir.tail<8>();
                try {
                    probe.t_realized = ray_shoot_v(real_body, center, dir);
                    probe.t_consistent = ray_shoot_h(cons_body, center, dir);
                } catch (const std::invalid_argument& err) {
                    throw data_error(std::string("ray probing failed (center outside a body): ") +
                                     err.what());
                }
                probe.ratio = (probe.t_consistent > 0.0 && std::isfinite(probe.t_consistent))
                                  ? probe.t_realized / probe.t_consistent
                                  : 0.0;
                probes[ray] = probe;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    n_threads = std::max(1, std::min(n_threads, n_rays));
    if (n_threads == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t, n_threads);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return probes;
}

} // namespace detail

// Mean and standard deviation of t_realized / t_consistent over Haar-sampled
// pure-state Bloch rays. Rays along which the consistent body is unbounded
// are excluded from the statistics but kept in the probe list.
inline RayStats linear_dimension_ratio(const VPolytope& real_body, const HPolytope& cons_body,
                                       int n_rays, std::uint64_t seed, int n_threads = 1) {
    RayStats stats;
    stats.probes = detail::probe_rays(real_body, cons_body, n_rays, seed, n_threads);
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (const auto& p : stats.probes) {
        if (!std::isfinite(p.t_consistent)) continue;
        sum += p.ratio;
        sum2 += p.ratio * p.ratio;
        ++n;
    }
    if (n == 0) throw data_error("linear_dimension_ratio: every sampled ray was unbounded");
    stats.mean = sum / n;
    stats.stddev = std::sqrt(std::max(sum2 / n - stats.mean * stats.mean, 0.0));
    return stats;
}

struct StraddleResult {
    double max_realized_norm = 0.0;
    double min_consistent_norm = std::numeric_limits<double>::infinity();
    bool straddles = false;
    std::vector<RayProbe> probes;
};

// Boundary-intersection Bloch norms along shared rays. Because the rays start
// at the center (whose Bloch part vanishes) in a unit Bloch direction, the
// norms are exactly the t values.
inline StraddleResult straddling_check(const VPolytope& real_body, const HPolytope& cons_body,
                                       int n_rays, std::uint64_t seed, int n_threads = 1) {
    StraddleResult result;
    result.probes = detail::probe_rays(real_body, cons_body, n_rays, seed, n_threads);
    for (const auto& p : result.probes) {
        result.max_realized_norm = std::max(result.max_realized_norm, p.t_realized);
        result.min_consistent_norm = std::min(result.min_consistent_norm, p.t_consistent);
    }
    result.straddles = result.max_realized_norm <= result.min_consistent_norm;
    return result;
}

// --- 3D projections ---------------------------------------------------------

inline void check_axes(const std::array<int, 3>& axes) {
    for (int axis : axes)
        if (axis < 0 || axis > 8) throw std::invalid_argument("projection axis out of range 0..8");
    if (axes[0] == axes[1] || axes[0] == axes[2] || axes[1] == axes[2])
        throw std::invalid_argument("projection axes must be distinct");
}

inline Projection3D project_vpolytope(const VPolytope& body, const std::array<int, 3>& axes) {
    check_axes(axes);
    Projection3D proj;
    proj.axes = axes;
    proj.points.reserve(body.vertices.rows());
    for (int i = 0; i < body.vertices.rows(); ++i)
        proj.points.push_back({body.vertices(i, axes[0]), body.vertices(i, axes[1]),
                               body.vertices(i, axes[2])});
    proj.hull = convex_hull_3d(proj.points);
    return proj;
}

namespace detail {

// Support point of an H-polytope in direction c, via the dual linear program
//   min  sum_i (hi_i y_i - lo_i z_i) + sum_j b_j (p_j - q_j)
//   s.t. sum_i a_i (y_i - z_i) + sum_j a_j (p_j - q_j) = c,   y,z,p,q >= 0,
// whose equality multipliers are exactly the primal maximizer x.
inline Vec9 support_point_h(const HPolytope& body, const Vec9& c) {
    const int ni = static_cast<int>(body.inequalities.size());
    const int ne = static_cast<int>(body.equalities.size());
    Eigen::MatrixXd a(9, 2 * ni + 2 * ne);
    Eigen::VectorXd cost(2 * ni + 2 * ne);
    for (int i = 0; i < ni; ++i) {
        a.col(2 * i) = body.inequalities[i].a;
        a.col(2 * i + 1) = -body.inequalities[i].a;
        cost[2 * i] = body.inequalities[i].hi;
        cost[2 * i + 1] = -body.inequalities[i].lo;
    }
    for (int j = 0; j < ne; ++j) {
        a.col(2 * ni + 2 * j) = body.equalities[j].a;
        a.col(2 * ni + 2 * j + 1) = -body.equalities[j].a;
        cost[2 * ni + 2 * j] = body.equalities[j].b;
        cost[2 * ni + 2 * j + 1] = -body.equalities[j].b;
    }
    const LpSolution sol = solve_lp(a, c, cost);
    if (sol.status == LpStatus::infeasible)
        throw data_error("project_hpolytope: body is unbounded along a sampled direction");
    if (sol.status != LpStatus::optimal)
        throw data_error("project_hpolytope: support-function linear program failed");
    return sol.multipliers;
}

} // namespace detail

// Inner approximation of an H-polytope's 3D shadow: maximize sampled unit
// directions of the subspace over the body and hull the projected maximizers.
inline Projection3D project_hpolytope(const HPolytope& body, const std::array<int, 3>& axes,
                                      int n_dirs, std::uint64_t seed) {
    check_axes(axes);
    Projection3D proj;
    proj.axes = axes;
    auto rng = substream(seed, 0x9d0f);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < n_dirs; ++k) {
        Eigen::Vector3d d{gauss(rng), gauss(rng), gauss(rng)};
        if (d.norm() < 1e-12) continue;
        d.normalize();
        Vec9 c = Vec9::Zero();
        for (int t = 0; t < 3; ++t) c[axes[t]] = d[t];
        const Vec9 x = detail::support_point_h(body, c);
        proj.points.push_back({x[axes[0]], x[axes[1]], x[axes[2]]});
    }
    proj.hull = convex_hull_3d(proj.points);
    return proj;
}

// --- joint numerical range ----------------------------------------------------

// Haar sampling of the qutrit reference bodies projected to three operator
// axes. State axes use (I, lambda_1..lambda_8); effect axes use
// (I/3, lambda_1/2, ..., lambda_8/2) and the sample set is closed under
// complementation about the projected unit, with the zero and unit effect
// vectors adjoined, before hulling.
inline Projection3D sample_jnr(const std::array<int, 3>& axes, AmbientTag space, int n_samples,
                               std::uint64_t seed) {
    check_axes(axes);
    if (n_samples < 4) throw std::invalid_argument("sample_jnr: need at least 4 samples");
    Projection3D proj;
    proj.axes = axes;
    auto rng = substream(seed, 0x7a3e);
    const double scale = (space == AmbientTag::effect_space) ? 0.5 : 1.0;
    Eigen::Vector3d u_proj = Eigen::Vector3d::Zero();
    for (int t = 0; t < 3; ++t)
        if (axes[t] == 0) u_proj[t] = 1.0;
    for (int k = 0; k < n_samples; ++k) {
        const Eigen::Vector3cd ket = sample_haar_ket(rng);
        Eigen::Vector3d w;
        for (int t = 0; t < 3; ++t) {
            const int axis = axes[t];
            const Complex val = ket.dot(gell_mann(axis) * ket);
            w[t] = (axis == 0) ? val.real() / (space == AmbientTag::effect_space ? 3.0 : 1.0)
                               : scale * val.real();
        }
        proj.points.push_back(w);
        if (space == AmbientTag::effect_space) proj.points.push_back(u_proj - w);
    }
    if (space == AmbientTag::effect_space) {
        proj.points.push_back(Eigen::Vector3d::Zero());
        proj.points.push_back(u_proj);
    }
    proj.hull = convex_hull_3d(proj.points);
    return proj;
}

// --- planar sections and polygon distance ------------------------------------

// Cross-section of a triangle mesh with the plane (first coordinate) = value;
// returns the section's convex outline in the remaining two coordinates.
inline std::vector<Eigen::Vector2d> slice_mesh(const HullMesh& mesh, double value,
                                               double tol = 1e-9) {
    std::vector<Eigen::Vector2d> pts;
    auto clip = [&](const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
        const double fp = p.x() - value, fq = q.x() - value;
        if (std::abs(fp) <= tol) pts.push_back({p.y(), p.z()});
        if (fp * fq < -tol * tol) {
            const double s = fp / (fp - fq);
            const Eigen::Vector3d hit = p + s * (q - p);
            pts.push_back({hit.y(), hit.z()});
        }
    };
    for (const auto& f : mesh.facets) {
        for (int e = 0; e < 3; ++e)
            clip(mesh.vertices[f[e]], mesh.vertices[f[(e + 1) % 3]]);
    }
    return hull2d(pts, tol);
}

// Hausdorff distance between two convex polygons given as CCW vertex lists.
inline double polygon_hausdorff(const std::vector<Eigen::Vector2d>& a,
                                const std::vector<Eigen::Vector2d>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("polygon_hausdorff: empty polygon");
    auto point_to_poly = [](const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& poly) {
        if (poly.size() == 1) return (p - poly[0]).norm();
        bool inside = poly.size() >= 3;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < poly.size(); ++i) {
            const Eigen::Vector2d& q0 = poly[i];
            const Eigen::Vector2d& q1 = poly[(i + 1) % poly.size()];
            const Eigen::Vector2d e = q1 - q0;
            const double cross = e.x() * (p.y() - q0.y()) - e.y() * (p.x() - q0.x());
            if (cross < 0.0) inside = false;
            const double t = std::clamp(e.dot(p - q0) / std::max(e.squaredNorm(), 1e-300), 0.0, 1.0);
            best = std::min(best, (p - (q0 + t * e)).norm());
        }
        return inside ? 0.0 : best;
    };
    double h = 0.0;
    for (const auto& p : a) h = std::max(h, point_to_poly(p, b));
    for (const auto& p : b) h = std::max(h, point_to_poly(p, a));
    return h;
}

} // namespace gpt
