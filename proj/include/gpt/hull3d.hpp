// hull3d.hpp
// Incremental convex hull of a 3D point cloud with a geometric tolerance.
// Degenerate inputs (coplanar, collinear, coincident) fall back to a 2D
// monotone-chain hull, a segment, or a single point; the facets returned in
// those cases triangulate the lower-dimensional hull so downstream code can
// treat every output uniformly as a triangle mesh.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <vector>

namespace gpt {

struct HullMesh {
    std::vector<Eigen::Vector3d> vertices;       // extreme points only
    std::vector<std::array<int, 3>> facets;      // indices into vertices, outward CCW
    int dimension = 3;                           // affine dimension of the hull
};

namespace detail {

inline std::vector<int> hull2d_indices(const std::vector<Eigen::Vector2d>& pts, double tol) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
        return pts[a].y() < pts[b].y();
    });
    auto cross = [&](int o, int a, int b) {
        return (pts[a].x() - pts[o].x()) * (pts[b].y() - pts[o].y()) -
               (pts[a].y() - pts[o].y()) * (pts[b].x() - pts[o].x());
    };
    std::vector<int> hull;
    // Strict turns only (> tol), so collinear points are dropped.
    for (int idx : order) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), idx) <= tol)
            hull.pop_back();
        hull.push_back(idx);
    }
    const size_t lower = hull.size() + 1;
    for (int k = n - 2; k >= 0; --k) {
        const int idx = order[k];
        while (hull.size() >= lower && cross(hull[hull.size() - 2], hull.back(), idx) <= tol)
            hull.pop_back();
        hull.push_back(idx);
    }
    hull.pop_back();
    // Remove duplicates that can appear when all points coincide.
    std::vector<int> out;
    for (int idx : hull)
        if (out.empty() || (pts[idx] - pts[out.back()]).norm() > tol) out.push_back(idx);
    if (out.size() > 1 && (pts[out.front()] - pts[out.back()]).norm() <= tol) out.pop_back();
    return out;
}

} // namespace detail

// 2D convex hull, CCW, extreme points only.
inline std::vector<Eigen::Vector2d> hull2d(const std::vector<Eigen::Vector2d>& pts,
                                           double tol = 1e-9) {
    if (pts.empty()) return {};
    std::vector<Eigen::Vector2d> out;
    for (int idx : detail::hull2d_indices(pts, tol)) out.push_back(pts[idx]);
    if (out.empty()) out.push_back(pts.front());
    return out;
}

inline HullMesh convex_hull_3d(const std::vector<Eigen::Vector3d>& points, double tol = 1e-9) {
    HullMesh mesh;
    if (points.empty()) { mesh.dimension = -1; return mesh; }

    // Find an affine basis to detect degeneracy.
    const Eigen::Vector3d p0 = points[0];
    int i1 = -1, i2 = -1, i3 = -1;
    for (size_t i = 1; i < points.size(); ++i)
        if ((points[i] - p0).norm() > tol) { i1 = static_cast<int>(i); break; }
    if (i1 < 0) {
        mesh.dimension = 0;
        mesh.vertices.push_back(p0);
        return mesh;
    }
    const Eigen::Vector3d d1 = (points[i1] - p0).normalized();
    for (size_t i = 1; i < points.size(); ++i) {
        const Eigen::Vector3d v = points[i] - p0;
        if ((v - d1 * d1.dot(v)).norm() > tol) { i2 = static_cast<int>(i); break; }
    }
    if (i2 < 0) {
        // Collinear: keep the two extreme endpoints along d1.
        mesh.dimension = 1;
        double lo = 0.0, hi = 0.0;
        int alo = 0, ahi = 0;
        for (size_t i = 0; i < points.size(); ++i) {
            const double t = d1.dot(points[i] - p0);
            if (t < lo) { lo = t; alo = static_cast<int>(i); }
            if (t > hi) { hi = t; ahi = static_cast<int>(i); }
        }
        mesh.vertices.push_back(points[alo]);
        mesh.vertices.push_back(points[ahi]);
        return mesh;
    }
    Eigen::Vector3d d2 = points[i2] - p0;
    d2 = (d2 - d1 * d1.dot(d2)).normalized();
    const Eigen::Vector3d normal = d1.cross(d2);
    for (size_t i = 1; i < points.size(); ++i)
        if (std::abs(normal.dot(points[i] - p0)) > tol) { i3 = static_cast<int>(i); break; }

    if (i3 < 0) {
        // Coplanar: 2D hull in the (d1, d2) frame, fan triangulation.
        mesh.dimension = 2;
        std::vector<Eigen::Vector2d> flat(points.size());
        for (size_t i = 0; i < points.size(); ++i) {
            const Eigen::Vector3d v = points[i] - p0;
            flat[i] = {d1.dot(v), d2.dot(v)};
        }
        const std::vector<int> hull = detail::hull2d_indices(flat, tol);
        for (int idx : hull) mesh.vertices.push_back(points[idx]);
        for (int k = 1; k + 1 < static_cast<int>(hull.size()); ++k)
            mesh.facets.push_back({0, k, k + 1});
        return mesh;
    }

    // Full-dimensional incremental hull. Facets carry a plane and a conflict
    // flag; a point outside some facet tears out the visible region and
    // re-stitches across the horizon.
    struct Facet {
        std::array<int, 3> v;
        Eigen::Vector3d n;
        double off;
        bool dead = false;
    };
    std::vector<Facet> facets;
    auto make_facet = [&](int a, int b, int c, const Eigen::Vector3d& inside) {
        Facet f;
        f.v = {a, b, c};
        f.n = (points[b] - points[a]).cross(points[c] - points[a]);
        const double norm = f.n.norm();
        f.n /= norm;
        f.off = f.n.dot(points[a]);
        if (f.n.dot(inside) > f.off) {
            std::swap(f.v[1], f.v[2]);
            f.n = -f.n;
            f.off = -f.off;
        }
        facets.push_back(f);
    };

    const Eigen::Vector3d centroid =
        (points[0] + points[i1] + points[i2] + points[i3]) / 4.0;
    make_facet(0, i1, i2, centroid);
    make_facet(0, i1, i3, centroid);
    make_facet(0, i2, i3, centroid);
    make_facet(i1, i2, i3, centroid);

    for (int p = 0; p < static_cast<int>(points.size()); ++p) {
        if (p == 0 || p == i1 || p == i2 || p == i3) continue;
        std::vector<int> visible;
        for (int f = 0; f < static_cast<int>(facets.size()); ++f)
            if (!facets[f].dead && facets[f].n.dot(points[p]) > facets[f].off + tol)
                visible.push_back(f);
        if (visible.empty()) continue;

        // Horizon edges: edges of visible facets shared with a live facet.
        std::vector<std::array<int, 2>> horizon;
        auto edge_key = [](int a, int b) { return std::pair<int, int>(std::min(a, b), std::max(a, b)); };
        std::vector<std::pair<std::pair<int, int>, std::array<int, 2>>> edges;
        for (int f : visible) {
            const auto& v = facets[f].v;
            for (int e = 0; e < 3; ++e) {
                const int a = v[e], b = v[(e + 1) % 3];
                const auto key = edge_key(a, b);
                bool matched = false;
                for (auto it = edges.begin(); it != edges.end(); ++it)
                    if (it->first == key) {
                        edges.erase(it); // interior edge, shared by two visible facets
                        matched = true;
                        break;
                    }
                if (!matched) edges.push_back({key, {a, b}});
            }
        }
        for (const auto& e : edges) horizon.push_back(e.second);
        for (int f : visible) facets[f].dead = true;
        for (const auto& e : horizon) make_facet(e[0], e[1], p, centroid);
    }

    // Compact: collect referenced vertices, renumber.
    std::vector<int> remap(points.size(), -1);
    for (const auto& f : facets) {
        if (f.dead) continue;
        for (int idx : f.v)
            if (remap[idx] < 0) {
                remap[idx] = static_cast<int>(mesh.vertices.size());
                mesh.vertices.push_back(points[idx]);
            }
    }
    for (const auto& f : facets)
        if (!f.dead) mesh.facets.push_back({remap[f.v[0]], remap[f.v[1]], remap[f.v[2]]});
    return mesh;
}

} // namespace gpt
