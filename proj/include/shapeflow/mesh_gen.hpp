#pragma once

#include "shapeflow/mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace shapeflow {

namespace detail {

// Tangent-adjusted cube-to-sphere mapping: grid lines land nearly
// geodesically equidistant instead of bunching at face centers.
inline double spherify(double t) { return std::tan(t * std::numbers::pi / 4.0); }

} // namespace detail

/// Pure quad sphere built on a subdivided cube, 6*subdiv^2 faces. Corner
/// vertices have valence 3, all others 4.
inline QuadMesh make_quad_sphere(int subdiv, double radius = 1.0,
                                 const Vec3& center = Vec3::Zero()) {
    if (subdiv < 1) throw Error("make_quad_sphere: subdiv must be >= 1");
    if (radius <= 0) throw Error("make_quad_sphere: radius must be positive");

    QuadMesh m;
    // cube face frames: (origin axis fixed at +-1, then u, v axes)
    struct Face {
        Vec3 n, u, v;
    };
    const std::array<Face, 6> cube_faces = {{
        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
        {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
        {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}},
        {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
        {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},
        {{0, 0, -1}, {0, 1, 0}, {1, 0, 0}},
    }};

    // deduplicate shared edge/corner vertices by quantized position
    std::map<std::array<long long, 3>, int> seen;
    auto vertex_id = [&](const Vec3& unit) {
        std::array<long long, 3> key;
        for (int c = 0; c < 3; ++c) key[c] = llround(unit[c] * 1e9);
        auto it = seen.find(key);
        if (it != seen.end()) return it->second;
        int id = int(m.vertices.size());
        m.vertices.push_back(center + radius * unit);
        seen.emplace(key, id);
        return id;
    };

    for (const Face& f : cube_faces) {
        std::vector<int> ids((subdiv + 1) * (subdiv + 1));
        for (int b = 0; b <= subdiv; ++b)
            for (int a = 0; a <= subdiv; ++a) {
                double ua = detail::spherify(2.0 * a / subdiv - 1.0);
                double vb = detail::spherify(2.0 * b / subdiv - 1.0);
                Vec3 p = f.n + ua * f.u + vb * f.v;
                ids[a + b * (subdiv + 1)] = vertex_id(p.normalized());
            }
        for (int b = 0; b < subdiv; ++b)
            for (int a = 0; a < subdiv; ++a) {
                int i00 = ids[a + b * (subdiv + 1)];
                int i10 = ids[a + 1 + b * (subdiv + 1)];
                int i11 = ids[a + 1 + (b + 1) * (subdiv + 1)];
                int i01 = ids[a + (b + 1) * (subdiv + 1)];
                m.faces.push_back({i00, i10, i11, i01});
            }
    }

    // orient all faces outward
    for (int f = 0; f < int(m.faces.size()); ++f) {
        auto& q = m.faces[f];
        Vec3 c = (m.vertices[q[0]] + m.vertices[q[1]] + m.vertices[q[2]] + m.vertices[q[3]]) / 4.0;
        Vec3 n = (m.vertices[q[2]] - m.vertices[q[0]]).cross(m.vertices[q[3]] - m.vertices[q[1]]);
        if (n.dot(c - center) < 0) std::swap(q[1], q[3]);
    }
    return m;
}

/// Quad ellipsoid: a cube-sphere scaled onto the given semi-axes, with a few
/// rounds of tangential relaxation so edge lengths stay nearly uniform under
/// anisotropic scaling, optionally rotated then translated.
inline QuadMesh make_quad_ellipsoid(double a, double b, double c, int subdiv = 12,
                                    const Mat3& rot = Mat3::Identity(),
                                    const Vec3& center = Vec3::Zero()) {
    if (a <= 0 || b <= 0 || c <= 0) throw Error("make_quad_ellipsoid: axes must be positive");
    QuadMesh m = make_quad_sphere(subdiv);
    const Vec3 semi(a, b, c);
    for (auto& v : m.vertices) v = v.cwiseProduct(semi);

    // spring relaxation toward a blend of the local and global mean edge
    // length, projected back onto the ellipsoid; moves that would tilt an
    // incident quad away from the outward surface direction are rolled back
    const auto nbrs = m.vertex_neighbors();
    const auto vfaces = m.vertex_faces();
    auto project = [&](const Vec3& p) {
        const double level = p.cwiseQuotient(semi).norm();
        return level > 1e-12 ? Vec3(p / level) : Vec3(semi[0], 0, 0);
    };
    auto quad_normal = [&](int f) {
        const auto& q = m.faces[f];
        return Vec3((m.vertices[q[2]] - m.vertices[q[0]])
                        .cross(m.vertices[q[3]] - m.vertices[q[1]]));
    };
    for (int pass = 0; pass < 150; ++pass) {
        double lbar = 0;
        std::size_t ne = 0;
        for (std::size_t v = 0; v < m.vertices.size(); ++v)
            for (int n : nbrs[v]) {
                lbar += (m.vertices[n] - m.vertices[v]).norm();
                ++ne;
            }
        lbar /= double(ne);
        for (std::size_t v = 0; v < m.vertices.size(); ++v) {
            double lloc = 0;
            for (int n : nbrs[v]) lloc += (m.vertices[n] - m.vertices[v]).norm();
            lloc /= double(nbrs[v].size());
            const double target = 0.5 * (lbar + lloc);
            Vec3 force = Vec3::Zero();
            for (int n : nbrs[v]) {
                const Vec3 e = m.vertices[n] - m.vertices[v];
                const double l = e.norm();
                force += (l - target) * (e / l);
            }
            const Vec3 old = m.vertices[v];
            m.vertices[v] = project(old + 0.4 / double(nbrs[v].size()) * force);
            for (int f : vfaces[v]) {
                const auto& q = m.faces[f];
                const Vec3 fc = (m.vertices[q[0]] + m.vertices[q[1]] + m.vertices[q[2]] +
                                 m.vertices[q[3]]) /
                                4.0;
                const Vec3 n = quad_normal(f);
                if (n.dot(fc.cwiseQuotient(semi)) <= 0.3 * n.norm()) {
                    m.vertices[v] = old;
                    break;
                }
            }
        }
    }

    for (auto& v : m.vertices) v = rot * v + center;
    return m;
}

/// Parametric quad torus around the z axis (major radius R, tube radius r).
inline QuadMesh make_quad_torus(double R, double r, int n_major = 48, int n_minor = 20,
                                const Vec3& center = Vec3::Zero()) {
    if (R <= 0 || r <= 0 || r >= R) throw Error("make_quad_torus: requires 0 < r < R");
    if (n_major < 3 || n_minor < 3) throw Error("make_quad_torus: need >= 3 segments");
    QuadMesh m;
    m.vertices.reserve(std::size_t(n_major) * n_minor);
    for (int i = 0; i < n_major; ++i) {
        double u = 2.0 * std::numbers::pi * i / n_major;
        for (int j = 0; j < n_minor; ++j) {
            double v = 2.0 * std::numbers::pi * j / n_minor;
            double rho = R + r * std::cos(v);
            m.vertices.push_back(center + Vec3(rho * std::cos(u), rho * std::sin(u),
                                               r * std::sin(v)));
        }
    }
    auto id = [&](int i, int j) { return (i % n_major) * n_minor + (j % n_minor); };
    for (int i = 0; i < n_major; ++i)
        for (int j = 0; j < n_minor; ++j)
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return m;
}

/// Icosphere with `level` subdivision rounds: 10*4^level + 2 vertices
/// (level 4 gives 2562), consistently oriented outward.
inline TriMesh make_icosphere(int level, double radius = 1.0,
                              const Vec3& center = Vec3::Zero()) {
    if (level < 0) throw Error("make_icosphere: level must be >= 0");
    if (radius <= 0) throw Error("make_icosphere: radius must be positive");

    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    for (auto& v : m.vertices) v.normalize();
    m.faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            int id = int(m.vertices.size());
            m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.faces.size() * 4);
        for (const auto& t : m.faces) {
            int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.faces = std::move(next);
    }

    for (auto& v : m.vertices) v = center + radius * v;
    return m;
}

} // namespace shapeflow
