#pragma once

#include "shapeflow/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <vector>

namespace shapeflow {

/// Angle between two (not necessarily unit) normals, clamped into [0, pi].
inline double normal_angle(const Vec3& n1, const Vec3& n2) {
    const double d1 = n1.norm(), d2 = n2.norm();
    if (d1 < 1e-30 || d2 < 1e-30) throw Error("normal_angle: zero-length normal");
    return std::acos(std::clamp(n1.dot(n2) / (d1 * d2), -1.0, 1.0));
}

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    Vec3 face_normal(int f) const {
        const auto& t = faces[f];
        Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
        const double len = n.norm();
        if (len < 1e-30) throw Error("face_normal: zero-area face");
        return n / len;
    }

    double face_area(int f) const {
        const auto& t = faces[f];
        return 0.5 *
               (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
    }

    double area() const {
        double a = 0;
        for (int f = 0; f < int(faces.size()); ++f) a += face_area(f);
        return a;
    }

    /// Angle-weighted vertex normals (unit length; zero for isolated vertices).
    std::vector<Vec3> vertex_normals() const {
        std::vector<Vec3> n(vertices.size(), Vec3::Zero());
        for (const auto& t : faces) {
            for (int c = 0; c < 3; ++c) {
                const Vec3& p = vertices[t[c]];
                Vec3 e1 = vertices[t[(c + 1) % 3]] - p;
                Vec3 e2 = vertices[t[(c + 2) % 3]] - p;
                Vec3 fn = e1.cross(e2);
                double l1 = e1.norm(), l2 = e2.norm();
                if (l1 < 1e-30 || l2 < 1e-30) continue;
                double ang = std::acos(std::clamp(e1.dot(e2) / (l1 * l2), -1.0, 1.0));
                n[t[c]] += ang * fn.normalized();
            }
        }
        for (auto& v : n) {
            double l = v.norm();
            if (l > 1e-30) v /= l;
        }
        return n;
    }

    int euler_characteristic() const {
        std::set<std::pair<int, int>> edges;
        for (const auto& t : faces)
            for (int c = 0; c < 3; ++c) {
                int a = t[c], b = t[(c + 1) % 3];
                edges.emplace(std::min(a, b), std::max(a, b));
            }
        return int(vertices.size()) - int(edges.size()) + int(faces.size());
    }

    /// Every edge shared by exactly two faces, with opposite traversal order.
    bool is_closed_manifold() const {
        std::map<std::pair<int, int>, int> count;   // undirected
        std::map<std::pair<int, int>, int> directed;
        for (const auto& t : faces)
            for (int c = 0; c < 3; ++c) {
                int a = t[c], b = t[(c + 1) % 3];
                if (a == b) return false;
                ++count[{std::min(a, b), std::max(a, b)}];
                if (++directed[{a, b}] > 1) return false; // inconsistent orientation
            }
        return std::all_of(count.begin(), count.end(),
                           [](const auto& kv) { return kv.second == 2; });
    }

    /// Signed volume via the divergence theorem (positive for outward normals).
    double signed_volume() const {
        double v = 0;
        for (const auto& t : faces)
            v += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]])) / 6.0;
        return v;
    }

    void flip_orientation() {
        for (auto& t : faces) std::swap(t[1], t[2]);
    }
};

struct QuadMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> faces;

    /// Edge-adjacent vertices per vertex (sorted, unique).
    std::vector<std::vector<int>> vertex_neighbors() const {
        std::vector<std::set<int>> nb(vertices.size());
        for (const auto& q : faces)
            for (int c = 0; c < 4; ++c) {
                nb[q[c]].insert(q[(c + 1) % 4]);
                nb[q[(c + 1) % 4]].insert(q[c]);
            }
        std::vector<std::vector<int>> out(vertices.size());
        for (std::size_t v = 0; v < nb.size(); ++v)
            out[v].assign(nb[v].begin(), nb[v].end());
        return out;
    }

    /// Incident faces per vertex.
    std::vector<std::vector<int>> vertex_faces() const {
        std::vector<std::vector<int>> out(vertices.size());
        for (int f = 0; f < int(faces.size()); ++f)
            for (int c = 0; c < 4; ++c) out[faces[f][c]].push_back(f);
        return out;
    }

    /// Quad normal: normalized cross product of the two diagonals. Robust for
    /// mildly non-planar quads; agrees with the triangle normal on planar ones.
    Vec3 face_normal(int f) const {
        const auto& q = faces[f];
        Vec3 n = (vertices[q[2]] - vertices[q[0]]).cross(vertices[q[3]] - vertices[q[1]]);
        const double len = n.norm();
        if (len < 1e-30) throw Error("face_normal: zero-area face");
        return n / len;
    }

    int euler_characteristic() const {
        std::set<std::pair<int, int>> edges;
        for (const auto& q : faces)
            for (int c = 0; c < 4; ++c) {
                int a = q[c], b = q[(c + 1) % 4];
                edges.emplace(std::min(a, b), std::max(a, b));
            }
        return int(vertices.size()) - int(edges.size()) + int(faces.size());
    }

    bool is_closed_manifold() const {
        std::map<std::pair<int, int>, int> count;
        std::map<std::pair<int, int>, int> directed;
        for (const auto& q : faces) {
            std::set<int> distinct(q.begin(), q.end());
            if (distinct.size() != 4) return false;
            for (int c = 0; c < 4; ++c) {
                int a = q[c], b = q[(c + 1) % 4];
                ++count[{std::min(a, b), std::max(a, b)}];
                if (++directed[{a, b}] > 1) return false;
            }
        }
        return std::all_of(count.begin(), count.end(),
                           [](const auto& kv) { return kv.second == 2; });
    }

    std::vector<int> valences() const {
        auto nb = vertex_neighbors();
        std::vector<int> v(nb.size());
        for (std::size_t i = 0; i < nb.size(); ++i) v[i] = int(nb[i].size());
        return v;
    }
};

/// Dihedral angle between two faces sharing an edge: the angle between the
/// face normals, in [0, pi]. Zero for coplanar faces.
inline double dihedral_angle(const QuadMesh& m, int f1, int f2) {
    const auto& a = m.faces[f1];
    const auto& b = m.faces[f2];
    int shared = 0;
    for (int i : a)
        for (int j : b)
            shared += (i == j);
    if (shared < 2) throw Error("dihedral_angle: faces do not share an edge");
    return normal_angle(m.face_normal(f1), m.face_normal(f2));
}

/// Split each quad along its shorter diagonal. The vertex array is shared,
/// indices preserved.
inline TriMesh quad_to_tri(const QuadMesh& q) {
    TriMesh t;
    t.vertices = q.vertices;
    t.faces.reserve(2 * q.faces.size());
    for (const auto& f : q.faces) {
        const double d02 = (q.vertices[f[0]] - q.vertices[f[2]]).squaredNorm();
        const double d13 = (q.vertices[f[1]] - q.vertices[f[3]]).squaredNorm();
        if (d02 <= d13) {
            t.faces.push_back({f[0], f[1], f[2]});
            t.faces.push_back({f[0], f[2], f[3]});
        } else {
            t.faces.push_back({f[0], f[1], f[3]});
            t.faces.push_back({f[1], f[2], f[3]});
        }
    }
    return t;
}

/// Triangulation with a fixed diagonal choice (taken from the reference
/// geometry), for sequences that must keep faces identical across frames.
inline std::vector<std::array<int, 3>> triangulate_like(
    const std::vector<std::array<int, 4>>& quads, const std::vector<Vec3>& ref_vertices) {
    QuadMesh ref;
    ref.vertices = ref_vertices;
    ref.faces = quads;
    return quad_to_tri(ref).faces;
}

} // namespace shapeflow
