#pragma once

#include "shapeflow/curvature.hpp"
#include "shapeflow/geodesic.hpp"
#include "shapeflow/lddmm.hpp"
#include "shapeflow/mesh.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace shapeflow {

/// Per-frame, per-vertex descriptor values over a tracked sequence.
struct FeatureSeries {
    std::string name;
    std::vector<std::vector<double>> rows; ///< one row per frame
    int reference = 0;
};

namespace detail {

inline std::vector<double> mean_neighbor_distance(const std::vector<Vec3>& verts,
                                                  const std::vector<std::vector<int>>& nbrs) {
    std::vector<double> d(verts.size(), 0.0);
    for (std::size_t v = 0; v < verts.size(); ++v) {
        if (nbrs[v].empty()) throw Error("elongation: isolated vertex");
        double sum = 0;
        for (int n : nbrs[v]) sum += (verts[v] - verts[n]).norm();
        d[v] = sum / double(nbrs[v].size());
    }
    return d;
}

inline std::vector<std::vector<int>> sequence_vertex_neighbors(const TrackedSequence& seq) {
    QuadMesh m;
    m.vertices = seq.frames.at(0);
    m.faces = seq.faces;
    return m.vertex_neighbors();
}

inline std::vector<std::vector<int>> sequence_vertex_faces(const TrackedSequence& seq) {
    QuadMesh m;
    m.vertices = seq.frames.at(0);
    m.faces = seq.faces;
    return m.vertex_faces();
}

/// Maximal angle between the normals of any two faces incident to the vertex.
inline std::vector<double> max_dihedral_per_vertex(
    const std::vector<Vec3>& verts, const std::vector<std::array<int, 4>>& faces,
    const std::vector<std::vector<int>>& vfaces) {
    std::vector<Vec3> normals(faces.size());
    std::vector<std::uint8_t> ok(faces.size(), 1);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& q = faces[f];
        Vec3 n = (verts[q[2]] - verts[q[0]]).cross(verts[q[3]] - verts[q[1]]);
        const double len = n.norm();
        if (len < 1e-30)
            ok[f] = 0; // degenerate face: vertex gets flagged below
        else
            normals[f] = n / len;
    }
    std::vector<double> theta(verts.size(), 0.0);
    for (std::size_t v = 0; v < verts.size(); ++v) {
        const auto& fs = vfaces[v];
        double best = 0;
        bool flagged = false;
        for (std::size_t a = 0; a < fs.size(); ++a) {
            if (!ok[fs[a]]) flagged = true;
            for (std::size_t b = a + 1; b < fs.size(); ++b) {
                if (!ok[fs[a]] || !ok[fs[b]]) continue;
                best = std::max(best, normal_angle(normals[fs[a]], normals[fs[b]]));
            }
        }
        theta[v] = flagged ? std::numeric_limits<double>::quiet_NaN() : best;
    }
    return theta;
}

} // namespace detail

/// Green-Lagrange style elongation between frames t and t+1:
/// E = (d(t) - d(t+1)) / (2 d(t+1)) with d the mean edge length to the mesh
/// neighbors. Positive under shrinking as the formula is written; set
/// `negate` to flip the sign so expansion reads positive.
inline std::vector<double> elongation(const TrackedSequence& seq, int t, bool negate = false) {
    if (t + 1 >= seq.frame_count()) throw Error("elongation: frame t+1 missing");
    const auto nbrs = detail::sequence_vertex_neighbors(seq);
    const auto d0 = detail::mean_neighbor_distance(seq.frames[t], nbrs);
    const auto d1 = detail::mean_neighbor_distance(seq.frames[t + 1], nbrs);
    std::vector<double> e(d0.size());
    for (std::size_t v = 0; v < d0.size(); ++v) {
        if (d1[v] <= 0) throw Error("elongation: degenerate mesh (zero neighbor distance)");
        e[v] = (d0[v] - d1[v]) / (2.0 * d1[v]);
        if (negate) e[v] = -e[v];
    }
    return e;
}

/// Dihedral distortion between frames t and t+1: per vertex, the absolute
/// change of the maximal angle between the normals of its adjacent faces.
inline std::vector<double> distortion(const TrackedSequence& seq, int t) {
    if (t + 1 >= seq.frame_count()) throw Error("distortion: frame t+1 missing");
    const auto vfaces = detail::sequence_vertex_faces(seq);
    const auto th0 = detail::max_dihedral_per_vertex(seq.frames[t], seq.faces, vfaces);
    const auto th1 = detail::max_dihedral_per_vertex(seq.frames[t + 1], seq.faces, vfaces);
    std::vector<double> d(th0.size());
    for (std::size_t v = 0; v < th0.size(); ++v) d[v] = std::abs(th1[v] - th0[v]);
    return d;
}

inline FeatureSeries elongation_series(const TrackedSequence& seq, bool negate = false) {
    FeatureSeries s;
    s.name = "elongation";
    for (int t = 0; t + 1 < seq.frame_count(); ++t) s.rows.push_back(elongation(seq, t, negate));
    return s;
}

inline FeatureSeries distortion_series(const TrackedSequence& seq) {
    FeatureSeries s;
    s.name = "distortion";
    for (int t = 0; t + 1 < seq.frame_count(); ++t) s.rows.push_back(distortion(seq, t));
    return s;
}

/// Per-frame mean curvature, on the triangulation fixed by the reference
/// frame geometry so faces stay identical across the sequence.
inline FeatureSeries curvature_series(const TrackedSequence& seq) {
    FeatureSeries s;
    s.name = "curvature";
    const auto tri_faces = triangulate_like(seq.faces, seq.frames.at(0));
    for (const auto& verts : seq.frames) {
        TriMesh m;
        m.vertices = verts;
        m.faces = tri_faces;
        s.rows.push_back(mean_curvature(m));
    }
    return s;
}

/// Per-frame geodesic feature sampled at the frame's vertex positions. One
/// binary mask per frame (supplied volumes or voxelized meshes).
inline FeatureSeries geodesic_feature_series(const TrackedSequence& seq,
                                             std::span<const MaskGrid> masks,
                                             const FeatureOptions& opts = {}) {
    if (int(masks.size()) != seq.frame_count())
        throw Error("geodesic_feature_series: one mask per frame required");
    FeatureSeries s;
    s.name = "geodesic_feature";
    for (int t = 0; t < seq.frame_count(); ++t) {
        const FeaturePipeline p = run_feature_pipeline(masks[t], opts);
        s.rows.push_back(sample_on_vertices(p.feature, seq.frames[t]));
    }
    return s;
}

} // namespace shapeflow
