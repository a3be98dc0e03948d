#pragma once

#include "shapeflow/mesh.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace shapeflow {

namespace detail {

// Rotate an orthonormal pair (u, v) so that u x v aligns with new_norm.
inline void rotate_coord_sys(Vec3& u, Vec3& v, const Vec3& new_norm) {
    Vec3 old_norm = u.cross(v);
    double ndot = old_norm.dot(new_norm);
    if (ndot <= -1.0 + 1e-12) {
        u = -u;
        v = -v;
        return;
    }
    Vec3 perp_old = new_norm - ndot * old_norm;
    Vec3 dperp = (old_norm + new_norm) / (1.0 + ndot);
    u -= dperp * (u.dot(perp_old));
    v -= dperp * (v.dot(perp_old));
}

// Re-express a second fundamental form (ku, kuv, kv) given in frame
// (old_u, old_v) in the frame (new_u, new_v), rotating the new frame into
// the old tangent plane first.
inline void project_curvature(const Vec3& old_u, const Vec3& old_v, double ku, double kuv,
                              double kv, const Vec3& new_u, const Vec3& new_v,
                              double& out_ku, double& out_kuv, double& out_kv) {
    Vec3 r_u = new_u, r_v = new_v;
    rotate_coord_sys(r_u, r_v, old_u.cross(old_v));
    const double u1 = r_u.dot(old_u), v1 = r_u.dot(old_v);
    const double u2 = r_v.dot(old_u), v2 = r_v.dot(old_v);
    out_ku = ku * u1 * u1 + 2.0 * kuv * u1 * v1 + kv * v1 * v1;
    out_kuv = ku * u1 * u2 + kuv * (u1 * v2 + u2 * v1) + kv * v1 * v2;
    out_kv = ku * u2 * u2 + 2.0 * kuv * u2 * v2 + kv * v2 * v2;
}

// Mixed Voronoi corner areas (Meyer et al.): Voronoi area for non-obtuse
// triangles, area/2 at the obtuse corner and area/4 elsewhere otherwise.
inline std::array<double, 3> corner_areas(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
    const Vec3 e0 = p2 - p1, e1 = p0 - p2, e2 = p1 - p0;
    const double area = 0.5 * e2.cross(-e1).norm();
    if (area < 1e-30) return {0, 0, 0};
    const double l0 = e0.squaredNorm(), l1 = e1.squaredNorm(), l2 = e2.squaredNorm();
    auto cot = [&](const Vec3& a, const Vec3& b) {
        double cross = a.cross(b).norm();
        return cross < 1e-30 ? 0.0 : a.dot(b) / cross;
    };
    const double cot0 = cot(-e2, e1);  // angle at p0
    const double cot1 = cot(e2, -e0);  // angle at p1
    const double cot2 = cot(e0, -e1);  // angle at p2
    if (cot0 < 0) return {area / 2, area / 4, area / 4};
    if (cot1 < 0) return {area / 4, area / 2, area / 4};
    if (cot2 < 0) return {area / 4, area / 4, area / 2};
    return {(l1 * cot1 + l2 * cot2) / 8.0, (l2 * cot2 + l0 * cot0) / 8.0,
            (l0 * cot0 + l1 * cot1) / 8.0};
}

} // namespace detail

/// Per-vertex mean curvature (1/world-unit), estimated by a least-squares
/// fit of the second fundamental form per face from vertex-normal
/// differences along the edges, then averaged into per-vertex tangent frames
/// with mixed Voronoi area weights. Positive on convex regions with respect
/// to outward normals. Isolated vertices get NaN.
inline std::vector<double> mean_curvature(const TriMesh& mesh) {
    const int nv = int(mesh.vertices.size());
    const std::vector<Vec3> normals = mesh.vertex_normals();

    // per-vertex orthonormal tangent frame
    std::vector<Vec3> frame_u(nv), frame_v(nv);
    for (int v = 0; v < nv; ++v) {
        const Vec3& n = normals[v];
        Vec3 ref = std::abs(n[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
        frame_u[v] = n.cross(ref).normalized();
        frame_v[v] = n.cross(frame_u[v]);
    }

    std::vector<double> ku(nv, 0), kuv(nv, 0), kv(nv, 0), wsum(nv, 0);

    for (const auto& t : mesh.faces) {
        const Vec3& p0 = mesh.vertices[t[0]];
        const Vec3& p1 = mesh.vertices[t[1]];
        const Vec3& p2 = mesh.vertices[t[2]];
        const Vec3 edges[3] = {p2 - p1, p0 - p2, p1 - p0};

        Vec3 fn = edges[2].cross(-edges[1]);
        const double fn_len = fn.norm();
        if (fn_len < 1e-30) continue; // degenerate face
        fn /= fn_len;
        const Vec3 fu = edges[0].normalized();
        const Vec3 fv = fn.cross(fu);

        // least-squares fit of [e f; f g]: two equations per edge
        Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
        Eigen::Vector3d b = Eigen::Vector3d::Zero();
        for (int e = 0; e < 3; ++e) {
            const double eu = edges[e].dot(fu), ev = edges[e].dot(fv);
            const Vec3 dn = normals[t[(e + 2) % 3]] - normals[t[(e + 1) % 3]];
            const double du = dn.dot(fu), dv = dn.dot(fv);
            // row [eu ev 0] -> du, row [0 eu ev] -> dv
            A(0, 0) += eu * eu;
            A(0, 1) += eu * ev;
            A(1, 1) += ev * ev + eu * eu;
            A(1, 2) += eu * ev;
            A(2, 2) += ev * ev;
            b(0) += eu * du;
            b(1) += ev * du + eu * dv;
            b(2) += ev * dv;
        }
        A(1, 0) = A(0, 1);
        A(2, 1) = A(1, 2);
        Eigen::Vector3d w = A.ldlt().solve(b);

        const auto areas = detail::corner_areas(p0, p1, p2);
        for (int c = 0; c < 3; ++c) {
            const int v = t[c];
            double pku, pkuv, pkv;
            detail::project_curvature(fu, fv, w(0), w(1), w(2), frame_u[v], frame_v[v], pku,
                                      pkuv, pkv);
            ku[v] += areas[c] * pku;
            kuv[v] += areas[c] * pkuv;
            kv[v] += areas[c] * pkv;
            wsum[v] += areas[c];
        }
    }

    std::vector<double> H(nv, std::numeric_limits<double>::quiet_NaN());
    for (int v = 0; v < nv; ++v)
        if (wsum[v] > 0) H[v] = 0.5 * (ku[v] + kv[v]) / wsum[v];
    return H;
}

} // namespace shapeflow
