#pragma once

#include "shapeflow/mesh.hpp"
#include "shapeflow/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace shapeflow {

/// Rasterize a closed triangle mesh into a binary mask by parity counting
/// of ray crossings along +x. Rows are jittered by an irrational sub-voxel
/// offset so rays avoid vertices and edges; the result is deterministic.
inline MaskGrid voxelize(const TriMesh& mesh, const Vec3& spacing, double margin) {
    if (mesh.faces.empty()) throw Error("voxelize: empty mesh");
    Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
    for (const Vec3& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    lo -= Vec3::Constant(margin);
    hi += Vec3::Constant(margin);

    std::array<int, 3> n;
    for (int a = 0; a < 3; ++a) n[a] = std::max(2, int(std::ceil((hi[a] - lo[a]) / spacing[a])) + 1);
    MaskGrid m(n[0], n[1], n[2], 0);
    m.set_spacing(spacing);
    m.set_origin(lo);

    const double jy = 0.25660989 * spacing[1]; // irrational-ish offsets
    const double jz = 0.37622187 * spacing[2];

    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j) {
            const double ry = lo[1] + j * spacing[1] + jy;
            const double rz = lo[2] + k * spacing[2] + jz;
            std::vector<double> crossings;
            for (const auto& t : mesh.faces) {
                const Vec3& p0 = mesh.vertices[t[0]];
                const Vec3& p1 = mesh.vertices[t[1]];
                const Vec3& p2 = mesh.vertices[t[2]];
                // intersect the line {y=ry, z=rz} with the triangle (2D test in yz)
                const double d0y = p1[1] - p0[1], d0z = p1[2] - p0[2];
                const double d1y = p2[1] - p0[1], d1z = p2[2] - p0[2];
                const double det = d0y * d1z - d0z * d1y;
                if (std::abs(det) < 1e-30) continue;
                const double by = ry - p0[1], bz = rz - p0[2];
                const double u = (by * d1z - bz * d1y) / det;
                const double v = (d0y * bz - d0z * by) / det;
                if (u < 0 || v < 0 || u + v > 1) continue;
                crossings.push_back(p0[0] + u * (p1[0] - p0[0]) + v * (p2[0] - p0[0]));
            }
            if (crossings.empty()) continue;
            std::sort(crossings.begin(), crossings.end());
            if (crossings.size() % 2 != 0) continue; // grazing ray, skip row
            for (std::size_t c = 0; c + 1 < crossings.size(); c += 2) {
                int i_lo = int(std::ceil((crossings[c] - lo[0]) / spacing[0]));
                int i_hi = int(std::floor((crossings[c + 1] - lo[0]) / spacing[0]));
                for (int i = std::max(0, i_lo); i <= std::min(n[0] - 1, i_hi); ++i)
                    m(i, j, k) = 1;
            }
        }
    return m;
}

} // namespace shapeflow
