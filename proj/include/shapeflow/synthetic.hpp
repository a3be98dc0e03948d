#pragma once

#include "shapeflow/mesh_gen.hpp"
#include "shapeflow/voxel_grid.hpp"

#include <cmath>

namespace shapeflow {

/// Smooth deterministic radial texture over unit directions; gives synthetic
/// organs an irregular, potato-like surface. `frequency` around 0.6-1.0
/// spans gentle lumps to fine bumps.
inline double organ_texture(const Vec3& u, double amplitude, double frequency = 0.65) {
    const double f = frequency;
    return amplitude * (0.6 * std::sin(f * 5.1 * u[0]) * std::cos(f * 4.3 * u[1]) +
                        0.5 * std::cos(f * 5.7 * u[1]) * std::sin(f * 4.9 * u[2]) +
                        0.4 * std::sin(f * 4.7 * u[2]) * std::cos(f * 4.5 * u[0]));
}

/// Lumpy ellipsoidal blob mask: the ellipsoid level set modulated by
/// organ_texture. Auto-sized with `margin` world units of background.
inline MaskGrid make_blob_mask(const Vec3& semi_axes, double texture_amplitude,
                               double margin, const Vec3& spacing = Vec3(1, 1, 1),
                               double texture_frequency = 0.65) {
    if (semi_axes.minCoeff() <= 0) throw Error("make_blob_mask: semi-axes must be positive");
    const double pad = semi_axes.maxCoeff() * (1.0 + std::abs(texture_amplitude)) + margin;
    std::array<int, 3> n;
    for (int a = 0; a < 3; ++a) n[a] = 2 * int(std::ceil(pad / spacing[a])) + 1;
    MaskGrid m(n[0], n[1], n[2], 0);
    m.set_spacing(spacing);
    m.set_origin(-Vec3((n[0] - 1) / 2.0 * spacing[0], (n[1] - 1) / 2.0 * spacing[1],
                       (n[2] - 1) / 2.0 * spacing[2]));
    const Vec3 center = Vec3::Zero();
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                const Vec3 p = m.world(i, j, k) - center;
                const double level = p.cwiseQuotient(semi_axes).norm();
                if (level < 1e-9) {
                    m(i, j, k) = 1;
                    continue;
                }
                const double bump =
                    organ_texture(p.normalized(), texture_amplitude, texture_frequency);
                m(i, j, k) = level <= 1.0 + bump ? 1 : 0;
            }
    return m;
}

/// Quad mesh matching make_blob_mask: the relaxed quad ellipsoid displaced
/// radially by the same texture.
inline QuadMesh make_quad_blob(const Vec3& semi_axes, double texture_amplitude,
                               int subdiv = 8, const Vec3& center = Vec3::Zero(),
                               double texture_frequency = 0.65) {
    QuadMesh m = make_quad_ellipsoid(semi_axes[0], semi_axes[1], semi_axes[2], subdiv);
    for (auto& v : m.vertices) {
        const Vec3 u = v.normalized();
        v = v * (1.0 + organ_texture(u, texture_amplitude, texture_frequency)) + center;
    }
    return m;
}

} // namespace shapeflow
