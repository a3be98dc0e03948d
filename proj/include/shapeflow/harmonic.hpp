#pragma once

#include "shapeflow/morphology.hpp"

#include <cassert>
#include <cmath>
#include <optional>
#include <vector>

namespace shapeflow {

/// Dirichlet values of the harmonic interpolant.
inline constexpr double kInteriorBoundaryValue = 1e4;
inline constexpr double kExteriorBoundaryValue = 0.0;

struct HarmonicField {
    ScalarGrid h;
    BoundaryLabels labels;
    int iterations_run = 0;
    double final_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct LaplaceOptions {
    int max_iter = 200;
    std::optional<double> tol;  ///< relative energy-decrease threshold; unset = fixed budget
    int check_every = 10;       ///< energy evaluated every this many sweeps
    bool linear_init = false;   ///< initialize the domain linearly in the x index
};

namespace detail {

/// Stencil cell: center plus resolved 6-neighbor indices. Neighbors falling
/// off the grid replicate the center (symmetric closure); this only happens
/// in synthetic slab fixtures, never for labels built by make_boundaries.
struct StencilCell {
    std::size_t id;
    std::array<std::size_t, 6> nb; ///< -x,+x,-y,+y,-z,+z
};

/// Total field energy over the domain, per the central-difference sum
/// eps_t = sum sqrt((dh/di)^2 + (dh/dj)^2 + (dh/dk)^2).
inline double field_energy(const ScalarGrid& h, const std::vector<StencilCell>& cells) {
    const Vec3& sp = h.spacing();
    double e = 0;
    for (const auto& c : cells) {
        const double gx = (h[c.nb[1]] - h[c.nb[0]]) / (2.0 * sp[0]);
        const double gy = (h[c.nb[3]] - h[c.nb[2]]) / (2.0 * sp[1]);
        const double gz = (h[c.nb[5]] - h[c.nb[4]]) / (2.0 * sp[2]);
        e += std::sqrt(gx * gx + gy * gy + gz * gz);
    }
    return e;
}

} // namespace detail

/// Discrete Dirichlet energy: half the sum of squared forward differences
/// over lattice edges with at least one endpoint in the domain.
inline double dirichlet_energy(const ScalarGrid& h, const BoundaryLabels& lab) {
    const Vec3& sp = h.spacing();
    double e = 0;
    for (int k = 0; k < h.nz(); ++k)
        for (int j = 0; j < h.ny(); ++j)
            for (int i = 0; i < h.nx(); ++i) {
                if (lab.at(i, j, k) == VoxLabel::Outside) continue;
                const bool dom = lab.at(i, j, k) == VoxLabel::Domain;
                if (i + 1 < h.nx() && (dom || lab.at(i + 1, j, k) == VoxLabel::Domain))
                    e += sqr((h(i + 1, j, k) - h(i, j, k)) / sp[0]);
                if (j + 1 < h.ny() && (dom || lab.at(i, j + 1, k) == VoxLabel::Domain))
                    e += sqr((h(i, j + 1, k) - h(i, j, k)) / sp[1]);
                if (k + 1 < h.nz() && (dom || lab.at(i, j, k + 1) == VoxLabel::Domain))
                    e += sqr((h(i, j, k + 1) - h(i, j, k)) / sp[2]);
            }
    return 0.5 * e;
}

/// Jacobi relaxation of Laplace's equation between the two boundaries.
/// Domain voxels start at 0 (or a linear ramp), boundary values are pinned
/// and never rewritten. With a tolerance set, iteration stops once the
/// relative energy decrease between consecutive checks stays below it.
inline HarmonicField solve_laplace(const BoundaryLabels& lab,
                                   const LaplaceOptions& opts = {}) {
    const auto& L = lab.labels;
    HarmonicField out;
    out.labels = lab;
    out.h = L.like<double>(0.0);
    ScalarGrid& h = out.h;

    std::vector<detail::StencilCell> cells;
    cells.reserve(L.size() / 4);
    for (int k = 0; k < L.nz(); ++k)
        for (int j = 0; j < L.ny(); ++j)
            for (int i = 0; i < L.nx(); ++i) {
                switch (lab.at(i, j, k)) {
                case VoxLabel::InteriorBoundary:
                    h(i, j, k) = kInteriorBoundaryValue;
                    break;
                case VoxLabel::ExteriorBoundary:
                    h(i, j, k) = kExteriorBoundaryValue;
                    break;
                case VoxLabel::Domain: {
                    detail::StencilCell c;
                    c.id = L.index(i, j, k);
                    auto resolve = [&](int a, int b, int cc) {
                        if (!L.in_bounds(a, b, cc)) return c.id;
                        // the stencil must never read an Outside voxel
                        assert(lab.at(a, b, cc) != VoxLabel::Outside);
                        return L.index(a, b, cc);
                    };
                    c.nb = {resolve(i - 1, j, k), resolve(i + 1, j, k),
                            resolve(i, j - 1, k), resolve(i, j + 1, k),
                            resolve(i, j, k - 1), resolve(i, j, k + 1)};
                    cells.push_back(c);
                    if (opts.linear_init)
                        h(i, j, k) = kInteriorBoundaryValue *
                                     (1.0 - double(i) / double(L.nx() - 1));
                    break;
                }
                case VoxLabel::Outside:
                    break;
                }
            }
    if (cells.empty()) throw Error("solve_laplace: empty domain");

    const Vec3& sp = L.spacing();
    const double wx = sqr(sp[1]) * sqr(sp[2]);
    const double wy = sqr(sp[0]) * sqr(sp[2]);
    const double wz = sqr(sp[0]) * sqr(sp[1]);
    const double denom = 2.0 * (wx + wy + wz);

    ScalarGrid next = h;
    double prev_energy = -1.0;
    int consecutive_small = 0;

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        const auto& src = h.data();
        auto& dst = next.data();
        for (const auto& c : cells)
            dst[c.id] = (wx * (src[c.nb[0]] + src[c.nb[1]]) +
                         wy * (src[c.nb[2]] + src[c.nb[3]]) +
                         wz * (src[c.nb[4]] + src[c.nb[5]])) /
                        denom;
        std::swap(h.data(), next.data());

        if (opts.tol && ((it + 1) % opts.check_every == 0)) {
            const double e = detail::field_energy(h, cells);
            if (prev_energy >= 0.0) {
                if (prev_energy == 0.0) { // fully converged; ratio undefined
                    out.final_ratio = 0.0;
                    ++it;
                    break;
                }
                const double ratio = (prev_energy - e) / prev_energy;
                out.final_ratio = ratio;
                // the energy first grows while the field spreads from the
                // inner boundary; require two consecutive small decreases
                if (ratio >= 0.0 && ratio < *opts.tol) {
                    if (++consecutive_small >= 2) {
                        ++it;
                        break;
                    }
                } else {
                    consecutive_small = 0;
                }
            }
            prev_energy = e;
        }
    }
    out.iterations_run = it;
    return out;
}

} // namespace shapeflow
