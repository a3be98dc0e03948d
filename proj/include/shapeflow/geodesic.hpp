#pragma once

#include "shapeflow/harmonic.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace shapeflow {

/// Normalized gradient of the harmonic interpolant. T points along grad h,
/// i.e. toward the interior boundary where h is largest. Voxels where the
/// gradient vanishes are flagged invalid and carry a zero vector.
struct FlowField {
    VoxelGrid<Vec3> T;
    VoxelGrid<std::uint8_t> valid;
};

inline FlowField flow_field(const HarmonicField& hf) {
    const ScalarGrid& h = hf.h;
    const BoundaryLabels& lab = hf.labels;
    FlowField out;
    out.T = h.like<Vec3>(Vec3::Zero());
    out.valid = h.like<std::uint8_t>(0);
    const Vec3& sp = h.spacing();
    auto at = [&](int i, int j, int k) {
        return h(std::clamp(i, 0, h.nx() - 1), std::clamp(j, 0, h.ny() - 1),
                 std::clamp(k, 0, h.nz() - 1));
    };
    for (int k = 0; k < h.nz(); ++k)
        for (int j = 0; j < h.ny(); ++j)
            for (int i = 0; i < h.nx(); ++i) {
                if (lab.at(i, j, k) != VoxLabel::Domain) continue;
                Vec3 g((at(i + 1, j, k) - at(i - 1, j, k)) / (2.0 * sp[0]),
                       (at(i, j + 1, k) - at(i, j - 1, k)) / (2.0 * sp[1]),
                       (at(i, j, k + 1) - at(i, j, k - 1)) / (2.0 * sp[2]));
                const double len = g.norm();
                if (len < 1e-12) continue; // degenerate, stays flagged
                out.T(i, j, k) = g / len;
                out.valid(i, j, k) = 1;
            }
    return out;
}

/// Eulerian path-length fields. L0 is the geodesic length to the interior
/// boundary, L1 to the exterior one, G = L0 + L1 (world units).
struct GeodesicLengths {
    ScalarGrid L0, L1, G;
    VoxelGrid<std::uint8_t> valid;
    double radius = 0.0; ///< surrounding-sphere radius carried from the labels
};

enum class LengthMode { Both, L1Only };

/// Upwind transport of the two length fields along the flow, relaxed with a
/// symmetric Gauss-Seidel scheme (one forward and one backward raster sweep
/// per iteration). Interior values start at 0.5; L0 is pinned to 0 on the
/// interior boundary and L1 on the exterior one. Requires isotropic spacing.
inline GeodesicLengths solve_lengths(const FlowField& flow, const BoundaryLabels& lab,
                                     int iterations = 200,
                                     LengthMode mode = LengthMode::Both) {
    const auto& L = lab.labels;
    if (!L.isotropic(1e-9))
        throw Error("solve_lengths: requires isotropic voxel spacing");
    const double spacing = L.spacing()[0];

    GeodesicLengths out;
    out.radius = lab.radius;
    out.L0 = L.like<double>(0.5);
    out.L1 = L.like<double>(0.5);
    out.valid = L.like<std::uint8_t>(0);

    struct Cell {
        std::size_t id;
        // neighbor offsets toward the interior boundary, per axis
        std::array<std::ptrdiff_t, 3> toward_in;
        std::array<double, 3> w; // |T| components
        double alpha;
    };
    std::vector<Cell> cells;
    cells.reserve(L.size() / 4);

    const std::ptrdiff_t step[3] = {1, L.nx(), std::ptrdiff_t(L.nx()) * L.ny()};
    for (int k = 0; k < L.nz(); ++k)
        for (int j = 0; j < L.ny(); ++j)
            for (int i = 0; i < L.nx(); ++i) {
                const VoxLabel l = lab.at(i, j, k);
                const std::size_t id = L.index(i, j, k);
                if (l == VoxLabel::InteriorBoundary) {
                    out.L0[id] = 0.0;
                    continue;
                }
                if (l == VoxLabel::ExteriorBoundary) {
                    out.L1[id] = 0.0;
                    continue;
                }
                if (l != VoxLabel::Domain) continue;
                if (!flow.valid[id]) continue; // alpha undefined, voxel skipped
                const Vec3& t = flow.T[id];
                Cell c;
                c.id = id;
                double sum = 0;
                const int ijk[3] = {i, j, k};
                const int dims[3] = {L.nx(), L.ny(), L.nz()};
                for (int a = 0; a < 3; ++a) {
                    c.w[a] = std::abs(t[a]);
                    sum += c.w[a];
                    int sgn = t[a] > 0 ? 1 : (t[a] < 0 ? -1 : 0);
                    // clamp at the grid border (slab fixtures only)
                    if (ijk[a] + sgn < 0 || ijk[a] + sgn >= dims[a] || ijk[a] - sgn < 0 ||
                        ijk[a] - sgn >= dims[a])
                        sgn = 0;
                    c.toward_in[a] = sgn * step[a];
                }
                if (sum <= 0) continue;
                c.alpha = 1.0 / sum;
                cells.push_back(c);
                out.valid[id] = 1;
            }

    auto relax = [&](ScalarGrid& field, int dir_sign) {
        // dir_sign +1: neighbors toward the interior boundary (L0);
        // dir_sign -1: neighbors toward the exterior boundary (L1)
        auto update = [&](const Cell& c) {
            double acc = 1.0;
            auto& d = field.data();
            for (int a = 0; a < 3; ++a)
                if (c.w[a] > 0) acc += c.w[a] * d[c.id + dir_sign * c.toward_in[a]];
            d[c.id] = c.alpha * acc;
        };
        for (const Cell& c : cells) update(c);                      // forward raster
        for (auto it = cells.rbegin(); it != cells.rend(); ++it)    // backward raster
            update(*it);
    };

    for (int it = 0; it < iterations; ++it) {
        if (mode == LengthMode::Both) relax(out.L0, +1);
        relax(out.L1, -1);
    }

    // lengths were relaxed in voxel units
    for (auto& v : out.L0.data()) v *= spacing;
    for (auto& v : out.L1.data()) v *= spacing;

    out.G = out.L0;
    for (std::size_t i = 0; i < out.G.size(); ++i) out.G[i] = out.L0[i] + out.L1[i];
    return out;
}

/// The geodesic shape feature f = R / G, defined on valid domain voxels.
struct FeatureMap {
    ScalarGrid values;
    VoxelGrid<std::uint8_t> valid;
    double radius = 0.0;
};

inline FeatureMap feature_map(const GeodesicLengths& lengths) {
    FeatureMap out;
    out.radius = lengths.radius;
    out.values = lengths.G.like<double>(0.0);
    out.valid = lengths.valid;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (!out.valid[i]) continue;
        const double g = lengths.G[i];
        if (g <= 0) throw Error("feature_map: non-positive geodesic length");
        out.values[i] = lengths.radius / g;
    }
    return out;
}

/// Trilinear sampling of the feature at world-space vertex positions.
/// Corners flagged invalid are dropped from the interpolation (weights
/// renormalized); if every corner is invalid the nearest valid voxel wins.
inline std::vector<double> sample_on_vertices(const FeatureMap& fmap,
                                              std::span<const Vec3> vertices) {
    const ScalarGrid& g = fmap.values;
    std::vector<double> out;
    out.reserve(vertices.size());
    for (const Vec3& p : vertices) {
        const Vec3 gc = g.grid_coords(p);
        if (gc[0] < -0.5 || gc[1] < -0.5 || gc[2] < -0.5 || gc[0] > g.nx() - 0.5 ||
            gc[1] > g.ny() - 0.5 || gc[2] > g.nz() - 0.5)
            throw Error("sample_on_vertices: vertex outside grid");
        const int i0 = std::clamp(int(std::floor(gc[0])), 0, g.nx() - 2);
        const int j0 = std::clamp(int(std::floor(gc[1])), 0, g.ny() - 2);
        const int k0 = std::clamp(int(std::floor(gc[2])), 0, g.nz() - 2);
        const double fx = std::clamp(gc[0] - i0, 0.0, 1.0);
        const double fy = std::clamp(gc[1] - j0, 0.0, 1.0);
        const double fz = std::clamp(gc[2] - k0, 0.0, 1.0);

        double val = 0, wsum = 0;
        for (int dk = 0; dk < 2; ++dk)
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    if (!fmap.valid(i0 + di, j0 + dj, k0 + dk)) continue;
                    const double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) *
                                     (dk ? fz : 1 - fz);
                    val += w * g(i0 + di, j0 + dj, k0 + dk);
                    wsum += w;
                }
        if (wsum > 1e-12) {
            out.push_back(val / wsum);
            continue;
        }
        // all corners invalid: take the nearest valid voxel, growing rings
        bool found = false;
        for (int r = 1; r < std::max({g.nx(), g.ny(), g.nz()}) && !found; ++r) {
            double best = std::numeric_limits<double>::max();
            double best_val = 0;
            for (int dk = -r; dk <= r; ++dk)
                for (int dj = -r; dj <= r; ++dj)
                    for (int di = -r; di <= r; ++di) {
                        const int i = i0 + di, j = j0 + dj, k = k0 + dk;
                        if (!g.in_bounds(i, j, k) || !fmap.valid(i, j, k)) continue;
                        const double d2 = (g.world(i, j, k) - p).squaredNorm();
                        if (d2 < best) {
                            best = d2;
                            best_val = g(i, j, k);
                        }
                    }
            if (best < std::numeric_limits<double>::max()) {
                out.push_back(best_val);
                found = true;
            }
        }
        if (!found) throw Error("sample_on_vertices: no valid voxel near vertex");
    }
    return out;
}

/// Streamline map onto the surrounding sphere: each vertex is advected away
/// from the interior boundary (against T) in steps of `step_voxels` until it
/// leaves the sphere, then radially projected onto the unit sphere centered
/// at the shape centroid.
inline std::vector<Vec3> flow_to_sphere(const FlowField& flow, std::span<const Vec3> vertices,
                                        const BoundaryLabels& lab, double step_voxels = 0.5) {
    const auto& L = lab.labels;
    const double spacing = L.spacing()[0];
    const double step_len = step_voxels * spacing;
    const long max_steps = std::lround(std::ceil(10.0 * lab.radius));
    std::vector<Vec3> out;
    out.reserve(vertices.size());

    auto direction_at = [&](const Vec3& p) -> Vec3 {
        const Vec3 gc = L.grid_coords(p);
        const int i0 = std::clamp(int(std::floor(gc[0])), 0, L.nx() - 2);
        const int j0 = std::clamp(int(std::floor(gc[1])), 0, L.ny() - 2);
        const int k0 = std::clamp(int(std::floor(gc[2])), 0, L.nz() - 2);
        const double fx = std::clamp(gc[0] - i0, 0.0, 1.0);
        const double fy = std::clamp(gc[1] - j0, 0.0, 1.0);
        const double fz = std::clamp(gc[2] - k0, 0.0, 1.0);
        Vec3 acc = Vec3::Zero();
        double wsum = 0;
        for (int dk = 0; dk < 2; ++dk)
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    if (!flow.valid(i0 + di, j0 + dj, k0 + dk)) continue;
                    const double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) *
                                     (dk ? fz : 1 - fz);
                    acc += w * flow.T(i0 + di, j0 + dj, k0 + dk);
                    wsum += w;
                }
        if (wsum < 1e-12 || acc.norm() < 1e-9) {
            // degenerate flow sample: fall back to the radial direction
            Vec3 r = p - lab.centroid;
            const double rl = r.norm();
            return rl > 1e-12 ? Vec3(-r / rl) : Vec3(-1, 0, 0);
        }
        return acc.normalized();
    };

    for (const Vec3& v : vertices) {
        Vec3 p = v;
        bool done = (p - lab.centroid).norm() > lab.radius;
        for (long s = 0; s < max_steps && !done; ++s) {
            p -= step_len * direction_at(p); // against T: outward
            done = (p - lab.centroid).norm() > lab.radius;
        }
        if (!done) throw Error("flow_to_sphere: flow did not terminate");
        out.push_back((p - lab.centroid).normalized());
    }
    return out;
}

/// Full feature pipeline for a binary mask: boundaries, harmonic field,
/// flow, length transport, feature.
struct FeatureOptions {
    double radius_factor = 0.8;
    int erode_passes = 1;
    LaplaceOptions laplace;
    int length_iterations = 200;
};

struct FeaturePipeline {
    BoundaryLabels labels;
    HarmonicField harmonic;
    FlowField flow;
    GeodesicLengths lengths;
    FeatureMap feature;
};

inline FeaturePipeline run_feature_pipeline(const MaskGrid& mask,
                                            const FeatureOptions& opts = {}) {
    FeaturePipeline p;
    p.labels = make_boundaries(mask, opts.radius_factor, opts.erode_passes);
    p.harmonic = solve_laplace(p.labels, opts.laplace);
    p.flow = flow_field(p.harmonic);
    p.lengths = solve_lengths(p.flow, p.labels, opts.length_iterations);
    p.feature = feature_map(p.lengths);
    return p;
}

} // namespace shapeflow
