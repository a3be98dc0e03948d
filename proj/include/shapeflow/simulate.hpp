#pragma once

#include "shapeflow/mesh.hpp"
#include "shapeflow/morphology.hpp"

#include <cmath>
#include <vector>

namespace shapeflow {

/// One polyaffine component: a component-wise scaling about `center`,
/// stored as the log of the scaling factors, blended with a Gaussian weight.
struct AffineRegion {
    Vec3 center = Vec3::Zero();
    Vec3 log_scale = Vec3::Zero(); ///< log of the diagonal scaling factors
    double weight_sigma = 1.0;
};

/// Log-Euclidean polyaffine model: stationary velocity field
/// V(x) = sum_k w_k(x) * Lk * (x - c_k) with normalized Gaussian weights.
/// The region label volume records the (disjoint) partition the components
/// were derived from.
struct PolyaffineModel {
    std::vector<AffineRegion> regions;
    MaskGrid region_labels; ///< 0 = background, 1..K = region id

    void validate() const {
        if (regions.empty()) throw Error("PolyaffineModel: no regions");
        for (const auto& r : regions) {
            if (!r.log_scale.allFinite())
                throw Error("PolyaffineModel: non-invertible affine (non-positive scaling)");
            if (r.weight_sigma <= 0) throw Error("PolyaffineModel: weight sigma must be positive");
        }
    }
};

/// Fused stationary velocity at a world point.
inline Vec3 polyaffine_velocity(const PolyaffineModel& model, const Vec3& x) {
    double wsum = 0;
    Vec3 v = Vec3::Zero();
    for (const auto& r : model.regions) {
        const double w = std::exp(-(x - r.center).squaredNorm() / (2.0 * sqr(r.weight_sigma)));
        wsum += w;
        v += w * r.log_scale.cwiseProduct(x - r.center);
    }
    return wsum > 1e-300 ? Vec3(v / wsum) : Vec3::Zero();
}

/// Dense displacement field u with x + u(x) = exp(s * V)(x), computed by
/// scaling and squaring on the grid geometry of `geom`.
inline VoxelGrid<Vec3> fuse_transform(const PolyaffineModel& model, double s,
                                      const MaskGrid& geom, int squaring_depth = 6) {
    model.validate();
    VoxelGrid<Vec3> u = geom.like<Vec3>(Vec3::Zero());
    const double h = s / double(1 << squaring_depth);
    // midpoint seed keeps the exponentiation error well below 1e-4 voxels
    for (int k = 0; k < geom.nz(); ++k)
        for (int j = 0; j < geom.ny(); ++j)
            for (int i = 0; i < geom.nx(); ++i) {
                const Vec3 p = geom.world(i, j, k);
                u(i, j, k) = h * polyaffine_velocity(model, p + (h / 2.0) *
                                                                polyaffine_velocity(model, p));
            }

    VoxelGrid<Vec3> next = u;
    for (int d = 0; d < squaring_depth; ++d) {
        for (int k = 0; k < geom.nz(); ++k)
            for (int j = 0; j < geom.ny(); ++j)
                for (int i = 0; i < geom.nx(); ++i) {
                    const Vec3 p = geom.world(i, j, k) + u(i, j, k);
                    next(i, j, k) = u(i, j, k) + trilinear_vec(u, geom.grid_coords(p));
                }
        std::swap(u, next);
    }
    return u;
}

/// Exact flow of points along the stationary field: integrates dx/dt = V(x)
/// for time s with classical RK4.
inline std::vector<Vec3> warp_points(const PolyaffineModel& model, double s,
                                     std::span<const Vec3> points, int steps_per_unit = 32) {
    const int n_steps = std::max(4, int(std::ceil(std::abs(s) * steps_per_unit)));
    const double h = s / n_steps;
    std::vector<Vec3> x(points.begin(), points.end());
    for (int step = 0; step < n_steps; ++step)
        for (auto& p : x) {
            const Vec3 k1 = polyaffine_velocity(model, p);
            const Vec3 k2 = polyaffine_velocity(model, p + (h / 2) * k1);
            const Vec3 k3 = polyaffine_velocity(model, p + (h / 2) * k2);
            const Vec3 k4 = polyaffine_velocity(model, p + h * k3);
            p += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        }
    return x;
}

/// Warp a binary mask to deformation scale s by resampling through the
/// inverse flow exp(-s V) and thresholding at 0.5.
inline MaskGrid warp_mask(const MaskGrid& mask, const PolyaffineModel& model, double s,
                          int squaring_depth = 6) {
    const VoxelGrid<Vec3> u_inv = fuse_transform(model, -s, mask, squaring_depth);
    MaskGrid out = mask.like<std::uint8_t>(0);
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i) {
                const Vec3 p = mask.world(i, j, k) + u_inv(i, j, k);
                out(i, j, k) = trilinear(mask, mask.grid_coords(p)) >= 0.5 ? 1 : 0;
            }
    return out;
}

/// Foreground volume in world units.
inline double mask_volume(const MaskGrid& m) {
    return double(foreground_count(m)) * m.spacing().prod();
}

/// Cyclic deformation sequence: masks and ground-truth vertex positions at
/// a triangle-wave schedule s(t) running 0 -> 1 -> 0 per cycle.
struct SimulatedSequence {
    std::vector<double> s;                  ///< deformation scale per frame
    std::vector<MaskGrid> masks;            ///< warped masks per frame
    std::vector<std::vector<Vec3>> meshes;  ///< ground-truth vertex positions per frame
    std::vector<std::array<int, 4>> faces;  ///< shared quad faces

    int frame_count() const { return int(s.size()); }
    bool is_rest(int t) const { return s[t] == 0.0; }
};

inline SimulatedSequence make_cycle(const PolyaffineModel& model, const MaskGrid& rest_mask,
                                    const QuadMesh& rest_mesh, int frames_per_half,
                                    int cycles = 8) {
    if (frames_per_half < 1) throw Error("make_cycle: frames_per_half must be >= 1");
    if (cycles < 1) throw Error("make_cycle: cycles must be >= 1");
    SimulatedSequence seq;
    seq.faces = rest_mesh.faces;
    seq.s.push_back(0.0);
    for (int c = 0; c < cycles; ++c) {
        for (int f = 1; f <= frames_per_half; ++f)
            seq.s.push_back(double(f) / frames_per_half);
        // inverse trajectory back to rest, fusing the negated logs
        for (int f = frames_per_half - 1; f >= 0; --f)
            seq.s.push_back(double(f) / frames_per_half);
    }
    for (double s : seq.s) {
        seq.masks.push_back(warp_mask(rest_mask, model, s));
        seq.meshes.push_back(warp_points(model, s, rest_mesh.vertices));
    }
    return seq;
}

/// Four-region vertical partition where the inferior band stretches
/// downward about its top (the organ roof stays put) and the upper bands
/// hold nearly still: the floor sags into a smooth pear-shaped bulge.
/// `severity` scales all the scaling logs.
inline PolyaffineModel sag_model(const MaskGrid& mask, double severity = 1.0) {
    // z quartile bands over the foreground
    double zmin = std::numeric_limits<double>::max(), zmax = -zmin;
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i)
                if (mask(i, j, k)) {
                    const double z = mask.world(i, j, k)[2];
                    zmin = std::min(zmin, z);
                    zmax = std::max(zmax, z);
                }
    const double band_h = (zmax - zmin) / 4.0;
    if (band_h < 2.0 * mask.spacing()[2])
        throw Error("sag_model: mask too small to partition");

    PolyaffineModel model;
    model.region_labels = mask.like<std::uint8_t>(0);
    std::array<Vec3, 4> centroid_sum = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::array<std::size_t, 4> counts = {0, 0, 0, 0};
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i) {
                if (!mask(i, j, k)) continue;
                const Vec3 p = mask.world(i, j, k);
                int band = std::min(3, int((p[2] - zmin) / band_h));
                model.region_labels(i, j, k) = std::uint8_t(band + 1);
                centroid_sum[band] += p;
                ++counts[band];
            }

    const std::array<double, 4> stretch = {0.90, 0.05, 0.02, 0.01};
    const std::array<double, 4> sigma_scale = {1.2, 1.0, 1.0, 1.0};
    for (int b = 0; b < 4; ++b) {
        if (counts[b] == 0) throw Error("sag_model: empty partition band");
        AffineRegion r;
        r.center = centroid_sum[b] / double(counts[b]);
        r.center[2] = zmin + (b + 1) * band_h; // top of the band
        const double t = severity * stretch[b];
        r.log_scale = Vec3(-t / 2.0, -t / 2.0, t);
        r.weight_sigma = band_h * sigma_scale[b];
        model.regions.push_back(r);
    }
    model.validate();

    // the fused field is not volume-exact even with trace-free logs (weight
    // gradients advect); compensate with a global isotropic correction
    const double v0 = mask_volume(mask);
    for (int pass = 0; pass < 3; ++pass) {
        const double v1 = mask_volume(warp_mask(mask, model, 1.0));
        const double adjust = -std::log(v1 / v0) / 3.0;
        for (auto& r : model.regions) r.log_scale += Vec3::Constant(adjust);
    }
    return model;
}

/// Mild cyclic deformation for synthetic "healthy" subjects: gentle
/// volume-balanced component-wise scalings with seeded variation.
inline PolyaffineModel breathing_model(const MaskGrid& mask, double amplitude,
                                       std::uint64_t seed) {
    SplitMix64 rng(seed);

    PolyaffineModel model;
    model.region_labels = mask.like<std::uint8_t>(0);
    double zmin = std::numeric_limits<double>::max(), zmax = -zmin;
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i)
                if (mask(i, j, k)) {
                    zmin = std::min(zmin, mask.world(i, j, k)[2]);
                    zmax = std::max(zmax, mask.world(i, j, k)[2]);
                }
    const double band_h = (zmax - zmin) / 4.0;

    std::array<Vec3, 4> centroid_sum = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::array<std::size_t, 4> counts = {0, 0, 0, 0};
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i) {
                if (!mask(i, j, k)) continue;
                const Vec3 p = mask.world(i, j, k);
                int band = std::min(3, int((p[2] - zmin) / band_h));
                model.region_labels(i, j, k) = std::uint8_t(band + 1);
                centroid_sum[band] += p;
                ++counts[band];
            }

    for (int b = 0; b < 4; ++b) {
        if (counts[b] == 0) throw Error("breathing_model: empty partition band");
        AffineRegion r;
        r.center = centroid_sum[b] / double(counts[b]);
        // trace-free log so each component preserves volume on its own
        const double ax = rng.uniform(-1.0, 1.0);
        const double ay = rng.uniform(-1.0, 1.0);
        r.log_scale = amplitude * Vec3(ax, ay, -(ax + ay));
        r.weight_sigma = band_h;
        model.regions.push_back(r);
    }
    model.validate();
    return model;
}

} // namespace shapeflow
