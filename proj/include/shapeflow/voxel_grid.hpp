#pragma once

#include "shapeflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace shapeflow {

/// Regular 3D lattice of values. Voxel (i,j,k) is centered at
/// origin + (i*sx, j*sy, k*sz); the first index varies fastest in memory.
template <typename T>
class VoxelGrid {
public:
    VoxelGrid() = default;

    VoxelGrid(int nx, int ny, int nz, T fill = T{})
        : nx_(nx), ny_(ny), nz_(nz),
          data_(static_cast<std::size_t>(nx) * ny * nz, fill) {
        if (nx <= 0 || ny <= 0 || nz <= 0)
            throw Error("VoxelGrid: dims must be strictly positive");
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    std::array<int, 3> dims() const { return {nx_, ny_, nz_}; }
    std::size_t size() const { return data_.size(); }

    const Vec3& spacing() const { return spacing_; }
    void set_spacing(const Vec3& s) {
        if (s.minCoeff() <= 0.0) throw Error("VoxelGrid: spacing must be positive");
        spacing_ = s;
    }
    const Vec3& origin() const { return origin_; }
    void set_origin(const Vec3& o) { origin_ = o; }

    bool isotropic(double rel_tol = 1e-12) const {
        return std::abs(spacing_[0] - spacing_[1]) <= rel_tol * spacing_[0] &&
               std::abs(spacing_[0] - spacing_[2]) <= rel_tol * spacing_[0];
    }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nx_) * (static_cast<std::size_t>(j) +
                                                static_cast<std::size_t>(ny_) * k);
    }

    bool in_bounds(int i, int j, int k) const {
        return i >= 0 && i < nx_ && j >= 0 && j < ny_ && k >= 0 && k < nz_;
    }

    T& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
    const T& operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
    T& operator[](std::size_t idx) { return data_[idx]; }
    const T& operator[](std::size_t idx) const { return data_[idx]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    /// World position of the voxel center.
    Vec3 world(int i, int j, int k) const {
        return origin_ + Vec3(i * spacing_[0], j * spacing_[1], k * spacing_[2]);
    }

    /// Continuous grid coordinates of a world point (voxel units).
    Vec3 grid_coords(const Vec3& p) const {
        return (p - origin_).cwiseQuotient(spacing_);
    }

    /// Same geometry (dims, spacing, origin), freshly filled data.
    template <typename U>
    VoxelGrid<U> like(U fill = U{}) const {
        VoxelGrid<U> g(nx_, ny_, nz_, fill);
        g.set_spacing(spacing_);
        g.set_origin(origin_);
        return g;
    }

private:
    int nx_ = 0, ny_ = 0, nz_ = 0;
    Vec3 spacing_{1.0, 1.0, 1.0};
    Vec3 origin_{0.0, 0.0, 0.0};
    std::vector<T> data_;
};

using ScalarGrid = VoxelGrid<double>;
using MaskGrid = VoxelGrid<std::uint8_t>;

inline bool is_binary(const MaskGrid& m) {
    return std::all_of(m.data().begin(), m.data().end(),
                       [](std::uint8_t v) { return v == 0 || v == 1; });
}

inline std::size_t foreground_count(const MaskGrid& m) {
    std::size_t n = 0;
    for (auto v : m.data()) n += (v != 0);
    return n;
}

/// Trilinear interpolation at continuous grid coordinates, clamped to the
/// grid bounds.
template <typename T>
double trilinear(const VoxelGrid<T>& g, const Vec3& gc) {
    const double x = std::clamp(gc[0], 0.0, double(g.nx() - 1));
    const double y = std::clamp(gc[1], 0.0, double(g.ny() - 1));
    const double z = std::clamp(gc[2], 0.0, double(g.nz() - 1));
    const int i0 = std::min(int(std::floor(x)), g.nx() - 2 >= 0 ? g.nx() - 2 : 0);
    const int j0 = std::min(int(std::floor(y)), g.ny() - 2 >= 0 ? g.ny() - 2 : 0);
    const int k0 = std::min(int(std::floor(z)), g.nz() - 2 >= 0 ? g.nz() - 2 : 0);
    const int i1 = std::min(i0 + 1, g.nx() - 1);
    const int j1 = std::min(j0 + 1, g.ny() - 1);
    const int k1 = std::min(k0 + 1, g.nz() - 1);
    const double fx = x - i0, fy = y - j0, fz = z - k0;

    auto v = [&](int i, int j, int k) { return double(g(i, j, k)); };
    const double c00 = v(i0, j0, k0) * (1 - fx) + v(i1, j0, k0) * fx;
    const double c10 = v(i0, j1, k0) * (1 - fx) + v(i1, j1, k0) * fx;
    const double c01 = v(i0, j0, k1) * (1 - fx) + v(i1, j0, k1) * fx;
    const double c11 = v(i0, j1, k1) * (1 - fx) + v(i1, j1, k1) * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

/// Trilinear interpolation of a vector field stored per voxel.
inline Vec3 trilinear_vec(const VoxelGrid<Vec3>& g, const Vec3& gc) {
    const double x = std::clamp(gc[0], 0.0, double(g.nx() - 1));
    const double y = std::clamp(gc[1], 0.0, double(g.ny() - 1));
    const double z = std::clamp(gc[2], 0.0, double(g.nz() - 1));
    const int i0 = std::min(int(std::floor(x)), std::max(g.nx() - 2, 0));
    const int j0 = std::min(int(std::floor(y)), std::max(g.ny() - 2, 0));
    const int k0 = std::min(int(std::floor(z)), std::max(g.nz() - 2, 0));
    const int i1 = std::min(i0 + 1, g.nx() - 1);
    const int j1 = std::min(j0 + 1, g.ny() - 1);
    const int k1 = std::min(k0 + 1, g.nz() - 1);
    const double fx = x - i0, fy = y - j0, fz = z - k0;

    Vec3 c00 = g(i0, j0, k0) * (1 - fx) + g(i1, j0, k0) * fx;
    Vec3 c10 = g(i0, j1, k0) * (1 - fx) + g(i1, j1, k0) * fx;
    Vec3 c01 = g(i0, j0, k1) * (1 - fx) + g(i1, j0, k1) * fx;
    Vec3 c11 = g(i0, j1, k1) * (1 - fx) + g(i1, j1, k1) * fx;
    Vec3 c0 = c00 * (1 - fy) + c10 * fy;
    Vec3 c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

/// 3x3x3 mean filter (border-replicated). Smoothing a binary mask before
/// iso-surfacing removes most of the staircase area excess.
template <typename T>
ScalarGrid box_smooth(const VoxelGrid<T>& g) {
    ScalarGrid out = g.template like<double>(0.0);
    for (int k = 0; k < g.nz(); ++k)
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                double sum = 0;
                for (int dk = -1; dk <= 1; ++dk)
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int di = -1; di <= 1; ++di) {
                            const int ii = std::clamp(i + di, 0, g.nx() - 1);
                            const int jj = std::clamp(j + dj, 0, g.ny() - 1);
                            const int kk = std::clamp(k + dk, 0, g.nz() - 1);
                            sum += double(g(ii, jj, kk));
                        }
                out(i, j, k) = sum / 27.0;
            }
    return out;
}

/// Rasterize an ellipsoid with the given semi-axes (after rotation `rot`)
/// into an auto-sized grid with `margin` world units of background on every
/// side. The ellipsoid center lands on the grid center.
inline MaskGrid make_ellipsoid_mask(const Vec3& semi_axes, double margin,
                                    const Vec3& spacing = Vec3(1, 1, 1),
                                    const Mat3& rot = Mat3::Identity()) {
    if (semi_axes.minCoeff() <= 0) throw Error("ellipsoid semi-axes must be positive");
    // extent of the rotated ellipsoid along grid axis k: sqrt(sum_j (a_j R_kj)^2)
    Vec3 extent;
    for (int k = 0; k < 3; ++k) {
        double s = 0;
        for (int j = 0; j < 3; ++j) s += sqr(semi_axes[j] * rot(k, j));
        extent[k] = std::sqrt(s);
    }
    std::array<int, 3> n;
    for (int k = 0; k < 3; ++k)
        n[k] = 2 * int(std::ceil((extent[k] + margin) / spacing[k])) + 1;
    MaskGrid m(n[0], n[1], n[2], 0);
    m.set_spacing(spacing);
    // shape centered at the world origin
    m.set_origin(-Vec3((n[0] - 1) / 2.0 * spacing[0], (n[1] - 1) / 2.0 * spacing[1],
                       (n[2] - 1) / 2.0 * spacing[2]));
    const Vec3 center = Vec3::Zero();
    const Mat3 to_local = rot.transpose();
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                Vec3 q = to_local * (m.world(i, j, k) - center);
                double r = sqr(q[0] / semi_axes[0]) + sqr(q[1] / semi_axes[1]) +
                           sqr(q[2] / semi_axes[2]);
                m(i, j, k) = r <= 1.0 ? 1 : 0;
            }
    return m;
}

inline MaskGrid make_ball_mask(double radius, double margin,
                               const Vec3& spacing = Vec3(1, 1, 1)) {
    return make_ellipsoid_mask(Vec3(radius, radius, radius), margin, spacing);
}

/// Torus around the z axis: major radius R, tube radius r.
inline MaskGrid make_torus_mask(double R, double r, double margin,
                                const Vec3& spacing = Vec3(1, 1, 1)) {
    if (R <= 0 || r <= 0 || r >= R) throw Error("torus requires 0 < r < R");
    const double ext_xy = R + r, ext_z = r;
    std::array<int, 3> n = {2 * int(std::ceil((ext_xy + margin) / spacing[0])) + 1,
                            2 * int(std::ceil((ext_xy + margin) / spacing[1])) + 1,
                            2 * int(std::ceil((ext_z + margin) / spacing[2])) + 1};
    MaskGrid m(n[0], n[1], n[2], 0);
    m.set_spacing(spacing);
    m.set_origin(-Vec3((n[0] - 1) / 2.0 * spacing[0], (n[1] - 1) / 2.0 * spacing[1],
                       (n[2] - 1) / 2.0 * spacing[2]));
    const Vec3 center = Vec3::Zero();
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                Vec3 q = m.world(i, j, k) - center;
                double rho = std::hypot(q[0], q[1]);
                m(i, j, k) = (sqr(rho - R) + sqr(q[2]) <= sqr(r)) ? 1 : 0;
            }
    return m;
}

} // namespace shapeflow
