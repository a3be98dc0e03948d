#pragma once

#include "shapeflow/voxel_grid.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>

namespace shapeflow {

/// Voxel classification for the two-boundary Dirichlet problem.
enum class VoxLabel : std::uint8_t {
    Outside = 0,          ///< interior of the eroded shape; never touched
    Domain = 1,           ///< between the two boundaries
    InteriorBoundary = 2, ///< surface voxels of the eroded shape
    ExteriorBoundary = 3, ///< everything outside the surrounding sphere
};

struct BoundaryLabels {
    VoxelGrid<std::uint8_t> labels;
    Vec3 centroid = Vec3::Zero(); ///< shape centroid (world units)
    double radius = 0.0;          ///< surrounding-sphere radius (world units)

    VoxLabel at(int i, int j, int k) const {
        return static_cast<VoxLabel>(labels(i, j, k));
    }
    std::size_t count(VoxLabel l) const {
        std::size_t n = 0;
        for (auto v : labels.data()) n += (v == static_cast<std::uint8_t>(l));
        return n;
    }
};

struct ShapePCA {
    Vec3 centroid = Vec3::Zero();
    Mat3 axes = Mat3::Identity(); ///< orthonormal columns
    Vec3 axis_lengths = Vec3::Zero(); ///< peak-to-peak extents, descending
};

namespace detail {
inline constexpr std::array<std::array<int, 3>, 6> kCross6 = {
    {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
}

/// Morphological erosion by the 6-neighbor (3D cross) structuring element.
/// Out-of-grid neighbors count as background.
inline MaskGrid erode_cross(const MaskGrid& mask, int passes = 1) {
    if (!is_binary(mask)) throw Error("erode_cross: mask is not binary");
    if (foreground_count(mask) == 0) throw Error("erode_cross: empty foreground");
    if (passes < 1) throw Error("erode_cross: passes must be >= 1");

    MaskGrid cur = mask;
    for (int p = 0; p < passes; ++p) {
        MaskGrid out = cur.like<std::uint8_t>(0);
        for (int k = 0; k < cur.nz(); ++k)
            for (int j = 0; j < cur.ny(); ++j)
                for (int i = 0; i < cur.nx(); ++i) {
                    if (!cur(i, j, k)) continue;
                    bool keep = true;
                    for (const auto& d : detail::kCross6) {
                        int ii = i + d[0], jj = j + d[1], kk = k + d[2];
                        if (!cur.in_bounds(ii, jj, kk) || !cur(ii, jj, kk)) {
                            keep = false;
                            break;
                        }
                    }
                    out(i, j, k) = keep ? 1 : 0;
                }
        cur = std::move(out);
        if (foreground_count(cur) == 0)
            throw Error("erode_cross: shape too thin for erosion");
    }
    return cur;
}

/// Foreground voxels with at least one background 6-neighbor.
inline MaskGrid surface_voxels(const MaskGrid& mask) {
    MaskGrid out = mask.like<std::uint8_t>(0);
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i) {
                if (!mask(i, j, k)) continue;
                for (const auto& d : detail::kCross6) {
                    int ii = i + d[0], jj = j + d[1], kk = k + d[2];
                    if (!mask.in_bounds(ii, jj, kk) || !mask(ii, jj, kk)) {
                        out(i, j, k) = 1;
                        break;
                    }
                }
            }
    return out;
}

/// PCA of the foreground voxel centers. Axis lengths are peak-to-peak
/// extents of the projections, sorted descending together with the axes.
inline ShapePCA shape_pca(const MaskGrid& mask) {
    if (!is_binary(mask)) throw Error("shape_pca: mask is not binary");
    const std::size_t n = foreground_count(mask);
    if (n < 4) throw Error("shape_pca: fewer than 4 foreground voxels");

    Vec3 mean = Vec3::Zero();
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i)
                if (mask(i, j, k)) mean += mask.world(i, j, k);
    mean /= double(n);

    Mat3 cov = Mat3::Zero();
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i)
                if (mask(i, j, k)) {
                    Vec3 d = mask.world(i, j, k) - mean;
                    cov += d * d.transpose();
                }
    cov /= double(n);

    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    if (es.info() != Eigen::Success) throw Error("shape_pca: eigensolver failed");
    // coplanar foreground has a (near-)zero variance direction
    if (es.eigenvalues()(0) < 1e-9 * std::max(es.eigenvalues()(2), 1.0))
        throw Error("shape_pca: degenerate covariance (coplanar foreground)");

    struct AxisExtent {
        Vec3 axis;
        double length;
    };
    std::array<AxisExtent, 3> ax;
    for (int a = 0; a < 3; ++a) {
        Vec3 dir = es.eigenvectors().col(a);
        double lo = std::numeric_limits<double>::max(), hi = -lo;
        for (int k = 0; k < mask.nz(); ++k)
            for (int j = 0; j < mask.ny(); ++j)
                for (int i = 0; i < mask.nx(); ++i)
                    if (mask(i, j, k)) {
                        double t = dir.dot(mask.world(i, j, k) - mean);
                        lo = std::min(lo, t);
                        hi = std::max(hi, t);
                    }
        ax[a] = {dir, hi - lo};
    }
    std::sort(ax.begin(), ax.end(),
              [](const AxisExtent& a, const AxisExtent& b) { return a.length > b.length; });

    ShapePCA out;
    out.centroid = mean;
    for (int a = 0; a < 3; ++a) {
        out.axes.col(a) = ax[a].axis;
        out.axis_lengths[a] = ax[a].length;
    }
    // keep a right-handed frame
    if (out.axes.determinant() < 0) out.axes.col(2) *= -1.0;
    return out;
}

namespace detail {

/// Symmetric background padding: extends the grid by (pad_x, pad_y, pad_z)
/// voxels on both sides of each axis and shifts the origin so world
/// coordinates are preserved.
inline MaskGrid pad_mask(const MaskGrid& m, const std::array<int, 3>& pad) {
    MaskGrid out(m.nx() + 2 * pad[0], m.ny() + 2 * pad[1], m.nz() + 2 * pad[2], 0);
    out.set_spacing(m.spacing());
    out.set_origin(m.origin() - Vec3(pad[0] * m.spacing()[0], pad[1] * m.spacing()[1],
                                     pad[2] * m.spacing()[2]));
    for (int k = 0; k < m.nz(); ++k)
        for (int j = 0; j < m.ny(); ++j)
            for (int i = 0; i < m.nx(); ++i)
                out(i + pad[0], j + pad[1], k + pad[2]) = m(i, j, k);
    return out;
}

} // namespace detail

/// Build the two Dirichlet boundaries: S_in = surface voxels of the eroded
/// mask, S_out = everything outside the surrounding sphere of radius
/// radius_factor * (largest principal-axis extent), centered on the shape
/// centroid. The grid is padded symmetrically (up to 2x the original dims)
/// when the sphere does not fit.
inline BoundaryLabels make_boundaries(const MaskGrid& mask, double radius_factor = 0.8,
                                      int erode_passes = 1) {
    const ShapePCA pca = shape_pca(mask);
    const double R = radius_factor * pca.axis_lengths[0];

    // sphere must contain the whole mask
    double max_r = 0.0;
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i)
                if (mask(i, j, k))
                    max_r = std::max(max_r, (mask.world(i, j, k) - pca.centroid).norm());
    if (max_r >= R)
        throw Error("make_boundaries: radius_factor too small, sphere does not contain mask");

    // pad so the sphere plus one voxel of exterior fits in the grid
    MaskGrid m = mask;
    {
        std::array<int, 3> pad = {0, 0, 0};
        bool need = false;
        for (int a = 0; a < 3; ++a) {
            const double sp = m.spacing()[a];
            const int n = m.dims()[a];
            const double lo = m.origin()[a];
            const double hi = lo + (n - 1) * sp;
            const double want_lo = pca.centroid[a] - R - 1.5 * sp;
            const double want_hi = pca.centroid[a] + R + 1.5 * sp;
            int p = 0;
            if (want_lo < lo) p = std::max(p, int(std::ceil((lo - want_lo) / sp)));
            if (want_hi > hi) p = std::max(p, int(std::ceil((want_hi - hi) / sp)));
            if (p > 0) need = true;
            if (n + 2 * p > 2 * n)
                throw Error("make_boundaries: required padding exceeds 2x original dims");
            pad[a] = p;
        }
        if (need) m = detail::pad_mask(m, pad);
    }

    const MaskGrid eroded = erode_cross(m, erode_passes);
    const MaskGrid s_in = surface_voxels(eroded);

    BoundaryLabels out;
    out.centroid = pca.centroid;
    out.radius = R;
    out.labels = m.like<std::uint8_t>(static_cast<std::uint8_t>(VoxLabel::Domain));
    for (int k = 0; k < m.nz(); ++k)
        for (int j = 0; j < m.ny(); ++j)
            for (int i = 0; i < m.nx(); ++i) {
                std::uint8_t& l = out.labels(i, j, k);
                if ((m.world(i, j, k) - pca.centroid).norm() > R)
                    l = static_cast<std::uint8_t>(VoxLabel::ExteriorBoundary);
                else if (s_in(i, j, k))
                    l = static_cast<std::uint8_t>(VoxLabel::InteriorBoundary);
                else if (eroded(i, j, k))
                    l = static_cast<std::uint8_t>(VoxLabel::Outside);
            }
    if (out.count(VoxLabel::InteriorBoundary) == 0 ||
        out.count(VoxLabel::ExteriorBoundary) == 0)
        throw Error("make_boundaries: empty boundary set");
    return out;
}

} // namespace shapeflow
