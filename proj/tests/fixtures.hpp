#pragma once

#include "shapeflow/morphology.hpp"

namespace shapeflow::fixtures {

/// Concentric-sphere shell labels on an n^3 grid (unit spacing), centered at
/// the grid center: inner ball is the interior boundary, everything beyond
/// r_out the exterior one.
inline BoundaryLabels shell_labels(double r_in, double r_out, int n) {
    BoundaryLabels lab;
    lab.labels = VoxelGrid<std::uint8_t>(n, n, n, std::uint8_t(VoxLabel::Domain));
    lab.centroid = Vec3::Constant((n - 1) / 2.0);
    lab.radius = r_out;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double r = (lab.labels.world(i, j, k) - lab.centroid).norm();
                if (r <= r_in)
                    lab.labels(i, j, k) = std::uint8_t(VoxLabel::InteriorBoundary);
                else if (r >= r_out)
                    lab.labels(i, j, k) = std::uint8_t(VoxLabel::ExteriorBoundary);
            }
    return lab;
}

/// Parallel-plane labels: interior boundary at i = 0, exterior at i = nx-1,
/// domain in between (laterally closed by the solver's border replication).
inline BoundaryLabels slab_labels(int nx = 11, int lateral = 7) {
    BoundaryLabels lab;
    lab.labels = VoxelGrid<std::uint8_t>(nx, lateral, lateral, std::uint8_t(VoxLabel::Domain));
    lab.centroid = Vec3((nx - 1) / 2.0, (lateral - 1) / 2.0, (lateral - 1) / 2.0);
    lab.radius = nx - 1.0;
    for (int k = 0; k < lateral; ++k)
        for (int j = 0; j < lateral; ++j) {
            lab.labels(0, j, k) = std::uint8_t(VoxLabel::InteriorBoundary);
            lab.labels(nx - 1, j, k) = std::uint8_t(VoxLabel::ExteriorBoundary);
        }
    return lab;
}

/// Spherical-shell harmonic reference A + B/r through the boundary values.
struct ShellReference {
    double A, B;
    ShellReference(double r_in, double r_out, double v_in, double v_out) {
        B = (v_in - v_out) / (1.0 / r_in - 1.0 / r_out);
        A = v_out - B / r_out;
    }
    double operator()(double r) const { return A + B / r; }
};

} // namespace shapeflow::fixtures
