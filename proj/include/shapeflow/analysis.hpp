#pragma once

#include "shapeflow/descriptors.hpp"
#include "shapeflow/lbo.hpp"
#include "shapeflow/mesh_gen.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace shapeflow {

/// Pearson correlation of two equal-length vectors; nullopt when either has
/// zero variance.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw Error("pearson: size mismatch");
    const double n = double(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += sqr(a[i] - ma);
        sbb += sqr(b[i] - mb);
    }
    // rows that are constant up to roundoff carry no correlation signal
    const double floor_a = 1e-20 * n * (sqr(ma) + 1.0);
    const double floor_b = 1e-20 * n * (sqr(mb) + 1.0);
    if (saa <= floor_a || sbb <= floor_b) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

/// Per-frame correlation of a feature series against its reference row,
/// with the deformation depth 1 - min corr.
struct CorrelationTrajectory {
    std::vector<double> corr;          ///< NaN where undefined
    std::vector<std::uint8_t> valid;
    double min_corr = 1.0;
    double depth = 0.0;
    int reference = 0;
};

inline CorrelationTrajectory correlation_trajectory(const FeatureSeries& series) {
    if (series.rows.size() < 2) throw Error("correlation_trajectory: need >= 2 frames");
    const auto& ref = series.rows.at(series.reference);
    CorrelationTrajectory out;
    out.reference = series.reference;
    out.min_corr = 1.0;
    for (const auto& row : series.rows) {
        if (row.size() != ref.size())
            throw Error("correlation_trajectory: ragged series");
        const auto c = pearson(row, ref);
        out.valid.push_back(c.has_value());
        out.corr.push_back(c.value_or(std::numeric_limits<double>::quiet_NaN()));
        if (c) out.min_corr = std::min(out.min_corr, *c);
    }
    out.depth = 1.0 - out.min_corr;
    return out;
}

/// Symmetric distance matrix with zero diagonal; `kind` records the metric.
struct DistanceMatrix {
    Eigen::MatrixXd d;
    std::string kind;

    void normalize_to_unit_max() {
        const double m = d.maxCoeff();
        if (m > 0) d /= m;
    }

    /// Mean off-diagonal value of one row.
    double row_mean(int i) const {
        double s = 0;
        for (int j = 0; j < d.cols(); ++j)
            if (j != i) s += d(i, j);
        return s / double(d.cols() - 1);
    }
};

/// Pairwise absolute differences of deformation depths, scaled to max 1.
inline DistanceMatrix depth_distance_matrix(std::span<const double> depths) {
    if (depths.size() < 2) throw Error("depth_distance_matrix: need >= 2 subjects");
    const int n = int(depths.size());
    DistanceMatrix out;
    out.kind = "depth_abs_diff";
    out.d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.d(i, j) = std::abs(depths[i] - depths[j]);
    out.normalize_to_unit_max();
    return out;
}

/// Nearest-neighbor resampling of a spherical map onto grid positions.
inline std::vector<double> spherical_resample(const SphericalMap& map,
                                              std::span<const Vec3> grid_positions) {
    if (map.positions.empty()) throw Error("spherical_resample: empty map");
    if (map.positions.size() != map.values.size())
        throw Error("spherical_resample: positions/values size mismatch");
    std::vector<double> out;
    out.reserve(grid_positions.size());
    for (const Vec3& g : grid_positions) {
        double best = -std::numeric_limits<double>::max();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < map.positions.size(); ++i) {
            const double dot = g.dot(map.positions[i]); // max dot = min angle
            if (dot > best) {
                best = dot;
                arg = i;
            }
        }
        out.push_back(map.values[arg]);
    }
    return out;
}

/// Common resampling grid: icosphere vertices (level 4 = 2562 nodes).
inline std::vector<Vec3> resampling_grid(int level = 4) {
    return make_icosphere(level).vertices;
}

/// Resample two maps onto a shared grid, producing aligned value vectors.
inline std::pair<std::vector<double>, std::vector<double>> spherical_resample(
    const SphericalMap& a, const SphericalMap& b, int grid_level = 4) {
    const auto grid = resampling_grid(grid_level);
    return {spherical_resample(a, grid), spherical_resample(b, grid)};
}

/// Per-subject mean motion pattern: time-average of |row_t - row_ref| per
/// vertex, carried on the subject's spherical map positions.
inline SphericalMap mean_pattern_map(const FeatureSeries& series,
                                     std::span<const Vec3> sphere_positions) {
    const auto& ref = series.rows.at(series.reference);
    if (sphere_positions.size() != ref.size())
        throw Error("mean_pattern_map: positions size mismatch");
    std::vector<double> acc(ref.size(), 0.0);
    for (const auto& row : series.rows)
        for (std::size_t v = 0; v < ref.size(); ++v) acc[v] += std::abs(row[v] - ref[v]);
    for (auto& a : acc) a /= double(series.rows.size());
    SphericalMap map;
    map.positions.assign(sphere_positions.begin(), sphere_positions.end());
    map.values = std::move(acc);
    return map;
}

/// Inter-subject pattern distances: 1 - normcorr of the resampled mean
/// patterns, normalized per matrix to max 1.
inline DistanceMatrix pattern_distance_matrix(std::span<const SphericalMap> patterns,
                                              int grid_level = 4) {
    if (patterns.size() < 2) throw Error("pattern_distance_matrix: need >= 2 subjects");
    const auto grid = resampling_grid(grid_level);
    std::vector<std::vector<double>> resampled;
    resampled.reserve(patterns.size());
    for (const auto& p : patterns) resampled.push_back(spherical_resample(p, grid));

    const int n = int(patterns.size());
    DistanceMatrix out;
    out.kind = "one_minus_normcorr";
    out.d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const auto c = pearson(resampled[i], resampled[j]);
            const double dist = 1.0 - c.value_or(0.0); // zero-variance pair -> distance 1
            out.d(i, j) = out.d(j, i) = dist;
        }
    out.normalize_to_unit_max();
    return out;
}

} // namespace shapeflow
