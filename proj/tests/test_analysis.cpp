#include <catch2/catch.hpp>

#include "shapeflow/analysis.hpp"

using namespace shapeflow;

namespace {

FeatureSeries constant_series(int frames, int verts) {
    FeatureSeries s;
    s.name = "test";
    for (int t = 0; t < frames; ++t) {
        std::vector<double> row(verts);
        for (int v = 0; v < verts; ++v) row[v] = std::sin(0.3 * v) + 0.1 * v;
        s.rows.push_back(row);
    }
    return s;
}

} // namespace

TEST_CASE("constant sequences have correlation 1 and depth 0", "[analysis]") {
    const FeatureSeries s = constant_series(5, 40);
    const CorrelationTrajectory tr = correlation_trajectory(s);
    for (double c : tr.corr) CHECK(c == Approx(1.0).margin(1e-12));
    CHECK(tr.depth == Approx(0.0).margin(1e-12));
    CHECK(tr.corr[s.reference] == 1.0);
}

TEST_CASE("zero-variance rows are flagged, not crashed", "[analysis]") {
    FeatureSeries s = constant_series(3, 10);
    s.rows[1].assign(10, 4.2);
    const CorrelationTrajectory tr = correlation_trajectory(s);
    CHECK(!tr.valid[1]);
    CHECK(std::isnan(tr.corr[1]));
    CHECK(tr.valid[0]);
    CHECK(tr.valid[2]);
}

TEST_CASE("Pearson correlation survives affine rescaling", "[analysis]") {
    std::vector<double> x(50), y(50), ax(50);
    SplitMix64 rng(7);
    for (int i = 0; i < 50; ++i) {
        x[i] = rng.next_double();
        y[i] = rng.next_double() + 0.4 * x[i];
        ax[i] = 3.7 * x[i] - 11.0;
    }
    const double c1 = pearson(x, y).value();
    const double c2 = pearson(ax, y).value();
    CHECK(c2 == Approx(c1).margin(1e-12));
}

TEST_CASE("depth matrix arithmetic", "[analysis]") {
    // identical subjects -> zero matrix
    const std::vector<double> same = {0.25, 0.25};
    CHECK(depth_distance_matrix(same).d.maxCoeff() == 0.0);

    const std::vector<double> depths = {0.1, 0.3, 0.5};
    const DistanceMatrix m = depth_distance_matrix(depths);
    CHECK(m.d(0, 2) == Approx(1.0)); // the max pair normalizes to 1
    CHECK(m.d(0, 1) == Approx(0.5));
    CHECK(m.d(1, 2) == Approx(0.5));
    for (int i = 0; i < 3; ++i) {
        CHECK(m.d(i, i) == 0.0);
        for (int j = 0; j < 3; ++j) CHECK(m.d(i, j) == m.d(j, i));
    }
}

TEST_CASE("sphere LBO spectrum", "[analysis]") {
    const TriMesh sphere = make_icosphere(3); // 642 vertices
    const EigenPairs eig = lbo_eigenfunctions(sphere, 7);

    CHECK(std::abs(eig.eigenvalues(0)) < 1e-6);
    // constant eigenfunction
    const auto& f0 = eig.eigenfunctions.col(0);
    CHECK((f0.maxCoeff() - f0.minCoeff()) < 1e-8 * std::abs(f0.maxCoeff()));
    // degree-1 triple near l(l+1) = 2
    for (int c = 1; c <= 3; ++c) CHECK(eig.eigenvalues(c) == Approx(2.0).epsilon(0.05));
    // non-decreasing, non-negative
    for (int c = 0; c < 6; ++c) {
        CHECK(eig.eigenvalues(c) >= -1e-9);
        CHECK(eig.eigenvalues(c) <= eig.eigenvalues(c + 1) + 1e-12);
    }
    // each degree-1 eigenfunction has exactly two nodal domains
    for (int c = 1; c <= 3; ++c)
        CHECK(nodal_domain_count(sphere, eig.eigenfunctions.col(c)) == 2);
}

TEST_CASE("LBO eigenvalues scale as 1/r^2", "[analysis]") {
    const TriMesh unit = make_icosphere(2);
    TriMesh big = unit;
    for (Vec3& v : big.vertices) v *= 2.0;
    const EigenPairs e1 = lbo_eigenfunctions(unit, 4);
    const EigenPairs e2 = lbo_eigenfunctions(big, 4);
    for (int c = 1; c < 4; ++c)
        CHECK(e2.eigenvalues(c) == Approx(e1.eigenvalues(c) / 4.0).epsilon(1e-6));
}

TEST_CASE("LBO spherical map of a sphere is near-isometric", "[analysis]") {
    const TriMesh sphere = make_icosphere(3);
    std::vector<double> carried(sphere.vertices.size());
    for (std::size_t v = 0; v < carried.size(); ++v) carried[v] = sphere.vertices[v][2];
    const SphericalMap map = lbo_spherical_map(sphere, carried);
    for (const Vec3& p : map.positions) CHECK(p.norm() == Approx(1.0).margin(1e-9));
    // degree-1 eigenfunctions of a sphere are linear: the map approximates
    // the identity up to rotation, so pairwise angles are roughly preserved
    double worst = 0;
    for (int a = 0; a < 50; ++a) {
        const int i = a * 12, j = a * 12 + 7;
        const double before =
            std::acos(std::clamp(sphere.vertices[i].dot(sphere.vertices[j]), -1.0, 1.0));
        const double after =
            std::acos(std::clamp(map.positions[i].dot(map.positions[j]), -1.0, 1.0));
        worst = std::max(worst, std::abs(after - before));
    }
    CHECK(worst < 0.2);
}

TEST_CASE("spherical resampling identities", "[analysis]") {
    const TriMesh grid_mesh = make_icosphere(2);
    SphericalMap map;
    map.positions = grid_mesh.vertices;
    map.values.resize(map.positions.size());
    for (std::size_t v = 0; v < map.values.size(); ++v)
        map.values[v] = std::cos(3.0 * map.positions[v][0]) + map.positions[v][1];

    // resampled against itself on its own grid: exact
    const auto self = spherical_resample(map, grid_mesh.vertices);
    CHECK(self == map.values);
    const auto [a, b] = spherical_resample(map, map, 2);
    CHECK(pearson(a, b).value() == Approx(1.0));

    SphericalMap negated = map;
    for (double& v : negated.values) v = -v;
    const auto [c, d] = spherical_resample(map, negated, 2);
    CHECK(pearson(c, d).value() == Approx(-1.0));
}

TEST_CASE("resampling matches a brute-force nearest-neighbor oracle", "[analysis]") {
    SplitMix64 rng(11);
    SphericalMap map;
    for (int i = 0; i < 500; ++i) {
        Vec3 p(rng.next_double() - 0.5, rng.next_double() - 0.5, rng.next_double() - 0.5);
        if (p.norm() < 1e-3) continue;
        map.positions.push_back(p.normalized());
        map.values.push_back(rng.next_double());
    }
    const auto grid = resampling_grid(2);
    const auto fast = spherical_resample(map, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double best = 1e30;
        double val = 0;
        for (std::size_t i = 0; i < map.positions.size(); ++i) {
            const double d = (grid[g] - map.positions[i]).squaredNorm();
            if (d < best) {
                best = d;
                val = map.values[i];
            }
        }
        CHECK(fast[g] == val);
    }
}

TEST_CASE("resampling on the common grid is idempotent", "[analysis]") {
    const auto grid = resampling_grid(2);
    SphericalMap map;
    map.positions = grid;
    map.values.resize(grid.size());
    for (std::size_t v = 0; v < grid.size(); ++v) map.values[v] = std::sin(double(v));
    const auto once = spherical_resample(map, grid);
    CHECK(once == map.values);
}

TEST_CASE("pattern distance matrix basics", "[analysis]") {
    const auto grid = resampling_grid(2);
    SphericalMap a;
    a.positions = grid;
    a.values.resize(grid.size());
    for (std::size_t v = 0; v < grid.size(); ++v) a.values[v] = grid[v][0] + 0.2 * grid[v][2];
    SphericalMap b = a; // identical subject
    SphericalMap c = a;
    for (double& v : c.values) v = -v; // sign-flipped pattern

    {
        const std::vector<SphericalMap> subjects = {a, b};
        const DistanceMatrix m = pattern_distance_matrix(subjects, 2);
        CHECK(m.d(0, 1) == Approx(0.0).margin(1e-12));
    }
    {
        const std::vector<SphericalMap> subjects = {a, b, c};
        const DistanceMatrix m = pattern_distance_matrix(subjects, 2);
        // raw distances: 0 and 2; normalized to [0, 1]
        CHECK(m.d(0, 1) == Approx(0.0).margin(1e-12));
        CHECK(m.d(0, 2) == Approx(1.0).margin(1e-12));
        CHECK(m.d.maxCoeff() <= 1.0);
        for (int i = 0; i < 3; ++i) CHECK(m.d(i, i) == 0.0);
    }
}

TEST_CASE("mean pattern map averages absolute differences", "[analysis]") {
    FeatureSeries s;
    s.rows = {{1.0, 2.0}, {2.0, 4.0}, {0.0, 2.0}};
    const std::vector<Vec3> pos = {Vec3(0, 0, 1), Vec3(0, 0, -1)};
    const SphericalMap m = mean_pattern_map(s, pos);
    CHECK(m.values[0] == Approx((0.0 + 1.0 + 1.0) / 3.0));
    CHECK(m.values[1] == Approx((0.0 + 2.0 + 0.0) / 3.0));
}
