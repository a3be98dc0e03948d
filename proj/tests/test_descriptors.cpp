#include <catch2/catch.hpp>

#include "shapeflow/descriptors.hpp"
#include "shapeflow/mesh_gen.hpp"

#include <Eigen/Geometry>
#include <numbers>

using namespace shapeflow;

namespace {

TrackedSequence two_frames(const QuadMesh& m, const std::vector<Vec3>& second) {
    TrackedSequence seq;
    seq.faces = m.faces;
    seq.frames = {m.vertices, second};
    return seq;
}

} // namespace

TEST_CASE("rigid motion produces zero elongation and distortion", "[descriptors]") {
    QuadMesh m = make_quad_ellipsoid(3, 2, 1.5, 6);
    Eigen::AngleAxisd rot(0.9, Vec3(1, -2, 0.5).normalized());
    std::vector<Vec3> moved = m.vertices;
    for (Vec3& v : moved) v = rot * v + Vec3(10, -4, 2);

    const TrackedSequence seq = two_frames(m, moved);
    for (double e : elongation(seq, 0)) CHECK(std::abs(e) < 1e-9);
    for (double d : distortion(seq, 0)) CHECK(std::abs(d) < 1e-9);
}

TEST_CASE("uniform scaling gives the closed-form elongation", "[descriptors]") {
    QuadMesh m = make_quad_sphere(6, 4.0);
    const double s = 1.2;
    std::vector<Vec3> scaled = m.vertices;
    for (Vec3& v : scaled) v *= s;

    const TrackedSequence seq = two_frames(m, scaled);
    const double expected = (1.0 - s) / (2.0 * s);
    for (double e : elongation(seq, 0)) CHECK(e == Approx(expected).margin(1e-6));
    for (double d : distortion(seq, 0)) CHECK(std::abs(d) < 1e-9);

    // identity scaling
    const TrackedSequence id = two_frames(m, m.vertices);
    for (double e : elongation(id, 0)) CHECK(e == 0.0);
}

TEST_CASE("elongation sign convention can be flipped", "[descriptors]") {
    QuadMesh m = make_quad_sphere(4, 4.0);
    std::vector<Vec3> scaled = m.vertices;
    for (Vec3& v : scaled) v *= 1.2;
    const TrackedSequence seq = two_frames(m, scaled);
    const auto as_written = elongation(seq, 0, false);
    const auto flipped = elongation(seq, 0, true);
    for (std::size_t v = 0; v < as_written.size(); ++v)
        CHECK(flipped[v] == Approx(-as_written[v]));
    CHECK(as_written[0] < 0.0); // expansion is negative as the formula is written
}

TEST_CASE("folding a flat patch registers the fold angle", "[descriptors]") {
    // 2x1 quad strip in the xy plane, folded by 10 degrees about the shared edge
    QuadMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {2, 0, 0}, {2, 1, 0}};
    m.faces = {{0, 1, 2, 3}, {1, 4, 5, 2}};
    const double a = 10.0 * std::numbers::pi / 180.0;
    std::vector<Vec3> folded = m.vertices;
    // rotate the outer edge (vertices 4, 5) about the line x = 1
    folded[4] = Vec3(1 + std::cos(a), 0, std::sin(a));
    folded[5] = Vec3(1 + std::cos(a), 1, std::sin(a));

    const TrackedSequence seq = two_frames(m, folded);
    const auto d = distortion(seq, 0);
    // vertices 1 and 2 sit on the fold and see both faces
    CHECK(d[1] == Approx(a).margin(1e-9));
    CHECK(d[2] == Approx(a).margin(1e-9));
    CHECK(d[0] == Approx(0.0).margin(1e-9)); // single incident face, no pair
}

TEST_CASE("descriptors are invariant under face relabeling", "[descriptors]") {
    QuadMesh m = make_quad_ellipsoid(3, 2, 1.5, 5);
    std::vector<Vec3> scaled = m.vertices;
    for (Vec3& v : scaled) v = v * 1.07 + Vec3(1, 2, 3);

    TrackedSequence seq = two_frames(m, scaled);
    const auto e0 = elongation(seq, 0);
    const auto d0 = distortion(seq, 0);

    std::reverse(seq.faces.begin(), seq.faces.end()); // permute the face table
    const auto e1 = elongation(seq, 0);
    const auto d1 = distortion(seq, 0);
    for (std::size_t v = 0; v < e0.size(); ++v) {
        CHECK(e1[v] == Approx(e0[v]).margin(1e-15));
        CHECK(d1[v] == Approx(d0[v]).margin(1e-15));
    }
}

TEST_CASE("static sequence has identical curvature rows", "[descriptors]") {
    QuadMesh m = make_quad_sphere(6, 5.0);
    TrackedSequence seq;
    seq.faces = m.faces;
    seq.frames = {m.vertices, m.vertices, m.vertices};
    const FeatureSeries s = curvature_series(seq);
    REQUIRE(s.rows.size() == 3);
    CHECK(s.rows[1] == s.rows[0]);
    CHECK(s.rows[2] == s.rows[0]);
    // sphere of radius 5: mean curvature 0.2
    for (double h : s.rows[0]) CHECK(h == Approx(0.2).epsilon(0.08));
}

TEST_CASE("inflating a sphere scales curvature down", "[descriptors]") {
    QuadMesh m = make_quad_sphere(6, 5.0);
    std::vector<Vec3> inflated = m.vertices;
    for (Vec3& v : inflated) v *= 1.2;
    const TrackedSequence seq = two_frames(m, inflated);
    const FeatureSeries s = curvature_series(seq);
    for (std::size_t v = 0; v < s.rows[0].size(); ++v)
        CHECK(s.rows[1][v] == Approx(s.rows[0][v] / 1.2).epsilon(1e-9));
}

TEST_CASE("static sequence geodesic feature correlates exactly", "[descriptors]") {
    MaskGrid mask = make_ball_mask(9.0, 11.0);
    const Vec3 c = shape_pca(mask).centroid;
    QuadMesh mesh = make_quad_sphere(5, 8.6, c);
    TrackedSequence seq;
    seq.faces = mesh.faces;
    seq.frames = {mesh.vertices, mesh.vertices};
    const std::vector<MaskGrid> masks = {mask, mask};

    const FeatureSeries s = geodesic_feature_series(seq, masks);
    REQUIRE(s.rows.size() == 2);
    CHECK(s.rows[1] == s.rows[0]);
    for (double f : s.rows[0]) CHECK(f > 0);
}

TEST_CASE("geodesic series wants one mask per frame", "[descriptors]") {
    QuadMesh mesh = make_quad_sphere(3, 5.0);
    TrackedSequence seq;
    seq.faces = mesh.faces;
    seq.frames = {mesh.vertices, mesh.vertices};
    const std::vector<MaskGrid> masks(1, make_ball_mask(6.0, 8.0));
    CHECK_THROWS_AS(geodesic_feature_series(seq, masks), Error);
}
