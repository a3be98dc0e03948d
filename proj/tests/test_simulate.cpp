#include <catch2/catch.hpp>

#include "shapeflow/mesh_gen.hpp"
#include "shapeflow/simulate.hpp"

using namespace shapeflow;

namespace {

PolyaffineModel identity_model(const MaskGrid& mask) {
    PolyaffineModel m;
    m.region_labels = mask;
    AffineRegion r;
    r.center = shape_pca(mask).centroid;
    r.log_scale = Vec3::Zero();
    r.weight_sigma = 10.0;
    m.regions.push_back(r);
    return m;
}

} // namespace

TEST_CASE("identity affines give zero displacement", "[simulate]") {
    MaskGrid mask = make_ellipsoid_mask(Vec3(10, 7, 5), 6.0);
    const auto u = fuse_transform(identity_model(mask), 0.7, mask);
    for (const Vec3& d : u.data()) CHECK(d.norm() == 0.0);
}

TEST_CASE("single region matches the analytic scaling flow", "[simulate]") {
    MaskGrid mask = make_ball_mask(8.0, 10.0);
    PolyaffineModel model = identity_model(mask);
    const double s_factor = 1.1;
    model.regions[0].log_scale = Vec3::Constant(std::log(s_factor));
    model.regions[0].weight_sigma = 50.0;

    const Vec3 c = model.regions[0].center;
    const auto u = fuse_transform(model, 1.0, mask);
    double worst = 0;
    for (int k = 2; k < mask.nz() - 2; ++k)
        for (int j = 2; j < mask.ny() - 2; ++j)
            for (int i = 2; i < mask.nx() - 2; ++i) {
                const Vec3 p = mask.world(i, j, k);
                if ((p - c).norm() > 9.0) continue; // stay away from resample clamping
                const Vec3 expected = (s_factor - 1.0) * (p - c);
                worst = std::max(worst, (u(i, j, k) - expected).norm());
            }
    CHECK(worst < 1e-4);
}

TEST_CASE("zero scale parameter gives the identity", "[simulate]") {
    MaskGrid mask = make_ball_mask(8.0, 8.0);
    PolyaffineModel model = identity_model(mask);
    model.regions[0].log_scale = Vec3(0.2, -0.1, 0.05);
    const auto u = fuse_transform(model, 0.0, mask);
    for (const Vec3& d : u.data()) CHECK(d.norm() == 0.0);
}

TEST_CASE("reciprocal scalings preserve the foreground volume", "[simulate]") {
    MaskGrid mask = make_ellipsoid_mask(Vec3(12, 9, 7), 8.0);
    const ShapePCA pca = shape_pca(mask);

    PolyaffineModel model;
    model.region_labels = mask;
    AffineRegion a, b;
    a.center = pca.centroid - Vec3(6, 0, 0);
    a.log_scale = Vec3::Constant(std::log(1.1));
    a.weight_sigma = 8.0;
    b.center = pca.centroid + Vec3(6, 0, 0);
    b.log_scale = Vec3::Constant(std::log(1.0 / 1.1));
    b.weight_sigma = 8.0;
    model.regions = {a, b};

    const double v0 = mask_volume(mask);
    const double v1 = mask_volume(warp_mask(mask, model, 1.0));
    CHECK(std::abs(v1 - v0) / v0 < 0.01);
}

TEST_CASE("stationary flow has the group property", "[simulate]") {
    MaskGrid mask = make_ball_mask(8.0, 10.0);
    PolyaffineModel model = identity_model(mask);
    model.regions[0].log_scale = Vec3(0.15, -0.08, 0.1);

    const auto u_half = fuse_transform(model, 0.4, mask);
    const auto u_full = fuse_transform(model, 0.8, mask);
    const Vec3 c = model.regions[0].center;
    double worst = 0;
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i) {
                const Vec3 p = mask.world(i, j, k);
                if ((p - c).norm() > 8.0) continue;
                const Vec3 mid = p + u_half(i, j, k);
                const Vec3 composed = mid + trilinear_vec(u_half, mask.grid_coords(mid));
                const Vec3 direct = p + u_full(i, j, k);
                worst = std::max(worst, (composed - direct).norm());
            }
    CHECK(worst < 0.1);
}

TEST_CASE("fused displacement keeps a positive Jacobian", "[simulate]") {
    MaskGrid mask = make_ellipsoid_mask(Vec3(12, 9, 7), 10.0);
    PolyaffineModel model = sag_model(mask);
    const auto u = fuse_transform(model, 1.0, mask);
    for (int k = 1; k < mask.nz() - 1; ++k)
        for (int j = 1; j < mask.ny() - 1; ++j)
            for (int i = 1; i < mask.nx() - 1; ++i) {
                if (!mask(i, j, k)) continue;
                Mat3 J;
                for (int a = 0; a < 3; ++a) {
                    Vec3 dp = Vec3::Zero();
                    dp[a] = 1.0;
                    const Vec3 fwd = u(i + (a == 0), j + (a == 1), k + (a == 2));
                    const Vec3 bwd = u(i - (a == 0), j - (a == 1), k - (a == 2));
                    J.col(a) = dp + (fwd - bwd) / (2.0 * mask.spacing()[a]);
                }
                CHECK(J.determinant() > 0.0);
            }
}

TEST_CASE("cycles revisit the rest state", "[simulate]") {
    MaskGrid mask = make_ellipsoid_mask(Vec3(12, 9, 7), 10.0);
    PolyaffineModel model = sag_model(mask, 0.8);
    QuadMesh mesh = make_quad_ellipsoid(11.6, 8.6, 6.6, 6, Mat3::Identity(),
                                        shape_pca(mask).centroid);
    const SimulatedSequence seq = make_cycle(model, mask, mesh, 3, 2);
    REQUIRE(seq.frame_count() == 1 + 2 * 2 * 3);
    REQUIRE(seq.s.front() == 0.0);
    REQUIRE(seq.s.back() == 0.0);

    // ground-truth trajectories return to start after each full cycle
    for (int t = 0; t < seq.frame_count(); ++t) {
        if (!seq.is_rest(t)) continue;
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
            CHECK((seq.meshes[t][v] - mesh.vertices[v]).norm() < 0.5);
    }

    // rest-frame mask equals the rest mask almost exactly (Dice > 0.995)
    const MaskGrid& end = seq.masks.back();
    std::size_t inter = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) inter += (mask[i] && end[i]);
    const double dice = 2.0 * double(inter) /
                        double(foreground_count(mask) + foreground_count(end));
    CHECK(dice > 0.995);
}

TEST_CASE("frame schedule matches the paper-scale sequence length", "[simulate]") {
    MaskGrid mask = make_ellipsoid_mask(Vec3(10, 8, 6), 9.0);
    PolyaffineModel model = sag_model(mask, 0.3);
    QuadMesh mesh = make_quad_ellipsoid(9.6, 7.6, 5.6, 4, Mat3::Identity(),
                                        shape_pca(mask).centroid);
    const SimulatedSequence seq = make_cycle(model, mask, mesh, 26, 8);
    CHECK(seq.frame_count() == 1 + 8 * 52); // 417 frames ~ "nearly 400 volumes"
    double v0 = mask_volume(mask);
    for (int t = 0; t < seq.frame_count(); t += 40)
        CHECK(std::abs(mask_volume(seq.masks[t]) - v0) / v0 < 0.06);
}

TEST_CASE("sag model partitions the foreground into four bands", "[simulate]") {
    MaskGrid mask = make_ellipsoid_mask(Vec3(12, 9, 7), 10.0);
    PolyaffineModel model = sag_model(mask);
    REQUIRE(model.regions.size() == 4);
    std::array<std::size_t, 5> count = {0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < mask.size(); ++i) {
        CHECK((model.region_labels[i] != 0) == (mask[i] != 0));
        ++count[model.region_labels[i]];
    }
    for (int b = 1; b <= 4; ++b) CHECK(count[b] > 0);
}

TEST_CASE("sag displaces the inferior third downward", "[simulate]") {
    MaskGrid mask = make_ellipsoid_mask(Vec3(12, 9, 9), 12.0);
    PolyaffineModel model = sag_model(mask, 1.4);
    const Vec3 c = shape_pca(mask).centroid;

    std::vector<Vec3> inferior;
    for (int k = 0; k < mask.nz(); ++k)
        for (int j = 0; j < mask.ny(); ++j)
            for (int i = 0; i < mask.nx(); ++i)
                if (mask(i, j, k) && mask.world(i, j, k)[2] < c[2] - 3.0)
                    inferior.push_back(mask.world(i, j, k));
    const auto moved = warp_points(model, 1.0, inferior);
    Vec3 before = Vec3::Zero(), after = Vec3::Zero();
    for (std::size_t i = 0; i < inferior.size(); ++i) {
        before += inferior[i];
        after += moved[i];
    }
    before /= double(inferior.size());
    after /= double(inferior.size());
    CHECK(before[2] - after[2] > 2.0);

    // s = 0 is the identity
    const auto still = warp_points(model, 0.0, inferior);
    for (std::size_t i = 0; i < inferior.size(); ++i)
        CHECK((still[i] - inferior[i]).norm() < 1e-12);
}

TEST_CASE("non-invertible affine is rejected", "[simulate]") {
    MaskGrid mask = make_ball_mask(6.0, 6.0);
    PolyaffineModel model = identity_model(mask);
    model.regions[0].log_scale = Vec3(std::log(-1.0), 0, 0); // NaN log
    CHECK_THROWS_AS(fuse_transform(model, 1.0, mask), Error);
}
