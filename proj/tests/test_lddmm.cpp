#include <catch2/catch.hpp>

#include "shapeflow/lddmm.hpp"
#include "shapeflow/mesh_gen.hpp"

using namespace shapeflow;

TEST_CASE("velocity is zero with zero momenta", "[lddmm]") {
    std::vector<Vec3> q = {{0, 0, 0}, {5, 0, 0}};
    std::vector<Vec3> mu = {Vec3::Zero(), Vec3::Zero()};
    const auto v = velocity(std::vector<Vec3>{{1, 2, 3}}, q, mu, 4.0);
    CHECK(v[0].norm() == 0.0);
}

TEST_CASE("velocity at a control point with a single particle", "[lddmm]") {
    std::vector<Vec3> q = {{1, 2, 3}};
    std::vector<Vec3> mu = {{0.5, -1.0, 2.0}};
    const auto v = velocity(q, q, mu, 4.0);
    CHECK((v[0] - mu[0]).norm() < 1e-15); // K(0) = 1
}

TEST_CASE("opposite momenta cancel at the midpoint", "[lddmm]") {
    std::vector<Vec3> q = {{-3, 0, 0}, {3, 0, 0}};
    std::vector<Vec3> mu = {{1, 2, 3}, {-1, -2, -3}};
    const auto v = velocity(std::vector<Vec3>{Vec3::Zero()}, q, mu, 4.0);
    CHECK(v[0].norm() < 1e-15);
}

TEST_CASE("zero momenta shoot to the identity", "[lddmm]") {
    ControlPointSystem sys;
    sys.points = {{0, 0, 0}, {4, 1, -2}};
    sys.momenta = {Vec3::Zero(), Vec3::Zero()};
    const GeodesicFlow flow = shoot(sys);
    CHECK((flow.points_at(sys.time_steps)[0] - sys.points[0]).norm() == 0.0);
    CHECK((flow.points_at(sys.time_steps)[1] - sys.points[1]).norm() == 0.0);

    const std::vector<Vec3> probe = {{1, 1, 1}};
    CHECK((flow.transport(probe)[0] - probe[0]).norm() == 0.0);
}

TEST_CASE("single particle travels in a straight line", "[lddmm]") {
    ControlPointSystem sys;
    sys.points = {{1, 2, 3}};
    sys.momenta = {{2.0, -1.0, 0.5}};
    const GeodesicFlow flow = shoot(sys);
    const Vec3 expected = sys.points[0] + sys.momenta[0];
    CHECK((flow.points_at(sys.time_steps)[0] - expected).norm() < 1e-6);
}

TEST_CASE("Hamiltonian is conserved on a two-point system", "[lddmm]") {
    ControlPointSystem sys;
    sys.points = {{0, 0, 0}, {6, 0, 0}};
    sys.momenta = {{3, 1, 0}, {-2, 2, 1}};
    sys.kernel_width = 8.0;
    sys.time_steps = 15;
    const GeodesicFlow flow = shoot(sys);
    const double h0 = flow.hamiltonian_at(0);
    const double h1 = flow.hamiltonian_at(sys.time_steps);
    CHECK(std::abs(h1 - h0) / h0 < 0.01);

    sys.time_steps = 60;
    const GeodesicFlow fine = shoot(sys);
    CHECK(std::abs(fine.hamiltonian_at(60) - h0) / h0 < 0.001);
}

TEST_CASE("points far from all control points barely move", "[lddmm]") {
    ControlPointSystem sys;
    sys.points = {{0, 0, 0}};
    sys.momenta = {{1, 1, 1}};
    sys.kernel_width = 2.0;
    const GeodesicFlow flow = shoot(sys);
    const std::vector<Vec3> probe = {{13, 0, 0}}; // > 6 kernel widths away
    const auto moved = flow.transport(probe);
    CHECK((moved[0] - probe[0]).norm() < 1e-6 * sys.momenta[0].norm());
}

TEST_CASE("transported control points match the shot trajectory", "[lddmm]") {
    ControlPointSystem sys;
    sys.points = {{0, 0, 0}, {5, 2, 0}, {-3, 4, 1}};
    sys.momenta = {{1, 0.5, 0}, {-0.5, 1, 0.3}, {0.2, -0.4, 0.8}};
    sys.kernel_width = 5.0;
    const GeodesicFlow flow = shoot(sys);
    const auto moved = flow.transport(sys.points);
    for (int i = 0; i < 3; ++i)
        CHECK((moved[i] - flow.points_at(sys.time_steps)[i]).norm() < 1e-8);
}

TEST_CASE("forward then reversed transport returns near the start", "[lddmm]") {
    ControlPointSystem sys;
    sys.points = {{0, 0, 0}, {6, 1, -1}};
    sys.momenta = {{2.5, 1, 0}, {-1, 2.5, 1}};
    sys.kernel_width = 6.0;
    sys.time_steps = 20;
    const GeodesicFlow flow = shoot(sys);
    const std::vector<Vec3> x0 = {{1, 1, 0}, {4, -1, 2}, {2, 3, 1}};
    const auto x1 = flow.transport(x0);
    const auto back = flow.transport_reverse(x1);
    for (std::size_t i = 0; i < x0.size(); ++i)
        CHECK((back[i] - x0[i]).norm() < 0.1 * sys.kernel_width);
}

TEST_CASE("adjoint gradient matches finite differences", "[lddmm]") {
    std::vector<Vec3> source = {{0, 0, 0}, {2, 1, 0}, {1, -1, 1}, {0.5, 1.5, -0.5}};
    std::vector<Vec3> target = {{0.6, 0.2, 0}, {2.7, 1.1, 0.2}, {1.4, -0.9, 1.3},
                                {0.8, 1.9, -0.2}};
    RegistrationParams p;
    p.kernel_width = 2.0;
    p.time_steps = 8;
    p.reg_weight = 1e-3;
    detail::ShootingProblem prob({{0.5, 0.5, 0}, {1.5, 0.5, 0.5}}, source, target, p);

    std::vector<Vec3> mu = {{0.3, -0.2, 0.1}, {-0.1, 0.25, 0.2}};
    std::vector<Vec3> grad;
    prob.loss_and_grad(mu, grad);

    const double eps = 1e-6;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            auto up = mu, dn = mu;
            up[i][c] += eps;
            dn[i][c] -= eps;
            const double fd = (prob.loss(up) - prob.loss(dn)) / (2 * eps);
            CHECK(grad[i][c] == Approx(fd).margin(1e-5).epsilon(1e-4));
        }
}

TEST_CASE("registering a set onto itself stays at the identity", "[lddmm]") {
    QuadMesh sphere = make_quad_sphere(4, 5.0);
    RegistrationParams p;
    p.kernel_width = 4.0;
    const RegistrationResult r = register_pointsets(sphere.vertices, sphere.vertices, p);
    CHECK(r.residual < 1e-4);
    double max_mu = 0;
    for (const Vec3& m : r.system.momenta) max_mu = std::max(max_mu, m.norm());
    CHECK(max_mu < 1e-3);
}

TEST_CASE("a translation is recovered by a smooth flow", "[lddmm]") {
    QuadMesh sphere = make_quad_sphere(5, 6.0);
    std::vector<Vec3> target = sphere.vertices;
    for (Vec3& v : target) v += Vec3(3.0, 0, 0);
    RegistrationParams p;
    p.kernel_width = 12.0; // wide kernel: nearly rigid motion
    p.max_iterations = 150;
    const RegistrationResult r = register_pointsets(sphere.vertices, target, p);
    double mean_err = 0;
    for (std::size_t v = 0; v < target.size(); ++v)
        mean_err += (r.transported_source[v] - target[v]).norm();
    mean_err /= double(target.size());
    CHECK(mean_err < 0.3);
}

TEST_CASE("sphere registers onto an ellipsoid cloud", "[lddmm]") {
    QuadMesh sphere = make_quad_sphere(5, 8.0);
    QuadMesh target_mesh = make_quad_ellipsoid(10.0, 8.0, 6.5, 7);
    RegistrationParams p;
    p.kernel_width = 6.0;
    p.max_iterations = 150;
    const RegistrationResult r =
        register_pointsets(sphere.vertices, target_mesh.vertices, p);
    CHECK(r.residual < 1.0);
}

TEST_CASE("registration loss is non-increasing", "[lddmm]") {
    // the optimizer only accepts decreasing steps; a successful run on a
    // non-trivial pair must come back converged or stalled with a warning
    QuadMesh sphere = make_quad_sphere(4, 5.0);
    std::vector<Vec3> target = sphere.vertices;
    for (Vec3& v : target) v *= 1.15;
    RegistrationParams p;
    p.kernel_width = 5.0;
    p.max_iterations = 60;
    const RegistrationResult r = register_pointsets(sphere.vertices, target, p);
    CHECK(r.residual < 0.5);
}

TEST_CASE("tracking error identities", "[lddmm]") {
    QuadMesh sphere = make_quad_sphere(4, 5.0);
    CHECK(tracking_error(sphere.vertices, sphere.vertices) == 0.0);

    // offset every vertex along its normal by 0.5
    std::vector<Vec3> offset = sphere.vertices;
    for (Vec3& v : offset) v *= (5.5 / 5.0);
    // distance from offset points to the dense original cloud
    QuadMesh dense = make_quad_sphere(16, 5.0);
    const double e = tracking_error(offset, dense.vertices);
    CHECK(e == Approx(0.5).margin(0.05));
}

TEST_CASE("track_sequence keeps sizes and faces fixed", "[lddmm]") {
    QuadMesh sphere = make_quad_sphere(4, 6.0);
    // constant sequence with M_0 equal to the contour samples
    std::vector<std::vector<Vec3>> clouds(4, sphere.vertices);
    RegistrationParams p;
    p.kernel_width = 5.0;
    p.max_iterations = 40;
    const TrackedSequence seq = track_sequence(sphere.faces, sphere.vertices, clouds, p);
    REQUIRE(seq.frame_count() == 4);
    CHECK(seq.faces == sphere.faces);
    for (const auto& f : seq.frames) CHECK(f.size() == sphere.vertices.size());
    for (double r : seq.residuals) CHECK(r < 1e-6);
    for (std::size_t v = 0; v < sphere.vertices.size(); ++v)
        CHECK((seq.frames.back()[v] - sphere.vertices[v]).norm() < 1e-6);
}

TEST_CASE("tracking against denser resamplings stays on the surface", "[lddmm]") {
    QuadMesh sphere = make_quad_sphere(4, 6.0);
    std::vector<std::vector<Vec3>> clouds(4, make_quad_sphere(8, 6.0).vertices);
    RegistrationParams p;
    p.kernel_width = 5.0;
    p.max_iterations = 40;
    const TrackedSequence seq = track_sequence(sphere.faces, sphere.vertices, clouds, p);
    // the closest-point attachment may slide vertices tangentially toward
    // the cloud samples, but they must stay on the sphere
    for (const auto& frame : seq.frames)
        for (const Vec3& v : frame) CHECK(v.norm() == Approx(6.0).margin(0.15));
    for (double r : seq.residuals) CHECK(r < 0.3);
}

TEST_CASE("two-frame scaling is tracked radially", "[lddmm]") {
    QuadMesh sphere = make_quad_sphere(5, 8.0);
    std::vector<Vec3> scaled = sphere.vertices;
    for (Vec3& v : scaled) v *= 1.1;
    std::vector<std::vector<Vec3>> clouds = {make_quad_sphere(10, 8.0).vertices,
                                             make_quad_sphere(10, 8.0 * 1.1).vertices};
    RegistrationParams p;
    p.kernel_width = 8.0;
    p.max_iterations = 150;
    const TrackedSequence seq = track_sequence(sphere.faces, sphere.vertices, clouds, p);
    double mean_ratio = 0;
    for (std::size_t v = 0; v < sphere.vertices.size(); ++v)
        mean_ratio += seq.frames[1][v].norm() / sphere.vertices[v].norm();
    mean_ratio /= double(sphere.vertices.size());
    CHECK(mean_ratio == Approx(1.1).margin(0.02));
}
