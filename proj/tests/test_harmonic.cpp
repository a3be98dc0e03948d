#include <catch2/catch.hpp>

#include "fixtures.hpp"
#include "shapeflow/harmonic.hpp"

using namespace shapeflow;

TEST_CASE("parallel planes converge to the linear profile", "[harmonic]") {
    const auto lab = fixtures::slab_labels(11, 7);
    LaplaceOptions opts;
    opts.max_iter = 20000;
    opts.tol = 1e-5;
    const HarmonicField hf = solve_laplace(lab, opts);
    for (int k = 0; k < 7; ++k)
        for (int j = 0; j < 7; ++j)
            for (int i = 1; i < 10; ++i)
                CHECK(hf.h(i, j, k) == Approx(1e4 * (1.0 - i / 10.0)).margin(1.0));
}

TEST_CASE("zero iterations leave the domain at the initialization", "[harmonic]") {
    const auto lab = fixtures::slab_labels();
    LaplaceOptions opts;
    opts.max_iter = 0;
    const HarmonicField hf = solve_laplace(lab, opts);
    CHECK(hf.iterations_run == 0);
    for (int k = 0; k < 7; ++k)
        for (int j = 0; j < 7; ++j) {
            CHECK(hf.h(0, j, k) == 1e4);
            CHECK(hf.h(10, j, k) == 0.0);
            for (int i = 1; i < 10; ++i) CHECK(hf.h(i, j, k) == 0.0);
        }
}

TEST_CASE("boundary values stay bit-exact across sweeps", "[harmonic]") {
    const auto lab = fixtures::shell_labels(5.0, 12.0, 30);
    LaplaceOptions opts;
    opts.max_iter = 37;
    const HarmonicField hf = solve_laplace(lab, opts);
    for (int k = 0; k < 30; ++k)
        for (int j = 0; j < 30; ++j)
            for (int i = 0; i < 30; ++i) {
                if (lab.at(i, j, k) == VoxLabel::InteriorBoundary)
                    CHECK(hf.h(i, j, k) == 1e4);
                else if (lab.at(i, j, k) == VoxLabel::ExteriorBoundary)
                    CHECK(hf.h(i, j, k) == 0.0);
            }
}

TEST_CASE("discrete maximum principle holds at every stage", "[harmonic]") {
    const auto lab = fixtures::shell_labels(5.0, 12.0, 30);
    for (int iters : {1, 3, 10, 50, 200}) {
        LaplaceOptions opts;
        opts.max_iter = iters;
        const HarmonicField hf = solve_laplace(lab, opts);
        double lo = 1e30, hi = -1e30;
        for (int k = 0; k < 30; ++k)
            for (int j = 0; j < 30; ++j)
                for (int i = 0; i < 30; ++i)
                    if (lab.at(i, j, k) == VoxLabel::Domain) {
                        lo = std::min(lo, hf.h(i, j, k));
                        hi = std::max(hi, hf.h(i, j, k));
                    }
        CHECK(lo >= 0.0);
        CHECK(hi <= 1e4);
    }
}

TEST_CASE("Dirichlet energy is non-increasing across sweeps", "[harmonic]") {
    const auto lab = fixtures::shell_labels(5.0, 12.0, 30);
    double prev = std::numeric_limits<double>::max();
    for (int iters : {1, 2, 5, 10, 20, 40, 80, 160, 320}) {
        LaplaceOptions opts;
        opts.max_iter = iters;
        const HarmonicField hf = solve_laplace(lab, opts);
        const double e = dirichlet_energy(hf.h, lab);
        CHECK(e <= prev * (1.0 + 1e-12));
        prev = e;
    }
}

TEST_CASE("concentric spheres match the A + B/r profile", "[harmonic]") {
    const auto lab = fixtures::shell_labels(8.0, 24.0, 64);
    LaplaceOptions opts;
    opts.max_iter = 20000;
    opts.tol = 1e-5;
    const HarmonicField hf = solve_laplace(lab, opts);

    // least-squares A + B/r over the domain
    double s11 = 0, s1r = 0, srr = 0, sh = 0, shr = 0;
    for (int k = 0; k < 64; ++k)
        for (int j = 0; j < 64; ++j)
            for (int i = 0; i < 64; ++i) {
                if (lab.at(i, j, k) != VoxLabel::Domain) continue;
                const double x = 1.0 / (lab.labels.world(i, j, k) - lab.centroid).norm();
                const double y = hf.h(i, j, k);
                s11 += 1;
                s1r += x;
                srr += x * x;
                sh += y;
                shr += y * x;
            }
    const double det = s11 * srr - s1r * s1r;
    const double A = (srr * sh - s1r * shr) / det;
    const double B = (s11 * shr - s1r * sh) / det;

    // profile matches the harmonic form within 3% of the boundary value
    double max_err = 0;
    for (int k = 0; k < 64; ++k)
        for (int j = 0; j < 64; ++j)
            for (int i = 0; i < 64; ++i) {
                if (lab.at(i, j, k) != VoxLabel::Domain) continue;
                const double r = (lab.labels.world(i, j, k) - lab.centroid).norm();
                max_err = std::max(max_err, std::abs(hf.h(i, j, k) - (A + B / r)) / 1e4);
            }
    CHECK(max_err < 0.03);

    // the fit hits the prescribed boundary values at the voxelized boundary
    // radii (within half a voxel of nominal)
    const double r_in_eff = B / (1e4 - A);
    const double r_out_eff = -B / A;
    CHECK(r_in_eff == Approx(8.0).margin(0.5));
    CHECK(r_out_eff == Approx(24.0).margin(0.5));
}

TEST_CASE("shell solution is invariant under 90-degree rotation", "[harmonic]") {
    const int n = 40;
    const auto lab = fixtures::shell_labels(6.0, 15.0, n);
    LaplaceOptions opts;
    opts.max_iter = 400;
    const HarmonicField hf = solve_laplace(lab, opts);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                // (i, j) -> (j, n-1-i): rotation about the grid center z axis
                CHECK(hf.h(i, j, k) == Approx(hf.h(j, n - 1 - i, k)).margin(1e-6));
            }
}

TEST_CASE("anisotropic weights reduce to the plain average at unit spacing", "[harmonic]") {
    // a slab with spacing 2 in z must still give the linear-in-x profile
    auto lab = fixtures::slab_labels(11, 5);
    lab.labels.set_spacing(Vec3(1, 1, 2));
    LaplaceOptions opts;
    opts.max_iter = 5000;
    const HarmonicField hf = solve_laplace(lab, opts);
    for (int k = 0; k < 5; ++k)
        for (int j = 0; j < 5; ++j)
            for (int i = 1; i < 10; ++i)
                CHECK(hf.h(i, j, k) == Approx(1e4 * (1.0 - i / 10.0)).margin(1.0));
}
