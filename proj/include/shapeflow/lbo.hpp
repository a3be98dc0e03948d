#pragma once

#include "shapeflow/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace shapeflow {

/// Cotangent-weight stiffness matrix (positive semidefinite convention:
/// L_ii = sum of weights, L_ij = -w_ij).
inline Eigen::SparseMatrix<double> cotangent_stiffness(const TriMesh& mesh) {
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> trip;
    trip.reserve(mesh.faces.size() * 12);
    for (const auto& t : mesh.faces) {
        for (int c = 0; c < 3; ++c) {
            const int a = t[c], b = t[(c + 1) % 3], o = t[(c + 2) % 3];
            const Vec3 ea = mesh.vertices[a] - mesh.vertices[o];
            const Vec3 eb = mesh.vertices[b] - mesh.vertices[o];
            const double cross = ea.cross(eb).norm();
            if (cross < 1e-30) continue;
            const double w = 0.5 * ea.dot(eb) / cross; // cot(angle at o) / 2
            trip.emplace_back(a, b, -w);
            trip.emplace_back(b, a, -w);
            trip.emplace_back(a, a, w);
            trip.emplace_back(b, b, w);
        }
    }
    const int n = int(mesh.vertices.size());
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

/// Lumped (barycentric) vertex-area mass.
inline Eigen::VectorXd lumped_mass(const TriMesh& mesh) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.vertices.size());
    for (int f = 0; f < int(mesh.faces.size()); ++f) {
        const double a = mesh.face_area(f) / 3.0;
        for (int c = 0; c < 3; ++c) m(mesh.faces[f][c]) += a;
    }
    return m;
}

struct EigenPairs {
    Eigen::VectorXd eigenvalues;   ///< ascending
    Eigen::MatrixXd eigenfunctions; ///< one column per pair, M-orthonormal
    Eigen::VectorXd residuals;     ///< ||L x - lambda M x|| / ||M x||
};

/// Smallest k generalized eigenpairs of (L, M) by shifted inverse subspace
/// iteration with Rayleigh-Ritz extraction. Deterministic start vectors.
inline EigenPairs lbo_eigenfunctions(const TriMesh& mesh, int k, double tol = 1e-8,
                                     int max_iter = 500) {
    const int n = int(mesh.vertices.size());
    if (k < 1 || k > n) throw Error("lbo_eigenfunctions: bad k");
    const Eigen::SparseMatrix<double> L = cotangent_stiffness(mesh);
    const Eigen::VectorXd m = lumped_mass(mesh);
    if (m.minCoeff() <= 0) throw Error("lbo_eigenfunctions: vertex with zero area");

    // shift keeps the factorization positive definite despite the constant
    // null space; sized relative to the spectrum scale
    const double shift = 1e-3 * L.diagonal().sum() / m.sum();
    Eigen::SparseMatrix<double> A = L;
    for (int i = 0; i < n; ++i) A.coeffRef(i, i) += shift * m(i);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success)
        throw Error("lbo_eigenfunctions: factorization failed");

    const int block = std::min(n, k + std::max(3, k / 2));
    Eigen::MatrixXd X(n, block);
    {
        // deterministic start: constant, coordinates, then hashed noise
        X.col(0).setOnes();
        for (int c = 1; c < block; ++c)
            for (int i = 0; i < n; ++i) {
                if (c <= 3)
                    X(i, c) = mesh.vertices[i][c - 1];
                else {
                    SplitMix64 rng(std::uint64_t(c) * 0x9e3779b9u + i);
                    X(i, c) = rng.next_double() - 0.5;
                }
            }
    }

    auto m_orthonormalize = [&](Eigen::MatrixXd& V) {
        for (int c = 0; c < V.cols(); ++c) {
            for (int p = 0; p < c; ++p)
                V.col(c) -= (V.col(p).dot(m.asDiagonal() * V.col(c))) * V.col(p);
            const double norm = std::sqrt(V.col(c).dot(m.asDiagonal() * V.col(c)));
            if (norm < 1e-14)
                throw Error("lbo_eigenfunctions: subspace collapsed");
            V.col(c) /= norm;
        }
    };
    m_orthonormalize(X);

    Eigen::VectorXd lambda(block);
    Eigen::VectorXd prev = Eigen::VectorXd::Constant(block, 1e30);
    bool converged = false;
    for (int it = 0; it < max_iter && !converged; ++it) {
        Eigen::MatrixXd Y = solver.solve(m.asDiagonal() * X);
        m_orthonormalize(Y);
        // Rayleigh-Ritz on the M-orthonormal basis
        Eigen::MatrixXd H = Y.transpose() * (L * Y);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        X = Y * es.eigenvectors();
        lambda = es.eigenvalues();
        if ((lambda.head(k) - prev.head(k)).cwiseAbs().maxCoeff() <=
            tol * std::max(1.0, lambda.head(k).cwiseAbs().maxCoeff()))
            converged = true;
        prev = lambda;
    }

    EigenPairs out;
    out.eigenvalues = lambda.head(k);
    out.eigenfunctions = X.leftCols(k);
    out.residuals.resize(k);
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd r = L * X.col(c) - lambda(c) * (m.asDiagonal() * X.col(c));
        const double denom = (m.asDiagonal() * X.col(c)).norm();
        out.residuals(c) = r.norm() / std::max(denom, 1e-30);
    }
    if (!converged) {
        std::string msg = "lbo_eigenfunctions: no convergence; residuals:";
        for (int c = 0; c < k; ++c) msg += " " + std::to_string(out.residuals(c));
        throw Error(msg);
    }
    return out;
}

/// Number of maximal connected sign regions of a vertex function.
inline int nodal_domain_count(const TriMesh& mesh, const Eigen::VectorXd& values) {
    const int n = int(mesh.vertices.size());
    if (values.size() != n) throw Error("nodal_domain_count: size mismatch");
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto sign_of = [&](int v) { return values(v) >= 0 ? 1 : -1; };
    for (const auto& t : mesh.faces)
        for (int c = 0; c < 3; ++c) {
            const int a = t[c], b = t[(c + 1) % 3];
            if (sign_of(a) == sign_of(b)) parent[find(a)] = find(b);
        }
    std::set<int> roots;
    for (int v = 0; v < n; ++v) roots.insert(find(v));
    return int(roots.size());
}

/// Spherical map per vertex carrying a scalar value.
struct SphericalMap {
    std::vector<Vec3> positions; ///< unit vectors
    std::vector<double> values;
};

/// Eigenfunction-based spherical parameterization: among the first six
/// non-trivial eigenfunctions, take the three lowest with exactly two nodal
/// domains and normalize the triple per vertex. Signs are fixed so each
/// selected eigenfunction is positive at the vertex of maximal z.
inline SphericalMap lbo_spherical_map(const TriMesh& mesh, std::span<const double> carried) {
    if (carried.size() != mesh.vertices.size())
        throw Error("lbo_spherical_map: carried values size mismatch");
    const EigenPairs eig = lbo_eigenfunctions(mesh, 7);

    int top_vertex = 0;
    for (int v = 1; v < int(mesh.vertices.size()); ++v)
        if (mesh.vertices[v][2] > mesh.vertices[top_vertex][2]) top_vertex = v;

    std::vector<int> chosen;
    for (int c = 1; c < 7 && int(chosen.size()) < 3; ++c)
        if (nodal_domain_count(mesh, eig.eigenfunctions.col(c)) == 2) chosen.push_back(c);
    if (chosen.size() < 3)
        throw Error("lbo_spherical_map: fewer than 3 two-domain eigenfunctions in the first 6");

    SphericalMap map;
    map.values.assign(carried.begin(), carried.end());
    map.positions.resize(mesh.vertices.size());
    std::array<double, 3> sign;
    for (int a = 0; a < 3; ++a)
        sign[a] = eig.eigenfunctions(top_vertex, chosen[a]) >= 0 ? 1.0 : -1.0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        Vec3 p(sign[0] * eig.eigenfunctions(v, chosen[0]),
               sign[1] * eig.eigenfunctions(v, chosen[1]),
               sign[2] * eig.eigenfunctions(v, chosen[2]));
        const double len = p.norm();
        if (len < 1e-30) throw Error("lbo_spherical_map: vertex maps to the origin");
        map.positions[v] = p / len;
    }
    return map;
}

} // namespace shapeflow
