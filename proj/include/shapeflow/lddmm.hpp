#pragma once

#include "shapeflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace shapeflow {

/// Control points and momenta parameterizing a time-dependent velocity
/// field through a Gaussian kernel of width `kernel_width`.
struct ControlPointSystem {
    std::vector<Vec3> points;
    std::vector<Vec3> momenta;
    double kernel_width = 8.0;
    int time_steps = 15;

    void validate() const {
        if (points.empty() || points.size() != momenta.size())
            throw Error("ControlPointSystem: points/momenta size mismatch or empty");
        if (kernel_width <= 0) throw Error("ControlPointSystem: kernel_width must be positive");
        if (time_steps < 1) throw Error("ControlPointSystem: time_steps must be >= 1");
    }
};

inline double gauss_kernel(const Vec3& a, const Vec3& b, double sigma) {
    return std::exp(-(a - b).squaredNorm() / (sigma * sigma));
}

/// Kernel-weighted sum of the momenta, evaluated at arbitrary points.
inline std::vector<Vec3> velocity(std::span<const Vec3> at, std::span<const Vec3> q,
                                  std::span<const Vec3> mu, double sigma) {
    std::vector<Vec3> v(at.size(), Vec3::Zero());
    for (std::size_t a = 0; a < at.size(); ++a)
        for (std::size_t j = 0; j < q.size(); ++j)
            v[a] += gauss_kernel(at[a], q[j], sigma) * mu[j];
    return v;
}

inline double hamiltonian(std::span<const Vec3> q, std::span<const Vec3> mu, double sigma) {
    double h = 0;
    for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j)
            h += mu[i].dot(mu[j]) * gauss_kernel(q[i], q[j], sigma);
    return 0.5 * h;
}

namespace detail {

struct FlowState {
    std::vector<Vec3> q, mu, x;
};

/// Hamiltonian dynamics plus passive transport of the x points.
inline FlowState flow_dynamics(const FlowState& s, double sigma) {
    const std::size_t n = s.q.size();
    const double c2 = 2.0 / (sigma * sigma);
    FlowState d;
    d.q.assign(n, Vec3::Zero());
    d.mu.assign(n, Vec3::Zero());
    d.x.assign(s.x.size(), Vec3::Zero());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3 D = s.q[i] - s.q[j];
            const double K = std::exp(-D.squaredNorm() / (sigma * sigma));
            d.q[i] += K * s.mu[j];
            d.mu[i] += (c2 * s.mu[i].dot(s.mu[j]) * K) * D;
        }
    }
    for (std::size_t a = 0; a < s.x.size(); ++a)
        for (std::size_t j = 0; j < n; ++j)
            d.x[a] += std::exp(-(s.x[a] - s.q[j]).squaredNorm() / (sigma * sigma)) * s.mu[j];
    return d;
}

inline FlowState axpy(const FlowState& s, double h, const FlowState& d) {
    FlowState r = s;
    for (std::size_t i = 0; i < r.q.size(); ++i) {
        r.q[i] += h * d.q[i];
        r.mu[i] += h * d.mu[i];
    }
    for (std::size_t a = 0; a < r.x.size(); ++a) r.x[a] += h * d.x[a];
    return r;
}

/// Transpose-Jacobian product of flow_dynamics: given cotangents
/// (a, b, c) for (dq, dmu, dx), accumulates gradients wrt (q, mu, x).
inline FlowState flow_dynamics_vjp(const FlowState& s, const FlowState& w, double sigma) {
    const std::size_t n = s.q.size();
    const double c2 = 2.0 / (sigma * sigma);
    FlowState g;
    g.q.assign(n, Vec3::Zero());
    g.mu.assign(n, Vec3::Zero());
    g.x.assign(s.x.size(), Vec3::Zero());

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3 D = s.q[i] - s.q[j];
            const double K = std::exp(-D.squaredNorm() / (sigma * sigma));

            // dq_i = sum_j K_ij mu_j
            g.mu[j] += K * w.q[i];
            const double aDmu = w.q[i].dot(s.mu[j]) * c2 * K;
            g.q[i] -= aDmu * D;
            g.q[j] += aDmu * D;

            // dmu_i = c2 sum_j (mu_i . mu_j) K_ij D_ij
            const double m = s.mu[i].dot(s.mu[j]);
            const double sd = w.mu[i].dot(D);
            g.mu[i] += (c2 * K * sd) * s.mu[j];
            g.mu[j] += (c2 * K * sd) * s.mu[i];
            g.q[i] += (c2 * m * K) * w.mu[i] - (c2 * c2 * m * K * sd) * D;
            g.q[j] -= (c2 * m * K) * w.mu[i] - (c2 * c2 * m * K * sd) * D;
        }
    }
    for (std::size_t a = 0; a < s.x.size(); ++a)
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3 E = s.x[a] - s.q[j];
            const double K = std::exp(-E.squaredNorm() / (sigma * sigma));
            g.mu[j] += K * w.x[a];
            const double cDmu = w.x[a].dot(s.mu[j]) * c2 * K;
            g.x[a] -= cDmu * E;
            g.q[j] += cDmu * E;
        }
    return g;
}

inline bool finite(const FlowState& s) {
    auto ok = [](const std::vector<Vec3>& v) {
        return std::all_of(v.begin(), v.end(), [](const Vec3& p) { return p.allFinite(); });
    };
    return ok(s.q) && ok(s.mu) && ok(s.x);
}

} // namespace detail

/// Geodesic trajectory of a control-point system, integrated over [0,1]
/// with midpoint Runge-Kutta. Stores the state at every step boundary and
/// transports arbitrary point sets through the same discrete flow.
class GeodesicFlow {
public:
    GeodesicFlow(std::vector<detail::FlowState> states, double sigma)
        : states_(std::move(states)), sigma_(sigma) {}

    int time_steps() const { return int(states_.size()) - 1; }
    double kernel_width() const { return sigma_; }
    const std::vector<Vec3>& points_at(int step) const { return states_[step].q; }
    const std::vector<Vec3>& momenta_at(int step) const { return states_[step].mu; }

    double hamiltonian_at(int step) const {
        return shapeflow::hamiltonian(states_[step].q, states_[step].mu, sigma_);
    }

    /// Transport points through the flow; returns the position per step
    /// (trajectories[s][a] is point a at step s).
    std::vector<std::vector<Vec3>> transport_trajectory(std::span<const Vec3> x0) const {
        const int T = time_steps();
        const double h = 1.0 / T;
        std::vector<std::vector<Vec3>> traj(T + 1);
        traj[0].assign(x0.begin(), x0.end());
        for (int s = 0; s < T; ++s) {
            detail::FlowState st = states_[s];
            st.x = traj[s];
            const detail::FlowState d = detail::flow_dynamics(st, sigma_);
            const detail::FlowState mid = detail::axpy(st, h / 2.0, d);
            const detail::FlowState dm = detail::flow_dynamics(mid, sigma_);
            traj[s + 1] = detail::axpy(st, h, dm).x;
            if (!std::all_of(traj[s + 1].begin(), traj[s + 1].end(),
                             [](const Vec3& p) { return p.allFinite(); }))
                throw Error("GeodesicFlow: integration diverged");
        }
        return traj;
    }

    std::vector<Vec3> transport(std::span<const Vec3> x0) const {
        return transport_trajectory(x0).back();
    }

    /// Transport along the time-reversed velocity field (approximate inverse).
    std::vector<Vec3> transport_reverse(std::span<const Vec3> x1) const {
        const int T = time_steps();
        const double h = 1.0 / T;
        std::vector<Vec3> x(x1.begin(), x1.end());
        for (int s = T - 1; s >= 0; --s) {
            detail::FlowState st = states_[s];
            st.x = x;
            const detail::FlowState d = detail::flow_dynamics(st, sigma_);
            const detail::FlowState mid = detail::axpy(st, h / 2.0, d);
            // velocity of the forward field at the step midpoint, applied backward
            detail::FlowState mid_with_x = mid;
            mid_with_x.x = x;
            const detail::FlowState dm = detail::flow_dynamics(mid_with_x, sigma_);
            for (std::size_t a = 0; a < x.size(); ++a) x[a] -= h * dm.x[a];
        }
        return x;
    }

    const std::vector<detail::FlowState>& states() const { return states_; }

private:
    std::vector<detail::FlowState> states_;
    double sigma_;
};

/// Integrate Hamilton's equations from the initial control points and
/// momenta (midpoint RK2, `time_steps` steps over [0,1]).
inline GeodesicFlow shoot(const ControlPointSystem& sys) {
    sys.validate();
    const int T = sys.time_steps;
    const double h = 1.0 / T;
    std::vector<detail::FlowState> states;
    states.reserve(T + 1);
    states.push_back({sys.points, sys.momenta, {}});
    for (int s = 0; s < T; ++s) {
        const detail::FlowState& st = states.back();
        const detail::FlowState d = detail::flow_dynamics(st, sys.kernel_width);
        const detail::FlowState mid = detail::axpy(st, h / 2.0, d);
        const detail::FlowState dm = detail::flow_dynamics(mid, sys.kernel_width);
        states.push_back(detail::axpy(st, h, dm));
        if (!detail::finite(states.back())) throw Error("shoot: integration diverged");
    }
    return GeodesicFlow(std::move(states), sys.kernel_width);
}

/// Transport arbitrary points through a shot flow (endpoint positions).
inline std::vector<Vec3> flow_points(const GeodesicFlow& flow, std::span<const Vec3> x0) {
    return flow.transport(x0);
}

/// Mean closest-point distance from each point to the cloud.
inline double tracking_error(std::span<const Vec3> points, std::span<const Vec3> cloud) {
    if (points.empty() || cloud.empty()) throw Error("tracking_error: empty point set");
    double sum = 0;
    for (const Vec3& p : points) {
        double best = std::numeric_limits<double>::max();
        for (const Vec3& c : cloud) best = std::min(best, (p - c).squaredNorm());
        sum += std::sqrt(best);
    }
    return sum / double(points.size());
}

struct RegistrationParams {
    double kernel_width = 8.0;
    int time_steps = 15;
    int max_iterations = 100;
    double data_weight = 1.0;   ///< weight of the closest-point attachment
    double reg_weight = 1e-4;   ///< weight of the deformation norm mu^T K mu
    double control_spacing = 0; ///< grid spacing for control points; 0 = kernel_width
    double rel_tol = 1e-6;      ///< relative loss decrease treated as converged
    int max_line_search = 30;
    /// explicit control points; when set, the per-source grid is skipped
    /// (track_sequence uses this to keep one grid across all frames)
    std::vector<Vec3> control_points;
};

struct RegistrationResult {
    ControlPointSystem system;
    std::vector<Vec3> transported_source;
    double loss = 0;
    double residual = 0; ///< mean closest-point distance, transported source -> target
    int iterations = 0;
    bool converged = false;
    std::string warning;
};

namespace detail {

/// Symmetrized mean squared closest-point distance and its gradient with
/// respect to the transported source points. Correspondence-free.
inline double closest_point_loss(std::span<const Vec3> x, std::span<const Vec3> target,
                                 std::vector<Vec3>* grad_x) {
    const std::size_t nx = x.size(), nc = target.size();
    if (grad_x) grad_x->assign(nx, Vec3::Zero());
    double loss = 0;

    std::vector<int> nearest_of_x(nx);
    for (std::size_t a = 0; a < nx; ++a) {
        double best = std::numeric_limits<double>::max();
        int arg = 0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double d2 = (x[a] - target[c]).squaredNorm();
            if (d2 < best) {
                best = d2;
                arg = int(c);
            }
        }
        nearest_of_x[a] = arg;
        loss += best / double(nx);
        if (grad_x) (*grad_x)[a] += (2.0 / double(nx)) * (x[a] - target[arg]);
    }
    for (std::size_t c = 0; c < nc; ++c) {
        double best = std::numeric_limits<double>::max();
        int arg = 0;
        for (std::size_t a = 0; a < nx; ++a) {
            const double d2 = (target[c] - x[a]).squaredNorm();
            if (d2 < best) {
                best = d2;
                arg = int(a);
            }
        }
        loss += best / double(nc);
        if (grad_x) (*grad_x)[arg] += (2.0 / double(nc)) * (x[arg] - target[c]);
    }
    return loss;
}

/// Shooting-based registration loss over the initial momenta, with the
/// adjoint of the discrete RK2 integrator for the exact gradient.
class ShootingProblem {
public:
    ShootingProblem(std::vector<Vec3> q0, std::span<const Vec3> source,
                    std::span<const Vec3> target, const RegistrationParams& p)
        : q0_(std::move(q0)), source_(source.begin(), source.end()),
          target_(target.begin(), target.end()), p_(p) {}

    const std::vector<Vec3>& control_points() const { return q0_; }

    /// Forward pass: integrates (q, mu, x) and stores the per-step states.
    std::vector<FlowState> integrate(const std::vector<Vec3>& mu0) const {
        const int T = p_.time_steps;
        const double h = 1.0 / T;
        std::vector<FlowState> states;
        states.reserve(T + 1);
        states.push_back({q0_, mu0, source_});
        for (int s = 0; s < T; ++s) {
            const FlowState& st = states.back();
            const FlowState d = flow_dynamics(st, p_.kernel_width);
            const FlowState mid = axpy(st, h / 2.0, d);
            const FlowState dm = flow_dynamics(mid, p_.kernel_width);
            states.push_back(axpy(st, h, dm));
            if (!finite(states.back())) throw Error("register: integration diverged");
        }
        return states;
    }

    double loss(const std::vector<Vec3>& mu0) const {
        const auto states = integrate(mu0);
        return loss_from_states(states, mu0);
    }

    double loss_and_grad(const std::vector<Vec3>& mu0, std::vector<Vec3>& grad) const {
        const auto states = integrate(mu0);
        const double L = loss_from_states(states, mu0);

        const int T = p_.time_steps;
        const double h = 1.0 / T;

        FlowState lam;
        lam.q.assign(q0_.size(), Vec3::Zero());
        lam.mu.assign(q0_.size(), Vec3::Zero());
        closest_point_loss(states.back().x, target_, &lam.x);
        for (auto& g : lam.x) g *= p_.data_weight;

        for (int s = T - 1; s >= 0; --s) {
            const FlowState& st = states[s];
            const FlowState d = flow_dynamics(st, p_.kernel_width);
            const FlowState mid = axpy(st, h / 2.0, d);
            FlowState u = flow_dynamics_vjp(mid, lam, p_.kernel_width);
            scale(u, h);
            FlowState uu = flow_dynamics_vjp(st, u, p_.kernel_width);
            scale(uu, h / 2.0);
            add(lam, u);
            add(lam, uu);
        }

        grad = lam.mu;
        // d/dmu0 of reg_weight * mu0^T K(q0,q0) mu0
        for (std::size_t i = 0; i < q0_.size(); ++i)
            for (std::size_t j = 0; j < q0_.size(); ++j)
                grad[i] += (2.0 * p_.reg_weight *
                            gauss_kernel(q0_[i], q0_[j], p_.kernel_width)) *
                           mu0[j];
        return L;
    }

    double data_residual(const std::vector<Vec3>& endpoint) const {
        return tracking_error(endpoint, target_);
    }

private:
    double loss_from_states(const std::vector<FlowState>& states,
                            const std::vector<Vec3>& mu0) const {
        const double d = closest_point_loss(states.back().x, target_, nullptr);
        double reg = 0;
        for (std::size_t i = 0; i < q0_.size(); ++i)
            for (std::size_t j = 0; j < q0_.size(); ++j)
                reg += mu0[i].dot(mu0[j]) * gauss_kernel(q0_[i], q0_[j], p_.kernel_width);
        return p_.data_weight * d + p_.reg_weight * reg;
    }

    static void scale(FlowState& s, double f) {
        for (auto& v : s.q) v *= f;
        for (auto& v : s.mu) v *= f;
        for (auto& v : s.x) v *= f;
    }
    static void add(FlowState& s, const FlowState& o) {
        for (std::size_t i = 0; i < s.q.size(); ++i) {
            s.q[i] += o.q[i];
            s.mu[i] += o.mu[i];
        }
        for (std::size_t a = 0; a < s.x.size(); ++a) s.x[a] += o.x[a];
    }

    std::vector<Vec3> q0_;
    std::vector<Vec3> source_;
    std::vector<Vec3> target_;
    RegistrationParams p_;
};

/// Control points on a regular grid over the source bounding box, keeping
/// only nodes within one spacing of the source points.
inline std::vector<Vec3> control_grid(std::span<const Vec3> source, double spacing) {
    Vec3 lo = source[0], hi = source[0];
    for (const Vec3& p : source) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    std::vector<Vec3> grid;
    const Vec3 span = hi - lo;
    std::array<int, 3> n;
    for (int a = 0; a < 3; ++a) n[a] = std::max(1, int(std::floor(span[a] / spacing)) + 2);
    const Vec3 start = (lo + hi) / 2.0 -
                       Vec3((n[0] - 1) * spacing / 2.0, (n[1] - 1) * spacing / 2.0,
                            (n[2] - 1) * spacing / 2.0);
    const double keep2 = sqr(spacing);
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                Vec3 p = start + Vec3(i * spacing, j * spacing, k * spacing);
                for (const Vec3& s : source)
                    if ((p - s).squaredNorm() <= keep2) {
                        grid.push_back(p);
                        break;
                    }
            }
    if (grid.empty()) {
        Vec3 c = Vec3::Zero();
        for (const Vec3& p : source) c += p;
        grid.push_back(c / double(source.size()));
    }
    return grid;
}

} // namespace detail

/// Register a source point set onto a target cloud by gradient descent on
/// the initial momenta (control points stay fixed), with a backtracking
/// line search. The transported source is the registered configuration.
inline RegistrationResult register_pointsets(std::span<const Vec3> source,
                                             std::span<const Vec3> target,
                                             const RegistrationParams& params = {}) {
    if (source.empty() || target.empty())
        throw Error("register_pointsets: empty point set");

    const double spacing =
        params.control_spacing > 0 ? params.control_spacing : params.kernel_width;
    std::vector<Vec3> controls = params.control_points.empty()
                                     ? detail::control_grid(source, spacing)
                                     : params.control_points;
    detail::ShootingProblem prob(std::move(controls), source, target, params);

    std::vector<Vec3> mu(prob.control_points().size(), Vec3::Zero());
    std::vector<Vec3> grad;
    double loss = prob.loss_and_grad(mu, grad);

    double step = 0;
    {
        double gmax = 0;
        for (const Vec3& g : grad) gmax = std::max(gmax, g.norm());
        step = gmax > 0 ? 0.5 / gmax : 1.0; // first trial moves momenta by ~0.5
    }

    RegistrationResult res;
    res.converged = false;
    int it = 0;
    for (; it < params.max_iterations; ++it) {
        double gnorm2 = 0;
        for (const Vec3& g : grad) gnorm2 += g.squaredNorm();
        if (gnorm2 == 0) {
            res.converged = true;
            break;
        }

        // backtracking line search
        bool accepted = false;
        std::vector<Vec3> trial(mu.size());
        for (int ls = 0; ls < params.max_line_search; ++ls) {
            for (std::size_t i = 0; i < mu.size(); ++i) trial[i] = mu[i] - step * grad[i];
            const double trial_loss = prob.loss(trial);
            if (std::isfinite(trial_loss) && trial_loss < loss) {
                const double old_loss = loss;
                mu = trial;
                loss = prob.loss_and_grad(mu, grad);
                step *= 1.5;
                accepted = true;
                if ((old_loss - trial_loss) <= params.rel_tol * std::abs(old_loss)) {
                    res.converged = true;
                    ++it;
                }
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.warning = "line search exhausted: loss stopped decreasing";
            break;
        }
        if (res.converged) break;
    }

    res.system.points = prob.control_points();
    res.system.momenta = mu;
    res.system.kernel_width = params.kernel_width;
    res.system.time_steps = params.time_steps;
    const auto states = prob.integrate(mu);
    res.transported_source = states.back().x;
    res.loss = loss;
    res.residual = prob.data_residual(res.transported_source);
    res.iterations = it;
    return res;
}

/// One tracked 4D mesh: fixed face table, one vertex array per frame.
struct TrackedSequence {
    std::vector<std::array<int, 4>> faces;
    std::vector<std::vector<Vec3>> frames;
    std::vector<double> residuals; ///< registration residual per transition

    int frame_count() const { return int(frames.size()); }
};

/// Chain registrations M_t -> C_{t+1} across the whole sequence; the face
/// table never changes and every frame keeps the same vertex count.
inline TrackedSequence track_sequence(const std::vector<std::array<int, 4>>& faces,
                                      const std::vector<Vec3>& m0,
                                      std::span<const std::vector<Vec3>> clouds,
                                      const RegistrationParams& params = {}) {
    if (clouds.size() < 2) throw Error("track_sequence: need at least two frames");
    TrackedSequence seq;
    seq.faces = faces;
    seq.frames.push_back(m0);
    // one control grid for the whole sequence keeps the deformation basis
    // stable from frame to frame
    RegistrationParams frame_params = params;
    if (frame_params.control_points.empty()) {
        const double spacing =
            params.control_spacing > 0 ? params.control_spacing : params.kernel_width;
        frame_params.control_points = detail::control_grid(m0, spacing);
    }
    for (std::size_t t = 0; t + 1 < clouds.size(); ++t) {
        RegistrationResult r;
        try {
            r = register_pointsets(seq.frames.back(), clouds[t + 1], frame_params);
        } catch (const Error& e) {
            throw Error("track_sequence: frame " + std::to_string(t + 1) + ": " + e.what());
        }
        seq.frames.push_back(std::move(r.transported_source));
        seq.residuals.push_back(r.residual);
    }
    return seq;
}

} // namespace shapeflow
