#pragma once

// Symplectic integration of H(I,phi,t) = h(I) + eps f(I,phi,mu t) with
// drift tracking against the stability plan.  The one-step map is the
// implicit midpoint rule; series are flattened into plain arrays so the
// inner fixed-point loop avoids map traversals.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimator.hpp"
#include "hamiltonian.hpp"
#include "resonance.hpp"

namespace apnf {

// Flat-term evaluator of the real part of a series at (I, phi, xi).
class CompiledSeries {
public:
    CompiledSeries() = default;

    explicit CompiledSeries(const FTSeries& f) : n_(f.dim()), center_(f.center()) {
        for (const auto& [t, c] : f.terms()) {
            k_.insert(k_.end(), t.k.begin(), t.k.end());
            m_.insert(m_.end(), t.m.begin(), t.m.end());
            p_.push_back(t.p);
            cre_.push_back(c.real());
            cim_.push_back(c.imag());
        }
    }

    double operator()(const double* I, const double* phi, double xi) const {
        double total = 0.0;
        const size_t nt = p_.size();
        for (size_t t = 0; t < nt; ++t) {
            double mono = 1.0, ang = 0.0;
            const int* k = &k_[t * n_];
            const int* m = &m_[t * n_];
            for (int i = 0; i < n_; ++i) {
                const double u = I[i] - center_[i];
                for (int j = 0; j < m[i]; ++j) mono *= u;
                ang += k[i] * phi[i];
            }
            for (int j = 0; j < p_[t]; ++j) mono *= xi;
            total += mono * (cre_[t] * std::cos(ang) - cim_[t] * std::sin(ang));
        }
        return total;
    }

private:
    int n_ = 0;
    std::vector<double> center_;
    std::vector<int> k_, m_, p_;
    std::vector<double> cre_, cim_;
};

// Canonical right-hand side: dI = -eps d_phi f, dphi = d_I h + eps d_I f.
class VectorField {
public:
    explicit VectorField(const HamiltonianSpec& spec)
        : n_(spec.n), eps_(spec.eps), mu_(spec.mu) {
        for (int i = 0; i < n_; ++i) {
            df_dphi_.emplace_back(partial_angle(spec.f, i));
            df_dI_.emplace_back(partial_action(spec.f, i));
            dh_dI_.emplace_back(partial_action(spec.h, i));
        }
        h_ = CompiledSeries(spec.h);
        f_ = CompiledSeries(spec.f);
        df_dxi_ = CompiledSeries(partial_xi(spec.f));
    }

    int dim() const { return n_; }
    double mu() const { return mu_; }
    double eps() const { return eps_; }

    void eval(const double* I, const double* phi, double t, double* dI,
              double* dphi) const {
        const double xi = mu_ * t;
        for (int i = 0; i < n_; ++i) {
            dI[i] = -eps_ * df_dphi_[i](I, phi, xi);
            dphi[i] = dh_dI_[i](I, phi, xi) + eps_ * df_dI_[i](I, phi, xi);
        }
    }

    double energy(const double* I, const double* phi, double t) const {
        const double xi = mu_ * t;
        return h_(I, phi, xi) + eps_ * f_(I, phi, xi);
    }

    // d/dt H along solutions equals eps mu d_xi f (chain-rule identity)
    double energy_rate(const double* I, const double* phi, double t) const {
        return eps_ * mu_ * df_dxi_(I, phi, mu_ * t);
    }

private:
    int n_;
    double eps_, mu_;
    std::vector<CompiledSeries> df_dphi_, df_dI_, dh_dI_;
    CompiledSeries h_, f_, df_dxi_;
};

inline std::pair<std::vector<double>, std::vector<double>> vector_field(
    const HamiltonianSpec& spec, const std::vector<double>& I,
    const std::vector<double>& phi, double t) {
    VectorField vf(spec);
    std::vector<double> dI(spec.n), dphi(spec.n);
    vf.eval(I.data(), phi.data(), t, dI.data(), dphi.data());
    return {dI, dphi};
}

struct IntegrateOptions {
    double fp_tol = 1e-14;
    int fp_max_iter = 50;
    int max_halvings = 10;
    size_t thin = 1;  // store every thin-th step (running stats use all)
    const ResonanceModule* module = nullptr;  // for plane_dev tracking
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> I;
    std::vector<std::vector<double>> phi;           // mod 2 pi
    std::vector<std::vector<double>> phi_unwrapped;
    std::vector<double> drift;      // running max |I(t) - I(t0)|
    std::vector<double> plane_dev;  // running max fast-drift-plane distance
    std::vector<double> energy;
    double max_drift = 0.0;
    double max_plane_dev = 0.0;
    double max_energy_residual = 0.0;  // |dH/dt - eps mu d_xi f| midpoint proxy
    size_t steps = 0;
    double t0 = 0.0, t_end = 0.0;
};

namespace integrate_detail {

// One implicit midpoint step of size h; returns false if the fixed point
// does not converge.
inline bool midpoint_step(const VectorField& vf, std::vector<double>& I,
                          std::vector<double>& phi, double t, double h,
                          const IntegrateOptions& opts) {
    const int n = vf.dim();
    std::vector<double> Im(I), pm(phi), dI(n), dphi(n);
    const double tm = t + 0.5 * h;
    for (int it = 0; it < opts.fp_max_iter; ++it) {
        vf.eval(Im.data(), pm.data(), tm, dI.data(), dphi.data());
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            double In = I[i] + 0.5 * h * dI[i];
            double pn = phi[i] + 0.5 * h * dphi[i];
            err = std::max(err, std::max(std::abs(In - Im[i]), std::abs(pn - pm[i])));
            Im[i] = In;
            pm[i] = pn;
        }
        if (err <= opts.fp_tol) {
            for (int i = 0; i < n; ++i) {
                I[i] = 2.0 * Im[i] - I[i];
                phi[i] = 2.0 * pm[i] - phi[i];
            }
            return true;
        }
    }
    return false;
}

inline void advance(const VectorField& vf, std::vector<double>& I,
                    std::vector<double>& phi, double t, double h,
                    const IntegrateOptions& opts, int depth) {
    if (midpoint_step(vf, I, phi, t, h, opts)) return;
    if (depth >= opts.max_halvings)
        throw std::runtime_error(
            "integrate: fixed-point iteration failed at t = " + std::to_string(t) +
            " after " + std::to_string(opts.max_halvings) + " halvings");
    advance(vf, I, phi, t, 0.5 * h, opts, depth + 1);
    advance(vf, I, phi, t + 0.5 * h, 0.5 * h, opts, depth + 1);
}

}  // namespace integrate_detail

inline Trajectory integrate(const HamiltonianSpec& spec, std::vector<double> I0,
                            std::vector<double> phi0, double t0, double t_span,
                            double step, IntegrateOptions opts = {}) {
    if (step == 0.0 || !std::isfinite(step) || t_span * step < 0.0)
        throw std::invalid_argument("integrate: step must be nonzero with the sign of t_span");
    if ((int)I0.size() != spec.n || (int)phi0.size() != spec.n)
        throw std::invalid_argument("integrate: initial condition dimension mismatch");
    VectorField vf(spec);
    const size_t nsteps = (size_t)std::llround(t_span / step);
    Trajectory traj;
    traj.t0 = t0;
    traj.steps = nsteps;
    std::vector<double> I = I0, phi = phi0;
    const double two_pi = 2.0 * std::acos(-1.0);
    double running_drift = 0.0, running_plane = 0.0;

    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.I.push_back(I);
        std::vector<double> pm(spec.n);
        for (int i = 0; i < spec.n; ++i) {
            pm[i] = std::fmod(phi[i], two_pi);
            if (pm[i] < 0.0) pm[i] += two_pi;
        }
        traj.phi.push_back(std::move(pm));
        traj.phi_unwrapped.push_back(phi);
        traj.drift.push_back(running_drift);
        traj.plane_dev.push_back(running_plane);
        traj.energy.push_back(vf.energy(I.data(), phi.data(), t));
    };

    record(t0);
    for (size_t k = 1; k <= nsteps; ++k) {
        const double t = t0 + (double)(k - 1) * step;
        integrate_detail::advance(vf, I, phi, t, step, opts, 0);
        double d2 = 0.0;
        for (int i = 0; i < spec.n; ++i) d2 += (I[i] - I0[i]) * (I[i] - I0[i]);
        running_drift = std::max(running_drift, std::sqrt(d2));
        if (opts.module)
            running_plane = std::max(running_plane,
                                     fast_drift_distance(I, I0, *opts.module));
        if (k % opts.thin == 0 || k == nsteps) record(t0 + (double)k * step);
    }
    traj.max_drift = running_drift;
    traj.max_plane_dev = running_plane;
    traj.t_end = t0 + (double)nsteps * step;
    return traj;
}

// ----------------------------------------------------------- drift report

struct DriftReport {
    double max_drift = 0.0;
    double radius = 0.0;
    bool within_radius = false;
    double elapsed = 0.0;
    double plan_time = 0.0;
    double covered_fraction = 0.0;  // elapsed / plan stability time
    bool plan_time_reached = false;
    // plane-of-fast-drift comparison (only when a module is supplied)
    bool has_plane_check = false;
    double max_plane_dev = 0.0;
    double plane_tolerance = 0.0;  // delta / 2
    bool plane_ok = false;
    double t0_star = 0.0;
    bool threshold_ok = false;
};

inline DriftReport drift_report(const Trajectory& traj, const StabilityPlan& plan,
                                const ResonanceModule* mod = nullptr, double C1 = 1.0) {
    DriftReport rep;
    rep.max_drift = traj.max_drift;
    rep.radius = plan.radius;
    rep.within_radius = traj.max_drift < plan.radius;
    rep.elapsed = traj.t_end - traj.t0;
    rep.plan_time = plan.stability_time;
    rep.covered_fraction =
        std::isfinite(plan.stability_time) && plan.stability_time > 0.0
            ? rep.elapsed / plan.stability_time
            : 0.0;
    rep.plan_time_reached = rep.covered_fraction >= 1.0;
    rep.threshold_ok = plan.threshold_ok;
    if (mod) {
        rep.has_plane_check = true;
        rep.max_plane_dev = traj.max_plane_dev;
        rep.plane_tolerance = plan.delta / 2.0;
        rep.t0_star = plan.Delta0 > 0.0 && plan.eps > 0.0 && plan.r >= 1
                          ? t_star(plan.delta, plan.eps, plan.Delta0, plan.r, C1)
                          : std::numeric_limits<double>::infinity();
        rep.plane_ok = traj.max_plane_dev <= rep.plane_tolerance;
    }
    return rep;
}

}  // namespace apnf
