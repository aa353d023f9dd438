#pragma once

// Problem data: H(I,phi,t) = h(I) + eps f(I,phi,mu t), seen in the
// extended phase space as h(I) + mu eta + eps f(I,phi,xi).

#include <Eigen/Dense>

#include "fts.hpp"

namespace apnf {

// Norm computed with explicit widths, bypassing the (0,1] range check so
// that doubled-sigma majorants can be formed.
inline double weighted_norm(const FTSeries& f, double delta, double sigma, double xi_halfwidth) {
    double total = 0.0;
    for (const auto& [t, c] : f.terms())
        total += std::abs(c) * std::pow(delta, l1norm(t.m)) *
                 std::pow(xi_halfwidth + sigma, t.p) * std::exp(l1norm(t.k) * sigma);
    return total;
}

struct HamiltonianSpec {
    int n = 1;
    FTSeries h;   // unperturbed part: no angle or xi dependence
    FTSeries f;   // perturbation shape
    double eps = 0.0;
    double mu = 0.0;
    DomainParams dom;
    double C_f = 0.0;  // sup-norm majorant of f on the doubled-sigma domain

    // Majorant bound for sup |f| on the domain with angle/xi widths doubled.
    double cf_majorant() const {
        return weighted_norm(f, dom.delta, 2.0 * dom.sigma, dom.xi_halfwidth);
    }

    void validate() const {
        dom.validate();
        if (h.dim() != n || f.dim() != n)
            throw std::invalid_argument("HamiltonianSpec: dimension mismatch");
        if (h.center() != f.center())
            throw std::invalid_argument("HamiltonianSpec: h and f must share the expansion center");
        for (const auto& [t, c] : h.terms())
            if (l1norm(t.k) != 0 || t.p != 0)
                throw std::invalid_argument("HamiltonianSpec: h must not depend on angles or xi");
        if (eps < 0.0 || mu < 0.0)
            throw std::invalid_argument("HamiltonianSpec: eps, mu must be nonnegative");
        if (C_f > 0.0 && C_f + 1e-12 * (1.0 + C_f) < cf_majorant())
            throw std::invalid_argument("HamiltonianSpec: C_f below the computed f majorant");
    }

    double effective_cf() const { return C_f > 0.0 ? C_f : cf_majorant(); }

    const std::vector<double>& center() const { return h.center(); }

    std::vector<FTSeries> omega_series() const {
        std::vector<FTSeries> w;
        for (int i = 0; i < n; ++i) w.push_back(partial_action(h, i));
        return w;
    }

    std::vector<double> omega_at(const std::vector<double>& I) const {
        const std::vector<double> phi0(n, 0.0);
        std::vector<double> w(n);
        for (int i = 0; i < n; ++i)
            w[i] = evaluate(partial_action(h, i), I, phi0, 0.0).real();
        return w;
    }

    Eigen::MatrixXd hessian_at(const std::vector<double>& I) const {
        const std::vector<double> phi0(n, 0.0);
        Eigen::MatrixXd H(n, n);
        for (int i = 0; i < n; ++i) {
            FTSeries di = partial_action(h, i);
            for (int j = 0; j < n; ++j)
                H(i, j) = evaluate(partial_action(di, j), I, phi0, 0.0).real();
        }
        return H;
    }

    // max row-sum norm of the Hessian over a sample, a Lipschitz constant
    // for omega used by the non-resonance margin
    double hessian_bound_at_center() const {
        Eigen::MatrixXd H = hessian_at(center());
        return H.cwiseAbs().rowwise().sum().maxCoeff();
    }
};

}  // namespace apnf
