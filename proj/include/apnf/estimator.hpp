#pragma once

// Explicit constants, thresholds and recurrences of the stability
// estimate: the norm majorant F~, the joint smallness parameter lambda,
// the harmonic-block decay rate h_decay = e^{-K sigma/2}, the majorant
// recurrences (beta, theta, gamma) with their closed-form bounds, the
// remainder bound 8 eps F~ Delta^r, and the full parameter-synthesis
// chain producing confinement radius and stability time.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace apnf {

inline constexpr double kEuler = 2.718281828459045235360287471352662498;

inline double f_tilde(double C_f, int n, double sigma) {
    if (!(sigma > 0.0 && sigma <= 1.0))
        throw std::invalid_argument("f_tilde: sigma must lie in (0,1]");
    if (n < 1) throw std::invalid_argument("f_tilde: n must be >= 1");
    const double q = std::exp(-sigma / 2.0);
    return C_f * std::pow((1.0 + q) / (1.0 - q), n);
}

inline double lambda_param(double eps, double mu, double f_tilde_val) {
    return mu + kEuler * f_tilde_val * eps;
}

struct ThresholdCheck {
    double Delta = 0.0;
    bool smallness_ok = false;
    bool kappa_ok = false;
};

inline ThresholdCheck delta_threshold(int r, double alpha, double delta, double sigma,
                                      double lambda, int K) {
    if (r < 1 || K < 1 || !(alpha > 0.0) || !(delta > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("delta_threshold: positive parameters required");
    ThresholdCheck out;
    const double hd = std::exp(-K * sigma / 2.0);
    out.Delta = 256.0 * r * lambda / (alpha * delta * sigma) + 4.0 * hd;
    out.smallness_ok = out.Delta <= 0.5;
    out.kappa_ok = hd >= 1.0 / (8.0 + 3.0 * kEuler * kEuler);
    return out;
}

inline double remainder_bound(double eps, double f_tilde_val, double Delta, int r) {
    return 8.0 * eps * f_tilde_val * std::pow(Delta, r);
}

inline bool minunmezzo_check(double F, double d, double alpha, double delta, double sigma,
                             double b) {
    if (!(d > 0.0 && d < 0.25))
        throw std::invalid_argument("minunmezzo_check: d must lie in (0,1/4)");
    return 2.0 * kEuler * F / (d * d * alpha * delta * sigma) + b <= 0.5;
}

// --------------------------------------------------- analytic constants

struct AnalyticConstants {
    // inputs
    int n = 1, r = 1, K = 1;
    double C_f = 0.0, sigma = 1.0, delta = 1.0, alpha = 1.0;
    double eps = 0.0, mu = 0.0;
    double d = 0.125;
    // derived
    double F_tilde = 0.0;  // norm majorant of the perturbation
    double F = 0.0;        // eps * F_tilde
    double lambda = 0.0;   // mu + e F_tilde eps
    double h_decay = 0.0;  // e^{-K sigma/2}
    double Gamma = 0.0;    // (alpha d sigma)^{-1}
    double C_r = 0.0;      // 4(r-1)F / (alpha e d^2 delta sigma)
    double b = 0.0;        // 4(h_decay + C_r + mu Gamma)
    double tau = 0.0;      // b - 2 C_r
    double Delta = 0.0;
    std::vector<double> d_s;  // per-step domain restriction fractions
    // flags
    bool smallness_ok = false;
    bool kappa_ok = false;
    bool cr_ok = false;         // 2 C_r <= 3 h_decay
    bool b_ok = false;          // b < 1
    bool minunmezzo_ok = false;
};

inline AnalyticConstants analytic_constants(int n, int r, int K, double C_f, double sigma,
                                            double delta, double alpha, double eps,
                                            double mu, double d = 0.125) {
    if (!(alpha > 0.0)) throw std::invalid_argument("analytic_constants: alpha must be > 0");
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("analytic_constants: delta must lie in (0,1]");
    if (r < 1 || K < 1)
        throw std::invalid_argument("analytic_constants: r, K must be >= 1");
    AnalyticConstants c;
    c.n = n;
    c.r = r;
    c.K = K;
    c.C_f = C_f;
    c.sigma = sigma;
    c.delta = delta;
    c.alpha = alpha;
    c.eps = eps;
    c.mu = mu;
    c.d = d;
    c.F_tilde = f_tilde(C_f, n, sigma);
    c.F = eps * c.F_tilde;
    c.lambda = lambda_param(eps, mu, c.F_tilde);
    c.h_decay = std::exp(-K * sigma / 2.0);
    c.Gamma = 1.0 / (alpha * d * sigma);
    c.C_r = 4.0 * (r - 1) * c.F / (alpha * kEuler * d * d * delta * sigma);
    c.b = 4.0 * (c.h_decay + c.C_r + mu * c.Gamma);
    c.tau = c.b - 2.0 * c.C_r;
    ThresholdCheck th = delta_threshold(r, alpha, delta, sigma, c.lambda, K);
    c.Delta = th.Delta;
    c.smallness_ok = th.smallness_ok;
    c.kappa_ok = th.kappa_ok;
    c.cr_ok = 2.0 * c.C_r <= 3.0 * c.h_decay;
    c.b_ok = c.b < 1.0;
    c.minunmezzo_ok = minunmezzo_check(c.F, d, alpha, delta, sigma, c.b);
    for (int s = 1; s <= r; ++s)
        c.d_s.push_back(r > 1 ? d * std::sqrt((double)(s - 1) / (r - 1)) : 0.0);
    return c;
}

// ------------------------------------------------------ the recurrences

struct SequenceTriple {
    std::vector<double> beta, theta, gamma;              // beta[s-1], theta[s] (theta[0]=1), gamma[s-1]
    std::vector<double> beta_bound, theta_bound, gamma_bound;
    double b = 0.0, tau = 0.0;
    bool cr_ok = false;  // 2 C_r <= 3 h_decay
    bool b_ok = false;   // b < 1
};

//   beta_s  = h^{s-1} + mu gamma_{s-1} + (1/s) sum l h^{l-1} theta_{s-l}
//             + (C_r/s) sum l beta_l h^{s-l-1}
//   theta_s = (C_r/s) sum_{l=1}^{s} l beta_l theta_{s-l}
//   gamma_s = (C_r/s) sum_{l=1}^{s-1} l beta_l gamma_{s-l} + Gamma beta_s
// with beta_1 = 1, theta_0 = 1, gamma_1 = Gamma, and the closed-form
// bounds tau^{s-1}/s, C_r(tau+C_r)^{s-1}/s, Gamma(tau+C_r)^{s-1}/s.
inline SequenceTriple run_recurrences(int r, double h_decay, double mu, double Gamma,
                                      double C_r) {
    if (r < 1) throw std::invalid_argument("run_recurrences: r must be >= 1");
    SequenceTriple t;
    t.b = 4.0 * (h_decay + C_r + mu * Gamma);
    t.tau = t.b - 2.0 * C_r;
    t.cr_ok = 2.0 * C_r <= 3.0 * h_decay;
    t.b_ok = t.b < 1.0;
    t.beta.assign(r, 0.0);
    t.gamma.assign(r, 0.0);
    t.theta.assign(r + 1, 0.0);
    t.beta[0] = 1.0;
    t.theta[0] = 1.0;
    t.theta[1] = C_r;  // (C_r/1) * 1 * beta_1 * theta_0
    t.gamma[0] = Gamma;
    for (int s = 2; s <= r; ++s) {
        double acc = std::pow(h_decay, s - 1) + mu * t.gamma[s - 2];
        for (int l = 1; l <= s - 1; ++l)
            acc += (double)l / s * std::pow(h_decay, l - 1) * t.theta[s - l];
        for (int l = 1; l <= s - 1; ++l)
            acc += C_r / s * l * t.beta[l - 1] * std::pow(h_decay, s - l - 1);
        t.beta[s - 1] = acc;
        double th = 0.0;
        for (int l = 1; l <= s; ++l) th += (double)l * t.beta[l - 1] * t.theta[s - l];
        t.theta[s] = C_r / s * th;
        double ga = 0.0;
        for (int l = 1; l <= s - 1; ++l) ga += (double)l * t.beta[l - 1] * t.gamma[s - l - 1];
        t.gamma[s - 1] = C_r / s * ga + Gamma * t.beta[s - 1];
    }
    for (int s = 1; s <= r; ++s) {
        t.beta_bound.push_back(std::pow(t.tau, s - 1) / s);
        t.theta_bound.push_back(C_r * std::pow(t.tau + C_r, s - 1) / s);
        t.gamma_bound.push_back(Gamma * std::pow(t.tau + C_r, s - 1) / s);
    }
    return t;
}

// ------------------------------------------------------- time estimates

inline double t_star(double delta, double eps, double Delta, int r, double C1) {
    if (!(C1 > 0.0)) throw std::invalid_argument("t_star: C1 must be > 0");
    if (eps == 0.0 || Delta == 0.0) return std::numeric_limits<double>::infinity();
    return kEuler * kEuler * delta / (C1 * eps * std::pow(Delta, r));
}

// -------------------------------------------------- parameter synthesis

struct StabilityPlan {
    // inputs
    double rho = 1.0, sigma = 1.0, M = 1.0, m = 1.0, C_f = 0.0;
    int n = 1;
    double eps = 0.0, mu = 0.0, T_prefactor = 1.0;
    // derived
    int a = 0;               // n^2 + n
    double Sigma = 0.0;      // 2(1 + 3 ln 2)/sigma
    int K = 0;               // ceil(Sigma)
    double delta_star = 0.0; // (n+2)! (4M/m)^{n+1} K^{a/2}
    double Delta_star = 0.0; // 2^{11} e delta_star M / (sigma K m^2 rho^2)
    double F_tilde = 0.0;
    double lambda = 0.0;
    double threshold = 0.0;  // 1/(3^4 Delta_star)
    bool threshold_ok = false;
    double delta = 0.0;      // (Delta_star lambda)^{1/4} rho
    int r = 0;               // floor((delta^2/(Delta_star rho^2 lambda))^{1/a})
    double Delta0 = 0.0;
    double radius = 0.0;     // (Delta_star lambda)^{1/4} rho
    double stability_time = 0.0;  // (T/eps) exp[(1/(Delta_star lambda))^{1/(2a)}]
};

inline StabilityPlan nekhoroshev_plan(double rho, double sigma, double M, double m,
                                      double C_f, int n, double eps, double mu,
                                      double T_prefactor = 1.0) {
    if (!(M >= m && m > 0.0))
        throw std::invalid_argument("nekhoroshev_plan: need M >= m > 0");
    if (!(rho > 0.0 && rho <= 1.0 && sigma > 0.0 && sigma <= 1.0))
        throw std::invalid_argument("nekhoroshev_plan: rho, sigma must lie in (0,1]");
    if (n < 1) throw std::invalid_argument("nekhoroshev_plan: n must be >= 1");
    StabilityPlan p;
    p.rho = rho;
    p.sigma = sigma;
    p.M = M;
    p.m = m;
    p.C_f = C_f;
    p.n = n;
    p.eps = eps;
    p.mu = mu;
    p.T_prefactor = T_prefactor;
    p.a = n * n + n;
    p.Sigma = 2.0 * (1.0 + 3.0 * std::log(2.0)) / sigma;
    p.K = (int)std::ceil(p.Sigma);
    double fact = 1.0;
    for (int i = 2; i <= n + 2; ++i) fact *= i;
    p.delta_star = fact * std::pow(4.0 * M / m, n + 1) * std::pow((double)p.K, p.a / 2.0);
    p.Delta_star = 2048.0 * kEuler * p.delta_star * M / (sigma * p.K * m * m * rho * rho);
    p.F_tilde = f_tilde(C_f, n, sigma);
    p.lambda = lambda_param(eps, mu, p.F_tilde);
    p.threshold = 1.0 / (81.0 * p.Delta_star);
    p.threshold_ok = p.lambda < p.threshold && p.lambda > 0.0;
    if (p.lambda > 0.0) {
        p.delta = std::pow(p.Delta_star * p.lambda, 0.25) * rho;
        p.radius = p.delta;
        p.r = (int)std::floor(std::pow(
            p.delta * p.delta / (p.Delta_star * rho * rho * p.lambda), 1.0 / p.a));
        p.Delta0 = p.Delta_star * std::pow((double)std::max(p.r, 1), p.a) * rho * rho *
                       p.lambda / (2.0 * kEuler * p.delta * p.delta) +
                   4.0 * std::exp(-p.K * sigma / 2.0);
        p.stability_time =
            eps > 0.0 ? T_prefactor / eps *
                            std::exp(std::pow(1.0 / (p.Delta_star * p.lambda),
                                              1.0 / (2.0 * p.a)))
                      : std::numeric_limits<double>::infinity();
    } else {
        p.stability_time = std::numeric_limits<double>::infinity();
    }
    return p;
}

}  // namespace apnf
