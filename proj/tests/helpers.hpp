#pragma once

// Shared helpers for the unit and acceptance suites: random series
// generation and the bracket-norm inequality check.

#include <random>

#include "apnf/fts.hpp"

namespace testutil {

using apnf::Caps;
using apnf::Complex;
using apnf::DomainParams;
using apnf::FTSeries;
using apnf::TermKey;

// Random real-valued series with harmonics |k| <= kspread, Taylor degree
// <= degree, xi powers <= pmax, coefficients O(scale).
inline FTSeries random_series(std::mt19937& rng, int n, Caps caps, int kspread,
                              int degree, int pmax, double scale, int nterms = 12) {
    std::uniform_int_distribution<int> kd(-kspread, kspread);
    std::uniform_int_distribution<int> md(0, degree);
    std::uniform_int_distribution<int> pd(0, pmax);
    std::uniform_real_distribution<double> cd(-scale, scale);
    FTSeries f(n, std::vector<double>(n, 0.0), caps, true);
    for (int t = 0; t < nterms; ++t) {
        TermKey key;
        key.k.resize(n);
        key.m.resize(n);
        int mbudget = md(rng);
        for (int i = 0; i < n; ++i) {
            key.k[i] = kd(rng);
            int mi = std::uniform_int_distribution<int>(0, mbudget)(rng);
            key.m[i] = mi;
            mbudget -= mi;
        }
        key.p = pd(rng);
        Complex c(cd(rng), cd(rng));
        f.accumulate(key, c);
        TermKey neg = key.negated();
        f.accumulate(neg, std::conj(c));
    }
    f.symmetrize_real();
    return f;
}

struct Lemma33Result {
    double lhs = 0.0;  // ||L_G F|| on the triply-restricted domain
    double rhs = 0.0;  // C ||F|| ||G|| on the singly-restricted domains
};

inline Lemma33Result lemma33(const FTSeries& F, const FTSeries& G,
                             const DomainParams& dom, double d, double dp, double dpp) {
    Lemma33Result out;
    const double C =
        2.0 / (std::exp(1.0) * (d + dp) * (d + dpp) * dom.delta * dom.sigma);
    out.lhs = apnf::fourier_norm(apnf::poisson_bracket(F, G),
                                 dom.restricted(d + dp + dpp));
    out.rhs = C * apnf::fourier_norm(F, dom.restricted(dpp)) *
              apnf::fourier_norm(G, dom.restricted(dp));
    return out;
}

}  // namespace testutil
