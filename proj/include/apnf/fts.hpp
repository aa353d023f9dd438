#pragma once

// Truncated Fourier-Taylor series in action-angle variables with a
// polynomial slow-time factor.  A series is a finite sum of terms
//
//     c * (I - I0)^m * exp(i k.phi) * xi^p
//
// with integer harmonic k, Taylor multi-index m and xi-power p, all
// bounded by per-series caps.  Taylor and xi truncation are quotient-ring
// operations (exact); harmonic truncation drops mass, which is tracked
// in the `defect` field.

#include <algorithm>
#include <cmath>
#include <complex>
#include <compare>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace apnf {

using Complex = std::complex<double>;

inline int l1norm(const std::vector<int>& v) {
    int s = 0;
    for (int x : v) s += std::abs(x);
    return s;
}

struct Caps {
    int kmax = 0;    // max |k| (l1)
    int taylor = 0;  // max |m| (l1)
    int xi = 0;      // max p

    friend bool operator==(const Caps&, const Caps&) = default;
};

// Analyticity widths of the complex domain the norms refer to.
struct DomainParams {
    double delta = 1.0;         // action width, in (0,1]
    double sigma = 1.0;         // angle/xi width, in (0,1]
    double d = 0.125;           // restriction fraction, in [0,1)
    double xi_halfwidth = 1.0;  // half-width X of the real xi window

    DomainParams restricted(double frac) const {
        if (frac < 0.0 || frac >= 1.0)
            throw std::invalid_argument("DomainParams::restricted: fraction must be in [0,1)");
        DomainParams r = *this;
        r.delta *= (1.0 - frac);
        r.sigma *= (1.0 - frac);
        return r;
    }

    void validate() const {
        if (!(delta > 0.0 && delta <= 1.0) || !(sigma > 0.0 && sigma <= 1.0))
            throw std::invalid_argument("DomainParams: delta, sigma must lie in (0,1]");
        if (!(d >= 0.0 && d < 1.0))
            throw std::invalid_argument("DomainParams: d must lie in [0,1)");
        if (!(xi_halfwidth >= 0.0))
            throw std::invalid_argument("DomainParams: xi_halfwidth must be >= 0");
    }
};

struct TermKey {
    std::vector<int> k;
    std::vector<int> m;
    int p = 0;

    friend auto operator<=>(const TermKey&, const TermKey&) = default;

    TermKey negated() const {
        TermKey t = *this;
        for (int& x : t.k) x = -x;
        return t;
    }
};

inline std::string format_harmonic(const std::vector<int>& k) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
    os << ")";
    return os.str();
}

class FTSeries {
public:
    FTSeries() = default;

    FTSeries(int n, std::vector<double> center, Caps caps, bool real_valued = true)
        : n_(n), center_(std::move(center)), caps_(caps), real_(real_valued) {
        if (n <= 0) throw std::invalid_argument("FTSeries: dimension must be positive");
        if ((int)center_.size() != n)
            throw std::invalid_argument("FTSeries: center size does not match dimension");
    }

    int dim() const { return n_; }
    const std::vector<double>& center() const { return center_; }
    const Caps& caps() const { return caps_; }
    bool real_valued() const { return real_; }
    void set_real_valued(bool r) { real_ = r; }
    double defect() const { return defect_; }
    void add_defect(double d) { defect_ += d; }
    const std::map<TermKey, Complex>& terms() const { return coeffs_; }
    bool empty() const { return coeffs_.empty(); }
    size_t size() const { return coeffs_.size(); }

    bool structurally_compatible(const FTSeries& o) const {
        return n_ == o.n_ && center_ == o.center_ && caps_ == o.caps_;
    }

    void require_compatible(const FTSeries& o, const char* who) const {
        if (n_ != o.n_)
            throw std::invalid_argument(std::string(who) + ": dimension mismatch");
        if (center_ != o.center_)
            throw std::invalid_argument(std::string(who) + ": expansion center mismatch");
        if (!(caps_ == o.caps_))
            throw std::invalid_argument(std::string(who) + ": caps mismatch");
    }

    bool within_caps(const TermKey& t) const {
        return l1norm(t.k) <= caps_.kmax && l1norm(t.m) <= caps_.taylor && t.p <= caps_.xi;
    }

    // Accumulate a coefficient; Taylor/xi overflow is dropped exactly
    // (quotient ring), harmonic overflow is recorded as defect mass.
    void accumulate(const TermKey& t, Complex c) {
        if (c == Complex(0.0, 0.0)) return;
        if ((int)t.k.size() != n_ || (int)t.m.size() != n_ || t.p < 0)
            throw std::invalid_argument("FTSeries::accumulate: malformed term key");
        for (int mi : t.m)
            if (mi < 0) throw std::invalid_argument("FTSeries::accumulate: negative Taylor index");
        if (l1norm(t.m) > caps_.taylor || t.p > caps_.xi) return;
        if (l1norm(t.k) > caps_.kmax) {
            defect_ += std::abs(c);
            return;
        }
        auto it = coeffs_.find(t);
        if (it == coeffs_.end()) {
            coeffs_.emplace(t, c);
        } else {
            it->second += c;
            if (it->second == Complex(0.0, 0.0)) coeffs_.erase(it);
        }
    }

    Complex coeff(const TermKey& t) const {
        auto it = coeffs_.find(t);
        return it == coeffs_.end() ? Complex(0.0, 0.0) : it->second;
    }

    FTSeries zero_like() const {
        return FTSeries(n_, center_, caps_, real_);
    }

    // Enforce coeff(-k,m,p) == conj(coeff(k,m,p)) by symmetrization.
    void symmetrize_real() {
        std::map<TermKey, Complex> out;
        for (const auto& [t, c] : coeffs_) {
            TermKey nt = t.negated();
            Complex sym = 0.5 * (c + std::conj(coeff(nt)));
            if (sym != Complex(0.0, 0.0)) {
                out[t] = sym;
                out[nt] = std::conj(sym);  // create the mirror term if absent
            }
        }
        coeffs_ = std::move(out);
        real_ = true;
    }

    bool conjugate_symmetric(double tol = 0.0) const {
        for (const auto& [t, c] : coeffs_) {
            Complex cm = coeff(t.negated());
            if (std::abs(c - std::conj(cm)) > tol) return false;
        }
        return true;
    }

    // Drop coefficients below `threshold` in magnitude; the removed mass,
    // weighted as in the Fourier norm on `dom`, goes into the defect.
    void prune(double threshold, const DomainParams& dom) {
        if (threshold <= 0.0) return;
        for (auto it = coeffs_.begin(); it != coeffs_.end();) {
            if (std::abs(it->second) < threshold) {
                defect_ += std::abs(it->second) * term_weight(it->first, dom);
                it = coeffs_.erase(it);
            } else {
                ++it;
            }
        }
    }

    static double term_weight(const TermKey& t, const DomainParams& dom) {
        return std::pow(dom.delta, l1norm(t.m)) *
               std::pow(dom.xi_halfwidth + dom.sigma, t.p) *
               std::exp(l1norm(t.k) * dom.sigma);
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [t, c] : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

private:
    int n_ = 1;
    std::vector<double> center_{0.0};
    Caps caps_{};
    bool real_ = true;
    double defect_ = 0.0;
    std::map<TermKey, Complex> coeffs_;
};

// ---------------------------------------------------------------- ring ops

inline FTSeries add(const FTSeries& f, const FTSeries& g) {
    f.require_compatible(g, "add");
    FTSeries out(f.dim(), f.center(), f.caps(), f.real_valued() && g.real_valued());
    for (const auto& [t, c] : f.terms()) out.accumulate(t, c);
    for (const auto& [t, c] : g.terms()) out.accumulate(t, c);
    out.add_defect(f.defect() + g.defect());
    return out;
}

inline FTSeries scale(const FTSeries& f, Complex a) {
    FTSeries out(f.dim(), f.center(), f.caps(),
                 f.real_valued() && a.imag() == 0.0);
    for (const auto& [t, c] : f.terms()) out.accumulate(t, a * c);
    out.add_defect(std::abs(a) * f.defect());
    return out;
}

inline FTSeries sub(const FTSeries& f, const FTSeries& g) {
    return add(f, scale(g, Complex(-1.0, 0.0)));
}

inline FTSeries mul(const FTSeries& f, const FTSeries& g) {
    f.require_compatible(g, "mul");
    FTSeries out(f.dim(), f.center(), f.caps(), f.real_valued() && g.real_valued());
    const int n = f.dim();
    TermKey t;
    t.k.resize(n);
    t.m.resize(n);
    for (const auto& [ta, ca] : f.terms()) {
        for (const auto& [tb, cb] : g.terms()) {
            for (int i = 0; i < n; ++i) {
                t.k[i] = ta.k[i] + tb.k[i];
                t.m[i] = ta.m[i] + tb.m[i];
            }
            t.p = ta.p + tb.p;
            out.accumulate(t, ca * cb);
        }
    }
    out.add_defect(f.defect() + g.defect());
    if (out.real_valued()) out.symmetrize_real();
    return out;
}

// ---------------------------------------------------------- derivatives

inline FTSeries partial_angle(const FTSeries& f, int i) {
    FTSeries out(f.dim(), f.center(), f.caps(), false);
    for (const auto& [t, c] : f.terms())
        if (t.k[i] != 0) out.accumulate(t, Complex(0.0, (double)t.k[i]) * c);
    out.set_real_valued(f.real_valued() && out.conjugate_symmetric(0.0));
    out.add_defect(f.defect());
    return out;
}

inline FTSeries partial_action(const FTSeries& f, int i) {
    FTSeries out(f.dim(), f.center(), f.caps(), f.real_valued());
    for (const auto& [t, c] : f.terms()) {
        if (t.m[i] == 0) continue;
        TermKey s = t;
        s.m[i] -= 1;
        out.accumulate(s, (double)t.m[i] * c);
    }
    out.add_defect(f.defect());
    return out;
}

inline FTSeries partial_xi(const FTSeries& f) {
    FTSeries out(f.dim(), f.center(), f.caps(), f.real_valued());
    for (const auto& [t, c] : f.terms()) {
        if (t.p == 0) continue;
        TermKey s = t;
        s.p -= 1;
        out.accumulate(s, (double)t.p * c);
    }
    out.add_defect(f.defect());
    return out;
}

// Reduced bracket for eta-independent series:
//   {f,g} = sum_i  d_phi_i f  d_I_i g  -  d_I_i f  d_phi_i g.
inline FTSeries poisson_bracket(const FTSeries& f, const FTSeries& g) {
    f.require_compatible(g, "poisson_bracket");
    FTSeries out = f.zero_like();
    out.set_real_valued(f.real_valued() && g.real_valued());
    for (int i = 0; i < f.dim(); ++i) {
        out = add(out, sub(mul(partial_angle(f, i), partial_action(g, i)),
                           mul(partial_action(f, i), partial_angle(g, i))));
    }
    if (out.real_valued()) out.symmetrize_real();
    return out;
}

// ------------------------------------------------------------------ norm

// Weighted l1 norm: sum_k M_k e^{|k| sigma} with the coefficient majorant
//   M_k = sum_{m,p} |c| delta^|m| (X + sigma)^p ,
// an upper bound for sup |f_k| over the complex extension of widths
// (delta, sigma) around the real xi window [-X, X].
inline double fourier_norm(const FTSeries& f, const DomainParams& dom) {
    dom.validate();
    double total = 0.0;
    for (const auto& [t, c] : f.terms())
        total += std::abs(c) * FTSeries::term_weight(t, dom);
    return total;
}

// --------------------------------------------------------------- splitting

// Blocks H_s collecting harmonics (s-1)K <= |k| < sK, s = 1..ceil((kmax+1)/K).
inline std::vector<FTSeries> harmonic_split(const FTSeries& f, int K) {
    if (K < 1) throw std::invalid_argument("harmonic_split: K must be >= 1");
    int nblocks = (f.caps().kmax + 1 + K - 1) / K;
    std::vector<FTSeries> parts(nblocks, f.zero_like());
    for (const auto& [t, c] : f.terms()) {
        int s = l1norm(t.k) / K;  // zero-based block index
        parts[s].accumulate(t, c);
    }
    return parts;
}

// --------------------------------------------------------------- evaluate

inline Complex evaluate(const FTSeries& f, const std::vector<double>& I,
                        const std::vector<double>& phi, double xi) {
    if ((int)I.size() != f.dim() || (int)phi.size() != f.dim())
        throw std::invalid_argument("evaluate: point dimension mismatch");
    const int n = f.dim();
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = I[i] - f.center()[i];
    Complex total(0.0, 0.0);
    for (const auto& [t, c] : f.terms()) {
        double mono = 1.0;
        double ang = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < t.m[i]; ++j) mono *= u[i];
            ang += t.k[i] * phi[i];
        }
        for (int j = 0; j < t.p; ++j) mono *= xi;
        total += c * mono * std::polar(1.0, ang);
    }
    return total;
}

// ------------------------------------------------------------ convenience

inline FTSeries constant_series(int n, std::vector<double> center, Caps caps, Complex c) {
    FTSeries f(n, std::move(center), caps, c.imag() == 0.0);
    if (c != Complex(0.0, 0.0))
        f.accumulate(TermKey{std::vector<int>(n, 0), std::vector<int>(n, 0), 0}, c);
    return f;
}

// The coordinate function I_i, i.e. center_i + (I - I0)_i.
inline FTSeries action_series(int n, std::vector<double> center, Caps caps, int i) {
    FTSeries f(n, center, caps, true);
    f.accumulate(TermKey{std::vector<int>(n, 0), std::vector<int>(n, 0), 0},
                 Complex(center[i], 0.0));
    std::vector<int> m(n, 0);
    m[i] = 1;
    f.accumulate(TermKey{std::vector<int>(n, 0), m, 0}, Complex(1.0, 0.0));
    return f;
}

inline FTSeries xi_series(int n, std::vector<double> center, Caps caps) {
    FTSeries f(n, std::move(center), caps, true);
    f.accumulate(TermKey{std::vector<int>(n, 0), std::vector<int>(n, 0), 1},
                 Complex(1.0, 0.0));
    return f;
}

inline double max_coeff_distance(const FTSeries& a, const FTSeries& b) {
    double m = 0.0;
    for (const auto& [t, c] : a.terms()) m = std::max(m, std::abs(c - b.coeff(t)));
    for (const auto& [t, c] : b.terms()) m = std::max(m, std::abs(c - a.coeff(t)));
    return m;
}

}  // namespace apnf
