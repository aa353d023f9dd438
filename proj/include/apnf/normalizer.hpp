#pragma once

// Lie-transform partial normal form: builds the generating sequence
// chi_1..chi_r, the resonant parts Z_1..Z_r and the exact remainder of
//
//   T_chi (h + mu eta + eps f) = h + mu eta + Z^{(r)} + R^{(r+1)} .
//
// The slow-time conjugate momentum eta is never stored: its Lie image is
// closed under  L_chi eta = -d chi/d xi , so every E_s eta is an ordinary
// series.  All identities hold exactly in the truncated algebra; the
// per-step residual  L_h chi_s + Z_s - psi_s  vanishes at caps.

#include <climits>
#include <map>
#include <string>
#include <vector>

#include "fts.hpp"
#include "hamiltonian.hpp"
#include "resonance.hpp"

namespace apnf {

struct SmallDivisorError : std::runtime_error {
    IntVec k;
    double divisor;
    SmallDivisorError(IntVec k_, double div, double alpha)
        : std::runtime_error("small divisor at harmonic k=" + format_harmonic(k_) +
                             ": effective |<k,omega>| = " + std::to_string(div) +
                             " <= alpha = " + std::to_string(alpha)),
          k(std::move(k_)),
          divisor(div) {}
};

inline FTSeries with_caps(const FTSeries& f, Caps caps) {
    FTSeries out(f.dim(), f.center(), caps, f.real_valued());
    for (const auto& [t, c] : f.terms()) out.accumulate(t, c);
    out.add_defect(f.defect());
    return out;
}

inline FTSeries lie_derivative(const FTSeries& g, const FTSeries& chi) {
    return poisson_bracket(g, chi);
}

// ----------------------------------------------------------- E_s tables

namespace lie_detail {

// Extends table[0..s-1] of E_j g by one order:
//   E_s g = (1/s) sum_{j=1}^{min(s, #chi)} j L_{chi_j} E_{s-j} g .
inline FTSeries next_e_entry(const std::vector<FTSeries>& table,
                             const std::vector<FTSeries>& chi) {
    const int s = (int)table.size();
    FTSeries acc = table[0].zero_like();
    const int jtop = std::min<int>(s, (int)chi.size());
    for (int j = 1; j <= jtop; ++j)
        acc = add(acc, scale(poisson_bracket(table[s - j], chi[j - 1]),
                             Complex((double)j / s, 0.0)));
    return acc;
}

// Same recursion with the eta base case: table index s holds E_s eta for
// s >= 1 (E_0 eta = eta itself is not a series and handled via the rule
// L_{chi_j} eta = -d chi_j / d xi).
inline FTSeries next_eta_entry(const std::vector<FTSeries>& table,
                               const std::vector<FTSeries>& chi,
                               const FTSeries& structure) {
    const int s = (int)table.size() + 1;  // order being produced
    FTSeries acc = structure.zero_like();
    const int jtop = std::min<int>(s - 1, (int)chi.size());
    for (int j = 1; j <= jtop; ++j)
        acc = add(acc, scale(poisson_bracket(table[s - j - 1], chi[j - 1]),
                             Complex((double)j / s, 0.0)));
    if (s <= (int)chi.size())
        acc = add(acc, scale(partial_xi(chi[s - 1]), Complex(-1.0, 0.0)));
    return acc;
}

}  // namespace lie_detail

// E_s applied to an ordinary series g; requires s <= chi.size().
inline FTSeries E_op(int s, const std::vector<FTSeries>& chi, const FTSeries& g) {
    if (s < 0) throw std::invalid_argument("E_op: order must be nonnegative");
    if (s > (int)chi.size())
        throw std::invalid_argument("E_op: order exceeds available generators");
    std::vector<FTSeries> table{g};
    for (int j = 1; j <= s; ++j) table.push_back(lie_detail::next_e_entry(table, chi));
    return table[s];
}

// E_s eta, s >= 1; requires s <= chi.size().
inline FTSeries eta_image(int s, const std::vector<FTSeries>& chi) {
    if (s < 1) throw std::invalid_argument("eta_image: order must be >= 1");
    if (s > (int)chi.size())
        throw std::invalid_argument("eta_image: order exceeds available generators");
    std::vector<FTSeries> table;
    for (int j = 1; j <= s; ++j)
        table.push_back(lie_detail::next_eta_entry(table, chi, chi[0]));
    return table[s - 1];
}

// ------------------------------------------------------ homological step

// Per-harmonic divisor data: <k,omega(I)> = c0 + P(I-I0), inverted as a
// truncated geometric series in the quotient ring.
class DivisorSolver {
public:
    DivisorSolver(const FTSeries& h, const DomainParams& dom) : dom_(dom) {
        n_ = h.dim();
        caps_ = h.caps();
        for (int i = 0; i < n_; ++i) {
            FTSeries di = partial_action(h, i);
            std::map<std::vector<int>, double> poly;
            for (const auto& [t, c] : di.terms()) poly[t.m] = c.real();
            grad_.push_back(std::move(poly));
        }
    }

    struct Entry {
        double c0 = 0.0;      // divisor at the expansion center
        double margin = 0.0;  // majorant of the I-dependent part on width delta
        double eff = 0.0;     // c0 magnitude minus margin
        std::map<std::vector<int>, double> inverse;  // truncated 1/<k,omega(I)>
    };

    const Entry& entry(const IntVec& k) {
        auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
        Entry e;
        std::map<std::vector<int>, double> divisor;
        for (int i = 0; i < n_; ++i)
            if (k[i] != 0)
                for (const auto& [m, c] : grad_[i]) divisor[m] += k[i] * c;
        std::vector<int> zero(n_, 0);
        auto z = divisor.find(zero);
        e.c0 = (z == divisor.end()) ? 0.0 : z->second;
        if (z != divisor.end()) divisor.erase(z);
        for (const auto& [m, c] : divisor)
            e.margin += std::abs(c) * std::pow(dom_.delta, l1norm(m));
        e.eff = std::abs(e.c0) - e.margin;
        if (e.c0 != 0.0) e.inverse = invert(e.c0, divisor);
        return cache_.emplace(k, std::move(e)).first->second;
    }

private:
    // V with (c0 + P) V = 1 modulo Taylor degree > cap.
    std::map<std::vector<int>, double> invert(
        double c0, const std::map<std::vector<int>, double>& p) const {
        std::map<std::vector<int>, double> v;
        std::vector<std::vector<int>> idx = multi_indices(caps_.taylor);
        for (const auto& m : idx) {
            if (l1norm(m) == 0) {
                v[m] = 1.0 / c0;
                continue;
            }
            double acc = 0.0;
            for (const auto& [mp, cp] : p) {
                std::vector<int> rest(n_);
                bool fits = true;
                for (int i = 0; i < n_; ++i) {
                    rest[i] = m[i] - mp[i];
                    if (rest[i] < 0) {
                        fits = false;
                        break;
                    }
                }
                if (!fits) continue;
                auto vr = v.find(rest);
                if (vr != v.end()) acc += cp * vr->second;
            }
            if (acc != 0.0) v[m] = -acc / c0;
        }
        return v;
    }

    // all multi-indices with |m| <= cap, in increasing |m| order
    std::vector<std::vector<int>> multi_indices(int cap) const {
        std::vector<std::vector<int>> out;
        std::vector<int> m(n_, 0);
        std::function<void(int, int)> rec = [&](int pos, int budget) {
            if (pos == n_) {
                out.push_back(m);
                return;
            }
            for (int v = 0; v <= budget; ++v) {
                m[pos] = v;
                rec(pos + 1, budget - v);
            }
            m[pos] = 0;
        };
        rec(0, cap);
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return l1norm(a) < l1norm(b);
        });
        return out;
    }

    int n_;
    Caps caps_;
    DomainParams dom_;
    std::vector<std::map<std::vector<int>, double>> grad_;
    std::map<IntVec, Entry> cache_;
};

struct HomologicalSolution {
    FTSeries chi;
    FTSeries Z;
    double divisor_min = std::numeric_limits<double>::infinity();      // |c0| over used k
    double divisor_min_eff = std::numeric_limits<double>::infinity();  // delta-extended
};

// Splits psi into the resonant part Z (k = 0 or k in M, kept with its xi
// dependence) and the generator chi solving  L_h chi + Z = psi  with the
// I-dependent divisor inverted in the quotient ring.  alpha > 0 enforces
// the non-resonance floor per harmonic; alpha == 0 only demands a
// positive effective divisor and records the minimum encountered.
inline HomologicalSolution solve_homological(const FTSeries& psi,
                                             const ResonanceModule& mod,
                                             DivisorSolver& divisors, double alpha) {
    HomologicalSolution out{psi.zero_like(), psi.zero_like()};
    std::map<IntVec, bool> resonant_cache;
    auto resonant = [&](const IntVec& k) {
        if (l1norm(k) == 0) return true;
        auto it = resonant_cache.find(k);
        if (it != resonant_cache.end()) return it->second;
        bool r = mod.contains(k);
        resonant_cache.emplace(k, r);
        return r;
    };
    for (const auto& [t, c] : psi.terms()) {
        if (resonant(t.k)) {
            out.Z.accumulate(t, c);
            continue;
        }
        const auto& e = divisors.entry(t.k);
        if (std::abs(e.c0) <= alpha || e.eff <= std::max(alpha, 0.0))
            throw SmallDivisorError(t.k, e.eff, alpha);
        out.divisor_min = std::min(out.divisor_min, std::abs(e.c0));
        out.divisor_min_eff = std::min(out.divisor_min_eff, e.eff);
        // chi_k = psi_k / (i <k,omega(I)>)
        TermKey s = t;
        for (const auto& [mv, v] : e.inverse) {
            for (int i = 0; i < psi.dim(); ++i) s.m[i] = t.m[i] + mv[i];
            out.chi.accumulate(s, Complex(0.0, -1.0) * v * c);
        }
    }
    if (psi.real_valued()) {
        out.chi.set_real_valued(true);
        out.chi.symmetrize_real();
        out.Z.set_real_valued(true);
        out.Z.symmetrize_real();
    }
    out.chi.add_defect(psi.defect());
    return out;
}

// ------------------------------------------------------------- normalize

struct NormalizeOptions {
    double prune_threshold = 1e-300;  // effectively off by default
    int taylor_work = 0;              // 0: max(f cap, degree of h)
    int xi_work = 0;                  // 0: f cap
    int kmax_work = 0;                // 0: unbounded (exact harmonic algebra)
    int max_lie_order = 0;            // 0: r + 60
    double tail_rtol = 1e-15;
    bool include_eta = true;  // false drops all eta terms (autonomous path)
};

struct StepDiagnostics {
    int s = 0;
    double d_s = 0.0;               // domain restriction fraction of this step
    double psi_norm = 0.0;          // at (1 - d_s)(delta, sigma)
    double chi_norm = 0.0;
    double z_norm = 0.0;
    double psi_norm_full = 0.0;     // at (delta, sigma)
    double chi_norm_full = 0.0;
    double z_norm_full = 0.0;
    double residual_norm = 0.0;     // || L_h chi_s + Z_s - psi_s || at full widths
};

struct NormalFormResult {
    int r = 0;
    int K = 0;
    std::vector<FTSeries> chi, Z, psi;
    FTSeries remainder;
    double remainder_norm = 0.0;       // at (3/4)(delta, sigma)
    double remainder_norm_full = 0.0;  // at (delta, sigma)
    double defect = 0.0;               // pruned/tail mass in norm units
    double tail_bound = 0.0;           // geometric estimate of unsummed Lie tail
    int lie_orders_summed = 0;
    double divisor_min = std::numeric_limits<double>::infinity();
    double divisor_min_eff = std::numeric_limits<double>::infinity();
    double alpha_used = 0.0;
    std::vector<StepDiagnostics> step_norms;
    std::map<int, size_t> z_support_hist, chi_support_hist;
};

namespace lie_detail {

inline void post_op(FTSeries& f, const NormalizeOptions& opts, const DomainParams& dom) {
    if (opts.prune_threshold > 0.0) f.prune(opts.prune_threshold, dom);
}

}  // namespace lie_detail

// Forced homological hierarchy: with E_m h known for m < s,
//   psi_s = H_s + mu E_{s-1} eta + sum_{j=1}^{s-1} E_{s-j} H_j
//         + (1/s) sum_{j=1}^{s-1} j L_{chi_j} E_{s-j} h ,
// so that solving L_h chi_s + Z_s = psi_s makes the order-s content of
// T_chi(h + mu eta + eps f) exactly Z_s.  For mu = 0 this reduces to the
// classical autonomous recursion.
inline FTSeries psi_step(int s, const std::vector<FTSeries>& chi,
                         const std::vector<FTSeries>& H_parts, const FTSeries& h,
                         double mu) {
    if (s < 1) throw std::invalid_argument("psi_step: order must be >= 1");
    if ((int)chi.size() < s - 1)
        throw std::invalid_argument("psi_step: generators chi_1..chi_{s-1} required");
    const int jmax = (int)H_parts.size();
    FTSeries psi = h.zero_like();
    if (s <= jmax) psi = add(psi, H_parts[s - 1]);
    if (mu != 0.0 && s >= 2) psi = add(psi, scale(eta_image(s - 1, chi), mu));
    for (int j = 1; j <= std::min(s - 1, jmax); ++j)
        psi = add(psi, E_op(s - j, chi, H_parts[j - 1]));
    std::vector<FTSeries> h_table{h};
    for (int m = 1; m <= s - 1; ++m)
        h_table.push_back(lie_detail::next_e_entry(h_table, chi));
    for (int j = 1; j <= s - 1; ++j)
        psi = add(psi, scale(poisson_bracket(h_table[s - j], chi[j - 1]),
                             Complex((double)j / s, 0.0)));
    return psi;
}

inline NormalFormResult normalize(const HamiltonianSpec& spec, int r, int K,
                                  const ResonanceModule& mod, double alpha = 0.0,
                                  NormalizeOptions opts = {}) {
    spec.validate();
    if (r < 1 || K < 1) throw std::invalid_argument("normalize: r, K must be >= 1");
    if (mod.n != spec.n) throw std::invalid_argument("normalize: module dimension mismatch");

    int h_degree = 0;
    for (const auto& [t, c] : spec.h.terms()) h_degree = std::max(h_degree, l1norm(t.m));
    Caps wc;
    wc.taylor = opts.taylor_work > 0 ? opts.taylor_work
                                     : std::max(spec.f.caps().taylor, h_degree);
    wc.xi = opts.xi_work > 0 ? opts.xi_work : spec.f.caps().xi;
    wc.kmax = opts.kmax_work > 0 ? opts.kmax_work : INT_MAX / 4;
    const int smax = opts.max_lie_order > 0 ? opts.max_lie_order : r + 60;
    const DomainParams& dom = spec.dom;
    const DomainParams dom34 = dom.restricted(0.25);

    FTSeries hw = with_caps(spec.h, wc);
    std::vector<FTSeries> parts = harmonic_split(scale(spec.f, spec.eps), K);
    std::vector<FTSeries> H;  // blocks re-embedded in working caps
    for (auto& p : parts) H.push_back(with_caps(p, wc));
    const int jmax = (int)H.size();
    const bool with_eta = opts.include_eta && spec.mu != 0.0;

    NormalFormResult res;
    res.r = r;
    res.K = K;
    res.remainder = hw.zero_like();

    DivisorSolver divisors(hw, dom);
    std::vector<FTSeries> chi;
    std::vector<FTSeries> t_h{hw};                    // t_h[s] = E_s h
    std::vector<std::vector<FTSeries>> t_H(jmax);     // t_H[j][s] = E_s H_{j+1}
    for (int j = 0; j < jmax; ++j) t_H[j].push_back(H[j]);
    std::vector<FTSeries> t_eta;                      // t_eta[s-1] = E_s eta

    auto post = [&](FTSeries f) {
        lie_detail::post_op(f, opts, dom);
        return f;
    };

    for (int s = 1; s <= r; ++s) {
        // A_s: the part of E_s h not involving chi_s
        FTSeries a_s = hw.zero_like();
        for (int j = 1; j <= s - 1; ++j)
            a_s = add(a_s, scale(poisson_bracket(t_h[s - j], chi[j - 1]),
                                 Complex((double)j / s, 0.0)));
        a_s = post(std::move(a_s));

        FTSeries psi = a_s;
        if (s <= jmax) psi = add(psi, H[s - 1]);
        if (with_eta && s >= 2) psi = add(psi, scale(t_eta[s - 2], spec.mu));
        for (int j = 1; j <= std::min(s - 1, jmax); ++j)
            psi = add(psi, t_H[j - 1][s - j]);
        psi = post(std::move(psi));

        HomologicalSolution sol = solve_homological(psi, mod, divisors, alpha);
        res.divisor_min = std::min(res.divisor_min, sol.divisor_min);
        res.divisor_min_eff = std::min(res.divisor_min_eff, sol.divisor_min_eff);

        StepDiagnostics diag;
        diag.s = s;
        diag.d_s = (r > 1) ? dom.d * std::sqrt((double)(s - 1) / (r - 1)) : 0.0;
        DomainParams dsub = dom.restricted(diag.d_s);
        diag.psi_norm = fourier_norm(psi, dsub);
        diag.chi_norm = fourier_norm(sol.chi, dsub);
        diag.z_norm = fourier_norm(sol.Z, dsub);
        diag.psi_norm_full = fourier_norm(psi, dom);
        diag.chi_norm_full = fourier_norm(sol.chi, dom);
        diag.z_norm_full = fourier_norm(sol.Z, dom);
        diag.residual_norm = fourier_norm(
            sub(add(poisson_bracket(sol.chi, hw), sol.Z), psi), dom);
        res.step_norms.push_back(diag);

        res.psi.push_back(psi);
        res.chi.push_back(sol.chi);
        res.Z.push_back(sol.Z);
        chi.push_back(sol.chi);
        for (const auto& [t, c] : sol.Z.terms()) res.z_support_hist[l1norm(t.k)]++;
        for (const auto& [t, c] : sol.chi.terms()) res.chi_support_hist[l1norm(t.k)]++;

        // complete the order-s table entries now that chi_s exists
        t_h.push_back(post(add(a_s, poisson_bracket(hw, sol.chi))));
        for (int j = 0; j < jmax; ++j)
            t_H[j].push_back(post(lie_detail::next_e_entry(t_H[j], chi)));
        if (with_eta)
            t_eta.push_back(post(lie_detail::next_eta_entry(t_eta, chi, hw)));
    }

    // Exact remainder: orders above r of T_chi(h + mu eta + eps f).
    const double floor_scale = spec.eps * spec.effective_cf();
    double prev_gnorm = -1.0;
    int quiet = 0;
    int s = r;
    while (s < smax) {
        ++s;
        t_h.push_back(post(lie_detail::next_e_entry(t_h, chi)));
        for (int j = 0; j < jmax; ++j)
            t_H[j].push_back(post(lie_detail::next_e_entry(t_H[j], chi)));
        if (with_eta)
            t_eta.push_back(post(lie_detail::next_eta_entry(t_eta, chi, hw)));

        FTSeries g = t_h[s];
        if (with_eta) g = add(g, scale(t_eta[s - 2], spec.mu));
        for (int j = 1; j <= std::min(s, jmax); ++j) g = add(g, t_H[j - 1][s - j]);
        double gnorm = fourier_norm(g, dom34);
        res.remainder = add(res.remainder, g);
        res.lie_orders_summed = s;

        double refnorm = std::max(fourier_norm(res.remainder, dom34), floor_scale);
        bool tiny = gnorm <= opts.tail_rtol * refnorm;
        quiet = tiny ? quiet + 1 : 0;
        if (s > jmax && quiet >= 2) break;
        if (prev_gnorm > 0.0 && gnorm > 0.0 && s > jmax + 1) {
            double q = gnorm / prev_gnorm;
            if (q < 0.9) res.tail_bound = gnorm * q / (1.0 - q);
        }
        prev_gnorm = gnorm;
    }
    res.remainder_norm = fourier_norm(res.remainder, dom34);
    res.remainder_norm_full = fourier_norm(res.remainder, dom);
    res.defect = res.remainder.defect() + res.tail_bound;
    res.alpha_used = alpha > 0.0
                         ? alpha
                         : (std::isfinite(res.divisor_min_eff) ? 0.9 * res.divisor_min_eff : 0.0);
    return res;
}

// -------------------------------------------------------- coordinate map

// Images of the canonical coordinates under T_chi (new variables -> old).
// Action images are full series; angle images are phi_i plus the stored
// deviation series.  xi maps to itself.
struct CoordinateMap {
    int n = 1;
    std::vector<FTSeries> I_image;        // series in the new variables
    std::vector<FTSeries> phi_deviation;  // image is phi_i + deviation_i

    std::pair<std::vector<double>, std::vector<double>> apply(
        const std::vector<double>& I, const std::vector<double>& phi, double xi) const {
        std::vector<double> Iout(n), pout(n);
        for (int i = 0; i < n; ++i) {
            Iout[i] = evaluate(I_image[i], I, phi, xi).real();
            pout[i] = phi[i] + evaluate(phi_deviation[i], I, phi, xi).real();
        }
        return {Iout, pout};
    }
};

// max_order == 0 sums the Lie series until numerical convergence.
inline CoordinateMap map_coordinates(const std::vector<FTSeries>& chi, int max_order = 0,
                                     double rtol = 1e-16) {
    if (chi.empty()) throw std::invalid_argument("map_coordinates: empty generator list");
    const FTSeries& proto = chi[0];
    const int n = proto.dim();
    DomainParams unit;  // fixed reference widths for the stopping rule
    CoordinateMap map;
    map.n = n;
    const int r = (int)chi.size();
    const int top = max_order > 0 ? max_order : r + 60;
    for (int i = 0; i < n; ++i) {
        std::vector<FTSeries> table{action_series(n, proto.center(), proto.caps(), i)};
        FTSeries img = table[0];
        for (int s = 1; s <= top; ++s) {
            table.push_back(lie_detail::next_e_entry(table, chi));
            img = add(img, table[s]);
            if (max_order == 0 && s > r &&
                fourier_norm(table[s], unit) <= rtol * (1.0 + fourier_norm(img, unit)))
                break;
        }
        map.I_image.push_back(img);

        // angle deviation: base case L_{chi_j} phi_i = d chi_j / d I_i
        std::vector<FTSeries> ptab;  // ptab[s-1] = E_s phi_i
        FTSeries dev = proto.zero_like();
        for (int s = 1; s <= top; ++s) {
            FTSeries acc = proto.zero_like();
            const int jtop = std::min(s - 1, r);
            for (int j = 1; j <= jtop; ++j)
                acc = add(acc, scale(poisson_bracket(ptab[s - j - 1], chi[j - 1]),
                                     Complex((double)j / s, 0.0)));
            if (s <= r) acc = add(acc, partial_action(chi[s - 1], i));
            ptab.push_back(acc);
            dev = add(dev, acc);
            if (max_order == 0 && s > r &&
                fourier_norm(acc, unit) <= rtol * (1.0 + fourier_norm(dev, unit)))
                break;
        }
        map.phi_deviation.push_back(dev);
    }
    return map;
}

// Inverse Lie transform applied to a series (test/diagnostic tool):
//   D_s = -(sum_{j=1}^{s} E_j D_{s-j}),   T^{-1} = sum_s D_s .
inline FTSeries inverse_transform(const std::vector<FTSeries>& chi, const FTSeries& g,
                                  int order) {
    std::function<FTSeries(int, const FTSeries&)> dstep = [&](int s, const FTSeries& x) {
        if (s == 0) return x;
        FTSeries acc = x.zero_like();
        for (int j = 1; j <= s; ++j) {
            FTSeries inner = dstep(s - j, x);
            std::vector<FTSeries> table{inner};
            for (int l = 1; l <= j; ++l)
                table.push_back(lie_detail::next_e_entry(table, chi));
            acc = sub(acc, table[j]);
        }
        return acc;
    };
    FTSeries out = g.zero_like();
    for (int s = 0; s <= order; ++s) out = add(out, dstep(s, g));
    return out;
}

}  // namespace apnf
