#pragma once

// Resonance modules as saturated integer sublattices of Z^n, plus the
// non-resonance domain check and the convexity constants of the
// unperturbed Hamiltonian.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fts.hpp"

namespace apnf {

using IntVec = std::vector<int>;
using IntMat = std::vector<std::vector<std::int64_t>>;

// ---------------------------------------------------------------- lattice

namespace lattice_detail {

// Smith normal form diagonal of an integer matrix (destructive).
inline std::vector<std::int64_t> smith_diagonal(IntMat a) {
    const int rows = (int)a.size();
    const int cols = rows ? (int)a[0].size() : 0;
    std::vector<std::int64_t> divisors;
    int r0 = 0, c0 = 0;
    while (r0 < rows && c0 < cols) {
        // find a pivot
        int pr = -1, pc = -1;
        std::int64_t best = 0;
        for (int i = r0; i < rows; ++i)
            for (int j = c0; j < cols; ++j)
                if (a[i][j] != 0 && (best == 0 || std::abs(a[i][j]) < best)) {
                    best = std::abs(a[i][j]);
                    pr = i;
                    pc = j;
                }
        if (pr < 0) break;
        std::swap(a[r0], a[pr]);
        for (int i = 0; i < rows; ++i) std::swap(a[i][c0], a[i][pc]);
        bool clean = false;
        while (!clean) {
            clean = true;
            for (int i = r0 + 1; i < rows; ++i) {
                std::int64_t q = a[i][c0] / a[r0][c0];
                if (q != 0)
                    for (int j = c0; j < cols; ++j) a[i][j] -= q * a[r0][j];
                if (a[i][c0] != 0) {
                    std::swap(a[r0], a[i]);
                    clean = false;
                }
            }
            for (int j = c0 + 1; j < cols; ++j) {
                std::int64_t q = a[r0][j] / a[r0][c0];
                if (q != 0)
                    for (int i = r0; i < rows; ++i) a[i][j] -= q * a[i][c0];
                if (a[r0][j] != 0) {
                    for (int i = 0; i < rows; ++i) std::swap(a[i][c0], a[i][j]);
                    clean = false;
                }
            }
        }
        divisors.push_back(std::abs(a[r0][c0]));
        ++r0;
        ++c0;
    }
    // enforce the divisibility chain d_i | d_{i+1}: diag(a,b) ~ diag(gcd, lcm)
    for (bool moved = true; moved;) {
        moved = false;
        for (size_t i = 0; i + 1 < divisors.size(); ++i)
            if (divisors[i + 1] % divisors[i] != 0) {
                std::int64_t g = std::gcd(divisors[i], divisors[i + 1]);
                divisors[i + 1] = divisors[i] / g * divisors[i + 1];
                divisors[i] = g;
                moved = true;
            }
    }
    return divisors;
}

inline int rational_rank(IntMat a) {
    // fraction-free Gaussian elimination
    const int rows = (int)a.size();
    const int cols = rows ? (int)a[0].size() : 0;
    int rank = 0;
    for (int col = 0; col < cols && rank < rows; ++col) {
        int piv = -1;
        for (int i = rank; i < rows; ++i)
            if (a[i][col] != 0) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        std::swap(a[rank], a[piv]);
        for (int i = rank + 1; i < rows; ++i) {
            if (a[i][col] == 0) continue;
            std::int64_t p = a[rank][col], q = a[i][col];
            std::int64_t g = std::gcd(std::abs(p), std::abs(q));
            std::int64_t fp = p / g, fq = q / g;
            for (int j = col; j < cols; ++j) a[i][j] = a[i][j] * fp - a[rank][j] * fq;
        }
        ++rank;
    }
    return rank;
}

}  // namespace lattice_detail

struct ResonanceModule {
    int n = 1;
    std::vector<IntVec> basis;  // possibly empty: the zero module {0}

    int rank() const { return (int)basis.size(); }
    bool is_zero_module() const { return basis.empty(); }
    bool is_full_lattice() const { return rank() == n; }

    // Exact membership of k in the integer lattice generated by the basis.
    // Assumes an independent basis.
    bool contains(const IntVec& k) const {
        if ((int)k.size() != n) throw std::invalid_argument("ResonanceModule::contains: dimension");
        if (basis.empty()) return l1norm(k) == 0;
        // Solve basis^T c = k over Q by fraction-free elimination on the
        // augmented matrix, then demand an exact integral solution.
        const int r = rank();
        std::vector<std::vector<double>> M(n, std::vector<double>(r));
        for (int j = 0; j < r; ++j)
            for (int i = 0; i < n; ++i) M[i][j] = (double)basis[j][i];
        Eigen::MatrixXd A(n, r);
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) {
            b(i) = (double)k[i];
            for (int j = 0; j < r; ++j) A(i, j) = M[i][j];
        }
        Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
        if ((A * c - b).lpNorm<Eigen::Infinity>() > 1e-9) return false;  // not in span
        IntVec ci(r);
        for (int j = 0; j < r; ++j) {
            double rj = std::round(c(j));
            if (std::abs(c(j) - rj) > 1e-9) return false;
            ci[j] = (int)rj;
        }
        // exact verification of the rounded combination
        for (int i = 0; i < n; ++i) {
            std::int64_t s = 0;
            for (int j = 0; j < r; ++j) s += (std::int64_t)ci[j] * basis[j][i];
            if (s != k[i]) return false;
        }
        return true;
    }
};

struct ModuleCheck {
    bool ok = false;
    std::string reason;
    std::vector<std::int64_t> elementary_divisors;
};

// A basis generates a resonance module iff it is independent and the
// lattice it spans is saturated: span(M) intersect Z^n == M, i.e. all
// elementary divisors of the basis matrix equal 1.
inline ModuleCheck check_resonance_module(const std::vector<IntVec>& basis, int n) {
    ModuleCheck res;
    if (basis.empty()) {
        res.ok = true;
        res.reason = "zero module";
        return res;
    }
    IntMat m;
    for (const auto& v : basis) {
        if ((int)v.size() != n) {
            res.reason = "basis vector dimension mismatch";
            return res;
        }
        m.push_back(IntMat::value_type(v.begin(), v.end()));
    }
    if (lattice_detail::rational_rank(m) < (int)basis.size()) {
        res.reason = "basis vectors are rationally dependent";
        return res;
    }
    res.elementary_divisors = lattice_detail::smith_diagonal(m);
    for (std::int64_t d : res.elementary_divisors)
        if (d != 1) {
            res.reason = "lattice is not saturated (elementary divisor " +
                         std::to_string(d) + " != 1)";
            return res;
        }
    res.ok = true;
    res.reason = "saturated";
    return res;
}

inline bool is_resonance_module(const std::vector<IntVec>& basis, int n) {
    return check_resonance_module(basis, n).ok;
}

// ------------------------------------------------------------- fast drift

// Euclidean distance from I to the plane of fast drift I0 + span(M).
inline double fast_drift_distance(const std::vector<double>& I,
                                  const std::vector<double>& I0,
                                  const ResonanceModule& mod) {
    if (I.size() != I0.size() || (int)I.size() != mod.n)
        throw std::invalid_argument("fast_drift_distance: dimension mismatch");
    const int n = mod.n;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = I[i] - I0[i];
    if (mod.basis.empty()) return v.norm();
    const int r = mod.rank();
    Eigen::MatrixXd B(n, r);
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < n; ++i) B(i, j) = (double)mod.basis[j][i];
    Eigen::VectorXd c = (B.transpose() * B).ldlt().solve(B.transpose() * v);
    return (v - B * c).norm();
}

// ------------------------------------------------- non-resonance checking

struct NonresonanceRow {
    std::vector<double> I;
    double min_divisor = 0.0;       // margin-adjusted
    double min_divisor_raw = 0.0;   // at the sample point itself
    IntVec min_k;
    bool pass = true;
};

struct NonresonanceReport {
    bool pass = true;
    double alpha = 0.0;
    int N = 0;
    double margin_per_unit_k = 0.0;  // M_hess * delta
    double min_divisor = std::numeric_limits<double>::infinity();
    double min_divisor_raw = std::numeric_limits<double>::infinity();
    IntVec offending_k;
    std::vector<NonresonanceRow> rows;
};

namespace enum_detail {

// All k in Z^n with 0 < |k|_1 < N, visited in deterministic order.
inline void for_each_harmonic(int n, int N, const std::function<void(const IntVec&)>& fn) {
    IntVec k(n, 0);
    std::function<void(int, int)> rec = [&](int pos, int budget) {
        if (pos == n) {
            if (l1norm(k) > 0) fn(k);
            return;
        }
        for (int v = -budget; v <= budget; ++v) {
            k[pos] = v;
            rec(pos + 1, budget - std::abs(v));
        }
        k[pos] = 0;
    };
    rec(0, N - 1);
}

}  // namespace enum_detail

// Verifies |<omega(I),k>| > alpha + M_hess*delta*|k| for all sampled I and
// all k outside the module with 0 < |k| < N.  The margin covers the
// delta-extension of the action domain by a Lipschitz bound.
inline NonresonanceReport check_nonresonance(
    const std::function<std::vector<double>(const std::vector<double>&)>& omega,
    const std::vector<std::vector<double>>& sample, const ResonanceModule& mod,
    double alpha, int N, double delta, double m_hess) {
    if (N < 1) throw std::invalid_argument("check_nonresonance: N must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("check_nonresonance: alpha must be > 0");
    NonresonanceReport rep;
    rep.alpha = alpha;
    rep.N = N;
    rep.margin_per_unit_k = m_hess * delta;
    std::vector<IntVec> ks;
    enum_detail::for_each_harmonic(mod.n, N,
                                   [&](const IntVec& k) {
                                       if (!mod.contains(k)) ks.push_back(k);
                                   });
    for (const auto& I : sample) {
        NonresonanceRow row;
        row.I = I;
        std::vector<double> w = omega(I);
        row.min_divisor = std::numeric_limits<double>::infinity();
        row.min_divisor_raw = row.min_divisor;
        for (const auto& k : ks) {
            double dot = 0.0;
            for (int i = 0; i < mod.n; ++i) dot += w[i] * k[i];
            double raw = std::abs(dot);
            double adj = raw - rep.margin_per_unit_k * l1norm(k);
            row.min_divisor_raw = std::min(row.min_divisor_raw, raw);
            if (adj < row.min_divisor) {
                row.min_divisor = adj;
                row.min_k = k;
            }
        }
        row.pass = ks.empty() || row.min_divisor > alpha;
        if (row.min_divisor < rep.min_divisor) {
            rep.min_divisor = row.min_divisor;
            rep.offending_k = row.min_k;
        }
        rep.min_divisor_raw = std::min(rep.min_divisor_raw, row.min_divisor_raw);
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// ------------------------------------------------------------- convexity

struct ConvexityConstants {
    double m = 0.0;  // min over sample of smallest |eigenvalue|
    double M = 0.0;  // max over sample of operator norm
    bool convex_ok = true;
};

inline ConvexityConstants convexity_constants(
    const std::function<Eigen::MatrixXd(const std::vector<double>&)>& hessian,
    const std::vector<std::vector<double>>& sample) {
    if (sample.empty())
        throw std::invalid_argument("convexity_constants: nonempty sample required");
    ConvexityConstants out;
    out.m = std::numeric_limits<double>::infinity();
    for (const auto& I : sample) {
        Eigen::MatrixXd H = hessian(I);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
        const auto& ev = es.eigenvalues();
        double lo = ev.minCoeff(), hi = ev.maxCoeff();
        out.M = std::max(out.M, std::max(std::abs(lo), std::abs(hi)));
        double min_abs = std::numeric_limits<double>::infinity();
        for (int i = 0; i < ev.size(); ++i) min_abs = std::min(min_abs, std::abs(ev(i)));
        out.m = std::min(out.m, min_abs);
        // the quadratic-form lower bound needs a definite Hessian
        if (lo <= 0.0 && hi >= 0.0) out.convex_ok = false;
    }
    if (out.m <= 0.0) out.convex_ok = false;
    return out;
}

}  // namespace apnf
