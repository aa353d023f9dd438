// Configuration-driven front door: define a Hamiltonian in a JSON config,
// then run one of the tasks  normalize | estimate | geometry | simulate |
// pipeline  and emit deterministic JSON/CSV reports.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "apnf/dynamics.hpp"
#include "apnf/estimator.hpp"
#include "apnf/hamiltonian.hpp"
#include "apnf/normalizer.hpp"
#include "apnf/resonance.hpp"
#include "apnf/series_io.hpp"

namespace fs = std::filesystem;
using apnf::Json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const Json& need(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError("config error: missing field " + path + "." + key);
    return j.at(key);
}

double need_num(const Json& j, const std::string& path, const char* key) {
    const Json& v = need(j, path, key);
    if (!v.is_number()) throw ConfigError("config error: field " + path + "." + key + " must be a number");
    return v.get<double>();
}

// JSON-safe number: infinities serialize as strings.
Json jnum(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : "-inf";
}

apnf::FTSeries parse_h(const Json& spec, int n, const std::vector<double>& center,
                       apnf::Caps caps) {
    if (spec.contains("h")) return apnf::series_from_json(spec.at("h"));
    if (!spec.contains("h_poly"))
        throw ConfigError("config error: missing field spec.h (series) or spec.h_poly");
    apnf::FTSeries h(n, center, caps, true);
    for (const auto& rec : spec.at("h_poly")) {
        apnf::TermKey t;
        t.k.assign(n, 0);
        t.m = need(rec, "spec.h_poly[]", "m").get<std::vector<int>>();
        if ((int)t.m.size() != n)
            throw ConfigError("config error: spec.h_poly[].m dimension mismatch");
        h.accumulate(t, apnf::Complex(need_num(rec, "spec.h_poly[]", "c"), 0.0));
    }
    return h;
}

apnf::HamiltonianSpec parse_spec(const Json& cfg) {
    const Json& s = need(cfg, "config", "spec");
    apnf::HamiltonianSpec spec;
    spec.n = (int)need_num(s, "spec", "n");
    std::vector<double> center = need(s, "spec", "I0").get<std::vector<double>>();
    if ((int)center.size() != spec.n)
        throw ConfigError("config error: spec.I0 dimension mismatch");
    spec.f = apnf::series_from_json(need(s, "spec", "f"));
    if (spec.f.center() != center)
        throw ConfigError("config error: spec.f expansion center must equal spec.I0");
    spec.h = parse_h(s, spec.n, center, spec.f.caps());
    spec.eps = need_num(s, "spec", "eps");
    spec.mu = need_num(s, "spec", "mu");
    spec.C_f = s.value("C_f", 0.0);
    if (s.contains("domain")) {
        const Json& d = s.at("domain");
        spec.dom.delta = d.value("delta", 1.0);
        spec.dom.sigma = d.value("sigma", 1.0);
        spec.dom.d = d.value("d", 0.125);
        spec.dom.xi_halfwidth = d.value("xi_halfwidth", 1.0);
    }
    spec.validate();
    return spec;
}

apnf::ResonanceModule parse_module(const Json& params, int n) {
    apnf::ResonanceModule mod;
    mod.n = n;
    if (params.contains("module")) {
        for (const auto& row : params.at("module"))
            mod.basis.push_back(row.get<std::vector<int>>());
        apnf::ModuleCheck chk = apnf::check_resonance_module(mod.basis, n);
        if (!chk.ok)
            throw ConfigError("config error: params.module is not a resonance module (" +
                              chk.reason + ")");
    }
    return mod;
}

void write_json(const fs::path& p, const Json& j) {
    std::ofstream out(p);
    out << j.dump(2) << "\n";
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ----------------------------------------------------------------- tasks

Json estimate_report(const apnf::HamiltonianSpec& spec, const Json& params) {
    Json rep;
    const double rho = params.value("rho", 1.0);
    double M = params.value("M", 0.0), m = params.value("m", 0.0);
    if (M <= 0.0 || m <= 0.0) {
        apnf::ConvexityConstants cc = apnf::convexity_constants(
            [&](const std::vector<double>& I) { return spec.hessian_at(I); },
            {spec.center()});
        if (M <= 0.0) M = cc.M;
        if (m <= 0.0) m = cc.m;
        rep["convexity_from_hessian"] = true;
    }
    const double C_f = spec.effective_cf();
    apnf::StabilityPlan plan = apnf::nekhoroshev_plan(rho, spec.dom.sigma, M, m, C_f,
                                                      spec.n, spec.eps, spec.mu,
                                                      params.value("T", 1.0));
    Json jp;
    jp["rho"] = plan.rho;
    jp["sigma"] = plan.sigma;
    jp["M"] = plan.M;
    jp["m"] = plan.m;
    jp["C_f"] = plan.C_f;
    jp["a"] = plan.a;
    jp["Sigma"] = plan.Sigma;
    jp["K"] = plan.K;
    jp["delta_star"] = plan.delta_star;
    jp["Delta_star"] = plan.Delta_star;
    jp["F_tilde"] = plan.F_tilde;
    jp["lambda"] = plan.lambda;
    jp["threshold"] = plan.threshold;
    jp["threshold_ok"] = plan.threshold_ok;
    jp["delta"] = plan.delta;
    jp["r"] = plan.r;
    jp["Delta0"] = plan.Delta0;
    jp["radius"] = plan.radius;
    jp["stability_time"] = jnum(plan.stability_time);
    rep["plan"] = jp;

    if (params.contains("r") && params.contains("K") && params.contains("alpha")) {
        const int r = (int)need_num(params, "params", "r");
        const int K = (int)need_num(params, "params", "K");
        const double alpha = need_num(params, "params", "alpha");
        apnf::AnalyticConstants c = apnf::analytic_constants(
            spec.n, r, K, C_f, spec.dom.sigma, spec.dom.delta, alpha, spec.eps, spec.mu,
            params.value("d", 0.125));
        Json jc;
        jc["F_tilde"] = c.F_tilde;
        jc["F"] = c.F;
        jc["lambda"] = c.lambda;
        jc["h_decay"] = c.h_decay;
        jc["Gamma"] = c.Gamma;
        jc["C_r"] = c.C_r;
        jc["b"] = c.b;
        jc["tau"] = c.tau;
        jc["Delta"] = c.Delta;
        jc["smallness_ok"] = c.smallness_ok;
        jc["kappa_ok"] = c.kappa_ok;
        jc["cr_ok"] = c.cr_ok;
        jc["b_ok"] = c.b_ok;
        jc["minunmezzo_ok"] = c.minunmezzo_ok;
        jc["remainder_bound"] = apnf::remainder_bound(spec.eps, c.F_tilde, c.Delta, r);
        apnf::SequenceTriple seq = apnf::run_recurrences(r, c.h_decay, spec.mu, c.Gamma, c.C_r);
        jc["beta"] = seq.beta;
        jc["theta"] = seq.theta;
        jc["gamma"] = seq.gamma;
        jc["beta_bound"] = seq.beta_bound;
        rep["constants"] = jc;
    }
    return rep;
}

Json normalize_report(const apnf::HamiltonianSpec& spec, const Json& params,
                      const fs::path& outdir, bool dump_series) {
    const int r = (int)need_num(params, "params", "r");
    const int K = (int)need_num(params, "params", "K");
    const double alpha = params.value("alpha", 0.0);
    apnf::ResonanceModule mod = parse_module(params, spec.n);
    apnf::NormalizeOptions opts;
    if (params.contains("prune")) opts.prune_threshold = params.at("prune").get<double>();
    apnf::NormalFormResult nf = apnf::normalize(spec, r, K, mod, alpha, opts);

    Json rep;
    rep["r"] = nf.r;
    rep["K"] = nf.K;
    rep["alpha_requested"] = alpha;
    rep["alpha_used"] = nf.alpha_used;
    rep["divisor_min"] = jnum(nf.divisor_min);
    rep["divisor_min_eff"] = jnum(nf.divisor_min_eff);
    rep["remainder_norm"] = nf.remainder_norm;
    rep["remainder_norm_full"] = nf.remainder_norm_full;
    rep["defect"] = nf.defect;
    rep["tail_bound"] = nf.tail_bound;
    rep["lie_orders_summed"] = nf.lie_orders_summed;
    Json steps = Json::array();
    for (const auto& s : nf.step_norms) {
        Json js;
        js["s"] = s.s;
        js["d_s"] = s.d_s;
        js["psi_norm"] = s.psi_norm;
        js["chi_norm"] = s.chi_norm;
        js["z_norm"] = s.z_norm;
        js["residual_norm"] = s.residual_norm;
        steps.push_back(js);
    }
    rep["steps"] = steps;

    // bound comparison when the analytic flags hold
    const double alpha_eff = nf.alpha_used;
    if (alpha_eff > 0.0) {
        apnf::AnalyticConstants c = apnf::analytic_constants(
            spec.n, r, K, spec.effective_cf(), spec.dom.sigma, spec.dom.delta, alpha_eff,
            spec.eps, spec.mu, spec.dom.d);
        rep["Delta"] = c.Delta;
        rep["smallness_ok"] = c.smallness_ok;
        rep["kappa_ok"] = c.kappa_ok;
        double bound = apnf::remainder_bound(spec.eps, c.F_tilde, c.Delta, r);
        rep["remainder_bound"] = bound;
        rep["remainder_within_bound"] = nf.remainder_norm + nf.defect <= bound;
    }
    if (dump_series) {
        Json zs = Json::array(), chis = Json::array();
        for (const auto& z : nf.Z) zs.push_back(apnf::series_to_json(z));
        for (const auto& x : nf.chi) chis.push_back(apnf::series_to_json(x));
        write_json(outdir / "normal_form_series.json",
                   Json{{"Z", zs}, {"chi", chis}});
        rep["series_file"] = "normal_form_series.json";
    }
    return rep;
}

Json geometry_report(const apnf::HamiltonianSpec& spec, const Json& params,
                     const fs::path& outdir) {
    apnf::ResonanceModule mod = parse_module(params, spec.n);
    Json rep;
    apnf::ModuleCheck chk = apnf::check_resonance_module(mod.basis, spec.n);
    rep["module_ok"] = chk.ok;
    rep["module_reason"] = chk.reason;
    rep["module_rank"] = mod.rank();

    std::vector<std::vector<double>> sample;
    if (params.contains("grid")) {
        const Json& g = params.at("grid");
        std::vector<double> lo = need(g, "params.grid", "lo").get<std::vector<double>>();
        std::vector<double> hi = need(g, "params.grid", "hi").get<std::vector<double>>();
        int pts = g.value("points", 11);
        if ((int)lo.size() != spec.n || (int)hi.size() != spec.n)
            throw ConfigError("config error: params.grid.lo/hi dimension mismatch");
        std::vector<int> idx(spec.n, 0);
        bool done = false;
        while (!done) {
            std::vector<double> I(spec.n);
            for (int i = 0; i < spec.n; ++i)
                I[i] = pts > 1 ? lo[i] + (hi[i] - lo[i]) * idx[i] / (pts - 1) : lo[i];
            sample.push_back(I);
            int i = 0;
            for (; i < spec.n; ++i) {
                if (++idx[i] < pts) break;
                idx[i] = 0;
            }
            done = i == spec.n;
        }
    } else {
        sample.push_back(spec.center());
    }

    apnf::ConvexityConstants cc = apnf::convexity_constants(
        [&](const std::vector<double>& I) { return spec.hessian_at(I); }, sample);
    rep["convexity"] = Json{{"m", cc.m}, {"M", cc.M}, {"convex_ok", cc.convex_ok}};

    const double alpha = params.value("alpha", 0.0);
    if (alpha > 0.0) {
        const int N = (int)params.value("N", 8.0);
        apnf::NonresonanceReport nr = apnf::check_nonresonance(
            [&](const std::vector<double>& I) { return spec.omega_at(I); }, sample, mod,
            alpha, N, spec.dom.delta, cc.M);
        rep["nonresonance"] = Json{{"pass", nr.pass},
                                   {"alpha", nr.alpha},
                                   {"N", nr.N},
                                   {"margin_per_unit_k", nr.margin_per_unit_k},
                                   {"min_divisor", jnum(nr.min_divisor)},
                                   {"offending_k", nr.offending_k}};
        std::ofstream csv(outdir / "nonresonance.csv");
        csv << "min_divisor,min_divisor_raw,pass,min_k";
        for (int i = 0; i < spec.n; ++i) csv << ",I" << i;
        csv << "\n";
        for (const auto& row : nr.rows) {
            csv << fmt(row.min_divisor) << "," << fmt(row.min_divisor_raw) << ","
                << (row.pass ? 1 : 0) << "," << apnf::format_harmonic(row.min_k);
            for (double v : row.I) csv << "," << fmt(v);
            csv << "\n";
        }
        rep["nonresonance_csv"] = "nonresonance.csv";
    }
    return rep;
}

Json simulate_report(const apnf::HamiltonianSpec& spec, const Json& params,
                     const fs::path& outdir, const apnf::StabilityPlan* plan) {
    std::vector<double> I0 = need(params, "params", "I0_sim").get<std::vector<double>>();
    std::vector<double> phi0 = need(params, "params", "phi0").get<std::vector<double>>();
    const double t0 = params.value("t0", 0.0);
    const double t_span = need_num(params, "params", "t_span");
    const double step = need_num(params, "params", "step");
    apnf::IntegrateOptions iopts;
    iopts.thin = (size_t)params.value("thin", 1.0);
    apnf::ResonanceModule mod = parse_module(params, spec.n);
    iopts.module = &mod;
    apnf::Trajectory traj = apnf::integrate(spec, I0, phi0, t0, t_span, step, iopts);

    std::ofstream csv(outdir / "trajectory.csv");
    csv << "t";
    for (int i = 0; i < spec.n; ++i) csv << ",I" << i;
    for (int i = 0; i < spec.n; ++i) csv << ",phi" << i;
    csv << ",drift,plane_dev,H\n";
    for (size_t k = 0; k < traj.times.size(); ++k) {
        csv << fmt(traj.times[k]);
        for (double v : traj.I[k]) csv << "," << fmt(v);
        for (double v : traj.phi[k]) csv << "," << fmt(v);
        csv << "," << fmt(traj.drift[k]) << "," << fmt(traj.plane_dev[k]) << ","
            << fmt(traj.energy[k]) << "\n";
    }

    Json rep;
    rep["steps"] = traj.steps;
    rep["t0"] = traj.t0;
    rep["t_end"] = traj.t_end;
    rep["max_drift"] = traj.max_drift;
    rep["max_plane_dev"] = traj.max_plane_dev;
    rep["trajectory_csv"] = "trajectory.csv";
    if (plan) {
        apnf::DriftReport dr = apnf::drift_report(traj, *plan, &mod,
                                                  params.value("C1", 1.0));
        rep["drift_report"] = Json{{"max_drift", dr.max_drift},
                                   {"radius", dr.radius},
                                   {"within_radius", dr.within_radius},
                                   {"elapsed", dr.elapsed},
                                   {"plan_time", jnum(dr.plan_time)},
                                   {"covered_fraction", dr.covered_fraction},
                                   {"plan_time_reached", dr.plan_time_reached},
                                   {"max_plane_dev", dr.max_plane_dev},
                                   {"plane_tolerance", dr.plane_tolerance},
                                   {"plane_ok", dr.plane_ok},
                                   {"t0_star", jnum(dr.t0_star)},
                                   {"threshold_ok", dr.threshold_ok}};
    }
    return rep;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partial normal form and stability estimate toolkit"};
    std::string config_path, task_override, out_dir = ".";
    long long seed = 0;
    app.add_option("--config", config_path, "path to JSON config")->required();
    app.add_option("--task", task_override, "task override: normalize|estimate|geometry|simulate|pipeline");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "seed recorded in reports (for randomized suites)");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("config error: cannot open " + config_path);
        Json cfg = Json::parse(in);
        std::string task = task_override.empty()
                               ? need(cfg, "config", "task").get<std::string>()
                               : task_override;
        Json params = cfg.value("params", Json::object());
        fs::path outdir(out_dir);
        fs::create_directories(outdir);
        apnf::HamiltonianSpec spec = parse_spec(cfg);

        Json report;
        report["task"] = task;
        report["seed"] = seed;
        report["spec"] = Json{{"n", spec.n},
                              {"eps", spec.eps},
                              {"mu", spec.mu},
                              {"C_f", spec.effective_cf()},
                              {"delta", spec.dom.delta},
                              {"sigma", spec.dom.sigma},
                              {"xi_halfwidth", spec.dom.xi_halfwidth}};

        if (task == "estimate") {
            report["estimate"] = estimate_report(spec, params);
        } else if (task == "normalize") {
            report["normalize"] = normalize_report(spec, params, outdir,
                                                   params.value("dump_series", false));
        } else if (task == "geometry") {
            report["geometry"] = geometry_report(spec, params, outdir);
        } else if (task == "simulate") {
            report["simulate"] = simulate_report(spec, params, outdir, nullptr);
        } else if (task == "pipeline") {
            Json est = estimate_report(spec, params);
            report["estimate"] = est;
            report["normalize"] = normalize_report(spec, params, outdir,
                                                   params.value("dump_series", false));
            apnf::StabilityPlan plan = apnf::nekhoroshev_plan(
                params.value("rho", 1.0), spec.dom.sigma, est["plan"]["M"].get<double>(),
                est["plan"]["m"].get<double>(), spec.effective_cf(), spec.n, spec.eps,
                spec.mu, params.value("T", 1.0));
            report["simulate"] = simulate_report(spec, params, outdir, &plan);
            if (report["normalize"].contains("remainder_bound"))
                report["consistency"] =
                    Json{{"remainder_within_bound",
                          report["normalize"]["remainder_within_bound"]}};
        } else {
            throw ConfigError("config error: unknown task '" + task + "'");
        }
        write_json(outdir / (task + "_report.json"), report);
        std::cout << report.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
