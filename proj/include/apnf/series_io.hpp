#pragma once

// Series literal format: a JSON array whose first element is a header
// record declaring dimension, center and caps, followed by one record
// per term: {"k":[...],"m":[...],"p":int,"re":float,"im":float}.

#include <json.hpp>

#include "fts.hpp"

namespace apnf {

using Json = nlohmann::ordered_json;

inline FTSeries series_from_json(const Json& j) {
    if (!j.is_array() || j.empty())
        throw std::invalid_argument("series literal: expected non-empty array");
    const Json& h = j.at(0);
    if (!h.contains("n") || !h.contains("center"))
        throw std::invalid_argument("series literal: header must declare n and center");
    int n = h.at("n").get<int>();
    std::vector<double> center = h.at("center").get<std::vector<double>>();
    Caps caps{h.value("kmax", 0), h.value("taylor", 0), h.value("xi", 0)};
    bool real = h.value("real", true);
    FTSeries f(n, std::move(center), caps, real);
    for (size_t i = 1; i < j.size(); ++i) {
        const Json& r = j.at(i);
        TermKey t;
        t.k = r.at("k").get<std::vector<int>>();
        t.m = r.at("m").get<std::vector<int>>();
        t.p = r.value("p", 0);
        if ((int)t.k.size() != n || (int)t.m.size() != n)
            throw std::invalid_argument("series literal: term record dimension mismatch");
        Complex c(r.value("re", 0.0), r.value("im", 0.0));
        if (!f.within_caps(t))
            throw std::invalid_argument("series literal: term exceeds declared caps");
        f.accumulate(t, c);
    }
    if (real) {
        if (!f.conjugate_symmetric(1e-15 * (1.0 + f.max_abs_coeff())))
            throw std::invalid_argument(
                "series literal: real-flagged series is not conjugate-symmetric");
        f.symmetrize_real();
    }
    return f;
}

inline Json series_to_json(const FTSeries& f) {
    Json j = Json::array();
    Json h;
    h["n"] = f.dim();
    h["center"] = f.center();
    h["kmax"] = f.caps().kmax;
    h["taylor"] = f.caps().taylor;
    h["xi"] = f.caps().xi;
    h["real"] = f.real_valued();
    j.push_back(h);
    for (const auto& [t, c] : f.terms()) {
        Json r;
        r["k"] = t.k;
        r["m"] = t.m;
        r["p"] = t.p;
        r["re"] = c.real();
        r["im"] = c.imag();
        j.push_back(r);
    }
    return j;
}

}  // namespace apnf
