#include "nlc/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace nlc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
void read_opt(const json& j, const char* key, const std::string& path, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + key, "wrong type");
    }
}

double require_number(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + key, "missing");
    if (!j.at(key).is_number()) throw ConfigError(path + key, "not a number");
    return j.at(key).get<double>();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string eps_dir_name(double e) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "eps_%g", e);
    return buf;
}

int ledger_stride(int nt, int target = 100) { return std::max(1, (nt - 1) / target); }

json slab_summary(const SolutionBundle& b) {
    double rs = 0, rl = 0;
    int it = 0, halv = 0;
    bool conv = true;
    for (const auto& s : b.slabs) {
        rs = std::max(rs, s.residual_sup);
        rl = std::max(rl, s.residual_l2);
        it = std::max(it, s.iterations);
        halv += s.halvings;
        conv = conv && s.converged;
    }
    return {{"count", b.slabs.size()}, {"max_residual_sup", rs}, {"max_residual_l2", rl},
            {"max_iterations", it},    {"halvings", halv},       {"all_converged", conv}};
}

void write_final_row(const SolutionBundle& b, const std::string& path) {
    CsvTable t;
    t.header = {"x", "theta", "u", "J"};
    t.columns.assign(4, {});
    const int n = b.nt - 1;
    for (int i = 0; i < b.grid.n; ++i) {
        t.columns[0].push_back(b.grid.x(i));
        t.columns[1].push_back(b.theta.at(n, i));
        t.columns[2].push_back(b.u.at(n, i));
        t.columns[3].push_back(b.J.at(n, i));
    }
    write_csv(t, path);
}

void write_energy(const EnergyReport& e, const std::string& dir) {
    write_csv(energy_table(e), dir + "/energy.csv");
    std::vector<double> ed(e.t.size());
    for (std::size_t k = 0; k < e.t.size(); ++k) ed[k] = e.energy[k] + e.dissipation[k];
    write_svg_chart(dir + "/energy.svg", "energy ledger", "t", e.t,
                    {{"E", e.energy}, {"D", e.dissipation}, {"E + D", ed}});
}

void check(RunResult& r, bool ok, const std::string& what) {
    r.summary["checks"][what] = ok;
    if (!ok) {
        r.failures.push_back(what);
        r.status = 1;
    }
}

void write_summary(const RunResult& r, const std::string& dir) {
    std::ofstream f(dir + "/summary.json");
    f << r.summary.dump(2) << '\n';
}

}  // namespace

// ---------------------------------------------------------------- config

Scenario scenario_from_string(const std::string& s) {
    if (s == "smooth") return Scenario::smooth;
    if (s == "blowup") return Scenario::blowup;
    if (s == "sweep") return Scenario::sweep;
    if (s == "validate") return Scenario::validate;
    throw ConfigError("scenario", "unknown scenario '" + s + "'");
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::smooth: return "smooth";
        case Scenario::blowup: return "blowup";
        case Scenario::sweep: return "sweep";
        case Scenario::validate: return "validate";
    }
    return "?";
}

double RunConfig::T_or_default() const {
    if (T > 0) return T;
    switch (scenario) {
        case Scenario::smooth: return 1.0;
        case Scenario::blowup: return 0.1;
        case Scenario::sweep: return 0.06;
        case Scenario::validate: return 0.5;
    }
    return 1.0;
}

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "not an object");
    RunConfig c;
    if (j.contains("scenario")) {
        if (!j["scenario"].is_string()) throw ConfigError("scenario", "not a string");
        c.scenario = scenario_from_string(j["scenario"].get<std::string>());
    }
    if (!j.contains("params")) throw ConfigError("params", "missing");
    const json& p = j["params"];
    if (!p.is_object()) throw ConfigError("params", "not an object");
    c.params.K1 = require_number(p, "K1", "params.");
    c.params.K3 = require_number(p, "K3", "params.");
    if (p.contains("alpha")) {
        const json& a = p["alpha"];
        if (!a.is_array() || a.size() != 6) throw ConfigError("params.alpha", "expected 6 numbers");
        for (int k = 0; k < 6; ++k) {
            if (!a[k].is_number()) throw ConfigError("params.alpha", "expected 6 numbers");
            c.params.alpha[k + 1] = a[k].get<double>();
        }
        c.params.derive_gammas();
    }
    read_opt(p, "rho", "params.", c.params.rho);
    read_opt(p, "nu", "params.", c.params.nu);
    if (j.contains("family")) {
        const json& f = j["family"];
        read_opt(f, "epsilon", "family.", c.family.epsilon);
        read_opt(f, "theta_star", "family.", c.family.theta_star);
        read_opt(f, "M", "family.", c.family.M);
    }
    if (j.contains("smooth")) {
        const json& s = j["smooth"];
        read_opt(s, "amp", "smooth.", c.smooth.amp_theta);
        read_opt(s, "width", "smooth.", c.smooth.width);
        read_opt(s, "theta_star", "smooth.", c.smooth.theta_star);
    }
    read_opt(j, "epsilons", "", c.epsilons);
    read_opt(j, "resolution", "", c.resolution);
    read_opt(j, "T", "", c.T);
    read_opt(j, "half_width", "", c.half_width);
    read_opt(j, "output", "", c.out);
    read_opt(j, "workers", "", c.workers);
    read_opt(j, "seed", "", c.seed);
    if (j.contains("fixed_point")) {
        const json& f = j["fixed_point"];
        read_opt(f, "delta", "fixed_point.", c.fixed_point.delta);
        read_opt(f, "max_iter", "fixed_point.", c.fixed_point.max_iter);
        read_opt(f, "tol_sup", "fixed_point.", c.fixed_point.tol_sup);
        read_opt(f, "tol_l2", "fixed_point.", c.fixed_point.tol_l2);
        read_opt(f, "omega", "fixed_point.", c.fixed_point.omega);
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        auto& o = c.tol;
        read_opt(t, "energy_rel", "tolerances.", o.energy_rel);
        read_opt(t, "energy_one_sided", "tolerances.", o.energy_one_sided);
        read_opt(t, "oracle_l2", "tolerances.", o.oracle_l2);
        read_opt(t, "fixed_point_sup", "tolerances.", o.fixed_point_sup);
        read_opt(t, "fixed_point_l2", "tolerances.", o.fixed_point_l2);
        read_opt(t, "singular_tol", "tolerances.", o.singular_tol);
        read_opt(t, "S_detect", "tolerances.", o.S_detect);
        read_opt(t, "R_fiber", "tolerances.", o.R_fiber);
        read_opt(t, "heat_mass", "tolerances.", o.heat_mass);
        read_opt(t, "heat_semigroup", "tolerances.", o.heat_semigroup);
        read_opt(t, "heat_duhamel", "tolerances.", o.heat_duhamel);
        read_opt(t, "holder_change", "tolerances.", o.holder_change);
        read_opt(t, "lipschitz_growth", "tolerances.", o.lipschitz_growth);
        read_opt(t, "theta_x_growth", "tolerances.", o.theta_x_growth);
        read_opt(t, "refinement_order", "tolerances.", o.refinement_order);
    }
    check_config(c);
    return c;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["scenario"] = to_string(c.scenario);
    j["params"] = {{"K1", c.params.K1},
                   {"K3", c.params.K3},
                   {"alpha", {c.params.alpha[1], c.params.alpha[2], c.params.alpha[3], c.params.alpha[4],
                              c.params.alpha[5], c.params.alpha[6]}},
                   {"rho", c.params.rho},
                   {"nu", c.params.nu}};
    j["family"] = {{"epsilon", c.family.epsilon}, {"theta_star", c.family.theta_star}, {"M", c.family.M}};
    j["smooth"] = {{"amp", c.smooth.amp_theta}, {"width", c.smooth.width}, {"theta_star", c.smooth.theta_star}};
    j["epsilons"] = c.epsilons;
    j["resolution"] = c.resolution;
    j["T"] = c.T;
    j["half_width"] = c.half_width;
    j["output"] = c.out;
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    j["fixed_point"] = {{"delta", c.fixed_point.delta},     {"max_iter", c.fixed_point.max_iter},
                        {"tol_sup", c.fixed_point.tol_sup}, {"tol_l2", c.fixed_point.tol_l2},
                        {"omega", c.fixed_point.omega}};
    const auto& o = c.tol;
    j["tolerances"] = {{"energy_rel", o.energy_rel},
                       {"energy_one_sided", o.energy_one_sided},
                       {"oracle_l2", o.oracle_l2},
                       {"fixed_point_sup", o.fixed_point_sup},
                       {"fixed_point_l2", o.fixed_point_l2},
                       {"singular_tol", o.singular_tol},
                       {"S_detect", o.S_detect},
                       {"R_fiber", o.R_fiber},
                       {"heat_mass", o.heat_mass},
                       {"heat_semigroup", o.heat_semigroup},
                       {"heat_duhamel", o.heat_duhamel},
                       {"holder_change", o.holder_change},
                       {"lipschitz_growth", o.lipschitz_growth},
                       {"theta_x_growth", o.theta_x_growth},
                       {"refinement_order", o.refinement_order}};
    return j;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("--config", "cannot open " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("parse error: ") + e.what());
    }
    return config_from_json(j);
}

void check_config(const RunConfig& c) {
    if (c.resolution < 1) throw ConfigError("resolution", "must be a positive integer");
    if (c.T < 0) throw ConfigError("T", "must be positive");
    if (c.half_width < 0) throw ConfigError("half_width", "must be positive");
    if (c.workers < 1) throw ConfigError("workers", "must be at least 1");
    if (!(c.params.K1 > 0)) throw ConfigError("params.K1", "must be positive");
    if (!(c.params.K3 > 0)) throw ConfigError("params.K3", "must be positive");
    if (!(c.family.epsilon > 0 && c.family.epsilon < 1)) throw ConfigError("family.epsilon", "must lie in (0, 1)");
    for (double e : c.epsilons)
        if (!(e > 0 && e < 1)) throw ConfigError("epsilons", "values must lie in (0, 1)");
    if (c.scenario == Scenario::sweep && c.epsilons.size() < 2)
        throw ConfigError("epsilons", "a sweep needs at least two values");
    if (!(c.fixed_point.delta > 0)) throw ConfigError("fixed_point.delta", "must be positive");
}

std::string default_output_root() {
    const char* e = std::getenv("NLCSIM_OUT");
    return e && *e ? e : "nlc_out";
}

// ---------------------------------------------------------------- CSV / SVG

const std::vector<double>& CsvTable::col(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return columns[k];
    throw std::out_of_range("no column " + name);
}

void write_csv(const CsvTable& t, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    for (std::size_t k = 0; k < t.header.size(); ++k) f << (k ? "," : "") << t.header[k];
    f << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t k = 0; k < t.columns.size(); ++k) f << (k ? "," : "") << fmt_double(t.columns[k][r]);
        f << '\n';
    }
}

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty csv " + path);
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
    t.columns.assign(t.header.size(), {});
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::size_t k = 0;
        for (std::string cell; std::getline(ls, cell, ','); ++k) {
            if (k >= t.columns.size()) throw std::runtime_error("ragged csv " + path);
            t.columns[k].push_back(std::strtod(cell.c_str(), nullptr));
        }
        if (k != t.columns.size()) throw std::runtime_error("ragged csv " + path);
    }
    return t;
}

CsvTable energy_table(const EnergyReport& e) {
    return {{"t", "E", "dissipation", "slack", "maxJ", "min_one_plus_cos_w", "min_one_plus_cos_z"},
            {e.t, e.energy, e.dissipation, e.slack, e.maxJ, e.min_one_plus_cos_w, e.min_one_plus_cos_z}};
}

void write_svg_chart(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::vector<double>& x, const std::vector<ChartSeries>& series) {
    const double W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (double v : x)
        if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (const auto& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
    if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    char buf[256];
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", ml, mt,
                  W - ml - mr, H - mt - mb);
    f << buf;
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"11\">%.3g</text>\n",
                      px(xv), H - mb + 16, xv);
        f << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\">%.3g</text>\n",
                      ml - 6, py(yv) + 4, yv);
        f << buf;
    }
    f << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
      << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* col = colors[s % 6];
        f << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        const std::size_t n = std::min(x.size(), series[s].y.size());
        for (std::size_t k = 0; k < n; ++k) {
            if (!std::isfinite(x[k]) || !std::isfinite(series[s].y[k])) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x[k]), py(series[s].y[k]));
            f << buf;
        }
        f << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                      W - mr - 90, mt + 16 + 15.0 * s, col, series[s].name.c_str());
        f << buf;
    }
    f << "</svg>\n";
}

// ---------------------------------------------------------------- runs

CoupledGrid smooth_coupled_grid(const RunConfig& c) {
    const double L = c.half_width > 0 ? c.half_width : 6.0;
    const double dx = 0.02 / c.resolution;
    CoupledGrid g;
    g.grid = Grid1D::covering(-L, L, dx);
    g.dt = dx / 2;
    g.hX = g.hY = dx;
    g.singular_tol = c.tol.singular_tol;
    return g;
}

CoupledGrid blowup_coupled_grid(const RunConfig& c, double eps) {
    const double L = c.half_width > 0 ? c.half_width : 1.5;
    const double r = c.resolution;
    CoupledGrid g;
    g.grid = Grid1D::covering(-L, L, eps / (8 * r));
    g.dt = 5e-4 / r;
    g.hX = 0.005 / r;
    g.hY = 5.0 * eps / r;
    g.singular_tol = c.tol.singular_tol;
    return g;
}

InitialData smooth_initial_data(const RunConfig& c) {
    const double L = c.half_width > 0 ? c.half_width : 6.0;
    return sample_profile(gaussian_profile(c.smooth), Grid1D::covering(-L - 2, L + 2, 0.005 / c.resolution));
}

namespace {

FixedPointConfig fp_config(const RunConfig& c) {
    FixedPointConfig f = c.fixed_point;
    f.tol_sup = c.tol.fixed_point_sup;
    f.tol_l2 = c.tol.fixed_point_l2;
    return f;
}

json pq_summary(const SolutionBundle& b, double alpha, std::uint64_t seed, bool& ok) {
    const NormReport nr = flux_norms(b, alpha, seed);
    const PQBounds pq = check_pq_bounds(*b.lattice, b.J, nr.jbar());
    ok = pq.ok;
    return {{"min_p", pq.min_p}, {"max_p", pq.max_p},         {"min_q", pq.min_q}, {"max_q", pq.max_q},
            {"sup_B", pq.sup_B}, {"D", pq.D},                  {"jbar", pq.jbar},   {"log_bound", pq.log_bound},
            {"ok", pq.ok}};
}

}  // namespace

RunResult run_smooth(const RunConfig& c, const std::string& dir) {
    fs::create_directories(dir);
    RunResult r;
    const double T = c.T_or_default();
    const InitialData d = smooth_initial_data(c);
    const SolutionBundle b = fixed_point_solve(d, c.params, fp_config(c), smooth_coupled_grid(c), T);
    const EnergyReport e = energy_ledger(b, c.params, ledger_stride(b.nt));
    write_energy(e, dir);
    write_final_row(b, dir + "/final_row.csv");
    const IdentityResiduals ir = identity_residuals(b, c.params);
    bool pq_ok = false;
    r.summary["scenario"] = "smooth";
    r.summary["T"] = T;
    r.summary["energy0"] = e.energy.front();
    r.summary["max_abs_slack"] = e.max_abs_slack();
    r.summary["slabs"] = slab_summary(b);
    r.summary["pq"] = pq_summary(b, c.fixed_point.alpha, c.seed, pq_ok);
    r.summary["identity"] = {{"vt_identity", ir.vt_identity}, {"weak_form", ir.weak_form}};
    check(r, e.max_abs_slack() <= c.tol.energy_rel * e.energy.front(), "energy_law");
    check(r, r.summary["slabs"]["max_residual_sup"].get<double>() <= c.tol.fixed_point_sup &&
                 r.summary["slabs"]["max_residual_l2"].get<double>() <= c.tol.fixed_point_l2,
          "fixed_point_residual");
    check(r, pq_ok, "pq_bounds");
    write_summary(r, dir);
    return r;
}

RunResult run_blowup(const RunConfig& c, double eps, const std::string& dir) {
    fs::create_directories(dir);
    RunResult r;
    const double T = c.T_or_default();
    BlowupFamily f = c.family;
    f.epsilon = eps;
    const CoupledGrid g = blowup_coupled_grid(c, eps);
    const double L = g.grid.x_max();
    const InitialData d = build_blowup_data(c.params, f, T, 64, L);
    const SolutionBundle b = fixed_point_solve(d, c.params, fp_config(c), g, T);
    const EnergyReport e = energy_ledger(b, c.params, ledger_stride(b.nt));
    write_energy(e, dir);
    const BlowupReport br = detect_blowup(b, c.params, f);
    write_trace_csv(br.trace, dir + "/trace.csv");
    double excess = -1e300;
    for (std::size_t k = 0; k < e.t.size(); ++k)
        excess = std::max(excess, (e.energy[k] + e.dissipation[k]) / e.energy.front() - 1.0);
    bool pq_ok = false;
    r.summary["scenario"] = "blowup";
    r.summary["epsilon"] = eps;
    r.summary["T"] = T;
    r.summary["energy0"] = e.energy.front();
    r.summary["max_relative_energy_excess"] = excess;
    r.summary["slabs"] = slab_summary(b);
    r.summary["pq"] = pq_summary(b, c.fixed_point.alpha, c.seed, pq_ok);
    r.summary["report"] = json::parse(blowup_report_json(br));
    check(r, br.detected, "detected");
    check(r, br.detected && br.t_star < 1.0, "t_star_below_one");
    check(r, br.detected && br.S_at_detection > c.tol.S_detect, "S_at_detection");
    check(r, br.detected && br.max_abs_R_fiber < c.tol.R_fiber, "R_bounded_on_fiber");
    check(r, excess <= c.tol.energy_one_sided, "energy_one_sided");
    check(r, pq_ok, "pq_bounds");
    write_summary(r, dir);
    return r;
}

RunResult run_sweep(const RunConfig& c, const std::string& dir) {
    if (c.epsilons.size() < 2) throw ConfigError("epsilons", "a sweep needs at least two values");
    fs::create_directories(dir);
    const std::size_t n = c.epsilons.size();
    std::vector<RunResult> members(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < n;) {
            try {
                members[k] = run_blowup(c, c.epsilons[k], dir + "/" + eps_dir_name(c.epsilons[k]));
            } catch (const std::exception& ex) {
                errors[k] = ex.what();
            }
        }
    };
    const int nw = std::max(1, std::min<int>(c.workers, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    RunResult r;
    CsvTable t;
    t.header = {"epsilon", "energy0", "maxJ", "t_star", "t_pred", "k1_slack", "theta_x_max", "ok"};
    t.columns.assign(t.header.size(), {});
    // k₁ is fitted on the coarsest ε and frozen
    std::size_t coarse = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (c.epsilons[k] > c.epsilons[coarse]) coarse = k;
    double k1 = kNaN;
    if (errors[coarse].empty()) k1 = members[coarse].summary["report"]["maxJ"].get<double>() / std::sqrt(c.epsilons[coarse]);
    std::vector<double> fe, fj, le, lE;
    r.summary["scenario"] = "sweep";
    r.summary["members"] = json::array();
    for (std::size_t k = 0; k < n; ++k) {
        const double e = c.epsilons[k];
        json row = {{"epsilon", e}};
        double E0 = kNaN, mj = kNaN, ts = kNaN, tp = kNaN, tx = kNaN;
        bool ok = false;
        if (!errors[k].empty()) {
            row["error"] = errors[k];
            r.failures.push_back(eps_dir_name(e) + ": " + errors[k]);
        } else {
            const json& s = members[k].summary;
            E0 = s["energy0"];
            mj = s["report"]["maxJ"];
            ts = s["report"]["detected"].get<bool>() ? s["report"]["t_star"].get<double>() : kNaN;
            tp = s["report"]["t_pred"];
            tx = s["report"]["theta_x_max"];
            ok = members[k].status == 0;
            for (const auto& f : members[k].failures) r.failures.push_back(eps_dir_name(e) + ": " + f);
            fe.push_back(e);
            fj.push_back(mj);
            le.push_back(std::log(e));
            lE.push_back(std::log(E0));
        }
        const double slack = k1 * std::sqrt(e) - mj;
        row.update({{"energy0", E0}, {"maxJ", mj}, {"t_star", ts}, {"t_pred", tp}, {"k1_slack", slack},
                    {"theta_x_max", tx}, {"ok", ok}});
        r.summary["members"].push_back(row);
        const double vals[] = {e, E0, mj, ts, tp, slack, tx, ok ? 1.0 : 0.0};
        for (std::size_t q = 0; q < t.columns.size(); ++q) t.columns[q].push_back(vals[q]);
        if (!(slack >= 0)) {
            r.failures.push_back(eps_dir_name(e) + ": k1 bound");
        }
    }
    r.summary["k1_frozen"] = k1;
    if (fe.size() >= 2) {
        const auto [kls, res] = fit_sqrt_eps(fe, fj);
        r.summary["k1_least_squares"] = kls;
        r.summary["k1_fit_residual"] = res;
        double mx = 0, my = 0;
        for (std::size_t k = 0; k < le.size(); ++k) mx += le[k], my += lE[k];
        mx /= le.size();
        my /= le.size();
        double sxy = 0, sxx = 0;
        for (std::size_t k = 0; k < le.size(); ++k) sxy += (le[k] - mx) * (lE[k] - my), sxx += (le[k] - mx) * (le[k] - mx);
        r.summary["energy0_loglog_slope"] = sxy / sxx;
    }
    write_csv(t, dir + "/sweep.csv");
    r.status = r.failures.empty() ? 0 : 1;
    r.summary["failures"] = r.failures;
    write_summary(r, dir);
    return r;
}

RunResult run_validate(const RunConfig& c, const std::string& dir) {
    fs::create_directories(dir);
    RunResult r;
    r.summary["scenario"] = "validate";
    // heat kernel
    {
        const double t = 1.0, L = 16.0;
        const int m = 20000;
        const double h = 2 * L / m;
        double mass = 0;
        for (int k = 0; k <= m; ++k) mass += (k == 0 || k == m ? 1 : (k % 2 ? 4 : 2)) * kernel(-L + k * h, t);
        mass *= h / 3;
        r.summary["heat_mass_error"] = std::abs(mass - 1.0);
        check(r, std::abs(mass - 1.0) < c.tol.heat_mass, "heat_mass");
        double sg = 0;
        for (double x : {-1.2, 0.0, 0.4}) {
            double s = 0;
            const double a = -12, hh = 24.0 / m;
            for (int k = 0; k <= m; ++k) {
                const double y = a + k * hh;
                s += (k == 0 || k == m ? 1 : (k % 2 ? 4 : 2)) * kernel(x - y, 0.3) * kernel(y, 0.5);
            }
            sg = std::max(sg, std::abs(s * hh / 3 - kernel(x, 0.8)));
        }
        r.summary["heat_semigroup_error"] = sg;
        check(r, sg < c.tol.heat_semigroup, "heat_semigroup");
    }
    RunConfig cs = c;
    cs.scenario = Scenario::smooth;
    cs.T = c.T_or_default();
    const RunResult sm = run_smooth(cs, dir + "/smooth");
    r.summary["smooth"] = sm.summary;
    for (const auto& f : sm.failures) check(r, false, "smooth." + f);
    {
        const InitialData d = smooth_initial_data(cs);
        const CoupledGrid g = smooth_coupled_grid(cs);
        const SolutionBundle b = fixed_point_solve(d, cs.params, fp_config(cs), g, cs.T);
        const double dx = g.grid.dx / 4;
        const SolutionBundle f = fd_reference_solve(d, cs.params, cs.T, dx, dx / 4, {}, g.grid.x_min, g.grid.x_max());
        const int nb = b.nt - 1;
        double e2 = 0;
        for (int i = 0; i < b.grid.n; ++i) {
            const double dd = b.theta.at(nb, i) - f.theta.sample(b.grid.x(i), b.t_end());
            e2 += dd * dd * b.grid.dx;
        }
        r.summary["oracle_l2"] = std::sqrt(e2);
        check(r, std::sqrt(e2) <= c.tol.oracle_l2, "oracle_l2");
    }
    RunConfig cb = c;
    cb.scenario = Scenario::blowup;
    cb.T = 0.08;
    const RunResult bl = run_blowup(cb, c.family.epsilon, dir + "/blowup");
    r.summary["blowup"] = bl.summary;
    for (const auto& f : bl.failures) check(r, false, "blowup." + f);
    r.summary["failures"] = r.failures;
    write_summary(r, dir);
    return r;
}

RunResult run(const RunConfig& c) {
    check_config(c);
    const std::string dir = c.out.empty() ? default_output_root() + "/" + to_string(c.scenario) : c.out;
    fs::create_directories(dir);
    {
        std::ofstream f(dir + "/config.json");
        f << config_to_json(c).dump(2) << '\n';
    }
    switch (c.scenario) {
        case Scenario::smooth: return run_smooth(c, dir);
        case Scenario::blowup: return run_blowup(c, c.family.epsilon, dir);
        case Scenario::sweep: return run_sweep(c, dir);
        case Scenario::validate: return run_validate(c, dir);
    }
    return {};
}

}  // namespace nlc
