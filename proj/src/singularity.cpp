#include "nlc/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace nlc {

namespace {

struct Sample {
    double t, x, theta, w, z;
};

// positions integrated along X, the direction of the forward characteristic
Sample lerp(const CharNode& a, const CharNode& b, double s) {
    return {a.tm + s * (b.tm - a.tm), a.xm + s * (b.xm - a.xm), a.theta + s * (b.theta - a.theta),
            a.w + s * (b.w - a.w), a.z + s * (b.z - a.z)};
}

void push(GammaTrace& g, const Sample& s) {
    g.t.push_back(s.t);
    g.x.push_back(s.x);
    g.theta.push_back(s.theta);
    g.R.push_back(std::tan(0.5 * s.w));
    g.S.push_back(std::tan(0.5 * s.z));
    g.S_tilde.push_back(std::exp(0.5 * s.t) * g.S.back());
}

const CharNode* active(const CharState& s, int i, int j) {
    const CharNode* n = s.node(i, j);
    return n && !n->ghost ? n : nullptr;
}

}  // namespace

GammaTrace trace_forward_characteristic(const CharState& s, double x_start, double t_end) {
    const Gamma0& g0 = *s.gamma;
    if (x_start < g0.x_lo() || x_start > g0.x_hi()) throw std::out_of_range("trace start outside the initial curve");
    const double Yv = g0.Y_of_x(x_start);
    const double fj = (Yv - s.Y0) / s.opt.hY;
    int j = static_cast<int>(std::floor(fj));
    double a = fj - j;
    if (a > 1.0 - 1e-9) {
        ++j;
        a = 0.0;
    }
    if (j < 0 || j >= static_cast<int>(s.rows.size())) throw std::out_of_range("trace start outside the lattice");
    GammaTrace g;
    g.x_start = x_start;
    const BoundaryPoint bp = g0.at_x(x_start);
    push(g, {0.0, x_start, bp.theta, bp.w, bp.z});
    int i0 = static_cast<int>(std::floor((bp.X - s.X0) / s.opt.hX)) + 1;
    i0 = std::max(i0, s.rows[j].active);
    if (a > 0 && j + 1 < static_cast<int>(s.rows.size())) i0 = std::max(i0, s.rows[j + 1].active);
    bool done = false;
    for (int i = i0;; ++i) {
        const CharNode* lo = active(s, i, j);
        const CharNode* hi = a > 0 ? active(s, i, j + 1) : lo;
        if (!lo || !hi) break;
        const Sample sm = lerp(*lo, *hi, a);
        if (sm.t <= g.t.back()) continue;
        push(g, sm);
        if (sm.t >= t_end) {
            done = true;
            break;
        }
    }
    g.exited = !done;
    return g;
}

void write_trace_csv(const GammaTrace& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f.precision(12);
    f << "t,x,S,R,theta\n";
    for (std::size_t k = 0; k < g.t.size(); ++k)
        f << g.t[k] << ',' << g.x[k] << ',' << g.S[k] << ',' << g.R[k] << ',' << g.theta[k] << '\n';
}

TriangleEnergy characteristic_triangle_energy(const CharState& s, double x0, double t0) {
    int bi = -1, bj = -1;
    double best = 1e300;
    for (int j = 0; j < static_cast<int>(s.rows.size()); ++j) {
        const auto& r = s.rows[j];
        for (int k = 0; k < static_cast<int>(r.nodes.size()); ++k) {
            const auto& n = r.nodes[k];
            if (n.ghost) continue;
            const double d = std::hypot(n.x() - x0, n.t() - t0);
            if (d < best) {
                best = d;
                bi = r.begin + k;
                bj = j;
            }
        }
    }
    if (bi < 0) throw std::out_of_range("empty lattice");
    const double h = std::max(s.opt.hX, s.opt.hY);
    if (best > 4.0 * h * s.params.CU()) throw std::out_of_range("triangle apex outside the lattice");

    const Gamma0& g0 = *s.gamma;
    TriangleEnergy e;
    // R² dx = (1 - cos w) p/4 dX along the forward side, S² |dx| = (1 - cos z) q/4 dY along the backward side
    {
        const double Xb = s.Xb_row[bj];
        const BoundaryPoint bp = g0.at_x(g0.x_of_Y(s.Y(bj)));
        e.x1 = bp.x;
        double prevX = Xb, prevF = 0.25 * (1.0 - std::cos(bp.w));
        for (int i = static_cast<int>(std::floor((Xb - s.X0) / s.opt.hX)) + 1; i <= bi; ++i) {
            const CharNode* n = active(s, i, bj);
            if (!n && prevX == Xb) continue;
            if (!n) throw std::out_of_range("triangle exits the lattice");
            const double f = 0.25 * (1.0 - std::cos(n->w)) * n->p;
            e.R_part += 0.5 * (f + prevF) * (s.X(i) - prevX);
            prevX = s.X(i);
            prevF = f;
        }
    }
    {
        const double Yb = s.Yb_col[bi];
        const BoundaryPoint bp = g0.at_x(g0.x_of_X(s.X(bi)));
        e.x2 = bp.x;
        double prevY = Yb, prevF = 0.25 * (1.0 - std::cos(bp.z));
        for (int j = static_cast<int>(std::floor((Yb - s.Y0) / s.opt.hY)) + 1; j <= bj; ++j) {
            const CharNode* n = active(s, bi, j);
            if (!n && prevY == Yb) continue;
            if (!n) throw std::out_of_range("triangle exits the lattice");
            const double f = 0.25 * (1.0 - std::cos(n->z)) * n->q;
            e.S_part += 0.5 * (f + prevF) * (s.Y(j) - prevY);
            prevY = s.Y(j);
            prevF = f;
        }
    }
    return e;
}

double k2_constant(double k0, double k1, double CU) {
    return 12.0 * k0 * CU * CU + 2.0 * std::sqrt(2.0 * k0) * k1 * std::pow(CU, 1.5);
}

double predicted_time(const LeslieParams& p, double theta_star, double k3, double epsilon) {
    return 0.5 + 8.0 * p.CU() * k3 * std::sqrt(epsilon) / wave_speed(p, theta_star).dc;
}

RegularitySignature regularity_signature(const double* theta, int n, double dx, int i_lo, int i_hi) {
    i_lo = std::max(i_lo, 0);
    i_hi = std::min(i_hi, n - 1);
    RegularitySignature r;
    if (i_hi <= i_lo) return r;
    r.holder_half = holder_constant_1d(theta, n, dx, 0.5, i_lo, i_hi);
    for (int i = i_lo; i < i_hi; ++i) r.lipschitz = std::max(r.lipschitz, std::abs(theta[i + 1] - theta[i]) / dx);
    return r;
}

BlowupReport detect_blowup(const SolutionBundle& b, const LeslieParams& p, const BlowupFamily& f, double k3,
                           double k1) {
    if (!b.lattice) throw std::invalid_argument("detect_blowup needs a lattice bundle");
    const CharState& s = *b.lattice;
    BlowupReport r;
    const double sq = std::sqrt(f.epsilon);
    const double dc_star = wave_speed(p, f.theta_star).dc;
    const auto sn = first_singular_node(s, s.opt.singular_tol);
    r.detected = sn.found && sn.in_z;
    const double t_lim = r.detected ? sn.t : b.t_end();
    if (r.detected) {
        r.t_star = sn.t;
        r.x_star = sn.x;
        r.S_at_detection = std::tan(0.5 * s.node(sn.i, sn.j)->z);
        for (int i = s.rows[sn.j].active; i <= sn.i; ++i)
            if (const CharNode* n = active(s, i, sn.j); n && n->t() <= t_lim)
                r.max_abs_R_fiber = std::max(r.max_abs_R_fiber, std::abs(std::tan(0.5 * n->w)));
    }
    for (const auto& row : s.rows)
        for (const auto& n : row.nodes)
            if (!n.ghost && n.t() <= t_lim) r.max_abs_R = std::max(r.max_abs_R, std::abs(std::tan(0.5 * n.w)));

    for (int n = 0; n < b.nt && n * b.dt <= t_lim; ++n)
        for (int i = 0; i < b.grid.n; ++i) r.maxJ = std::max(r.maxJ, std::abs(b.J.at(n, i)));
    r.k1_measured = r.maxJ / sq;

    r.trace = trace_forward_characteristic(s, 0.0, t_lim);
    const auto& g = r.trace;
    r.trace_S_min = 1e300;
    r.trace_S_max = -1e300;
    double integral = 0, prev = 0;
    for (std::size_t k = 0; k < g.t.size(); ++k) {
        if (g.t[k] > t_lim) break;
        r.trace_S_min = std::min(r.trace_S_min, g.S[k]);
        r.trace_S_max = std::max(r.trace_S_max, g.S[k]);
        r.drift_max = std::max(r.drift_max, std::abs(g.theta[k] - f.theta_star));
        const auto sp = wave_speed(p, g.theta[k]);
        if (!(sp.dc > 0.5 * dc_star)) r.cd_sign_ok = false;
        const double e = std::exp(0.5 * g.t[k]);
        const double J = b.J.sample(g.x[k], g.t[k]);
        const double St = g.S_tilde[k];
        const double term = (sp.dc / (4.0 * sp.c) * e * g.R[k] * g.R[k] + 0.5 * e * std::abs(g.R[k]) + e * std::abs(J)) /
                            (St * St);
        if (k > 0) integral += 0.5 * (term + prev) * (g.t[k] - g.t[k - 1]);
        r.k3_measured = std::max(r.k3_measured, integral / sq);
        prev = term;
    }
    r.k3_used = k3 > 0 ? k3 : r.k3_measured;
    r.t_pred = predicted_time(p, f.theta_star, r.k3_used, f.epsilon);
    r.k2 = k2_constant(f.k0(), k1 > 0 ? k1 : r.k1_measured, p.CU());
    r.drift_bound = std::sqrt(r.k2 * f.epsilon / p.CL());

    if (r.detected) {
        r.triangle = characteristic_triangle_energy(s, r.x_star, r.t_star);
        const XtFields xf = invert_to_xt(s, b.grid, r.t_star, 2, 1, 1);
        const int n = b.grid.n;
        const int ic = static_cast<int>(std::lround((r.x_star - b.grid.x_min) / b.grid.dx));
        const int hw = static_cast<int>(std::lround(0.25 / b.grid.dx));
        r.regularity = regularity_signature(xf.theta.row(1), n, b.grid.dx, ic - hw, ic + hw);
        for (int i = 0; i < n; ++i) {
            if (xf.flag[static_cast<std::size_t>(n) + i]) continue;
            r.theta_x_max = std::max(r.theta_x_max, std::abs(xf.theta_x.at(1, i)));
            r.theta_t_max = std::max(r.theta_t_max, std::abs(xf.theta_t.at(1, i)));
        }
    }
    return r;
}

std::string blowup_report_json(const BlowupReport& r, int indent) {
    nlohmann::json j;
    j["detected"] = r.detected;
    j["t_star"] = r.t_star;
    j["x_star"] = r.x_star;
    j["S_at_detection"] = r.S_at_detection;
    j["max_abs_R_fiber"] = r.max_abs_R_fiber;
    j["max_abs_R"] = r.max_abs_R;
    j["trace_S_min"] = r.trace_S_min;
    j["trace_S_max"] = r.trace_S_max;
    j["maxJ"] = r.maxJ;
    j["k1_measured"] = r.k1_measured;
    j["k2"] = r.k2;
    j["k3_measured"] = r.k3_measured;
    j["k3_used"] = r.k3_used;
    j["t_pred"] = r.t_pred;
    j["drift_max"] = r.drift_max;
    j["drift_bound"] = r.drift_bound;
    j["cd_sign_ok"] = r.cd_sign_ok;
    j["triangle"] = {{"R_part", r.triangle.R_part},
                     {"S_part", r.triangle.S_part},
                     {"x1", r.triangle.x1},
                     {"x2", r.triangle.x2},
                     {"sum", r.triangle.sum()}};
    j["theta_x_max"] = r.theta_x_max;
    j["theta_t_max"] = r.theta_t_max;
    j["holder_half"] = r.regularity.holder_half;
    j["lipschitz"] = r.regularity.lipschitz;
    j["trace_points"] = r.trace.t.size();
    j["trace_exited"] = r.trace.exited;
    return j.dump(indent);
}

std::pair<double, double> fit_sqrt_eps(const std::vector<double>& eps, const std::vector<double>& y) {
    if (eps.size() != y.size() || eps.empty()) throw std::invalid_argument("fit_sqrt_eps: size mismatch");
    double num = 0, den = 0;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        num += y[k] * std::sqrt(eps[k]);
        den += eps[k];
    }
    const double k = num / den;
    double res = 0;
    for (std::size_t k2 = 0; k2 < eps.size(); ++k2) {
        const double rel = (y[k2] - k * std::sqrt(eps[k2])) / y[k2];
        res += rel * rel;
    }
    return {k, std::sqrt(res / eps.size())};
}

}  // namespace nlc
