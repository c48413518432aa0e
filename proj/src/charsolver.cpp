#include "nlc/charsolver.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace nlc {

namespace {

using GL10 = boost::math::quadrature::gauss<double, 10>;
constexpr double kPi = std::numbers::pi;

}  // namespace

// ---------------------------------------------------------------- Γ₀

Gamma0::Gamma0(const InitialData& data, const LeslieParams& p, double x_lo, double x_hi, double table_dx)
    : p_(p), prof_(data.profile), x_lo_(x_lo), x_hi_(x_hi) {
    if (!(x_hi > x_lo)) throw std::invalid_argument("Gamma0: empty x range");
    if (!(table_dx > 0.0)) table_dx = data.grid.dx;
    const Grid1D tab = Grid1D::covering(x_lo, x_hi, table_dx);
    xs_.resize(tab.n);
    Xs_.assign(tab.n, 0.0);
    Ys_.assign(tab.n, 0.0);
    for (int k = 0; k < tab.n; ++k) xs_[k] = tab.x(k);
    const double slo = prof_->support_lo(), shi = prof_->support_hi();
    for (int k = 0; k + 1 < tab.n; ++k) {
        const double a = xs_[k], b = xs_[k + 1];
        double ix, iy;
        if (b <= slo || a >= shi) {
            ix = iy = b - a;
        } else {
            ix = GL10::integrate([this](double x) { return integrand_X(x); }, a, b);
            iy = GL10::integrate([this](double x) { return integrand_Y(x); }, a, b);
        }
        Xs_[k + 1] = Xs_[k] + ix;
        Ys_[k + 1] = Ys_[k] - iy;
    }
    // anchor at x = 0
    const double X0 = X_of_x(0.0), Y0 = Y_of_x(0.0);
    for (int k = 0; k < tab.n; ++k) {
        Xs_[k] -= X0;
        Ys_[k] -= Y0;
    }
    for (int k = 0; k + 1 < tab.n; ++k)
        if (!(Xs_[k + 1] > Xs_[k]) || !(Ys_[k + 1] < Ys_[k]))
            throw std::runtime_error("Gamma0: non-monotone X or Y (quadrature fault)");
}

double Gamma0::integrand_X(double x) const {
    const double th = prof_->theta0(x);
    const double R = prof_->theta1(x) + wave_speed(p_, th).c * prof_->theta0_x(x);
    return 1.0 + R * R;
}

double Gamma0::integrand_Y(double x) const {
    const double th = prof_->theta0(x);
    const double S = prof_->theta1(x) - wave_speed(p_, th).c * prof_->theta0_x(x);
    return 1.0 + S * S;
}

double Gamma0::partial(int cell, double x, bool isX) const {
    const double a = xs_[cell];
    if (x <= a) return 0.0;
    if (x <= prof_->support_lo() || a >= prof_->support_hi()) return x - a;
    if (isX) return GL10::integrate([this](double y) { return integrand_X(y); }, a, x);
    return GL10::integrate([this](double y) { return integrand_Y(y); }, a, x);
}

double Gamma0::X_of_x(double x) const {
    const int n = static_cast<int>(xs_.size());
    if (x <= xs_.front()) return Xs_.front() + (x - xs_.front());
    if (x >= xs_.back()) return Xs_.back() + (x - xs_.back());
    const double dx = xs_[1] - xs_[0];
    const int cell = std::min(static_cast<int>((x - xs_.front()) / dx), n - 2);
    return Xs_[cell] + partial(cell, x, true);
}

double Gamma0::Y_of_x(double x) const {
    const int n = static_cast<int>(xs_.size());
    if (x <= xs_.front()) return Ys_.front() - (x - xs_.front());
    if (x >= xs_.back()) return Ys_.back() - (x - xs_.back());
    const double dx = xs_[1] - xs_[0];
    const int cell = std::min(static_cast<int>((x - xs_.front()) / dx), n - 2);
    return Ys_[cell] - partial(cell, x, false);
}

double Gamma0::x_of_X(double X) const {
    if (X <= Xs_.front()) return xs_.front() + (X - Xs_.front());
    if (X >= Xs_.back()) return xs_.back() + (X - Xs_.back());
    const int cell = static_cast<int>(std::upper_bound(Xs_.begin(), Xs_.end(), X) - Xs_.begin()) - 1;
    double lo = xs_[cell], hi = xs_[cell + 1];
    double x = lo + (X - Xs_[cell]) / (Xs_[cell + 1] - Xs_[cell]) * (hi - lo);
    for (int it = 0; it < 60; ++it) {
        const double f = Xs_[cell] + partial(cell, x, true) - X;
        if (f > 0) hi = x; else lo = x;
        if (std::abs(f) <= 1e-14 * (1.0 + std::abs(X))) break;
        double xn = x - f / integrand_X(x);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    return x;
}

double Gamma0::x_of_Y(double Y) const {
    if (Y >= Ys_.front()) return xs_.front() - (Y - Ys_.front());
    if (Y <= Ys_.back()) return xs_.back() - (Y - Ys_.back());
    // Ys_ decreasing
    const int cell =
        static_cast<int>(std::upper_bound(Ys_.begin(), Ys_.end(), Y, [](double v, double e) { return v > e; }) -
                         Ys_.begin()) - 1;
    double lo = xs_[cell], hi = xs_[cell + 1];
    double x = lo + (Ys_[cell] - Y) / (Ys_[cell] - Ys_[cell + 1]) * (hi - lo);
    for (int it = 0; it < 60; ++it) {
        const double f = Ys_[cell] - partial(cell, x, false) - Y;  // decreasing in x
        if (f < 0) hi = x; else lo = x;
        if (std::abs(f) <= 1e-14 * (1.0 + std::abs(Y))) break;
        double xn = x + f / integrand_Y(x);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    return x;
}

BoundaryPoint Gamma0::at_x(double x) const {
    const double th = prof_->theta0(x);
    const double c = wave_speed(p_, th).c;
    const double R = prof_->theta1(x) + c * prof_->theta0_x(x);
    const double S = prof_->theta1(x) - c * prof_->theta0_x(x);
    return {x, X_of_x(x), Y_of_x(x), th, 2.0 * std::atan(R), 2.0 * std::atan(S)};
}

double Gamma0::max_abs_X_plus_Y() const {
    double m = 0.0;
    for (std::size_t k = 0; k < xs_.size(); ++k) m = std::max(m, std::abs(Xs_[k] + Ys_[k]));
    return m;
}

double Gamma0::level_energy() const {
    double e = 0.0;
    // ½(R² + S²) = ½(integrand_X + integrand_Y) - 1
    for (std::size_t k = 0; k + 1 < xs_.size(); ++k) {
        const double a = xs_[k], b = xs_[k + 1];
        if (b <= prof_->support_lo() || a >= prof_->support_hi()) continue;
        e += GL10::integrate([this](double x) { return 0.5 * (integrand_X(x) + integrand_Y(x)) - 1.0; }, a, b);
    }
    return e;
}

Gamma0 build_gamma0(const InitialData& data, const LeslieParams& p, double x_lo, double x_hi, double table_dx) {
    return Gamma0(data, p, x_lo, x_hi, table_dx);
}

double gamma_vertex_distance(const Gamma0& g, double x_lo, double x_hi) {
    return std::hypot(g.X_of_x(x_hi) - g.X_of_x(x_lo), g.Y_of_x(x_hi) - g.Y_of_x(x_lo));
}

// ---------------------------------------------------------------- right-hand sides

namespace {

struct Coef {
    double c, dc, D, hg;
};

inline Coef coef(const LeslieParams& p, double ds, double theta, bool unit) {
    const auto sp = wave_speed(p, theta);
    if (unit) return {sp.c, sp.dc, ds * (1.0 - p.gamma1), 1.0};
    const double g = g_coeff(p, theta), h = h_coeff(p, theta);
    return {sp.c, sp.dc, ds * (h * h / g - p.gamma1), h / g};
}

struct Trig {
    double sw, cw, sz, cz;
};

inline void rhs_both(const Coef& k, const Trig& tr, double pv, double qv, double JX, double JY, Derivs& dX,
                     Derivs& dY) {
    const double c = k.c;
    const double cw2 = 0.5 * (1.0 + tr.cw), cz2 = 0.5 * (1.0 + tr.cz);
    const double sw2 = 0.5 * (1.0 - tr.cw), sz2 = 0.5 * (1.0 - tr.cz);
    const double a1 = k.dc / (4.0 * c * c);
    const double mix = tr.sw * cz2 + tr.sz * cw2;
    dX.theta = tr.sw * pv / (4.0 * c);
    dX.a = pv * (a1 * (cw2 - cz2) + k.D / (4.0 * c) * mix - k.hg / c * JX * cz2 * cw2);
    dX.b = pv * qv *
           (0.5 * a1 * (tr.sw - tr.sz) + k.D / (2.0 * c) * (0.25 * tr.sw * tr.sz + sz2 * cw2) -
            k.hg / (2.0 * c) * JX * tr.sz * cw2);
    dX.x = (1.0 + tr.cw) * pv / 4.0;
    dX.t = dX.x / c;
    dY.theta = tr.sz * qv / (4.0 * c);
    dY.a = qv * (a1 * (cz2 - cw2) + k.D / (4.0 * c) * mix - k.hg / c * JY * cz2 * cw2);
    dY.b = pv * qv *
           (0.5 * a1 * (tr.sz - tr.sw) + k.D / (2.0 * c) * (0.25 * tr.sw * tr.sz + sw2 * cz2) -
            k.hg / (2.0 * c) * JY * tr.sw * cz2);
    dY.x = -(1.0 + tr.cz) * qv / 4.0;
    dY.t = (1.0 + tr.cz) * qv / (4.0 * c);
}

inline Trig trig(double w, double z) { return {std::sin(w), std::cos(w), std::sin(z), std::cos(z)}; }

}  // namespace

Derivs rhs_X(const LeslieParams& p, double ds, double theta, double w, double z, double pv, double qv, double J) {
    Derivs dX, dY;
    rhs_both(coef(p, ds, theta, false), trig(w, z), pv, qv, J, J, dX, dY);
    return dX;
}

Derivs rhs_Y(const LeslieParams& p, double ds, double theta, double w, double z, double pv, double qv, double J) {
    Derivs dX, dY;
    rhs_both(coef(p, ds, theta, false), trig(w, z), pv, qv, J, J, dX, dY);
    return dY;
}

// ---------------------------------------------------------------- lattice

const CharNode* CharState::node(int i, int j) const {
    if (j < 0 || j >= static_cast<int>(rows.size())) return nullptr;
    const auto& r = rows[j];
    if (i < r.begin || i >= r.end()) return nullptr;
    return &r.nodes[i - r.begin];
}

std::size_t CharState::node_count() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.nodes.size();
    return n;
}

std::size_t CharState::active_count() const {
    std::size_t n = 0;
    for (const auto& r : rows)
        for (const auto& nd : r.nodes) n += nd.ghost ? 0 : 1;
    return n;
}

int CharState::row_of_Y(double y) const {
    const double r = (y - Y0) / opt.hY;
    const int j = static_cast<int>(std::lround(r));
    if (std::abs(r - j) > 1e-9 || j < 0 || j >= static_cast<int>(rows.size())) return -1;
    return j;
}

namespace {

struct Src {
    double theta, w, z, p, q, x, t;  // x,t: the position used for the sourced equations' path
    Derivs d;
};

}  // namespace

CharState integrate_semilinear(std::shared_ptr<const Gamma0> gamma, const SpaceTimeField& J, const LeslieParams& p,
                               const LatticeOptions& opt) {
    CharState s;
    s.gamma = gamma;
    s.params = p;
    s.opt = opt;
    const bool unit = is_unit_gh(p);
    const double ds = opt.damping_scale;
    const double hX = opt.hX, hY = opt.hY;
    s.X0 = hX * std::floor(gamma->X_min() / hX);
    s.NX = static_cast<int>(std::floor((gamma->X_max() - s.X0) / hX)) + 1;
    s.Y0 = hY * (std::floor(gamma->Y_min() / hY) - 1.0);
    s.NY = static_cast<int>(std::floor((gamma->Y_max() - s.Y0) / hY)) + 1;
    const int NX = s.NX, NY = s.NY;

    // boundary states on Γ₀ with their derivatives
    std::vector<Src> bcol(NX), brow(NY);
    s.Yb_col.resize(NX);
    s.Xb_row.resize(NY);
    auto boundary = [&](const BoundaryPoint& b) {
        Src r{b.theta, b.w, b.z, 1.0, 1.0, b.x, 0.0, {}};
        return r;
    };
    for (int i = 0; i < NX; ++i) {
        const double x = gamma->x_of_X(s.X(i));
        const auto b = gamma->at_x(x);
        s.Yb_col[i] = b.Y;
        bcol[i] = boundary(b);
        Derivs dX, dY;
        const double Jv = J.sample(b.x, 0.0);
        rhs_both(coef(p, ds, b.theta, unit), trig(b.w, b.z), 1.0, 1.0, Jv, Jv, dX, dY);
        bcol[i].d = dY;
    }
    for (int j = 0; j < NY; ++j) {
        const double x = gamma->x_of_Y(s.Y(j));
        const auto b = gamma->at_x(x);
        s.Xb_row[j] = b.X;
        brow[j] = boundary(b);
        Derivs dX, dY;
        const double Jv = J.sample(b.x, 0.0);
        rhs_both(coef(p, ds, b.theta, unit), trig(b.w, b.z), 1.0, 1.0, Jv, Jv, dX, dY);
        brow[j].d = dX;
    }
    // first active column per row: Y_j > Yb_col[i], Yb_col decreasing
    auto istart = [&](int j) {
        if (j >= NY) j = NY - 1;
        const double y = s.Y(j);
        int lo = 0, hi = NX;  // first i in [0,NX) with Yb_col[i] < y
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (s.Yb_col[mid] < y) hi = mid; else lo = mid + 1;
        }
        return lo;
    };

    s.rows.resize(NY);
    std::vector<int> start(NY + 1);
    for (int j = 0; j <= NY; ++j) start[j] = istart(j);

    auto make_node = [&](const Src& L, double a, const Src& D, double b, bool ghost, int i, int j) {
        CharNode n{};
        // predictor
        const double z1 = L.z + a * L.d.a, q1 = L.q + a * L.d.b;
        const double xm1 = L.x + a * L.d.x, tm1 = L.t + a * L.d.t;
        const double w1 = D.w + b * D.d.a, p1 = D.p + b * D.d.b;
        const double xp1 = D.x + b * D.d.x, tp1 = D.t + b * D.d.t;
        const double th1 = 0.5 * (L.theta + a * L.d.theta + D.theta + b * D.d.theta);
        Derivs dX, dY;
        rhs_both(coef(p, ds, th1, unit), trig(w1, z1), p1, q1, J.sample(xp1, tp1), J.sample(xm1, tm1), dX, dY);
        // corrector
        n.z = L.z + 0.5 * a * (L.d.a + dX.a);
        n.q = L.q + 0.5 * a * (L.d.b + dX.b);
        n.xm = L.x + 0.5 * a * (L.d.x + dX.x);
        n.tm = L.t + 0.5 * a * (L.d.t + dX.t);
        n.w = D.w + 0.5 * b * (D.d.a + dY.a);
        n.p = D.p + 0.5 * b * (D.d.b + dY.b);
        n.xp = D.x + 0.5 * b * (D.d.x + dY.x);
        n.tp = D.t + 0.5 * b * (D.d.t + dY.t);
        n.theta = 0.5 * (L.theta + 0.5 * a * (L.d.theta + dX.theta) + D.theta + 0.5 * b * (D.d.theta + dY.theta));
        n.ghost = ghost ? 1 : 0;
        if (!ghost) {
            const bool bad = !std::isfinite(n.p) || !std::isfinite(n.q) || !std::isfinite(n.z) ||
                             !std::isfinite(n.w) || !std::isfinite(n.theta);
            if (bad) throw LatticeError("NaN in semilinear march", i, j, s.X(i), s.Y(j));
            if (n.p <= opt.p_floor || n.q <= opt.p_floor || n.p >= opt.p_cap || n.q >= opt.p_cap)
                throw LatticeError("p or q left the admissible band", i, j, s.X(i), s.Y(j));
        }
        rhs_both(coef(p, ds, n.theta, unit), trig(n.w, n.z), n.p, n.q, J.sample(n.xp, n.tp), J.sample(n.xm, n.tm), dX,
                 dY);
        n.dX_theta = dX.theta;
        n.dX_z = dX.a;
        n.dX_q = dX.b;
        n.dX_x = dX.x;
        n.dX_t = dX.t;
        n.dY_theta = dY.theta;
        n.dY_w = dY.a;
        n.dY_p = dY.b;
        n.dY_x = dY.x;
        n.dY_t = dY.t;
        return n;
    };
    auto as_srcX = [](const CharNode& n) {
        return Src{n.theta, n.w, n.z, n.p, n.q, n.xm, n.tm, {n.dX_theta, n.dX_z, n.dX_q, n.dX_x, n.dX_t}};
    };
    auto as_srcY = [](const CharNode& n) {
        return Src{n.theta, n.w, n.z, n.p, n.q, n.xp, n.tp, {n.dY_theta, n.dY_w, n.dY_p, n.dY_x, n.dY_t}};
    };

    for (int j = 0; j < NY; ++j) {
        auto& row = s.rows[j];
        const int ist = start[j];
        const int inx = (j + 1 < NY) ? start[j + 1] : ist;
        row.begin = std::max(0, std::min(ist, inx) - 1);
        row.active = ist;
        const Src& BX = brow[j];
        const double Xb = s.Xb_row[j];
        for (int i = row.begin; i < std::min(ist, NX); ++i) {
            const double a = s.X(i) - Xb, b = s.Y(j) - s.Yb_col[i];
            row.nodes.push_back(make_node(BX, a, bcol[i], b, true, i, j));
        }
        const LatticeRow* below = j > 0 ? &s.rows[j - 1] : nullptr;
        for (int i = ist; i < NX; ++i) {
            const bool Lact = i - 1 >= ist;
            const bool Dact = below && i >= below->active && i >= start[j - 1];
            if (Dact && i >= below->end()) break;
            const Src L = Lact ? as_srcX(row.nodes.back()) : BX;
            const double a = Lact ? hX : s.X(i) - Xb;
            const Src D = Dact ? as_srcY(below->nodes[i - below->begin]) : bcol[i];
            const double b = Dact ? hY : s.Y(j) - s.Yb_col[i];
            row.nodes.push_back(make_node(L, a, D, b, false, i, j));
            // stop once this node and the one below are both past T_stop, so every cell with a
            // corner at t <= T_stop is complete
            const double t_below = Dact ? below->nodes[i - below->begin].t() : 0.0;
            if (row.nodes.back().t() > opt.T_stop && t_below > opt.T_stop) break;
        }
    }
    return s;
}

// ---------------------------------------------------------------- p, q bounds and consistency

PQBounds check_pq_bounds(const CharState& s, const SpaceTimeField& J, double jbar) {
    (void)J;
    PQBounds b{1e300, 0.0, 1e300, 0.0, 0.0, 0.0, jbar, 0.0, true};
    for (const auto& r : s.rows)
        for (const auto& n : r.nodes) {
            if (n.ghost) continue;
            b.min_p = std::min(b.min_p, n.p);
            b.max_p = std::max(b.max_p, n.p);
            b.min_q = std::min(b.min_q, n.q);
            b.max_q = std::max(b.max_q, n.q);
            const double pq = n.p * n.q;
            b.sup_B = std::max({b.sup_B, std::abs(n.dY_p / pq), std::abs(n.dX_q / pq)});
        }
    b.D = gamma_vertex_distance(*s.gamma, s.gamma->x_lo(), s.gamma->x_hi());
    b.log_bound = b.sup_B * (2.0 * b.D + jbar);
    const double lo = std::min(b.min_p, b.min_q), hi = std::max(b.max_p, b.max_q);
    b.ok = lo > 0.0 && std::log(hi) <= b.log_bound + 1e-12 && std::log(lo) >= -b.log_bound - 1e-12;
    if (!b.ok) {
        for (int j = 0; j < static_cast<int>(s.rows.size()) && b.bad_i < 0; ++j)
            for (int k = 0; k < static_cast<int>(s.rows[j].nodes.size()); ++k) {
                const auto& n = s.rows[j].nodes[k];
                if (n.ghost) continue;
                const double m = std::max(std::abs(std::log(n.p)), std::abs(std::log(n.q)));
                if (!(n.p > 0 && n.q > 0) || m > b.log_bound) {
                    b.bad_i = s.rows[j].begin + k;
                    b.bad_j = j;
                    break;
                }
            }
    }
    return b;
}

ConsistencyResidual consistency_residual(const CharState& s, double t_max) {
    ConsistencyResidual r;
    double sx = 0, st = 0;
    const double hX = s.opt.hX, hY = s.opt.hY;
    for (int j = 0; j + 1 < static_cast<int>(s.rows.size()); ++j) {
        const auto& r0 = s.rows[j];
        for (const auto& n : r0.nodes) {
            if (n.ghost || n.t() > t_max) continue;
            r.path_x_max = std::max(r.path_x_max, std::abs(n.xp - n.xm));
            r.path_t_max = std::max(r.path_t_max, std::abs(n.tp - n.tm));
        }
        const auto& r1 = s.rows[j + 1];
        const int lo = std::max(r0.active, r1.active), hi = std::min(r0.end(), r1.end()) - 1;
        for (int i = lo; i < hi; ++i) {
            const CharNode* a = s.node(i, j);
            const CharNode* b = s.node(i + 1, j);
            const CharNode* c = s.node(i, j + 1);
            const CharNode* d = s.node(i + 1, j + 1);
            if (!a || !b || !c || !d || a->ghost || b->ghost || c->ghost || d->ghost) continue;
            if (std::max({a->t(), b->t(), c->t(), d->t()}) > t_max) continue;
            const double cx = ((a->dX_x + b->dX_x) - (c->dX_x + d->dX_x)) / (2.0 * hY) +
                              ((b->dY_x + d->dY_x) - (a->dY_x + c->dY_x)) / (2.0 * hX);
            const double ct = ((a->dX_t + b->dX_t) - (c->dX_t + d->dX_t)) / (2.0 * hY) +
                              ((b->dY_t + d->dY_t) - (a->dY_t + c->dY_t)) / (2.0 * hX);
            sx += cx * cx;
            st += ct * ct;
            r.x_max = std::max(r.x_max, std::abs(cx));
            r.t_max = std::max(r.t_max, std::abs(ct));
            ++r.cells;
        }
    }
    if (r.cells) {
        r.x_rms = std::sqrt(sx / r.cells);
        r.t_rms = std::sqrt(st / r.cells);
    }
    return r;
}

// ---------------------------------------------------------------- triangle scan

namespace {

struct Vtx {
    double x, t;
    const CharNode* n;
};

template <class F>
void for_each_triangle(const CharState& s, double t_lo, double t_hi, F&& f) {
    for (int j = 0; j + 1 < static_cast<int>(s.rows.size()); ++j) {
        const auto& r0 = s.rows[j];
        const auto& r1 = s.rows[j + 1];
        const int lo = std::max(r0.begin, r1.begin), hi = std::min(r0.end(), r1.end()) - 1;
        for (int i = lo; i < hi; ++i) {
            const CharNode* a = &r0.nodes[i - r0.begin];
            const CharNode* b = &r0.nodes[i + 1 - r0.begin];
            const CharNode* c = &r1.nodes[i - r1.begin];
            const CharNode* d = &r1.nodes[i + 1 - r1.begin];
            const double tmin = std::min({a->t(), b->t(), c->t(), d->t()});
            const double tmax = std::max({a->t(), b->t(), c->t(), d->t()});
            if (tmax < t_lo || tmin > t_hi) continue;
            const Vtx va{a->x(), a->t(), a}, vb{b->x(), b->t(), b}, vc{c->x(), c->t(), c}, vd{d->x(), d->t(), d};
            f(va, vb, vd, i, j);
            f(va, vd, vc, i, j);
        }
    }
}

inline double unwrap_to(double ref, double v) { return ref + std::remainder(v - ref, 2.0 * kPi); }

// x-interval of the triangle at height t
inline bool slice(const Vtx& A, const Vtx& B, const Vtx& C, double t, double& xa, double& xb) {
    double xs[3];
    int m = 0;
    const Vtx* v[3] = {&A, &B, &C};
    for (int e = 0; e < 3; ++e) {
        const Vtx& P = *v[e];
        const Vtx& Q = *v[(e + 1) % 3];
        const double lo = std::min(P.t, Q.t), hi = std::max(P.t, Q.t);
        if (t < lo || t > hi) continue;
        if (hi == lo) {
            xs[m++ % 3] = P.x;
            if (m < 3) xs[m++] = Q.x;
            continue;
        }
        const double s = (t - P.t) / (Q.t - P.t);
        if (m < 3) xs[m++] = P.x + s * (Q.x - P.x);
    }
    if (m == 0) return false;
    xa = *std::min_element(xs, xs + m);
    xb = *std::max_element(xs, xs + m);
    return true;
}

template <class G>
void scan(const CharState& s, const Grid1D& grid, double dt, int n_lo, int n_hi, int& folds, G&& assign) {
    const double t_lo = n_lo * dt, t_hi = n_hi * dt;
    for_each_triangle(s, t_lo, t_hi, [&](const Vtx& A, const Vtx& B, const Vtx& C, int, int) {
        const double area = (B.x - A.x) * (C.t - A.t) - (C.x - A.x) * (B.t - A.t);
        const double scale = std::abs(B.x - A.x) + std::abs(C.x - A.x) + std::abs(B.t - A.t) + std::abs(C.t - A.t);
        if (area < -1e-12 * scale * scale) {
            ++folds;
            return;
        }
        if (!(area > 1e-300)) return;
        const double tmin = std::min({A.t, B.t, C.t}), tmax = std::max({A.t, B.t, C.t});
        const int na = std::max(n_lo, static_cast<int>(std::ceil(tmin / dt - 1e-12)));
        const int nb = std::min(n_hi, static_cast<int>(std::floor(tmax / dt + 1e-12)));
        for (int n = na; n <= nb; ++n) {
            const double t = n * dt;
            double xa, xb;
            if (!slice(A, B, C, t, xa, xb)) continue;
            const int ia = std::max(0, static_cast<int>(std::ceil((xa - grid.x_min) / grid.dx - 1e-9)));
            const int ib = std::min(grid.n - 1, static_cast<int>(std::floor((xb - grid.x_min) / grid.dx + 1e-9)));
            for (int i = ia; i <= ib; ++i) {
                const double x = grid.x(i);
                double l1 = ((x - A.x) * (C.t - A.t) - (C.x - A.x) * (t - A.t)) / area;
                double l2 = ((B.x - A.x) * (t - A.t) - (x - A.x) * (B.t - A.t)) / area;
                const double tol = 1e-9;
                if (l1 < -tol || l2 < -tol || l1 + l2 > 1 + tol) continue;
                l1 = std::clamp(l1, 0.0, 1.0);
                l2 = std::clamp(l2, 0.0, 1.0 - l1);
                assign(n, i, 1.0 - l1 - l2, l1, l2, A, B, C);
            }
        }
    });
}

void fill_uncovered_row(double* v, const std::uint8_t* covered, int n, double far) {
    int last = -1;
    for (int i = 0; i < n; ++i) {
        if (!covered[i]) continue;
        if (last < 0) {
            for (int k = 0; k < i; ++k) v[k] = v[i];
        } else if (i - last > 1) {
            for (int k = last + 1; k < i; ++k) v[k] = v[last] + (v[i] - v[last]) * (k - last) / double(i - last);
        }
        last = i;
    }
    if (last < 0) {
        for (int k = 0; k < n; ++k) v[k] = far;
    } else {
        for (int k = last + 1; k < n; ++k) v[k] = v[last];
    }
}

}  // namespace

XtFields invert_to_xt(const CharState& s, const Grid1D& grid, double dt, int nt, int n_lo, int n_hi) {
    if (n_hi < 0 || n_hi > nt - 1) n_hi = nt - 1;
    XtFields f;
    f.theta = SpaceTimeField(grid, dt, nt);
    f.theta_t = SpaceTimeField(grid, dt, nt);
    f.theta_x = SpaceTimeField(grid, dt, nt);
    f.R = SpaceTimeField(grid, dt, nt);
    f.S = SpaceTimeField(grid, dt, nt);
    f.flag.assign(static_cast<std::size_t>(grid.n) * nt, 0);
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(grid.n) * nt, 0);
    const double tol = s.opt.singular_tol;
    scan(s, grid, dt, n_lo, n_hi, f.folds,
         [&](int n, int i, double l0, double l1, double l2, const Vtx& A, const Vtx& B, const Vtx& C) {
             const std::size_t k = static_cast<std::size_t>(n) * grid.n + i;
             if (covered[k]) return;
             covered[k] = 1;
             const double th = l0 * A.n->theta + l1 * B.n->theta + l2 * C.n->theta;
             const double w = l0 * A.n->w + l1 * unwrap_to(A.n->w, B.n->w) + l2 * unwrap_to(A.n->w, C.n->w);
             const double z = l0 * A.n->z + l1 * unwrap_to(A.n->z, B.n->z) + l2 * unwrap_to(A.n->z, C.n->z);
             const double c = wave_speed(s.params, th).c;
             const double R = std::tan(0.5 * w), S = std::tan(0.5 * z);
             f.theta.v[k] = th;
             f.R.v[k] = R;
             f.S.v[k] = S;
             f.theta_t.v[k] = 0.5 * (R + S);
             f.theta_x.v[k] = 0.5 * (R - S) / c;
             if (1.0 + std::cos(w) < tol || 1.0 + std::cos(z) < tol) f.flag[k] |= 1;
         });
    const double far = s.gamma->profile().theta_far();
    for (int n = n_lo; n <= n_hi; ++n) {
        const std::size_t off = static_cast<std::size_t>(n) * grid.n;
        for (int i = 0; i < grid.n; ++i) {
            if (!covered[off + i]) {
                f.flag[off + i] |= 2;
                ++f.uncovered;
            }
            if (f.flag[off + i] & 1) ++f.blown;
        }
        fill_uncovered_row(f.theta.row(n), covered.data() + off, grid.n, far);
    }
    return f;
}

void invert_theta_rows(const CharState& s, SpaceTimeField& theta, int n_lo, int n_hi, int* uncovered, int* folds) {
    const Grid1D& grid = theta.grid;
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(grid.n) * (n_hi - n_lo + 1), 0);
    int fo = 0;
    scan(s, grid, theta.dt, n_lo, n_hi, fo,
         [&](int n, int i, double l0, double l1, double l2, const Vtx& A, const Vtx& B, const Vtx& C) {
             const std::size_t k = static_cast<std::size_t>(n - n_lo) * grid.n + i;
             if (covered[k]) return;
             covered[k] = 1;
             theta.at(n, i) = l0 * A.n->theta + l1 * B.n->theta + l2 * C.n->theta;
         });
    int unc = 0;
    const double far = s.gamma->profile().theta_far();
    for (int n = n_lo; n <= n_hi; ++n) {
        const std::uint8_t* cv = covered.data() + static_cast<std::size_t>(n - n_lo) * grid.n;
        for (int i = 0; i < grid.n; ++i) unc += cv[i] ? 0 : 1;
        fill_uncovered_row(theta.row(n), cv, grid.n, far);
    }
    if (uncovered) *uncovered = unc;
    if (folds) *folds = fo;
}

// ---------------------------------------------------------------- energies

namespace {

struct PV {
    double X, Y, t;
    double g[3];
};

// clip polygon to t <= tau (keep_below) or t >= tau
std::vector<PV> clip(const std::vector<PV>& in, double tau, bool keep_below) {
    std::vector<PV> out;
    const std::size_t n = in.size();
    for (std::size_t k = 0; k < n; ++k) {
        const PV& P = in[k];
        const PV& Q = in[(k + 1) % n];
        const bool pin = keep_below ? P.t <= tau : P.t >= tau;
        const bool qin = keep_below ? Q.t <= tau : Q.t >= tau;
        if (pin) out.push_back(P);
        if (pin != qin) {
            const double s = (tau - P.t) / (Q.t - P.t);
            PV r;
            r.X = P.X + s * (Q.X - P.X);
            r.Y = P.Y + s * (Q.Y - P.Y);
            r.t = tau;
            for (int m = 0; m < 3; ++m) r.g[m] = P.g[m] + s * (Q.g[m] - P.g[m]);
            out.push_back(r);
        }
    }
    return out;
}

void poly_integral(const std::vector<PV>& poly, double out[3]) {
    out[0] = out[1] = out[2] = 0.0;
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        const PV& A = poly[0];
        const PV& B = poly[k];
        const PV& C = poly[k + 1];
        const double area = 0.5 * std::abs((B.X - A.X) * (C.Y - A.Y) - (C.X - A.X) * (B.Y - A.Y));
        for (int m = 0; m < 3; ++m) out[m] += area * (A.g[m] + B.g[m] + C.g[m]) / 3.0;
    }
}

}  // namespace

LevelEnergy energy_on_levels(const CharState& s, const SpaceTimeField& J, const std::vector<double>& times) {
    LevelEnergy e;
    const int L = static_cast<int>(times.size());
    e.t = times;
    e.E.assign(L, 0.0);
    std::vector<std::array<double, 3>> direct(L, {0, 0, 0}), prefix(L + 1, {0, 0, 0});
    for (int j = 0; j + 1 < static_cast<int>(s.rows.size()); ++j) {
        const auto& r0 = s.rows[j];
        const auto& r1 = s.rows[j + 1];
        const int lo = std::max(r0.begin, r1.begin), hi = std::min(r0.end(), r1.end()) - 1;
        for (int i = lo; i < hi; ++i) {
            const CharNode* nd[4] = {&r0.nodes[i - r0.begin], &r0.nodes[i + 1 - r0.begin], &r1.nodes[i + 1 - r1.begin],
                                     &r1.nodes[i - r1.begin]};
            const double XX[4] = {s.X(i), s.X(i + 1), s.X(i + 1), s.X(i)};
            const double YY[4] = {s.Y(j), s.Y(j), s.Y(j + 1), s.Y(j + 1)};
            PV v[4];
            double fE1[4], fE2[4];
            for (int k = 0; k < 4; ++k) {
                const CharNode& n = *nd[k];
                const double c = wave_speed(s.params, n.theta).c;
                const double sh = std::sin(0.5 * (n.w + n.z));
                const double Jv = J.sample(n.x(), n.t());
                const double cc = std::cos(0.5 * n.w) * std::cos(0.5 * n.z);
                v[k].X = XX[k];
                v[k].Y = YY[k];
                v[k].t = n.t();
                v[k].g[0] = n.p * n.q / (8.0 * c) * sh * sh;
                v[k].g[1] = Jv * n.p * n.q / (4.0 * c) * sh * cc;
                v[k].g[2] = std::abs(v[k].g[1]);
                fE1[k] = (1.0 - std::cos(n.w)) * n.p / 4.0;
                fE2[k] = (1.0 - std::cos(n.z)) * n.q / 4.0;
            }
            const int tri[2][3] = {{0, 1, 2}, {0, 2, 3}};
            for (const auto& tr : tri) {
                const PV a = v[tr[0]], b = v[tr[1]], c = v[tr[2]];
                const double t0 = std::min({a.t, b.t, c.t}), t1 = std::max({a.t, b.t, c.t});
                if (t1 <= 0.0) continue;
                std::vector<PV> base{a, b, c};
                if (t0 < 0.0) base = clip(base, 0.0, false);
                // area integrals
                int kfull = static_cast<int>(std::lower_bound(times.begin(), times.end(), t1) - times.begin());
                if (kfull < L) {
                    double full[3];
                    poly_integral(base, full);
                    for (int m = 0; m < 3; ++m) prefix[kfull][m] += full[m];
                }
                for (int k = static_cast<int>(std::upper_bound(times.begin(), times.end(), std::max(t0, 0.0)) -
                                              times.begin());
                     k < kfull; ++k) {
                    double part[3];
                    poly_integral(clip(base, times[k], true), part);
                    for (int m = 0; m < 3; ++m) direct[k][m] += part[m];
                }
                // level segments
                const int ids[3] = {tr[0], tr[1], tr[2]};
                for (int k = 0; k < L; ++k) {
                    const double tau = times[k];
                    if (tau <= 0.0 || tau < t0 || tau >= t1) continue;
                    double px[2], py[2], f1[2], f2[2];
                    int m = 0;
                    for (int ed = 0; ed < 3 && m < 2; ++ed) {
                        const int P = ids[ed], Q = ids[(ed + 1) % 3];
                        const bool pa = v[P].t >= tau, qa = v[Q].t >= tau;
                        if (pa == qa) continue;
                        const double sfr = (tau - v[P].t) / (v[Q].t - v[P].t);
                        px[m] = v[P].X + sfr * (v[Q].X - v[P].X);
                        py[m] = v[P].Y + sfr * (v[Q].Y - v[P].Y);
                        f1[m] = fE1[P] + sfr * (fE1[Q] - fE1[P]);
                        f2[m] = fE2[P] + sfr * (fE2[Q] - fE2[P]);
                        ++m;
                    }
                    if (m == 2)
                        e.E[k] += 0.5 * (f1[0] + f1[1]) * std::abs(px[1] - px[0]) +
                                  0.5 * (f2[0] + f2[1]) * std::abs(py[1] - py[0]);
                }
            }
        }
    }
    e.theta_t_sq.assign(L, 0.0);
    e.J_theta_t.assign(L, 0.0);
    e.abs_J_theta_t.assign(L, 0.0);
    double acc[3] = {0, 0, 0};
    for (int k = 0; k < L; ++k) {
        for (int m = 0; m < 3; ++m) acc[m] += prefix[k][m];
        e.theta_t_sq[k] = acc[0] + direct[k][0];
        e.J_theta_t[k] = acc[1] + direct[k][1];
        e.abs_J_theta_t[k] = acc[2] + direct[k][2];
        if (times[k] <= 0.0) e.E[k] = s.gamma->level_energy();
    }
    return e;
}

double energy_on_level(const CharState& s, double tau) {
    SpaceTimeField zero(Grid1D{0.0, 1.0, 2}, 1.0, 1);
    return energy_on_levels(s, zero, {tau}).E[0];
}

// ---------------------------------------------------------------- export and singular nodes

void write_charstate_csv(const CharState& s, const std::string& path, int stride) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "X,Y,x,t,theta,w,z,p,q\n";
    char buf[256];
    for (int j = 0; j < static_cast<int>(s.rows.size()); j += stride) {
        const auto& r = s.rows[j];
        for (int k = 0; k < static_cast<int>(r.nodes.size()); k += stride) {
            const auto& n = r.nodes[k];
            if (n.ghost) continue;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          s.X(r.begin + k), s.Y(j), n.x(), n.t(), n.theta, n.w, n.z, n.p, n.q);
            out << buf;
        }
    }
}

void write_level_csv(const XtFields& f, int n, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "x,theta,theta_t,theta_x,blownup_flag\n";
    char buf[256];
    for (int i = 0; i < f.theta.grid.n; ++i) {
        const std::size_t k = static_cast<std::size_t>(n) * f.theta.grid.n + i;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", f.theta.grid.x(i), f.theta.v[k],
                      f.theta_t.v[k], f.theta_x.v[k], f.flag[k] & 1);
        out << buf;
    }
}

SingularNode first_singular_node(const CharState& s, double tol) {
    SingularNode best;
    auto consider = [&](double x, double t, int i, int j, bool in_z) {
        if (!best.found || t < best.t || (t == best.t && x < best.x)) {
            best.found = true;
            best.x = x;
            best.t = t;
            best.i = i;
            best.j = j;
            best.in_z = in_z;
        }
    };
    auto branch = [](double a) { return std::floor((a + kPi) / (2.0 * kPi)); };
    for (int j = 0; j < static_cast<int>(s.rows.size()); ++j) {
        const auto& r = s.rows[j];
        for (int k = 0; k < static_cast<int>(r.nodes.size()); ++k) {
            const auto& n = r.nodes[k];
            if (n.ghost) continue;
            const int i = r.begin + k;
            if (1.0 + std::cos(n.z) < tol) consider(n.x(), n.t(), i, j, true);
            if (1.0 + std::cos(n.w) < tol) consider(n.x(), n.t(), i, j, false);
            if (k > 0 && !r.nodes[k - 1].ghost) {
                const auto& m = r.nodes[k - 1];
                if (branch(m.z) != branch(n.z)) consider(n.x(), n.t(), i, j, true);
            }
            const CharNode* d = s.node(i, j - 1);
            if (d && !d->ghost && branch(d->w) != branch(n.w)) consider(n.x(), n.t(), i, j, false);
        }
    }
    return best;
}

}  // namespace nlc
