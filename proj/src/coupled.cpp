#include "nlc/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nlc {

namespace {

double trapz_row(const double* f, int n, double dx) {
    if (n < 2) return 0.0;
    double s = 0.5 * (f[0] + f[n - 1]);
    for (int i = 1; i + 1 < n; ++i) s += f[i];
    return s * dx;
}

std::vector<double> cumulative_trapz(const double* f, int n, double dx) {
    std::vector<double> out(n, 0.0);
    for (int i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * dx * (f[i - 1] + f[i]);
    return out;
}

void fill_v(SolutionBundle& b) {
    b.v = SpaceTimeField(b.grid, b.dt, b.nt);
    for (int n = 0; n < b.nt; ++n) {
        auto c = cumulative_trapz(b.u.row(n), b.grid.n, b.grid.dx);
        std::copy(c.begin(), c.end(), b.v.row(n));
    }
}

// State shared by the slab iterations of one coupled run.
class Coupler {
public:
    Coupler(const InitialData& data, const LeslieParams& p, const FixedPointConfig& cfg, const CoupledGrid& cg,
            double T)
        : p_(p), cfg_(cfg), cg_(cg), hs_(cg.grid, cg.dt, cg.quad) {
        const Grid1D& g = cg.grid;
        nt_ = static_cast<int>(std::lround(T / cg.dt)) + 1;
        const double span = 1.05 * p.CU() * T + 4.0 * std::max(cg.hX, cg.hY);
        gamma_ = std::make_shared<Gamma0>(data, p, g.x_min - span, g.x_max() + span, data.grid.dx);
        J_ = SpaceTimeField(g, cg.dt, nt_);
        M_ = SpaceTimeField(g, cg.dt, nt_);
        u_ = SpaceTimeField(g, cg.dt, nt_);
        theta_ = SpaceTimeField(g, cg.dt, nt_);
        const Profile& pr = *data.profile;
        for (int i = 0; i < g.n; ++i) {
            const double x = g.x(i);
            theta_.at(0, i) = pr.theta0(x);
            u_.at(0, i) = pr.u0(x);
            J_.at(0, i) = data.J0(x);
            M_.at(0, i) = J_.at(0, i);
        }
        for (int n = 1; n < nt_; ++n) std::copy(J_.row(0), J_.row(0) + g.n, J_.row(n));
    }

    int nt() const { return nt_; }
    int rows_for(double delta) const { return std::max(1, static_cast<int>(std::lround(delta / cg_.dt))); }

    LatticeOptions lattice_options(int n_b) const {
        LatticeOptions o;
        o.hX = cg_.hX;
        o.hY = cg_.hY;
        o.T_stop = n_b * cg_.dt + 2.0 * cg_.dt;
        o.singular_tol = cg_.singular_tol;
        return o;
    }

    /// Relaxed iteration on rows (n_a, n_b]. Returns true on convergence.
    bool iterate(int n_a, int n_b, int max_iter, bool stop_on_tol, SlabLog& log) {
        const int nx = cg_.grid.n;
        const double dx = cg_.grid.dx, dt = cg_.dt;
        const std::size_t off = static_cast<std::size_t>(n_a + 1) * nx;
        const std::size_t len = static_cast<std::size_t>(n_b - n_a) * nx;
        // the initial guess extends the last accepted row in time
        for (int n = n_a + 1; n <= n_b; ++n) std::copy(J_.row(n_a), J_.row(n_a) + nx, J_.row(n));
        std::vector<double> Jprev, Mprev;
        log.t0 = n_a * dt;
        log.t1 = n_b * dt;
        for (int k = 0; k < max_iter; ++k) {
            lattice_ = std::make_shared<CharState>(integrate_semilinear(gamma_, J_, p_, lattice_options(n_b)));
            invert_theta_rows(*lattice_, theta_, n_a + 1, n_b);
            for (int n = n_a + 1; n <= n_b; ++n)
                flux_map_step(hs_, p_, theta_.row(n - 1), theta_.row(n), u_.row(n - 1), M_.row(n - 1), u_.row(n),
                              M_.row(n));
            double sup = 0, l2 = 0;
            for (std::size_t m = 0; m < len; ++m) {
                const double d = M_.v[off + m] - J_.v[off + m];
                sup = std::max(sup, std::abs(d));
                l2 += d * d;
            }
            l2 = std::sqrt(l2 * dx * dt);
            log.diff_sup.push_back(sup);
            log.diff_l2.push_back(l2);
            log.iterations = k + 1;
            if (!Jprev.empty()) {
                double dm = 0, dj = 0;
                for (std::size_t m = 0; m < len; ++m) {
                    dm = std::max(dm, std::abs(M_.v[off + m] - Mprev[m]));
                    dj = std::max(dj, std::abs(J_.v[off + m] - Jprev[m]));
                }
                log.map_ratio.push_back(dj > 0 ? dm / dj : 0.0);
            }
            if (!std::isfinite(sup)) return false;
            if (stop_on_tol && sup <= cfg_.tol_sup && l2 <= cfg_.tol_l2) {
                log.converged = true;
                log.residual_sup = sup;
                log.residual_l2 = l2;
                return true;
            }
            if (log.diff_sup.size() > 3 && sup > 1e3 * log.diff_sup.front()) return false;
            Jprev.assign(J_.v.begin() + off, J_.v.begin() + off + len);
            Mprev.assign(M_.v.begin() + off, M_.v.begin() + off + len);
            for (std::size_t m = 0; m < len; ++m) J_.v[off + m] += cfg_.omega * (M_.v[off + m] - J_.v[off + m]);
        }
        return false;
    }

    struct Saved {
        std::vector<double> J, M, u, theta;
    };
    Saved save(int n_a, int n_b) const {
        const std::size_t a = static_cast<std::size_t>(n_a) * cg_.grid.n,
                          b = static_cast<std::size_t>(n_b + 1) * cg_.grid.n;
        auto cut = [&](const SpaceTimeField& f) { return std::vector<double>(f.v.begin() + a, f.v.begin() + b); };
        return {cut(J_), cut(M_), cut(u_), cut(theta_)};
    }
    void restore(const Saved& s, int n_a) {
        const std::size_t a = static_cast<std::size_t>(n_a) * cg_.grid.n;
        std::copy(s.J.begin(), s.J.end(), J_.v.begin() + a);
        std::copy(s.M.begin(), s.M.end(), M_.v.begin() + a);
        std::copy(s.u.begin(), s.u.end(), u_.v.begin() + a);
        std::copy(s.theta.begin(), s.theta.end(), theta_.v.begin() + a);
    }

    /// Solves the slab starting at n_a, halving δ on failure. Returns the end row.
    int solve_slab(int n_a, SlabLog& log) {
        for (int h = 0; h <= cfg_.max_halvings; ++h) {
            const int n_b = std::min(nt_ - 1, n_a + std::max(1, rows_for(cfg_.delta / std::pow(2.0, h))));
            log = SlabLog{};
            log.halvings = h;
            if (iterate(n_a, n_b, cfg_.max_iter, true, log)) return n_b;
            if (n_b == n_a + 1) break;
        }
        throw ConvergenceError("fixed point did not converge on slab starting at t = " +
                                   std::to_string(n_a * cg_.dt) + " after " + std::to_string(log.halvings) +
                                   " halvings (last residual " +
                                   std::to_string(log.diff_sup.empty() ? 0.0 : log.diff_sup.back()) + ")",
                               log);
    }

    double halving_change(int n_a, int n_b) {
        const Saved keep = save(n_a, n_b);
        const int mid = n_a + std::max(1, (n_b - n_a) / 2);
        SlabLog l1, l2;
        bool ok = iterate(n_a, mid, cfg_.max_iter, true, l1);
        if (ok && mid < n_b) ok = iterate(mid, n_b, cfg_.max_iter, true, l2);
        double d = ok ? 0.0 : -1.0;
        if (ok) {
            const std::size_t a = static_cast<std::size_t>(n_a) * cg_.grid.n;
            for (std::size_t m = 0; m < keep.J.size(); ++m) d = std::max(d, std::abs(J_.v[a + m] - keep.J[m]));
        }
        restore(keep, n_a);
        return d;
    }

    SolutionBundle finish(std::vector<SlabLog> logs, std::shared_ptr<const Profile> prof) {
        SolutionBundle b;
        b.params = p_;
        b.grid = cg_.grid;
        b.dt = cg_.dt;
        b.nt = nt_;
        b.slabs = std::move(logs);
        b.profile = std::move(prof);
        // final lattice covers every accepted slab
        lattice_ = std::make_shared<CharState>(integrate_semilinear(gamma_, J_, p_, lattice_options(nt_ - 1)));
        auto xt = invert_to_xt(*lattice_, cg_.grid, cg_.dt, nt_);
        b.theta = theta_;
        b.theta_t = std::move(xt.theta_t);
        b.theta_x = std::move(xt.theta_x);
        b.flag = std::move(xt.flag);
        b.u = u_;
        b.J = J_;
        b.lattice = lattice_;
        fill_v(b);
        return b;
    }

    const SpaceTimeField& J() const { return J_; }

private:
    LeslieParams p_;
    FixedPointConfig cfg_;
    CoupledGrid cg_;
    HeatStepper hs_;
    int nt_ = 0;
    std::shared_ptr<Gamma0> gamma_;
    std::shared_ptr<CharState> lattice_;
    SpaceTimeField J_, M_, u_, theta_;
};

void check_config(const FixedPointConfig& cfg, const LeslieParams& p) {
    if (!is_unit_gh(p))
        throw std::invalid_argument("fixed_point_solve: the flux map form requires g = h = 1 (special parameters)");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("fixed_point_solve: delta must be positive");
    if (!(cfg.tol_sup > 0.0) || !(cfg.tol_l2 > 0.0))
        throw std::invalid_argument("fixed_point_solve: tolerances must be positive");
    if (!(cfg.omega > 0.0 && cfg.omega <= 1.0)) throw std::invalid_argument("fixed_point_solve: omega in (0, 1]");
}

}  // namespace

SolutionBundle fixed_point_solve(const InitialData& data, const LeslieParams& p, const FixedPointConfig& cfg,
                                 const CoupledGrid& cg, double T) {
    check_config(cfg, p);
    if (!(T > 0.0)) throw std::invalid_argument("fixed_point_solve: T must be positive");
    Coupler c(data, p, cfg, cg, T);
    std::vector<SlabLog> logs;
    int n_a = 0;
    while (n_a < c.nt() - 1) {
        SlabLog log;
        const int n_b = c.solve_slab(n_a, log);
        if (cfg.check_halving) log.halving_change = c.halving_change(n_a, n_b);
        logs.push_back(std::move(log));
        n_a = n_b;
    }
    return c.finish(std::move(logs), data.profile);
}

std::vector<double> contraction_ratios(const InitialData& data, const LeslieParams& p, const FixedPointConfig& cfg,
                                       const CoupledGrid& cg, const std::vector<double>& deltas, int iters) {
    check_config(cfg, p);
    std::vector<double> out;
    for (double d : deltas) {
        Coupler c(data, p, cfg, cg, d);
        SlabLog log;
        c.iterate(0, c.nt() - 1, iters + 1, false, log);
        double s = 0;
        int m = 0;
        for (double r : log.map_ratio)
            if (r > 0) {
                s += std::log(r);
                ++m;
            }
        out.push_back(m ? std::exp(s / m) : 0.0);
    }
    return out;
}

// ---------------------------------------------------------------- finite-difference reference

SolutionBundle fd_reference_solve(const InitialData& data, const LeslieParams& p, double T, double dx, double dt,
                                  const FdOptions& opt, double x_lo, double x_hi) {
    if (!(x_hi > x_lo)) {
        x_lo = data.grid.x_min;
        x_hi = data.grid.x_max();
    }
    if (!(dt > 0.0 && dx > 0.0 && T > 0.0)) throw std::invalid_argument("fd_reference_solve: bad step sizes");
    if (dt > 0.9 * dx * std::sqrt(p.nu) / p.CU())
        throw std::invalid_argument("fd_reference_solve: CFL violated (dt > 0.9 dx / C_U)");
    const Grid1D g = Grid1D::covering(x_lo, x_hi, dx);
    dx = g.dx;
    const int n = g.n;
    const int nt = static_cast<int>(std::lround(T / dt)) + 1;
    SolutionBundle b;
    b.params = p;
    b.grid = g;
    b.dt = dt;
    b.profile = data.profile;
    SpaceTimeField th(g, dt, nt), u(g, dt, nt);
    const Profile& pr = *data.profile;
    std::vector<double> th1(n);
    for (int i = 0; i < n; ++i) {
        th.at(0, i) = pr.theta0(g.x(i));
        th1[i] = pr.theta1(g.x(i));
        u.at(0, i) = opt.freeze_u ? 0.0 : pr.u0(g.x(i));
    }
    const double nu = p.nu, rho = p.rho, g1 = p.gamma1;
    std::vector<double> c(n), ch(n), L(n), ux(n), gh(n), hh(n), H(n), tt(n);
    std::vector<double> lo(n), di(n), up(n), rhs(n);
    auto wave_op = [&](const double* a) {
        for (int i = 0; i < n; ++i) c[i] = wave_speed(p, a[i]).c;
        for (int i = 0; i + 1 < n; ++i) ch[i] = wave_speed(p, 0.5 * (a[i] + a[i + 1])).c;
        L[0] = L[n - 1] = 0.0;
        for (int i = 1; i + 1 < n; ++i)
            L[i] = c[i] * (ch[i] * (a[i + 1] - a[i]) - ch[i - 1] * (a[i] - a[i - 1])) / (dx * dx);
    };
    auto velocity_x = [&](const double* v) {
        ux[0] = ux[n - 1] = 0.0;
        for (int i = 1; i + 1 < n; ++i) ux[i] = (v[i + 1] - v[i - 1]) / (2 * dx);
    };
    // implicit diffusion step for u with the θ_t flux at n+½
    auto velocity_step = [&](const double* th_old, const double* th_new, const double* u_old, double* u_new) {
        if (opt.freeze_u) {
            std::fill(u_new, u_new + n, 0.0);
            return;
        }
        for (int i = 0; i < n; ++i) tt[i] = h_coeff(p, th_new[i]) * (th_new[i] - th_old[i]) / dt;
        for (int i = 0; i + 1 < n; ++i) {
            const double m = 0.5 * (th_new[i] + th_new[i + 1]);
            gh[i] = g_coeff(p, m);
            H[i] = 0.5 * (tt[i] + tt[i + 1]);
        }
        const double r = dt / (rho * dx * dx);
        for (int i = 1; i + 1 < n; ++i) {
            lo[i] = -r * gh[i - 1];
            up[i] = -r * gh[i];
            di[i] = 1.0 + r * (gh[i - 1] + gh[i]);
            rhs[i] = u_old[i] + dt / rho * (H[i] - H[i - 1]) / dx;
        }
        // Dirichlet u = 0 at both ends; Thomas on the interior
        const int m = n - 2;
        std::vector<double> cp(m), dp(m);
        for (int k = 0; k < m; ++k) {
            const int i = k + 1;
            const double den = di[i] - (k ? lo[i] * cp[k - 1] : 0.0);
            cp[k] = up[i] / den;
            dp[k] = (rhs[i] - (k ? lo[i] * dp[k - 1] : 0.0)) / den;
        }
        u_new[0] = u_new[n - 1] = 0.0;
        for (int k = m - 1; k >= 0; --k) u_new[k + 1] = dp[k] - (k + 1 < m ? cp[k] * u_new[k + 2] : 0.0);
    };
    auto grad_ok = [&](const double* a) {
        for (int i = 1; i + 1 < n; ++i)
            if (std::abs(a[i + 1] - a[i - 1]) / (2 * dx) > opt.grad_threshold) return false;
        return true;
    };
    // first step by Taylor expansion
    wave_op(th.row(0));
    velocity_x(u.row(0));
    for (int i = 0; i < n; ++i) {
        const double acc = (L[i] - h_coeff(p, th.at(0, i)) * ux[i] - g1 * th1[i]) / nu;
        th.at(1, i) = (i == 0 || i == n - 1) ? th.at(0, i) : th.at(0, i) + dt * th1[i] + 0.5 * dt * dt * acc;
    }
    velocity_step(th.row(0), th.row(1), u.row(0), u.row(1));
    int valid = nt;
    const double k = 0.5 * g1 * dt;
    for (int s = 1; s + 1 < nt; ++s) {
        if (!grad_ok(th.row(s))) {
            valid = s + 1;
            b.truncated = true;
            break;
        }
        const double* a0 = th.row(s - 1);
        const double* a1 = th.row(s);
        double* a2 = th.row(s + 1);
        wave_op(a1);
        velocity_x(u.row(s));
        a2[0] = a1[0];
        a2[n - 1] = a1[n - 1];
        for (int i = 1; i + 1 < n; ++i)
            a2[i] = (nu * (2 * a1[i] - a0[i]) + k * a0[i] + dt * dt * (L[i] - h_coeff(p, a1[i]) * ux[i])) / (nu + k);
        velocity_step(a1, a2, u.row(s), u.row(s + 1));
    }
    if (!b.truncated && !grad_ok(th.row(nt - 1))) {
        b.truncated = true;
        valid = nt - 1;
    }
    b.nt = valid;
    th.nt = valid;
    th.v.resize(static_cast<std::size_t>(valid) * n);
    u.nt = valid;
    u.v.resize(static_cast<std::size_t>(valid) * n);
    b.theta = std::move(th);
    b.u = std::move(u);
    b.theta_t = SpaceTimeField(g, dt, valid);
    b.theta_x = SpaceTimeField(g, dt, valid);
    b.J = SpaceTimeField(g, dt, valid);
    b.flag.assign(static_cast<std::size_t>(valid) * n, 0);
    for (int s = 0; s < valid; ++s) {
        for (int i = 0; i < n; ++i) {
            double tt_;
            if (s == 0) tt_ = th1[i];
            else if (s + 1 < valid) tt_ = (b.theta.at(s + 1, i) - b.theta.at(s - 1, i)) / (2 * dt);
            else tt_ = (b.theta.at(s, i) - b.theta.at(s - 1, i)) / dt;
            b.theta_t.at(s, i) = tt_;
            const int il = std::max(0, i - 1), ir = std::min(n - 1, i + 1);
            b.theta_x.at(s, i) = (b.theta.at(s, ir) - b.theta.at(s, il)) / ((ir - il) * dx);
            const double uxv = (b.u.at(s, ir) - b.u.at(s, il)) / ((ir - il) * dx);
            const double th_ = b.theta.at(s, i);
            b.J.at(s, i) = (g_coeff(p, th_) * uxv + h_coeff(p, th_) * tt_) / rho;
        }
    }
    fill_v(b);
    return b;
}

// ---------------------------------------------------------------- energy ledger

double EnergyReport::max_abs_slack() const {
    double m = 0;
    for (double s : slack) m = std::max(m, std::abs(s));
    return m;
}

double EnergyReport::min_slack() const {
    double m = 0;
    for (double s : slack) m = std::min(m, s);
    return m;
}

EnergyReport energy_ledger(const SolutionBundle& b, const LeslieParams& p, int stride) {
    stride = std::max(1, stride);
    const int nt = b.nt, n = b.grid.n;
    const double dx = b.grid.dx, dt = b.dt;
    std::vector<int> rows;
    for (int k = 0; k < nt; k += stride) rows.push_back(k);
    if (rows.back() != nt - 1) rows.push_back(nt - 1);
    EnergyReport r;
    for (int k : rows) r.t.push_back(k * dt);
    const bool use_lattice = b.lattice && is_unit_gh(p);

    // per-row integrals on the grid
    std::vector<double> wave(nt), u2(nt), diss_grid(nt), tsq(nt), j2(nt), rowbuf(n);
    for (int s = 0; s < nt; ++s) {
        for (int i = 0; i < n; ++i) {
            const double th = b.theta.at(s, i);
            const double c = wave_speed(p, th).c;
            const double tt = b.theta_t.at(s, i), tx = b.theta_x.at(s, i);
            rowbuf[i] = p.nu * tt * tt + c * c * tx * tx;
        }
        wave[s] = trapz_row(rowbuf.data(), n, dx);
        for (int i = 0; i < n; ++i) rowbuf[i] = p.rho * b.u.at(s, i) * b.u.at(s, i);
        u2[s] = trapz_row(rowbuf.data(), n, dx);
        for (int i = 0; i < n; ++i) rowbuf[i] = b.J.at(s, i) * b.J.at(s, i);
        j2[s] = trapz_row(rowbuf.data(), n, dx);
        for (int i = 0; i < n; ++i) rowbuf[i] = b.theta_t.at(s, i) * b.theta_t.at(s, i);
        tsq[s] = trapz_row(rowbuf.data(), n, dx);
        for (int i = 0; i < n; ++i) {
            const int il = std::max(0, i - 1), ir = std::min(n - 1, i + 1);
            const double ux = (b.u.at(s, ir) - b.u.at(s, il)) / ((ir - il) * dx);
            const double th = b.theta.at(s, i);
            const double hv = h_coeff(p, th);
            const double e = b.theta_t.at(s, i) + hv * ux / p.gamma1;
            rowbuf[i] = b_coeff(p, th) * ux * ux + p.gamma1 * e * e;
        }
        diss_grid[s] = trapz_row(rowbuf.data(), n, dx);
    }
    auto cumul = [&](const std::vector<double>& f) {
        std::vector<double> c(nt, 0.0);
        for (int s = 1; s < nt; ++s) c[s] = c[s - 1] + 0.5 * dt * (f[s - 1] + f[s]);
        return c;
    };
    std::vector<double> wave_out(rows.size()), diss_out(rows.size());
    if (use_lattice) {
        const auto le = energy_on_levels(*b.lattice, b.J, r.t);
        const auto cj2 = cumul(j2);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            wave_out[k] = le.E[k];
            diss_out[k] = le.theta_t_sq[k] + cj2[rows[k]];
        }
    } else {
        const auto cd = cumul(diss_grid);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            wave_out[k] = wave[rows[k]];
            diss_out[k] = cd[rows[k]];
        }
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const int s = rows[k];
        r.energy.push_back(0.5 * (wave_out[k] + u2[s]));
        r.dissipation.push_back(diss_out[k]);
        double mj = 0;
        for (int i = 0; i < n; ++i) mj = std::max(mj, std::abs(b.J.at(s, i)));
        r.maxJ.push_back(mj);
    }
    for (std::size_t k = 0; k < rows.size(); ++k) r.slack.push_back(r.energy[0] - r.energy[k] - r.dissipation[k]);

    r.min_one_plus_cos_w.assign(rows.size(), 2.0);
    r.min_one_plus_cos_z.assign(rows.size(), 2.0);
    if (b.lattice) {
        for (const auto& row : b.lattice->rows)
            for (const auto& nd : row.nodes) {
                if (nd.ghost) continue;
                const double t = nd.t();
                if (t < 0 || t > r.t.back()) continue;
                const std::size_t k = std::lower_bound(r.t.begin(), r.t.end(), t) - r.t.begin();
                r.min_one_plus_cos_w[k] = std::min(r.min_one_plus_cos_w[k], 1.0 + std::cos(nd.w));
                r.min_one_plus_cos_z[k] = std::min(r.min_one_plus_cos_z[k], 1.0 + std::cos(nd.z));
            }
    } else {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const int s = rows[k];
            for (int i = 0; i < n; ++i) {
                const double c = wave_speed(p, b.theta.at(s, i)).c;
                const double R = b.theta_t.at(s, i) + c * b.theta_x.at(s, i);
                const double S = b.theta_t.at(s, i) - c * b.theta_x.at(s, i);
                r.min_one_plus_cos_w[k] = std::min(r.min_one_plus_cos_w[k], 2.0 / (1.0 + R * R));
                r.min_one_plus_cos_z[k] = std::min(r.min_one_plus_cos_z[k], 2.0 / (1.0 + S * S));
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------- identity residuals

namespace {

double bump1(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }
double dbump1(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double d = 1.0 - s * s;
    return bump1(s) * (-2.0 * s / (d * d));
}

}  // namespace

IdentityResiduals identity_residuals(const SolutionBundle& b, const LeslieParams& p) {
    IdentityResiduals r;
    const int nt = b.nt, n = b.grid.n;
    const double dx = b.grid.dx, dt = b.dt;
    const bool unit = is_unit_gh(p);
    double num = 0, den = 0;
    for (int s = 1; s + 1 < nt; ++s)
        for (int i = 2; i + 2 < n; ++i) {
            bool clean = true;
            for (int q = -1; q <= 1 && clean; ++q)
                for (int m = -1; m <= 1; ++m)
                    if (b.flag[static_cast<std::size_t>(s + q) * n + i + m]) clean = false;
            if (!clean) continue;
            const double vt = (b.v.at(s + 1, i) - b.v.at(s - 1, i)) / (2 * dt);
            const double vxx = (b.v.at(s, i + 1) - 2 * b.v.at(s, i) + b.v.at(s, i - 1)) / (dx * dx);
            const double th = b.theta.at(s, i);
            const double res = vt - (g_coeff(p, th) * vxx + h_coeff(p, th) * b.theta_t.at(s, i)) / p.rho;
            num += res * res;
            den += vt * vt;
        }
    r.vt_identity = den > 0 ? std::sqrt(num / den) : std::sqrt(num * dx * dt);

    const double W = b.grid.x_max() - b.grid.x_min, T = b.t_end();
    if (T <= 0) return r;
    double worst = 0;
    for (int k = 0; k < 10; ++k) {
        const double xc = b.grid.x_min + W * (0.3 + 0.4 * k / 9.0);
        const double tc = T * (0.35 + 0.15 * (k % 3));
        const double ax = 0.15 * W, at = 0.3 * T;
        double I = 0, S = 0;
        for (int s = 0; s < nt; ++s) {
            const double t = s * dt;
            const double ts = (t - tc) / at;
            const double ft = bump1(ts), dft = dbump1(ts) / at;
            if (ft == 0.0 && dft == 0.0) continue;
            const double wt = (s == 0 || s == nt - 1) ? 0.5 : 1.0;
            for (int i = 0; i < n; ++i) {
                const double xs = (b.grid.x(i) - xc) / ax;
                const double fx = bump1(xs);
                if (fx == 0.0) continue;
                const double phi = fx * ft, phi_t = fx * dft, phi_x = dbump1(xs) / ax * ft;
                const double th = b.theta.at(s, i);
                const auto sp = wave_speed(p, th);
                const double tt = b.theta_t.at(s, i), tx = b.theta_x.at(s, i);
                const double cphi_x = sp.dc * tx * phi + sp.c * phi_x;
                double src;
                if (unit) {
                    src = tt * phi + b.J.at(s, i) * phi;
                } else {
                    const int il = std::max(0, i - 1), ir = std::min(n - 1, i + 1);
                    const double ux = (b.u.at(s, ir) - b.u.at(s, il)) / ((ir - il) * dx);
                    src = p.gamma1 * tt * phi + h_coeff(p, th) * ux * phi;
                }
                const double a1 = p.nu * tt * phi_t, a2 = cphi_x * sp.c * tx;
                I += wt * (a1 - a2 - src);
                S += wt * (std::abs(a1) + std::abs(a2) + std::abs(src));
            }
        }
        if (S > 0) worst = std::max(worst, std::abs(I) / S);
    }
    r.weak_form = worst;
    return r;
}

NormReport flux_norms(const SolutionBundle& b, double alpha, std::uint64_t seed) {
    return norm_report(b.J, alpha, seed);
}

}  // namespace nlc
