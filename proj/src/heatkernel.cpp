#include "nlc/heatkernel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nlc {

double kernel(double x, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel requires t > 0");
    return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

double kernel_dx(double x, double t) { return -x / (2.0 * t) * kernel(x, t); }

double SpaceTimeField::sample(double x, double t) const {
    const double r = (x - grid.x_min) / grid.dx;
    if (r < 0.0 || r > grid.n - 1) return 0.0;
    double s = t / dt;
    s = std::clamp(s, 0.0, static_cast<double>(nt - 1));
    const int i = std::min(static_cast<int>(r), grid.n - 2);
    const int n = std::min(static_cast<int>(s), std::max(nt - 2, 0));
    const double a = r - i;
    if (nt == 1) return (1 - a) * at(0, i) + a * at(0, i + 1);
    const double b = s - n;
    return (1 - b) * ((1 - a) * at(n, i) + a * at(n, i + 1)) + b * ((1 - a) * at(n + 1, i) + a * at(n + 1, i + 1));
}

void write_field_csv(const SpaceTimeField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    char buf[64];
    out << "x";
    for (int n = 0; n < f.nt; ++n) {
        std::snprintf(buf, sizeof buf, ",%.17g", f.t(n));
        out << buf;
    }
    out << "\n";
    for (int i = 0; i < f.grid.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", f.grid.x(i));
        out << buf;
        for (int n = 0; n < f.nt; ++n) {
            std::snprintf(buf, sizeof buf, ",%.17g", f.at(n, i));
            out << buf;
        }
        out << "\n";
    }
}

SpaceTimeField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        return cells;
    };
    std::string line;
    std::getline(in, line);
    auto head = split(line);
    if (head.size() < 2) throw std::runtime_error("malformed header in " + path);
    std::vector<double> ts;
    for (std::size_t k = 1; k < head.size(); ++k) ts.push_back(std::stod(head[k]));
    std::vector<double> xs;
    std::vector<std::vector<double>> cols;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != head.size()) throw std::runtime_error("ragged row in " + path);
        xs.push_back(std::stod(cells[0]));
        std::vector<double> r;
        for (std::size_t k = 1; k < cells.size(); ++k) r.push_back(std::stod(cells[k]));
        cols.push_back(std::move(r));
    }
    if (xs.size() < 2) throw std::runtime_error("too few rows in " + path);
    Grid1D g{xs.front(), (xs.back() - xs.front()) / (xs.size() - 1), static_cast<int>(xs.size())};
    const double dt = ts.size() > 1 ? (ts.back() - ts.front()) / (ts.size() - 1) : 0.0;
    SpaceTimeField f(g, dt, static_cast<int>(ts.size()));
    for (int i = 0; i < g.n; ++i)
        for (int n = 0; n < f.nt; ++n) f.at(n, i) = cols[i][n];
    return f;
}

// ---------------------------------------------------------------- norms

double holder_constant_1d(const double* f, int n, double dx, double alpha, int i_lo, int i_hi) {
    if (i_hi < 0 || i_hi > n - 1) i_hi = n - 1;
    i_lo = std::max(i_lo, 0);
    double best = 0.0;
    std::vector<double> inv(i_hi - i_lo + 1, 0.0);
    for (int s = 1; s <= i_hi - i_lo; ++s) inv[s] = 1.0 / std::pow(s * dx, alpha);
    for (int i = i_lo; i <= i_hi; ++i)
        for (int j = i + 1; j <= i_hi; ++j) best = std::max(best, std::abs(f[j] - f[i]) * inv[j - i]);
    return best;
}

NormReport norm_report(const SpaceTimeField& f, double alpha, std::uint64_t seed, std::size_t max_pairs) {
    NormReport r;
    r.alpha = alpha;
    double s2 = 0.0;
    for (double v : f.v) {
        r.sup = std::max(r.sup, std::abs(v));
        s2 += v * v;
    }
    r.l2 = std::sqrt(s2 * f.grid.dx * (f.dt > 0 ? f.dt : 1.0));
    const int nx = f.grid.n, nt = f.nt;
    const double pairs_x = 0.5 * nt * static_cast<double>(nx) * (nx - 1);
    const double pairs_t = 0.5 * nx * static_cast<double>(nt) * (nt - 1);
    if (pairs_x + pairs_t <= static_cast<double>(max_pairs)) {
        for (int n = 0; n < nt; ++n) r.holder_x = std::max(r.holder_x, holder_constant_1d(f.row(n), nx, f.grid.dx, alpha));
        if (nt > 1) {
            std::vector<double> col(nt);
            for (int i = 0; i < nx; ++i) {
                for (int n = 0; n < nt; ++n) col[n] = f.at(n, i);
                r.holder_t = std::max(r.holder_t, holder_constant_1d(col.data(), nt, f.dt, alpha));
            }
        }
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (std::size_t k = 0; k < max_pairs; ++k) {
            const bool xdir = (k % 2 == 0) || nt < 2;
            const int len = xdir ? nx : nt;
            if (len < 2) continue;
            const int sep = std::max(1, static_cast<int>(std::exp(U(rng) * std::log(static_cast<double>(len - 1)))));
            const int i = static_cast<int>(U(rng) * (len - sep));
            const int other = static_cast<int>(U(rng) * (xdir ? nt : nx));
            double a, b;
            if (xdir) {
                a = f.at(other, i);
                b = f.at(other, i + sep);
                r.holder_x = std::max(r.holder_x, std::abs(a - b) / std::pow(sep * f.grid.dx, alpha));
            } else {
                a = f.at(i, other);
                b = f.at(i + sep, other);
                r.holder_t = std::max(r.holder_t, std::abs(a - b) / std::pow(sep * f.dt, alpha));
            }
        }
    }
    r.holder = std::max(r.holder_x, r.holder_t);
    return r;
}

// ---------------------------------------------------------------- hat kernels

namespace {

double half_erfc(double a, double tau) { return 0.5 * std::erfc(std::abs(a) / (2.0 * std::sqrt(tau))); }

// (H * ramp)(a) - ramp(a)
double Q(double a, double tau) {
    return -std::abs(a) * half_erfc(a, tau) + std::sqrt(tau / std::numbers::pi) * std::exp(-a * a / (4.0 * tau));
}

// (H * step)(a) - step(a), step(0) = 1/2 folded in
double G(double a, double tau) {
    if (a == 0.0) return 0.5;
    return (a > 0 ? 1.0 : 0.0) - (a > 0 ? 1.0 : -1.0) * half_erfc(a, tau);
}

}  // namespace

double heat_hat(double a, double tau, double dx) {
    const double hat = std::max(0.0, 1.0 - std::abs(a) / dx);
    return hat + (Q(a + dx, tau) - 2.0 * Q(a, tau) + Q(a - dx, tau)) / dx;
}

double heat_hat_dx(double a, double tau, double dx) {
    return (G(a + dx, tau) - 2.0 * G(a, tau) + G(a - dx, tau)) / dx;
}

// ---------------------------------------------------------------- stepper

HeatStepper::HeatStepper(const Grid1D& grid, double dt, const HeatQuadrature& q) : grid_(grid), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("HeatStepper: dt must be positive");
    const double dx = grid.dx;
    const double sig = std::sqrt(2.0 * dt);
    K_ = static_cast<int>(std::ceil(q.trunc_sigmas * sig / dx)) + 1;
    K_ = std::min(K_, std::max(grid.n - 1, 1));
    sampled_ = sig / dx >= q.sampled_min_ratio;
    const int W = 2 * K_ + 1;
    P_.assign(W, 0.0);
    A0_.assign(W, 0.0);
    A1_.assign(W, 0.0);
    B0_.assign(W, 0.0);
    B1_.assign(W, 0.0);
    for (int k = -K_; k <= K_; ++k) {
        const double a = k * dx;
        P_[k + K_] = sampled_ ? kernel(a, dt) * dx : heat_hat(a, dt, dx);
    }
    // graded mesh in s = sqrt(tau); tau = s², dtau = 2 s ds
    const double smax = std::sqrt(dt);
    std::vector<double> cuts;
    cuts.push_back(0.0);
    for (int m = q.graded_pieces - 1; m >= 0; --m) cuts.push_back(smax * std::pow(0.5, m));
    using GL = boost::math::quadrature::gauss<double, 8>;
    for (int k = -K_; k <= K_; ++k) {
        const double a = k * dx;
        double a0 = 0, a1 = 0, b0 = 0, b1 = 0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double lo = cuts[c], hi = cuts[c + 1];
            auto fa0 = [&](double s) { const double t = s * s; return 2 * s * heat_hat(a, t, dx) * (t / dt); };
            auto fa1 = [&](double s) { const double t = s * s; return 2 * s * heat_hat(a, t, dx) * (1 - t / dt); };
            auto fb0 = [&](double s) { const double t = s * s; return 2 * s * heat_hat_dx(a, t, dx) * (t / dt); };
            auto fb1 = [&](double s) { const double t = s * s; return 2 * s * heat_hat_dx(a, t, dx) * (1 - t / dt); };
            a0 += GL::integrate(fa0, lo, hi);
            a1 += GL::integrate(fa1, lo, hi);
            b0 += GL::integrate(fb0, lo, hi);
            b1 += GL::integrate(fb1, lo, hi);
        }
        A0_[k + K_] = a0;
        A1_[k + K_] = a1;
        B0_[k + K_] = b0;
        B1_[k + K_] = b1;
    }
    Ac_.resize(W);
    Bc_.resize(W);
    for (int m = 0; m < W; ++m) {
        Ac_[m] = A0_[m] + A1_[m];
        Bc_[m] = B0_[m] + B1_[m];
    }
    if (W > 96) {
        nfft_ = 1;
        while (nfft_ < grid.n + W) nfft_ *= 2;
        Eigen::FFT<double> fft;
        fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
        std::vector<double> buf(nfft_);
        for (const auto* w : {&P_, &A0_, &A1_, &B0_, &B1_, &Ac_, &Bc_}) {
            std::fill(buf.begin(), buf.end(), 0.0);
            std::copy(w->begin(), w->end(), buf.begin());
            spec_.emplace_back();
            fft.fwd(spec_.back(), buf);
        }
    }
}

double HeatStepper::truncation_mass_error() const {
    const double r = (K_ + 0.5) * grid_.dx;
    return std::erfc(r / (2.0 * std::sqrt(dt_)));
}

void HeatStepper::conv_fft(const std::vector<std::complex<double>>& spec, const double* in, double* out,
                           double scale) const {
    thread_local Eigen::FFT<double> fft;
    thread_local std::vector<double> buf;
    thread_local std::vector<std::complex<double>> f;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    const int n = grid_.n;
    buf.assign(nfft_, 0.0);
    std::copy(in, in + n, buf.begin());
    fft.fwd(f, buf);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] *= spec[k];
    fft.inv(buf, f);
    for (int i = 0; i < n; ++i) out[i] += scale * buf[i + K_];
}

void HeatStepper::conv(const std::vector<double>& w, const double* in, double* out, double scale) const {
    if (nfft_) {
        const std::vector<double>* ws[] = {&P_, &A0_, &A1_, &B0_, &B1_, &Ac_, &Bc_};
        for (int m = 0; m < 7; ++m)
            if (ws[m] == &w) return conv_fft(spec_[m], in, out, scale);
    }
    const int n = grid_.n, K = K_;
    const double* wp = w.data();
    for (int i = 0; i < n; ++i) {
        // out[i] += Σ_k w[k+K] in[i-k]
        const int klo = std::max(-K, i - (n - 1));
        const int khi = std::min(K, i);
        double s = 0.0;
        for (int k = klo; k <= khi; ++k) s += wp[k + K] * in[i - k];
        out[i] += scale * s;
    }
}

void HeatStepper::propagate(const double* in, double* out) const {
    std::fill(out, out + grid_.n, 0.0);
    conv(P_, in, out, 1.0);
}

void HeatStepper::add_local_H(const double* f_start, const double* f_end, double* out, double scale) const {
    conv(A0_, f_start, out, scale);
    conv(A1_, f_end, out, scale);
}

void HeatStepper::add_local_Hx(const double* f_start, const double* f_end, double* out, double scale) const {
    conv(B0_, f_start, out, scale);
    conv(B1_, f_end, out, scale);
}

void HeatStepper::add_local_Hx_const(const double* f, double* out, double scale) const { conv(Bc_, f, out, scale); }
void HeatStepper::add_local_H_const(const double* f, double* out, double scale) const { conv(Ac_, f, out, scale); }

// ---------------------------------------------------------------- Duhamel and flux map

SpaceTimeField duhamel_velocity(const HeatStepper& hs, const std::vector<double>& u0, const SpaceTimeField& theta) {
    const int nx = hs.grid().n;
    if (theta.grid.n != nx || static_cast<int>(u0.size()) != nx || std::abs(theta.dt - hs.dt()) > 1e-14 * hs.dt())
        throw std::invalid_argument("duhamel_velocity: grid mismatch");
    SpaceTimeField u(theta.grid, theta.dt, theta.nt);
    std::copy(u0.begin(), u0.end(), u.row(0));
    std::vector<double> ts(nx);
    for (int n = 1; n < theta.nt; ++n) {
        hs.propagate(u.row(n - 1), u.row(n));
        for (int i = 0; i < nx; ++i) ts[i] = (theta.at(n, i) - theta.at(n - 1, i)) / theta.dt;
        hs.add_local_Hx_const(ts.data(), u.row(n));
    }
    return u;
}

namespace {

void central_diff(const double* f, int n, double dx, double* out) {
    for (int i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    out[0] = (f[1] - f[0]) / dx;
    out[n - 1] = (f[n - 1] - f[n - 2]) / dx;
}

}  // namespace

void flux_map_step(const HeatStepper& hs, const LeslieParams& p, const double* theta_prev, const double* theta_cur,
                   const double* u_prev, const double* M_prev, double* u_cur, double* M_cur) {
    const int nx = hs.grid().n;
    const double dt = hs.dt(), dx = hs.grid().dx;
    thread_local std::vector<double> ts, tx0, tx1, k0, k1, g0, g1;
    ts.resize(nx);
    tx0.resize(nx);
    tx1.resize(nx);
    k0.resize(nx);
    k1.resize(nx);
    g0.resize(nx);
    g1.resize(nx);
    for (int i = 0; i < nx; ++i) ts[i] = (theta_cur[i] - theta_prev[i]) / dt;
    hs.propagate(u_prev, u_cur);
    hs.add_local_Hx_const(ts.data(), u_cur);
    central_diff(theta_prev, nx, dx, tx0.data());
    central_diff(theta_cur, nx, dx, tx1.data());
    for (int i = 0; i < nx; ++i) {
        const auto s0 = wave_speed(p, theta_prev[i]);
        const auto s1 = wave_speed(p, theta_cur[i]);
        k0[i] = s0.c * s0.dc * tx0[i] * tx0[i];
        k1[i] = s1.c * s1.dc * tx1[i] * tx1[i];
        g0[i] = s0.c * s0.c * tx0[i] - u_prev[i];
        g1[i] = s1.c * s1.c * tx1[i] - u_cur[i];
        ts[i] *= 2.0;
    }
    hs.propagate(M_prev, M_cur);
    hs.add_local_H_const(ts.data(), M_cur, -1.0);
    hs.add_local_H(k0.data(), k1.data(), M_cur, -1.0);
    hs.add_local_Hx(g0.data(), g1.data(), M_cur, 1.0);
}

FluxMapResult flux_map(const HeatStepper& hs, const LeslieParams& p, const std::vector<double>& J0,
                       const std::vector<double>& u0, const SpaceTimeField& theta) {
    const int nx = hs.grid().n;
    if (theta.grid.n != nx || static_cast<int>(u0.size()) != nx || static_cast<int>(J0.size()) != nx)
        throw std::invalid_argument("flux_map: grid mismatch");
    FluxMapResult r{SpaceTimeField(theta.grid, theta.dt, theta.nt), SpaceTimeField(theta.grid, theta.dt, theta.nt)};
    std::copy(J0.begin(), J0.end(), r.M.row(0));
    std::copy(u0.begin(), u0.end(), r.u.row(0));
    for (int n = 1; n < theta.nt; ++n)
        flux_map_step(hs, p, theta.row(n - 1), theta.row(n), r.u.row(n - 1), r.M.row(n - 1), r.u.row(n), r.M.row(n));
    return r;
}

VelocityFluxBounds velocity_flux_bounds(double t, const LeslieParams& p, double J0_sup, double u0_sup, double theta_t_LinfL2,
                         double theta_x_LinfL2, double u_sup) {
    const double pi = std::numbers::pi;
    // ∫_0^t ||H_x(τ)||_2 dτ = 4 c_h t^{1/4},  c_h² = 1/(8√(2π))
    const double ch = std::sqrt(1.0 / (8.0 * std::sqrt(2.0 * pi)));
    const double int_Hx_l2 = 4.0 * ch * std::pow(t, 0.25);
    const double int_H_l2 = std::pow(8.0 * pi, -0.25) * (4.0 / 3.0) * std::pow(t, 0.75);
    const double int_H_inf = std::sqrt(t / pi);
    const double int_Hx_l1 = 2.0 * std::sqrt(t / pi);
    const double CU = p.CU(), C1 = lipschitz_C1(p);
    VelocityFluxBounds b;
    b.u_rhs = u0_sup + int_Hx_l2 * theta_t_LinfL2;
    b.vt_rhs = J0_sup + 2.0 * int_H_l2 * theta_t_LinfL2 + int_H_inf * CU * C1 * theta_x_LinfL2 * theta_x_LinfL2 +
               int_Hx_l2 * CU * CU * theta_x_LinfL2 + int_Hx_l1 * u_sup;
    return b;
}

}  // namespace nlc
