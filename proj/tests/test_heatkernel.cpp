#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "nlc/heatkernel.hpp"

using namespace nlc;

namespace {

template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

SpaceTimeField constant_theta(const Grid1D& g, double dt, int nt, double v) { return SpaceTimeField(g, dt, nt, v); }

}  // namespace

TEST_CASE("kernel values") {
    CHECK(kernel(0.0, 1.0) == doctest::Approx(0.28209479177387814).epsilon(1e-15));
    CHECK(kernel_dx(0.3, 0.7) == doctest::Approx(-0.3 / 1.4 * kernel(0.3, 0.7)));
    CHECK_THROWS(kernel(0.0, 0.0));
    CHECK_THROWS(kernel(1.0, -1.0));
    const double h = 1e-6;
    CHECK(kernel_dx(0.4, 0.3) == doctest::Approx((kernel(0.4 + h, 0.3) - kernel(0.4 - h, 0.3)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("kernel mass is one") {
    for (double t : {0.1, 1.0, 10.0}) {
        const double L = 16.0 * std::sqrt(t);
        const double m = simpson([t](double x) { return kernel(x, t); }, -L, L, 20000);
        CHECK(std::abs(m - 1.0) < 1e-10);
    }
}

TEST_CASE("semigroup identity by numerical convolution") {
    const double t1 = 0.3, t2 = 0.5;
    for (double x : {-1.2, 0.0, 0.4, 2.0}) {
        const double conv = simpson([&](double y) { return kernel(x - y, t1) * kernel(y, t2); }, -12, 12, 20000);
        CHECK(std::abs(conv - kernel(x, t1 + t2)) < 1e-8);
    }
}

TEST_CASE("hat kernels reduce to the hat and to centred differences as tau -> 0") {
    const double dx = 0.1;
    CHECK(heat_hat(0.0, 1e-12, dx) == doctest::Approx(1.0));
    CHECK(heat_hat(dx, 1e-12, dx) == doctest::Approx(0.0));
    CHECK(heat_hat(0.05, 1e-12, dx) == doctest::Approx(0.5));
    CHECK(heat_hat_dx(0.0, 1e-12, dx) == doctest::Approx(0.0));
    CHECK(heat_hat_dx(dx, 1e-12, dx) == doctest::Approx(-1.0 / (2 * dx)));
    CHECK(heat_hat_dx(-dx, 1e-12, dx) == doctest::Approx(1.0 / (2 * dx)));
}

TEST_CASE("hat kernels match direct quadrature") {
    const double dx = 0.05;
    for (double tau : {1e-4, 3e-3, 0.05}) {
        for (double a : {0.0, 0.02, 0.05, 0.13, -0.2}) {
            auto hat = [dx](double y) { return std::max(0.0, 1 - std::abs(y) / dx); };
            const double q = simpson([&](double y) { return kernel(a - y, tau) * hat(y); }, -dx, dx, 20000);
            const double qx = simpson([&](double y) { return kernel_dx(a - y, tau) * hat(y); }, -dx, dx, 20000);
            CHECK(heat_hat(a, tau, dx) == doctest::Approx(q).epsilon(1e-8));
            CHECK(std::abs(heat_hat_dx(a, tau, dx) - qx) < 1e-6 * (1 + std::abs(qx)));
        }
    }
}

TEST_CASE("discrete propagator conserves mass and truncation error is below 1e-12") {
    for (double dt : {1e-4, 1e-3, 1e-2}) {
        Grid1D g = Grid1D::covering(-4, 4, 0.005);
        HeatStepper hs(g, dt);
        CHECK(hs.truncation_mass_error() < 1e-12);
        double m = 0;
        for (double w : hs.prop_weights()) m += w;
        CHECK(std::abs(m - 1.0) < 1e-10);
    }
}

TEST_CASE("Duhamel velocity with theta_t = 0 reproduces the heat evolution of a kernel") {
    const double t0 = 0.05, dt = 2e-3;
    Grid1D g = Grid1D::covering(-5, 5, 0.005);
    HeatStepper hs(g, dt);
    const int nt = 101;
    std::vector<double> u0(g.n);
    for (int i = 0; i < g.n; ++i) u0[i] = kernel(g.x(i) - 0.3, t0);
    auto u = duhamel_velocity(hs, u0, constant_theta(g, dt, nt, 0.7));
    double err = 0, prev_sup = 1e300;
    for (int n = 0; n < nt; ++n) {
        double sup = 0;
        for (int i = 0; i < g.n; ++i) {
            err = std::max(err, std::abs(u.at(n, i) - kernel(g.x(i) - 0.3, t0 + n * dt)));
            sup = std::max(sup, std::abs(u.at(n, i)));
        }
        CHECK(sup <= prev_sup + 1e-15);
        prev_sup = sup;
    }
    CHECK(err < 1e-6);
}

TEST_CASE("Duhamel velocity is a sup-norm contraction between initial conditions") {
    const double dt = 1e-3;
    Grid1D g = Grid1D::covering(-3, 3, 0.01);
    HeatStepper hs(g, dt);
    std::vector<double> a(g.n), b(g.n);
    for (int i = 0; i < g.n; ++i) {
        a[i] = std::exp(-g.x(i) * g.x(i) * 4) * std::cos(7 * g.x(i));
        b[i] = 0.5 * std::exp(-std::pow(g.x(i) - 0.4, 2) * 9);
    }
    auto th = constant_theta(g, dt, 40, 0.0);
    auto ua = duhamel_velocity(hs, a, th), ub = duhamel_velocity(hs, b, th);
    double d0 = 0, dN = 0;
    for (int i = 0; i < g.n; ++i) {
        d0 = std::max(d0, std::abs(a[i] - b[i]));
        dN = std::max(dN, std::abs(ua.at(39, i) - ub.at(39, i)));
    }
    CHECK(dN <= d0);
}

TEST_CASE("flux map with constant theta") {
    const double dt = 2e-3;
    Grid1D g = Grid1D::covering(-4, 4, 0.01);
    HeatStepper hs(g, dt);
    auto p = LeslieParams::special();
    auto th = constant_theta(g, dt, 51, 0.9);
    std::vector<double> zero(g.n, 0.0), J0(g.n);
    auto r0 = flux_map(hs, p, zero, zero, th);
    for (double v : r0.M.v) CHECK(v == 0.0);
    const double t0 = 0.02;
    for (int i = 0; i < g.n; ++i) J0[i] = kernel(g.x(i), t0);
    auto r = flux_map(hs, p, J0, zero, th);
    double err = 0;
    for (int n = 0; n < th.nt; ++n)
        for (int i = 0; i < g.n; ++i) err = std::max(err, std::abs(r.M.at(n, i) - kernel(g.x(i), t0 + n * dt)));
    CHECK(err < 1e-6);
    for (int i = 0; i < g.n; ++i) CHECK(r.M.at(0, i) == J0[i]);
}

TEST_CASE("flux map satisfies J_t = J_xx + theta_tt for a separable forcing") {
    // θ = θ* + s(t) b(x), u0 = 0, J0 = 0 with c ≡ 1 (K1 = K3) gives
    // M = -∫H*(2θ_s) + ∫H_x*(θ_y - u); compare against an FD heat solve of the same PDE.
    auto p = LeslieParams::special();
    p.K3 = 1.0;
    const double dt = 1e-3, T = 0.1;
    Grid1D g = Grid1D::covering(-4, 4, 0.01);
    HeatStepper hs(g, dt);
    const int nt = static_cast<int>(std::round(T / dt)) + 1;
    SpaceTimeField th(g, dt, nt);
    auto sfun = [](double t) { return t * t; };
    for (int n = 0; n < nt; ++n)
        for (int i = 0; i < g.n; ++i) th.at(n, i) = 0.3 + sfun(n * dt) * std::exp(-g.x(i) * g.x(i));
    std::vector<double> zero(g.n, 0.0);
    auto r = flux_map(hs, p, zero, zero, th);
    // reference: u_t = u_xx + θ_tx, J_t = J_xx + θ_tt + ... with c ≡ 1: J_t = J_xx + (θ_x - u)_x - 2θ_t
    // fine explicit solve of u and J with analytic θ
    const double h = 0.01, k = 2e-5;
    const int n = g.n, steps = static_cast<int>(std::round(T / k));
    std::vector<double> u(n, 0.0), J(n, 0.0), un(n), Jn(n);
    auto bx = [](double x) { return std::exp(-x * x); };
    auto dbx = [](double x) { return -2 * x * std::exp(-x * x); };
    auto d2bx = [](double x) { return (4 * x * x - 2) * std::exp(-x * x); };
    for (int s = 0; s < steps; ++s) {
        const double t = s * k;
        for (int i = 1; i + 1 < n; ++i) {
            const double x = g.x(i);
            const double lapu = (u[i + 1] - 2 * u[i] + u[i - 1]) / (h * h);
            const double lapJ = (J[i + 1] - 2 * J[i] + J[i - 1]) / (h * h);
            const double ux = (u[i + 1] - u[i - 1]) / (2 * h);
            un[i] = u[i] + k * (lapu + 2 * t * dbx(x));
            Jn[i] = J[i] + k * (lapJ + sfun(t) * d2bx(x) - ux - 2 * 2 * t * bx(x));
        }
        un[0] = un[n - 1] = Jn[0] = Jn[n - 1] = 0;
        std::swap(u, un);
        std::swap(J, Jn);
    }
    double err = 0, mag = 0;
    for (int i = 0; i < n; ++i) {
        err = std::max(err, std::abs(r.M.at(nt - 1, i) - J[i]));
        mag = std::max(mag, std::abs(J[i]));
    }
    CHECK(mag > 1e-3);
    CHECK(err < 2e-3 * mag);
}

TEST_CASE("norm report") {
    Grid1D g = Grid1D::covering(0, 2 * std::numbers::pi, 0.05);
    SpaceTimeField z(g, 0.1, 5);
    auto r0 = norm_report(z, 0.2);
    CHECK(r0.sup == 0.0);
    CHECK(r0.l2 == 0.0);
    CHECK(r0.holder == 0.0);
    SpaceTimeField s(g, 0.1, 3);
    for (int n = 0; n < 3; ++n)
        for (int i = 0; i < g.n; ++i) s.at(n, i) = std::sin(g.x(i));
    auto r = norm_report(s, 0.2);
    CHECK(r.sup == doctest::Approx(1.0).epsilon(1e-3));
    double brute = 0;
    for (int i = 0; i < g.n; ++i)
        for (int j = i + 1; j < g.n; ++j)
            brute = std::max(brute, std::abs(s.at(0, i) - s.at(0, j)) / std::pow(g.x(j) - g.x(i), 0.2));
    CHECK(r.holder_x == doctest::Approx(brute));
    CHECK(std::isfinite(r.holder_x));
    CHECK(r.holder_t == 0.0);
    auto rs = norm_report(s, 0.2, 7, 1000);
    CHECK(rs.holder_x <= brute + 1e-15);
}

TEST_CASE("time Holder quotient of the Duhamel term carries the t^(1/4 - alpha) factor") {
    // L2-normalised source of width sqrt(t0): u(., t0) is self-similar, so
    // sup|u(., t0) - u(., 0)| / t0^alpha scales exactly like t0^(1/4 - alpha).
    const double alpha = 0.2;
    std::vector<double> q, ts{0.01, 0.04, 0.16};
    for (double t0 : ts) {
        const double w = std::sqrt(t0);
        Grid1D g = Grid1D::covering(-3, 3, w / 40);
        const int nt = 41;
        const double dt = t0 / (nt - 1);
        HeatStepper hs(g, dt);
        SpaceTimeField th(g, dt, nt);
        for (int n = 0; n < nt; ++n)
            for (int i = 0; i < g.n; ++i) th.at(n, i) = n * dt * std::exp(-std::pow(g.x(i) / w, 2)) / std::sqrt(w);
        auto u = duhamel_velocity(hs, std::vector<double>(g.n, 0.0), th);
        SpaceTimeField ends(g, t0, 2);
        std::copy(u.row(0), u.row(0) + g.n, ends.row(0));
        std::copy(u.row(nt - 1), u.row(nt - 1) + g.n, ends.row(1));
        q.push_back(norm_report(ends, alpha, 1, 1u << 30).holder_t);
    }
    for (int k = 0; k < 2; ++k) {
        const double slope = std::log(q[k + 1] / q[k]) / std::log(ts[k + 1] / ts[k]);
        CHECK(slope == doctest::Approx(0.25 - alpha).epsilon(0.1));
    }
}

TEST_CASE("explicit velocity and flux bounds") {
    auto p = LeslieParams::special();
    auto b0 = velocity_flux_bounds(0.0, p, 1.0, 2.0, 1.0, 1.0, 1.0);
    CHECK(b0.u_rhs == doctest::Approx(2.0));
    CHECK(b0.vt_rhs == doctest::Approx(1.0));
    auto b1 = velocity_flux_bounds(0.5, p, 1.0, 2.0, 1.0, 1.0, 1.0);
    CHECK(b1.u_rhs > 2.0);
    CHECK(b1.vt_rhs > 1.0);
    // ∫_0^t ||H_x||_2 = 4 c_h t^{1/4} against quadrature of the closed-form L2 norm
    const double t = 0.3;
    const double q = simpson(
        [](double r) {
            if (r == 0.0) r = 1e-9;
            const double tau = r * r * r * r;  // dtau = 4 r³ dr
            const double n2 = simpson([tau](double x) { return std::pow(kernel_dx(x, tau), 2); },
                                      -20 * std::sqrt(tau), 20 * std::sqrt(tau), 2000);
            return 4 * r * r * r * std::sqrt(n2);
        },
        0.0, std::pow(t, 0.25), 100);
    CHECK((velocity_flux_bounds(t, p, 0, 0, 1.0, 0, 0).u_rhs) == doctest::Approx(q).epsilon(2e-3));
}

TEST_CASE("field CSV round trip") {
    Grid1D g = Grid1D::covering(-1, 1, 0.25);
    SpaceTimeField f(g, 0.1, 4);
    for (std::size_t k = 0; k < f.v.size(); ++k) f.v[k] = std::sin(0.37 * k) / 3.0;
    write_field_csv(f, "field_roundtrip.csv");
    auto r = read_field_csv("field_roundtrip.csv");
    REQUIRE(r.v.size() == f.v.size());
    for (std::size_t k = 0; k < f.v.size(); ++k) CHECK(r.v[k] == f.v[k]);
    CHECK(r.dt == doctest::Approx(0.1));
    std::remove("field_roundtrip.csv");
}

TEST_CASE("wide stencils: spectral convolution equals direct summation") {
    Grid1D g{-1.0, 0.002, 1001};
    HeatStepper hs(g, 1e-3);
    REQUIRE(2 * hs.radius() + 1 > 96);
    std::vector<double> in(g.n), out(g.n);
    for (int i = 0; i < g.n; ++i) in[i] = std::sin(7 * g.x(i)) + (i % 13 == 0 ? 0.5 : 0.0);
    hs.propagate(in.data(), out.data());
    const auto& w = hs.prop_weights();
    const int K = hs.radius();
    double err = 0;
    for (int i = 0; i < g.n; ++i) {
        double s = 0;
        for (int k = -K; k <= K; ++k)
            if (i - k >= 0 && i - k < g.n) s += w[k + K] * in[i - k];
        err = std::max(err, std::abs(s - out[i]));
    }
    CHECK(err < 1e-13);
}
