#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nlc/charsolver.hpp"

using namespace nlc;

namespace {

SpaceTimeField zero_field() { return SpaceTimeField(Grid1D{-1.0, 1.0, 3}, 1.0, 1); }

LeslieParams unit_speed() {
    auto p = LeslieParams::special();
    p.K3 = 1.0;
    return p;
}

InitialData gauss_data(const LeslieParams&, double amp, double amp1, double width, double L, double dx) {
    GaussianFamily g;
    g.amp_theta = amp;
    g.amp_theta1 = amp1;
    g.width = width;
    return sample_profile(gaussian_profile(g), Grid1D::covering(-L, L, dx));
}

template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// leapfrog for θ_tt + γθ_t = θ_xx on [-L, L] with fixed ends
std::vector<double> fd_damped_wave(const Profile& pr, double gamma, double L, double dx, double T) {
    const int n = static_cast<int>(std::lround(2 * L / dx)) + 1;
    const double dt = 0.25 * dx;
    const int steps = static_cast<int>(std::lround(T / dt));
    std::vector<double> a(n), b(n), c(n);
    for (int i = 0; i < n; ++i) a[i] = pr.theta0(-L + i * dx);
    for (int i = 1; i + 1 < n; ++i) {
        const double x = -L + i * dx;
        const double lap = (a[i + 1] - 2 * a[i] + a[i - 1]) / (dx * dx);
        b[i] = a[i] + dt * pr.theta1(x) + 0.5 * dt * dt * (lap - gamma * pr.theta1(x));
    }
    b[0] = a[0];
    b[n - 1] = a[n - 1];
    const double r = dt * dt / (dx * dx), k = 0.5 * gamma * dt;
    for (int s = 1; s < steps; ++s) {
        for (int i = 1; i + 1 < n; ++i)
            c[i] = (2 * b[i] - (1 - k) * a[i] + r * (b[i + 1] - 2 * b[i] + b[i - 1])) / (1 + k);
        c[0] = b[0];
        c[n - 1] = b[n - 1];
        std::swap(a, b);
        std::swap(b, c);
    }
    return b;
}

}  // namespace

TEST_CASE("initial curve is the anti-diagonal for trivial data") {
    auto p = LeslieParams::special();
    auto d = gauss_data(p, 0.0, 0.0, 0.5, 3, 0.01);
    Gamma0 g(d, p, -3, 3, 0.01);
    for (double x : {-2.9, -1.0, 0.0, 0.37, 2.5}) {
        CHECK(g.X_of_x(x) == doctest::Approx(x).epsilon(1e-13));
        CHECK(g.Y_of_x(x) == doctest::Approx(-x).epsilon(1e-13));
    }
    CHECK(g.max_abs_X_plus_Y() < 1e-12);
}

TEST_CASE("X(x) against Richardson quadrature and its inverse") {
    auto p = LeslieParams::special();
    auto d = gauss_data(p, 0.3, 0.2, 0.4, 4, 0.01);
    Gamma0 g(d, p, -4, 4, 0.02);
    const auto& pr = *d.profile;
    auto fX = [&](double x) {
        const double R = pr.theta1(x) + wave_speed(p, pr.theta0(x)).c * pr.theta0_x(x);
        return 1 + R * R;
    };
    auto fY = [&](double x) {
        const double S = pr.theta1(x) - wave_speed(p, pr.theta0(x)).c * pr.theta0_x(x);
        return 1 + S * S;
    };
    for (double x : {-1.3, -0.2, 0.55, 1.7}) {
        const double a1 = simpson(fX, 0, x, 2000), a2 = simpson(fX, 0, x, 4000);
        const double b1 = simpson(fY, 0, x, 2000), b2 = simpson(fY, 0, x, 4000);
        CHECK(std::abs(g.X_of_x(x) - (a2 + (a2 - a1) / 15)) < 1e-8);
        CHECK(std::abs(g.Y_of_x(x) + (b2 + (b2 - b1) / 15)) < 1e-8);
        CHECK(g.x_of_X(g.X_of_x(x)) == doctest::Approx(x).epsilon(1e-12));
        CHECK(g.x_of_Y(g.Y_of_x(x)) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK(std::abs(g.X_of_x(0.0)) < 1e-14);
    CHECK(std::abs(g.Y_of_x(0.0)) < 1e-14);
    // |X + Y| <= ∫(R² + S²) = 4 × initial energy
    CHECK(g.max_abs_X_plus_Y() <= 4 * initial_energy(d, p) * (1 + 1e-6));
    CHECK(g.level_energy() == doctest::Approx(initial_wave_energy(d, p)).epsilon(1e-6));
}

TEST_CASE("constant state is preserved") {
    auto p = LeslieParams::special();
    auto d = gauss_data(p, 0.0, 0.0, 0.5, 2, 0.01);
    auto g = std::make_shared<Gamma0>(d, p, -2, 2, 0.01);
    LatticeOptions o;
    o.hX = o.hY = 0.05;
    o.T_stop = 0.5;
    auto s = integrate_semilinear(g, zero_field(), p, o);
    REQUIRE(s.active_count() > 100);
    for (const auto& r : s.rows)
        for (const auto& n : r.nodes) {
            CHECK(n.theta == doctest::Approx(std::numbers::pi / 4).epsilon(1e-14));
            CHECK(std::abs(n.w) + std::abs(n.z) < 1e-15);
            CHECK(n.p == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(n.q == doctest::Approx(1.0).epsilon(1e-14));
        }
}

TEST_CASE("unit speed, J = 0: matches a damped wave FD solve") {
    auto p = unit_speed();
    auto d = gauss_data(p, 0.2, 0.1, 0.4, 5, 0.01);
    auto g = std::make_shared<Gamma0>(d, p, -5, 5, 0.01);
    LatticeOptions o;
    o.hX = o.hY = 0.01;
    o.T_stop = 0.55;
    auto s = integrate_semilinear(g, zero_field(), p, o);
    const double T = 0.5;
    const double L = 5, dx = 0.005;
    auto fd = fd_damped_wave(*d.profile, 1.0, L, dx, T);
    Grid1D grid = Grid1D::covering(-3, 3, 0.01);
    auto f = invert_to_xt(s, grid, T, 2, 1, 1);
    CHECK(f.uncovered == 0);
    CHECK(f.folds == 0);
    double err = 0, nrm = 0;
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        const double ref = fd[static_cast<int>(std::lround((x + L) / dx))];
        err += std::pow(f.theta.at(1, i) - ref, 2) * grid.dx;
        nrm += std::pow(ref - std::numbers::pi / 4, 2) * grid.dx;
    }
    MESSAGE("L2 error ", std::sqrt(err), " of deviation norm ", std::sqrt(nrm));
    CHECK(std::sqrt(err) < 1e-3);
}

TEST_CASE("energy: conservation without damping and dissipation balance with it") {
    auto p = LeslieParams::special();
    auto d = gauss_data(p, 0.3, 0.1, 0.4, 5, 0.01);
    auto g = std::make_shared<Gamma0>(d, p, -5, 5, 0.01);
    LatticeOptions o;
    o.hX = o.hY = 0.01;
    o.T_stop = 0.45;
    const double E0 = initial_wave_energy(d, p);
    {
        o.damping_scale = 0.0;
        auto s = integrate_semilinear(g, zero_field(), p, o);
        auto e = energy_on_levels(s, zero_field(), {0.0, 0.2, 0.4});
        CHECK(e.E[0] == doctest::Approx(E0).epsilon(1e-6));
        for (int k = 1; k < 3; ++k) CHECK(std::abs(e.E[k] - E0) < 1e-4 * E0);
    }
    {
        o.damping_scale = 1.0;
        auto s = integrate_semilinear(g, zero_field(), p, o);
        auto e = energy_on_levels(s, zero_field(), {0.0, 0.2, 0.4});
        CHECK(e.E[2] < e.E[1]);
        CHECK(e.E[1] < e.E[0]);
        // damping coefficient γ1 - h²/g = 1: dE/dt = -2∫θ_t²
        for (int k = 1; k < 3; ++k) CHECK(std::abs(e.E[k] + 2 * e.theta_t_sq[k] - E0) < 1e-4 * E0);
        CHECK(e.J_theta_t[2] == 0.0);
    }
}

TEST_CASE("p, q bounds hold and the bound is monotone in jbar") {
    auto p = LeslieParams::special();
    auto d = gauss_data(p, 0.3, 0.1, 0.4, 4, 0.01);
    auto g = std::make_shared<Gamma0>(d, p, -4, 4, 0.01);
    LatticeOptions o;
    o.hX = o.hY = 0.02;
    o.T_stop = 0.5;
    auto s = integrate_semilinear(g, zero_field(), p, o);
    auto b1 = check_pq_bounds(s, zero_field(), 0.0);
    auto b2 = check_pq_bounds(s, zero_field(), 1.0);
    CHECK(b1.ok);
    CHECK(b2.ok);
    CHECK(b1.min_p > 0);
    CHECK(b1.min_q > 0);
    CHECK(b2.log_bound >= b1.log_bound);
    CHECK(b1.D == doctest::Approx(gamma_vertex_distance(*g, -4, 4)));
}

TEST_CASE("consistency residual decreases under refinement") {
    auto p = LeslieParams::special();
    auto d = gauss_data(p, 0.4, 0.2, 0.3, 3, 0.005);
    auto g = std::make_shared<Gamma0>(d, p, -3, 3, 0.005);
    std::vector<double> rms;
    for (double h : {0.04, 0.02, 0.01}) {
        LatticeOptions o;
        o.hX = o.hY = h;
        o.T_stop = 0.4;
        auto s = integrate_semilinear(g, zero_field(), p, o);
        auto r = consistency_residual(s, 0.35);
        rms.push_back(r.x_rms + r.t_rms);
        MESSAGE("h=", h, " rms=", r.x_rms, ",", r.t_rms, " path=", r.path_x_max);
    }
    CHECK(rms[1] < rms[0] / 1.8);
    CHECK(rms[2] < rms[1] / 1.8);
}

TEST_CASE("finite propagation speed") {
    auto p = LeslieParams::special();
    GaussianFamily gf;
    gf.amp_theta = 0.3;
    gf.width = 0.1;
    gf.cutoff = 6;  // support [-0.6, 0.6]
    auto d = sample_profile(gaussian_profile(gf), Grid1D::covering(-4, 4, 0.005));
    auto g = std::make_shared<Gamma0>(d, p, -4, 4, 0.005);
    LatticeOptions o;
    o.hX = o.hY = 0.01;
    o.T_stop = 0.55;
    auto s = integrate_semilinear(g, zero_field(), p, o);
    Grid1D grid = Grid1D::covering(-3, 3, 0.01);
    auto f = invert_to_xt(s, grid, 0.5, 2, 1, 1);
    // C_U = 2, so the disturbance stays inside |x| <= 0.6 + 1 (+ one lattice cell)
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        if (std::abs(x) > 1.65) CHECK(f.theta.at(1, i) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-13));
    }
    double dev = 0;
    for (int i = 0; i < grid.n; ++i) dev = std::max(dev, std::abs(f.theta.at(1, i) - std::numbers::pi / 4));
    CHECK(dev > 1e-3);
}

TEST_CASE("large data passes through the pole of the angle chart") {
    auto p = LeslieParams::special();
    BlowupFamily bf;
    bf.epsilon = 0.02;
    auto d = build_blowup_data(p, bf, 0.3, 64, 0.3);
    auto g = std::make_shared<Gamma0>(d, p, -0.5, 0.5, bf.epsilon / 64);
    LatticeOptions o;
    o.hX = 0.005;
    o.hY = 0.05;
    o.T_stop = 0.3;
    auto s = integrate_semilinear(g, zero_field(), p, o);
    MESSAGE("nodes ", s.active_count());
    auto sn = first_singular_node(s, o.singular_tol);
    REQUIRE(sn.found);
    CHECK(sn.in_z);
    CHECK(sn.t < 1.0);
    CHECK(sn.t > 0.01);
    CHECK(std::abs(sn.x) < 0.3);
    // p, q remain finite and positive past the singular time
    auto b = check_pq_bounds(s, zero_field(), 0.0);
    CHECK(b.min_p > 0);
    CHECK(b.min_q > 0);
    double zmax = 0;
    for (const auto& r : s.rows)
        for (const auto& n : r.nodes)
            if (!n.ghost) zmax = std::max(zmax, std::abs(n.z));
    MESSAGE("t_sing=", sn.t, " x=", sn.x, " max|z|=", zmax);
}
