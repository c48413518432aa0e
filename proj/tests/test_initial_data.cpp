#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "nlc/initial_data.hpp"

using namespace nlc;

namespace {

// composite Simpson on [a,b] with n (even) panels
template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("bump endpoints and slope") {
    CHECK(bump_phi(40, 0.0).phi == 0.0);
    CHECK(bump_phi(40, 1.0).phi == 0.0);
    CHECK(bump_phi(40, -1.0).phi == 0.0);
    CHECK(bump_phi(40, 1.0).dphi == 0.0);
    CHECK(bump_phi(40, -1.0).dphi == 0.0);
    CHECK(bump_phi(40, 0.0).dphi == doctest::Approx(-40.0));
    CHECK(bump_phi(40, 1.5).phi == 0.0);
    // C1 across ±1: one-sided derivative limits vanish
    CHECK(std::abs(bump_phi(40, 1.0 - 1e-7).dphi) < 1e-4);
}

TEST_CASE("bump derivative is the derivative of the bump") {
    for (double a = -0.95; a < 0.95; a += 0.05) {
        const double h = 1e-6;
        const double fd = (bump_phi(3.0, a + h).phi - bump_phi(3.0, a - h).phi) / (2 * h);
        CHECK(bump_phi(3.0, a).dphi == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("k0 from quadrature") {
    const double q = simpson([](double a) { return std::pow(bump_phi(40, a).dphi, 2); }, -1, 1, 4000);
    CHECK(bump_phi_energy(40) == doctest::Approx(q).epsilon(1e-10));
    CHECK(q == doctest::Approx(1300.3174603174602).epsilon(1e-10));
    BlowupFamily f;
    CHECK(f.k0() > q);
}

TEST_CASE("blow-up threshold and S(0,0)") {
    auto p = LeslieParams::special();
    BlowupFamily f;
    const double thr = BlowupFamily::threshold(p, f.theta_star);
    CHECK(thr == doctest::Approx(33.7311).epsilon(1e-5));
    CHECK(blowup_S00(p, f) == doctest::Approx(126.0911).epsilon(1e-5));
    CHECK(blowup_S00(p, f) > thr);
    auto d = build_blowup_data(p, f, 0.2);
    CHECK(d.S(p, 0.0) == doctest::Approx(blowup_S00(p, f)).epsilon(1e-14));
    CHECK(d.R(p, 0.0) == doctest::Approx(f.epsilon * 40.0 * -1.0).epsilon(1e-14));
}

TEST_CASE("blow-up data shape") {
    auto p = LeslieParams::special();
    BlowupFamily f;
    auto d = build_blowup_data(p, f, 0.2);
    const auto& pr = *d.profile;
    CHECK(d.tail_flag);
    CHECK(d.grid.dx <= f.epsilon / 32.0 + 1e-15);
    for (double x : {-1.0, -0.0101, 0.011, 0.5, 2.0}) {
        CHECK(pr.theta0(x) == doctest::Approx(f.theta_star));
        CHECK(pr.theta1(x) == 0.0);
        CHECK(pr.u0(x) == 0.0);
    }
    // R and S per the construction
    for (double x = -0.0099; x < 0.0099; x += 0.0007) {
        const double dp = bump_phi(f.M, x / f.epsilon).dphi;
        const double c = wave_speed(p, pr.theta0(x)).c;
        CHECK(d.R(p, x) == doctest::Approx(f.epsilon * dp).epsilon(1e-12));
        CHECK(d.S(p, x) == doctest::Approx((-2 * c + f.epsilon) * dp).epsilon(1e-12));
        CHECK(d.J0(x) == doctest::Approx(f.epsilon * dp).epsilon(1e-12));
    }
    // u0(ε) = ∫ c(θ0)θ0' over the bump vanishes, so the zero tail is consistent
    const double tot = simpson([&](double a) { return wave_speed(p, pr.theta0(a)).c * pr.theta0_x(a); }, -f.epsilon,
                               f.epsilon, 2000);
    CHECK(std::abs(tot) < 1e-12);
    CHECK(std::abs(pr.u0(f.epsilon * (1 - 1e-12))) < 1e-12);
    // u0 matches direct quadrature in x
    for (double x : {-0.007, -0.002, 0.0, 0.004}) {
        const double q =
            simpson([&](double a) { return wave_speed(p, pr.theta0(a)).c * pr.theta0_x(a); }, -f.epsilon, x, 2000);
        CHECK(pr.u0(x) == doctest::Approx(q).epsilon(1e-10));
    }
    auto chk = check_data(d);
    CHECK(chk.finite);
    CHECK(chk.end_magnitude == 0.0);
}

TEST_CASE("inadmissible blow-up parameters are rejected") {
    auto p = LeslieParams::special();
    BlowupFamily f;
    f.epsilon = 1.0;
    CHECK_THROWS(blowup_profile(p, f));
    f.epsilon = 0.01;
    f.theta_star = -std::numbers::pi / 4;
    CHECK_THROWS(blowup_profile(p, f));
}

TEST_CASE("initial energy") {
    auto p = LeslieParams::special();
    GaussianFamily g;
    g.amp_theta = 0.0;
    auto flat = sample_profile(gaussian_profile(g), Grid1D::covering(-5, 5, 0.01));
    CHECK(initial_energy(flat, p) == 0.0);

    g.amp_theta = 0.3;
    g.width = 0.4;
    auto d = sample_profile(gaussian_profile(g), Grid1D::covering(-5, 5, 0.01));
    auto pr = gaussian_profile(g);
    auto integrand = [&](double x) {
        const double c = wave_speed(p, pr->theta0(x)).c;
        return 0.5 * std::pow(c * pr->theta0_x(x), 2);
    };
    const double s1 = simpson(integrand, -5, 5, 4000), s2 = simpson(integrand, -5, 5, 8000);
    const double ref = s2 + (s2 - s1) / 15.0;
    CHECK(std::abs(initial_energy(d, p) - ref) <= 1e-6 * ref);
}

TEST_CASE("blow-up energy scales with epsilon") {
    auto p = LeslieParams::special();
    BlowupFamily f;
    std::vector<double> eps{0.04, 0.02, 0.01}, E;
    for (double e : eps) {
        f.epsilon = e;
        E.push_back(initial_energy(build_blowup_data(p, f, 0.2), p));
    }
    CHECK(E[1] / E[0] >= 0.4);
    CHECK(E[1] / E[0] <= 0.6);
    CHECK(E[2] / E[1] >= 0.4);
    CHECK(E[2] / E[1] <= 0.6);
    const double slope = std::log(E[0] / E[2]) / std::log(eps[0] / eps[2]);
    CHECK(slope >= 0.8);
    CHECK(slope <= 1.2);
}

TEST_CASE("CSV round trip") {
    auto p = LeslieParams::special();
    BlowupFamily f;
    f.epsilon = 0.04;
    auto d = build_blowup_data(p, f, 0.05, 16);
    const std::string path = "initial_roundtrip.csv";
    write_initial_csv(d, path);
    auto r = read_initial_csv(path);
    REQUIRE(r.grid.n == d.grid.n);
    for (int i = 0; i < d.grid.n; ++i) {
        CHECK(r.u0[i] == d.u0[i]);
        CHECK(r.theta0[i] == d.theta0[i]);
        CHECK(r.theta1[i] == d.theta1[i]);
    }
    CHECK(r.profile->theta0(d.grid.x(7)) == doctest::Approx(d.theta0[7]));
    std::remove(path.c_str());
}
