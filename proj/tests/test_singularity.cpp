#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <numbers>

#include "nlc/singularity.hpp"

using namespace nlc;

namespace {

InitialData gaussian_data(double amp, double width = 0.5) {
    GaussianFamily g;
    g.amp_theta = amp;
    g.width = width;
    return sample_profile(gaussian_profile(g), Grid1D::covering(-8, 8, 0.005));
}

CharState free_lattice(const InitialData& d, const LeslieParams& p, double T, double h) {
    auto g0 = std::make_shared<const Gamma0>(build_gamma0(d, p, -5, 5, 0.01));
    SpaceTimeField J(Grid1D::covering(-6, 6, 0.05), 0.05, static_cast<int>(T / 0.05) + 3);
    LatticeOptions o;
    o.hX = o.hY = h;
    o.T_stop = T;
    return integrate_semilinear(g0, J, p, o);
}

}  // namespace

TEST_CASE("unit speed: the forward characteristic is x_start + t") {
    auto p = LeslieParams::special();
    p.K3 = 1.0;
    auto s = free_lattice(gaussian_data(0.3), p, 0.8, 0.02);
    // starts on lattice rows are exact, others interpolate between neighbouring rows
    const double on_row = s.gamma->x_of_Y(s.Y(s.row_of_Y(0.0) + 7));
    for (auto [x0, tol] : {std::pair{0.0, 1e-12}, {on_row, 1e-12}, {0.37, 1e-5}, {-1.213, 1e-5}}) {
        auto g = trace_forward_characteristic(s, x0, 0.7);
        CHECK_FALSE(g.exited);
        REQUIRE(g.t.size() > 10);
        double err = 0;
        for (std::size_t k = 0; k < g.t.size(); ++k) err = std::max(err, std::abs(g.x[k] - x0 - g.t[k]));
        CHECK_MESSAGE(err < tol, "x0 = ", x0, " err = ", err);
    }
}

TEST_CASE("zero data: triangle integrals vanish") {
    auto p = LeslieParams::special();
    auto s = free_lattice(gaussian_data(0.0), p, 0.6, 0.05);
    auto e = characteristic_triangle_energy(s, 0.2, 0.5);
    CHECK(e.R_part == doctest::Approx(0.0));
    CHECK(e.S_part == doctest::Approx(0.0));
    CHECK(e.width() < 2 * p.CU());
    CHECK(e.x1 < 0.2);
    CHECK(e.x2 > 0.2);
}

TEST_CASE("triangle integrals match the direct boundary quadrature") {
    auto p = LeslieParams::special();
    auto s = free_lattice(gaussian_data(0.3, 0.4), p, 0.6, 0.01);
    auto e = characteristic_triangle_energy(s, 0.1, 0.4);
    // direct ∫R² dx along the forward side from the traced row
    const int j = s.row_of_Y(s.Y(0) + std::round((s.gamma->Y_of_x(e.x1) - s.Y0) / s.opt.hY) * s.opt.hY);
    REQUIRE(j >= 0);
    double direct = 0;
    const auto& r = s.rows[j];
    for (int k = 1; k < static_cast<int>(r.nodes.size()); ++k) {
        const auto &a = r.nodes[k - 1], &b = r.nodes[k];
        if (a.ghost || b.ghost || b.x() > 0.1 + 0.02) continue;
        const double Ra = std::tan(0.5 * a.w), Rb = std::tan(0.5 * b.w);
        direct += 0.5 * (Ra * Ra + Rb * Rb) * (b.x() - a.x());
    }
    CHECK(e.R_part == doctest::Approx(direct).epsilon(0.05));
    CHECK(e.R_part > 0);
    CHECK(e.S_part > 0);
}

TEST_CASE("constants and fits") {
    CHECK(k2_constant(1.0, 1.0, 2.0) == doctest::Approx(56.0).epsilon(1e-14));
    CHECK(k2_constant(2.0, 0.0, 1.0) == doctest::Approx(24.0).epsilon(1e-14));
    auto p = LeslieParams::special();
    const double dc = wave_speed(p, std::numbers::pi / 4).dc;
    CHECK(predicted_time(p, std::numbers::pi / 4, 0.0, 0.01) == 0.5);
    CHECK(predicted_time(p, std::numbers::pi / 4, 1.0, 0.04) == doctest::Approx(0.5 + 16 * 0.2 / dc));
    auto [k, res] = fit_sqrt_eps({0.04, 0.02, 0.01}, {0.6, 3 * std::sqrt(0.02), 0.3});
    CHECK(k == doctest::Approx(3.0));
    CHECK(res < 1e-12);
}

TEST_CASE("regularity signature of a square-root cusp") {
    const double dx = 1e-3;
    const int n = 2001;
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = std::sqrt(std::abs((i - 1000) * dx));
    auto r = regularity_signature(f.data(), n, dx, 0, n - 1);
    CHECK(r.holder_half == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.lipschitz == doctest::Approx(1.0 / std::sqrt(dx)));
}

TEST_CASE("smooth small data: no detection before t = 1") {
    auto p = LeslieParams::special();
    CoupledGrid cg;
    cg.grid = Grid1D::covering(-6, 6, 0.04);
    cg.dt = 0.02;
    cg.hX = cg.hY = 0.04;
    auto b = fixed_point_solve(gaussian_data(0.1), p, FixedPointConfig{}, cg, 1.0);
    BlowupFamily f;
    f.epsilon = 0.04;
    auto r = detect_blowup(b, p, f);
    CHECK_FALSE(r.detected);
    CHECK(b.t_end() == doctest::Approx(1.0));
    CHECK(r.trace.t.back() >= 1.0 - 1e-9);
}

TEST_CASE("blow-up data, eps = 0.01: one-sided cusp before t = 1") {
    auto p = LeslieParams::special();
    BlowupFamily f;
    f.epsilon = 0.01;
    const double T = 0.06, L = 1.5;
    auto d = build_blowup_data(p, f, T, 64, L);
    CoupledGrid cg;
    cg.grid = Grid1D::covering(-L, L, f.epsilon / 8);
    cg.dt = 5e-4;
    cg.hX = 0.005;
    cg.hY = 0.05;
    auto b = fixed_point_solve(d, p, FixedPointConfig{}, cg, T);
    auto r = detect_blowup(b, p, f);
    REQUIRE(r.detected);
    MESSAGE(blowup_report_json(r));
    CHECK(r.t_star > 0.0);
    CHECK(r.t_star < 1.0);
    CHECK(r.t_star <= r.t_pred);
    CHECK(std::abs(r.x_star) < 0.3);
    // cusp signature: S → +∞ with |R| bounded along the fiber
    CHECK(r.S_at_detection > 63.0);
    CHECK(r.max_abs_R_fiber < 10.0);
    const CharNode* n = nullptr;
    auto sn = first_singular_node(*b.lattice, b.lattice->opt.singular_tol);
    n = b.lattice->node(sn.i, sn.j);
    const double R = std::tan(0.5 * n->w), S = std::tan(0.5 * n->z), c = wave_speed(p, n->theta).c;
    CHECK(0.5 * (R + S) > 30.0);      // θ_t
    CHECK(0.5 * (R - S) / c < -10.0);  // θ_x
    // along Γ from the origin
    CHECK_FALSE(r.trace.exited);
    CHECK(r.trace_S_min > 1.0);
    CHECK(r.drift_max <= r.drift_bound);
    CHECK(r.cd_sign_ok);
    // triangle below the detection point
    CHECK(r.triangle.sum() <= r.k2 * f.epsilon);
    CHECK(r.triangle.width() < 2.0 * p.CU());
    CHECK(r.regularity.holder_half > 0.0);
    CHECK(r.regularity.lipschitz > r.regularity.holder_half);

    auto j = nlohmann::json::parse(blowup_report_json(r));
    CHECK(j.at("detected").get<bool>());
    CHECK(j.at("t_star").get<double>() == r.t_star);
    CHECK(j.at("triangle").at("sum").get<double>() == doctest::Approx(r.triangle.sum()));
}
