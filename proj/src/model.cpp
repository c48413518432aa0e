#include "nlc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nlc {

LeslieParams LeslieParams::special() { return LeslieParams{}; }

void LeslieParams::derive_gammas() {
    gamma1 = alpha[3] - alpha[2];
    gamma2 = alpha[6] - alpha[5];
}

double LeslieParams::CL() const { return std::sqrt(std::min(K1, K3)); }
double LeslieParams::CU() const { return std::sqrt(std::max(K1, K3)); }

std::vector<Violation> validate(const LeslieParams& p) {
    std::vector<Violation> out;
    const double* al = p.alpha;
    const double tol = 1e-12;
    auto eq = [&](const char* name, double lhs, double rhs) {
        if (std::abs(lhs - rhs) > tol * (1.0 + std::abs(lhs) + std::abs(rhs)))
            out.push_back({name, lhs - rhs});
    };
    auto pos = [&](const char* name, double v) {
        if (!(v > 0.0)) out.push_back({name, v});
    };
    eq("gamma1 = alpha3 - alpha2", p.gamma1, al[3] - al[2]);
    eq("gamma2 = alpha6 - alpha5", p.gamma2, al[6] - al[5]);
    eq("alpha2 + alpha3 = alpha6 - alpha5", al[2] + al[3], al[6] - al[5]);
    pos("alpha4 > 0", al[4]);
    pos("2alpha1 + 3alpha4 + 2alpha5 + 2alpha6 > 0", 2 * al[1] + 3 * al[4] + 2 * al[5] + 2 * al[6]);
    pos("gamma1 > 0", p.gamma1);
    pos("2alpha4 + alpha5 + alpha6 > 0", 2 * al[4] + al[5] + al[6]);
    pos("gamma1(2alpha4 + alpha5 + alpha6) > gamma2^2",
        p.gamma1 * (2 * al[4] + al[5] + al[6]) - p.gamma2 * p.gamma2);
    pos("K1 > 0", p.K1);
    pos("K3 > 0", p.K3);
    return out;
}

SpeedPair wave_speed(const LeslieParams& p, double theta) {
    const double s = std::sin(theta), co = std::cos(theta);
    const double c = std::sqrt(p.K1 * co * co + p.K3 * s * s);
    return {c, (p.K3 - p.K1) * s * co / c};
}

double g_coeff(const LeslieParams& p, double theta) {
    const double s = std::sin(theta), co = std::cos(theta);
    const double s2 = s * s, c2 = co * co;
    const double* al = p.alpha;
    return al[1] * s2 * c2 + 0.5 * (al[5] - al[2]) * s2 + 0.5 * (al[3] + al[6]) * c2 + 0.5 * al[4];
}

double h_coeff(const LeslieParams& p, double theta) {
    return 0.5 * (p.gamma1 + p.gamma2 * std::cos(2.0 * theta));
}

double b_coeff(const LeslieParams& p, double theta) {
    const double h = h_coeff(p, theta);
    return g_coeff(p, theta) - h * h / p.gamma1;
}

double b_coeff_closed(const LeslieParams& p, double theta) {
    const double* al = p.alpha;
    const double c2 = std::pow(std::cos(2.0 * theta), 2);
    const double s2 = std::pow(std::sin(2.0 * theta), 2);
    return (p.gamma1 * (2 * al[4] + al[5] + al[6]) - p.gamma2 * p.gamma2) / (4.0 * p.gamma1) * c2
         + al[4] / 8.0 * s2 + (2 * al[1] + 3 * al[4] + 2 * al[5] + 2 * al[6]) / 8.0 * s2;
}

double residual_damping(const LeslieParams& p, double theta) {
    const double h = h_coeff(p, theta);
    return p.gamma1 - h * h / g_coeff(p, theta);
}

double lipschitz_C1(const LeslieParams& p) {
    const int n = 4096;
    double m = 0.0;
    for (int k = 0; k < n; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n;
        m = std::max(m, std::abs(wave_speed(p, th).dc));
    }
    return m;
}

CoefficientExtrema sample_extrema(const LeslieParams& p, int n) {
    CoefficientExtrema e{1e300, 1e300, 1e300, 0.0, 0.0};
    for (int k = 0; k < n; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n;
        const auto sp = wave_speed(p, th);
        e.min_b = std::min(e.min_b, b_coeff(p, th));
        e.min_residual_damping = std::min(e.min_residual_damping, residual_damping(p, th));
        e.min_c = std::min(e.min_c, sp.c);
        e.max_c = std::max(e.max_c, sp.c);
        e.max_abs_dc = std::max(e.max_abs_dc, std::abs(sp.dc));
    }
    return e;
}

bool is_unit_gh(const LeslieParams& p) {
    for (double th : {0.0, 0.3, 0.7, 1.1, 1.9, 2.6}) {
        if (std::abs(g_coeff(p, th) - 1.0) > 1e-14 || std::abs(h_coeff(p, th) - 1.0) > 1e-14)
            return false;
    }
    return true;
}

}  // namespace nlc
