#pragma once

#include <string>
#include <vector>

namespace nlc {

/// Leslie viscosities, elastic constants and the scalar data of the
/// Poiseuille reduction.
struct LeslieParams {
    double alpha[7] = {0.0, 0.0, -1.0, 1.0, 1.0, 0.0, 0.0};  // alpha[1..6]; alpha[0] unused
    double gamma1 = 2.0;
    double gamma2 = 0.0;
    double K1 = 1.0;
    double K3 = 4.0;
    double rho = 1.0;
    double nu = 1.0;
    double a = 0.0;

    /// Special parameter set with K1=1, K3=4.
    static LeslieParams special();
    /// Fill gamma1, gamma2 from the alphas.
    void derive_gammas();

    double CL() const;
    double CU() const;
};

struct Violation {
    std::string relation;
    double value;  // signed margin of the failing relation
};

/// Empty result iff every admissibility relation holds.
std::vector<Violation> validate(const LeslieParams& p);

struct SpeedPair {
    double c;
    double dc;
};

SpeedPair wave_speed(const LeslieParams& p, double theta);
double g_coeff(const LeslieParams& p, double theta);
double h_coeff(const LeslieParams& p, double theta);
double b_coeff(const LeslieParams& p, double theta);
/// Closed form of b in terms of cos 2θ and sin 2θ.
double b_coeff_closed(const LeslieParams& p, double theta);
/// gamma1 - h^2/g.
double residual_damping(const LeslieParams& p, double theta);

/// max |c'| over 4096 samples of [0, 2π).
double lipschitz_C1(const LeslieParams& p);

struct CoefficientExtrema {
    double min_b;
    double min_residual_damping;
    double min_c;
    double max_c;
    double max_abs_dc;
};
CoefficientExtrema sample_extrema(const LeslieParams& p, int n = 10000);

/// Special case g = h = 1 (up to round-off).
bool is_unit_gh(const LeslieParams& p);

}  // namespace nlc
