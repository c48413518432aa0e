#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nlc/coupled.hpp"

namespace nlc {

/// Forward characteristic dΓ/dt = c(θ), Γ(0) = x_start, read off the lattice as the curve Y = Y(x_start).
struct GammaTrace {
    double x_start = 0;
    std::vector<double> t, x, S, R, theta, S_tilde;  // S_tilde = e^{t/2} S
    bool exited = false;  // the lattice ended before t_end
};
GammaTrace trace_forward_characteristic(const CharState& s, double x_start, double t_end);
void write_trace_csv(const GammaTrace& g, const std::string& path);

struct TriangleEnergy {
    double R_part = 0;  // ∫ R² dx along the forward side
    double S_part = 0;  // ∫ S² dx along the backward side
    double x1 = 0, x2 = 0;  // base end points on t = 0
    double sum() const { return R_part + S_part; }
    double width() const { return std::abs(x2 - x1); }
};
/// Boundary integrals over the characteristic triangle with apex (x0, t0), apex snapped to the nearest node.
TriangleEnergy characteristic_triangle_energy(const CharState& s, double x0, double t0);

/// k₂ = 12 k₀ C_U² + 2 √(2 k₀) k₁ C_U^{3/2}
double k2_constant(double k0, double k1, double CU);
/// t_pred = 1/2 + 8 C_U k₃ √ε / c'(θ*)
double predicted_time(const LeslieParams& p, double theta_star, double k3, double epsilon);

struct RegularitySignature {
    double holder_half = 0;  // max |Δθ| / |Δx|^{1/2} over the window
    double lipschitz = 0;    // max |Δθ| / |Δx| between neighbours
};
RegularitySignature regularity_signature(const double* theta, int n, double dx, int i_lo, int i_hi);

struct BlowupReport {
    bool detected = false;
    double t_star = 0, x_star = 0;
    double S_at_detection = 0;     // tan(z/2) at the flagged node
    double max_abs_R_fiber = 0;    // along the lattice row through the flagged node, t <= t_*
    double max_abs_R = 0;          // over all nodes with t <= t_*
    double trace_S_min = 0;        // along Γ from the origin, t <= t_*
    double trace_S_max = 0;
    double maxJ = 0;               // sup |J| over t <= t_*
    double k1_measured = 0;        // maxJ / √ε
    double k3_measured = 0;        // Riccati remainder integral / √ε along Γ
    double k3_used = 0;
    double t_pred = 0;
    double drift_max = 0;          // max |θ(Γ(t),t) - θ*|
    double drift_bound = 0;        // √(k₂ ε / C_L)
    bool cd_sign_ok = true;        // c'(θ(Γ)) > c'(θ*)/2
    double k2 = 0;
    TriangleEnergy triangle;       // apex at (x_*, t_*)
    double theta_x_max = 0;        // max |θ_x| over unflagged points of the field grid at t_*
    double theta_t_max = 0;
    RegularitySignature regularity;  // θ(·, t_*) near x_*
    GammaTrace trace;
};

/// Detection from the lattice flags of a completed coupled run; k3 <= 0 uses the measured value.
BlowupReport detect_blowup(const SolutionBundle& b, const LeslieParams& p, const BlowupFamily& f, double k3 = 0.0,
                           double k1 = 0.0);
std::string blowup_report_json(const BlowupReport& r, int indent = 2);

/// Least squares through the origin of y ≈ k √ε; returns {k, relative RMS residual}.
std::pair<double, double> fit_sqrt_eps(const std::vector<double>& eps, const std::vector<double>& y);

}  // namespace nlc
