#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "nlc/initial_data.hpp"
#include "nlc/model.hpp"

namespace nlc {

double kernel(double x, double t);
double kernel_dx(double x, double t);

/// Row-major space-time samples: value(n, i) at (x_i, n dt).
struct SpaceTimeField {
    Grid1D grid;
    double dt = 0.0;
    int nt = 0;  // number of rows
    std::vector<double> v;

    SpaceTimeField() = default;
    SpaceTimeField(const Grid1D& g, double dt_, int nt_, double fill = 0.0)
        : grid(g), dt(dt_), nt(nt_), v(static_cast<std::size_t>(g.n) * nt_, fill) {}
    double& at(int n, int i) { return v[static_cast<std::size_t>(n) * grid.n + i]; }
    double at(int n, int i) const { return v[static_cast<std::size_t>(n) * grid.n + i]; }
    double* row(int n) { return v.data() + static_cast<std::size_t>(n) * grid.n; }
    const double* row(int n) const { return v.data() + static_cast<std::size_t>(n) * grid.n; }
    double t(int n) const { return n * dt; }
    /// Bilinear interpolation; clamps t to the stored rows and returns 0 outside the x range.
    double sample(double x, double t) const;
};

void write_field_csv(const SpaceTimeField& f, const std::string& path);
SpaceTimeField read_field_csv(const std::string& path);

struct NormReport {
    double sup = 0.0;
    double l2 = 0.0;
    double holder_x = 0.0;
    double holder_t = 0.0;
    double holder = 0.0;  // max of the two
    double alpha = 0.2;
    /// J̄ = sup + L²² + Hölder constant.
    double jbar() const { return sup + l2 * l2 + holder; }
};

/// Exhaustive along rows/columns when the pair count is below max_pairs, else random sampling.
NormReport norm_report(const SpaceTimeField& f, double alpha, std::uint64_t seed = 1,
                       std::size_t max_pairs = 100000);
/// max over pairs of |f_i - f_j| / |x_i - x_j|^alpha for a single row.
double holder_constant_1d(const double* f, int n, double dx, double alpha, int i_lo = 0, int i_hi = -1);

struct HeatQuadrature {
    double trunc_sigmas = 8.0;  // truncation radius in units of sqrt(2 dt)
    int graded_pieces = 12;     // geometric pieces of the sqrt(tau) interval, 8 Gauss nodes each
    double sampled_min_ratio = 2.0;  // sqrt(2 dt)/dx above which sampled propagation weights are used
};

/// One-step heat propagator and local Duhamel weights on a uniform grid.
class HeatStepper {
public:
    HeatStepper(const Grid1D& grid, double dt, const HeatQuadrature& q = {});

    const Grid1D& grid() const { return grid_; }
    double dt() const { return dt_; }
    int radius() const { return K_; }
    bool sampled_propagation() const { return sampled_; }
    /// Kernel mass dropped by truncation, relative.
    double truncation_mass_error() const;

    /// out = H(dt) * in
    void propagate(const double* in, double* out) const;
    /// out += ∫_0^dt H(tau) * [f_end (1 - tau/dt) + f_start tau/dt] dtau
    void add_local_H(const double* f_start, const double* f_end, double* out, double scale = 1.0) const;
    /// Same with H_x.
    void add_local_Hx(const double* f_start, const double* f_end, double* out, double scale = 1.0) const;
    /// out += scale ∫_0^dt H_x(tau) * f dtau, f constant over the step.
    void add_local_Hx_const(const double* f, double* out, double scale = 1.0) const;
    void add_local_H_const(const double* f, double* out, double scale = 1.0) const;

    const std::vector<double>& prop_weights() const { return P_; }

private:
    void conv(const std::vector<double>& w, const double* in, double* out, double scale) const;
    void conv_fft(const std::vector<std::complex<double>>& spec, const double* in, double* out, double scale) const;
    Grid1D grid_;
    double dt_;
    int K_;
    bool sampled_;
    std::vector<double> P_, A0_, A1_, B0_, B1_, Ac_, Bc_;
    // spectra of the weights, used when the stencil is wide
    int nfft_ = 0;
    std::vector<std::vector<std::complex<double>>> spec_;
};

/// (H(tau) * hat)(a) and (H_x(tau) * hat)(a) for a hat of half width dx centred at 0.
double heat_hat(double a, double tau, double dx);
double heat_hat_dx(double a, double tau, double dx);

/// u rows from u0 and theta rows: u = H*u0 + ∫∫ H_x θ_s.
SpaceTimeField duhamel_velocity(const HeatStepper& hs, const std::vector<double>& u0,
                                const SpaceTimeField& theta);

struct FluxMapResult {
    SpaceTimeField M;
    SpaceTimeField u;
};

/// One step of the flux map recursion from row n-1 to row n.
/// theta rows supply θ_s = (θ^n - θ^{n-1})/dt and θ_x by central differences.
void flux_map_step(const HeatStepper& hs, const LeslieParams& p, const double* theta_prev,
                   const double* theta_cur, const double* u_prev, const double* M_prev, double* u_cur,
                   double* M_cur);

/// Full map from row 0: M(J) and u for the given θ rows.
FluxMapResult flux_map(const HeatStepper& hs, const LeslieParams& p, const std::vector<double>& J0,
                       const std::vector<double>& u0, const SpaceTimeField& theta);

/// Explicit right-hand sides of the velocity and flux bounds, constants from kernel norms.
struct VelocityFluxBounds {
    double u_rhs;
    double vt_rhs;
};
VelocityFluxBounds velocity_flux_bounds(double t, const LeslieParams& p, double J0_sup, double u0_sup,
                         double theta_t_LinfL2, double theta_x_LinfL2, double u_sup);

}  // namespace nlc
