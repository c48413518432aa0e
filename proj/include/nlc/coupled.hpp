#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlc/charsolver.hpp"
#include "nlc/heatkernel.hpp"
#include "nlc/initial_data.hpp"
#include "nlc/model.hpp"

namespace nlc {

struct FixedPointConfig {
    double delta = 0.1;     // slab length
    int max_iter = 80;
    double tol_sup = 1e-6;  // on ‖M(J) - J‖_∞ over the slab
    double tol_l2 = 1e-6;   // on the space-time L² norm over the slab
    double omega = 0.5;     // under-relaxation weight
    int max_halvings = 4;
    double alpha = 0.2;     // Hölder exponent for the J̄ norm
    bool check_halving = false;  // re-solve each slab as two halves and log the change
};

/// Discretization of a coupled run.
struct CoupledGrid {
    Grid1D grid;       // field grid for u, θ, J
    double dt = 1e-3;
    double hX = 0.01;  // lattice spacings
    double hY = 0.01;
    HeatQuadrature quad;
    double singular_tol = 2e-6;
};

struct SlabLog {
    double t0 = 0, t1 = 0;
    int iterations = 0;
    int halvings = 0;
    bool converged = false;
    double residual_sup = 0;  // ‖M(J*) - J*‖_∞ at acceptance
    double residual_l2 = 0;
    std::vector<double> diff_sup;   // ‖M(J^k) - J^k‖_∞ per iteration
    std::vector<double> diff_l2;
    std::vector<double> map_ratio;  // ‖M(J^k) - M(J^{k-1})‖_∞ / ‖J^k - J^{k-1}‖_∞
    double halving_change = -1;     // sup change of J when re-solved with δ/2 (-1 if not checked)
};

struct SolutionBundle {
    LeslieParams params;
    Grid1D grid;
    double dt = 0;
    int nt = 0;          // rows actually valid
    SpaceTimeField u, v, theta, theta_t, theta_x, J;
    std::vector<std::uint8_t> flag;  // per (n, i): bit 1 blown up, bit 2 not covered
    std::vector<SlabLog> slabs;
    std::shared_ptr<const CharState> lattice;  // null for the finite-difference solver
    std::shared_ptr<const Profile> profile;
    bool truncated = false;  // FD: gradient threshold exceeded
    double t_end() const { return (nt - 1) * dt; }
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, SlabLog log) : std::runtime_error(what), log(std::move(log)) {}
    SlabLog log;
};

/// Slab-wise relaxed fixed point J ↦ M(J) of the lattice solver composed with the flux map.
/// Requires g = h = 1 (the flux map form used here); throws std::invalid_argument otherwise.
SolutionBundle fixed_point_solve(const InitialData& data, const LeslieParams& p, const FixedPointConfig& cfg,
                                 const CoupledGrid& cg, double T);

/// Unrelaxed map Lipschitz ratio on the first slab [0, δ] for each δ, geometric mean over
/// the first `iters` iterations.
std::vector<double> contraction_ratios(const InitialData& data, const LeslieParams& p, const FixedPointConfig& cfg,
                                       const CoupledGrid& cg, const std::vector<double>& deltas, int iters = 4);

struct FdOptions {
    double grad_threshold = 100.0;
    bool freeze_u = false;  // u ≡ 0, θ alone solves the damped wave equation
};

/// Leapfrog for the wave part and an implicit diffusion step for the velocity, general parameters.
SolutionBundle fd_reference_solve(const InitialData& data, const LeslieParams& p, double T, double dx, double dt,
                                  const FdOptions& opt = {}, double x_lo = 0, double x_hi = 0);

struct EnergyReport {
    std::vector<double> t;
    std::vector<double> energy;       // 𝓔(t)
    std::vector<double> dissipation;  // D(t)
    std::vector<double> slack;        // 𝓔(0) - 𝓔(t) - D(t)
    std::vector<double> maxJ;
    std::vector<double> min_one_plus_cos_w;
    std::vector<double> min_one_plus_cos_z;
    double max_abs_slack() const;
    double min_slack() const;
};

/// Energy ledger; level energies and ∬θ_t² come from the lattice when present.
EnergyReport energy_ledger(const SolutionBundle& b, const LeslieParams& p, int stride = 1);

struct IdentityResiduals {
    double vt_identity = 0;  // discrete L² of v_t - v_xx - θ_t, relative to ‖v_t‖
    double weak_form = 0;    // max over test functions of |weak residual| / scale
};
IdentityResiduals identity_residuals(const SolutionBundle& b, const LeslieParams& p);

/// Sup and L² (over x at fixed t) of u and J; NormReport of J over [0, t_end].
NormReport flux_norms(const SolutionBundle& b, double alpha, std::uint64_t seed = 1);

}  // namespace nlc
