#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlc/heatkernel.hpp"
#include "nlc/initial_data.hpp"
#include "nlc/model.hpp"

namespace nlc {

/// A point of the initial curve with its boundary data (p̄ = q̄ = 1).
struct BoundaryPoint {
    double x, X, Y, theta, w, z;
};

/// Image of t = 0 in the (X,Y) plane, parametrised by x.
class Gamma0 {
public:
    /// x range [x_lo, x_hi]; the data is trivial outside the profile support.
    Gamma0(const InitialData& data, const LeslieParams& p, double x_lo, double x_hi, double table_dx);

    double X_of_x(double x) const;
    double Y_of_x(double x) const;
    double x_of_X(double X) const;
    double x_of_Y(double Y) const;
    BoundaryPoint at_x(double x) const;

    double x_lo() const { return x_lo_; }
    double x_hi() const { return x_hi_; }
    double X_min() const { return X_of_x(x_lo_); }
    double X_max() const { return X_of_x(x_hi_); }
    double Y_min() const { return Y_of_x(x_hi_); }
    double Y_max() const { return Y_of_x(x_lo_); }
    /// max |X + Y| over the table nodes.
    double max_abs_X_plus_Y() const;
    /// ∫ ½(R² + S²) dx along the curve.
    double level_energy() const;
    const std::vector<double>& table_x() const { return xs_; }
    const std::vector<double>& table_X() const { return Xs_; }
    const std::vector<double>& table_Y() const { return Ys_; }
    const LeslieParams& params() const { return p_; }
    const Profile& profile() const { return *prof_; }

private:
    double integrand_X(double x) const;
    double integrand_Y(double x) const;
    double partial(int cell, double x, bool isX) const;
    LeslieParams p_;
    std::shared_ptr<const Profile> prof_;
    double x_lo_, x_hi_;
    std::vector<double> xs_, Xs_, Ys_;
};

Gamma0 build_gamma0(const InitialData& data, const LeslieParams& p, double x_lo, double x_hi,
                    double table_dx = 0.0);

struct CharNode {
    double theta, w, z, p, q;
    double xp, tp, xm, tm;  // Y-integrated and X-integrated positions
    // cached derivatives at the final state
    double dX_theta, dX_z, dX_q, dX_x, dX_t;
    double dY_theta, dY_w, dY_p, dY_x, dY_t;
    std::uint8_t ghost;
    double x() const { return 0.5 * (xp + xm); }
    double t() const { return 0.5 * (tp + tm); }
};

struct LatticeOptions {
    double hX = 0.01;
    double hY = 0.01;
    double T_stop = 1.0;        // rows stop once a node and the node below it are past T_stop
    double damping_scale = 1.0; // multiplies h²/g - γ1 (0 removes damping)
    double p_floor = 1e-12;
    double p_cap = 1e12;
    double singular_tol = 2e-6; // 1 + cos z (or w) below this flags a node
};

class LatticeError : public std::runtime_error {
public:
    LatticeError(const std::string& what, int i, int j, double X, double Y)
        : std::runtime_error(what), i(i), j(j), X(X), Y(Y) {}
    int i, j;
    double X, Y;
};

struct LatticeRow {
    int begin = 0;        // first stored column (ghost or active)
    int active = 0;       // first active column
    std::vector<CharNode> nodes;
    int end() const { return begin + static_cast<int>(nodes.size()); }
};

/// Lattice state over the region between Γ₀ and t = T_stop.
struct CharState {
    std::shared_ptr<const Gamma0> gamma;
    LeslieParams params;
    LatticeOptions opt;
    double X0 = 0, Y0 = 0;
    int NX = 0, NY = 0;
    std::vector<LatticeRow> rows;
    std::vector<double> Xb_row;  // φ⁻¹(Y_j)
    std::vector<double> Yb_col;  // φ(X_i)

    double X(int i) const { return X0 + i * opt.hX; }
    double Y(int j) const { return Y0 + j * opt.hY; }
    const CharNode* node(int i, int j) const;
    std::size_t node_count() const;
    std::size_t active_count() const;
    /// Row index whose Y equals y (lattice line), or -1.
    int row_of_Y(double y) const;
};

/// Lattice aligned so that X = 0 and Y = 0 are lattice lines.
CharState integrate_semilinear(std::shared_ptr<const Gamma0> gamma, const SpaceTimeField& J,
                               const LeslieParams& p, const LatticeOptions& opt);

struct Derivs {
    double theta, a, b, x, t;  // for X: (θ_X, z_X, q_X, x_X, t_X); for Y: (θ_Y, w_Y, p_Y, x_Y, t_Y)
};
/// Right-hand sides of the semilinear system at a state.
Derivs rhs_X(const LeslieParams& p, double damping_scale, double theta, double w, double z, double pv, double qv,
             double J);
Derivs rhs_Y(const LeslieParams& p, double damping_scale, double theta, double w, double z, double pv, double qv,
             double J);

struct PQBounds {
    double min_p, max_p, min_q, max_q;
    double sup_B;   // max over nodes of |p_Y/(pq)| and |q_X/(pq)|
    double D;       // distance between the end vertices of Γ₀ in the (X,Y) plane
    double jbar;
    double log_bound;  // sup_B (2D + J̄)
    bool ok;
    int bad_i = -1, bad_j = -1;
};
PQBounds check_pq_bounds(const CharState& s, const SpaceTimeField& J, double jbar);
/// Active-region extent used for D; defaults to the full Γ₀.
double gamma_vertex_distance(const Gamma0& g, double x_lo, double x_hi);

struct ConsistencyResidual {
    double x_rms = 0, t_rms = 0, x_max = 0, t_max = 0;
    double path_x_max = 0, path_t_max = 0;  // |x_p - x_m|, |t_p - t_m|
    std::size_t cells = 0;
};
/// Discrete curl of (x_X, x_Y) and (t_X, t_Y) per full active cell, divided by the cell area.
ConsistencyResidual consistency_residual(const CharState& s, double t_max = 1e300);

struct XtFields {
    SpaceTimeField theta, theta_t, theta_x, R, S;
    std::vector<std::uint8_t> flag;  // bit 1: blown up, bit 2: not covered
    int folds = 0;
    int uncovered = 0;
    int blown = 0;
};
/// Scan-converts lattice triangles onto rows [n_lo, n_hi] of the grid (x_i, n dt).
XtFields invert_to_xt(const CharState& s, const Grid1D& grid, double dt, int nt, int n_lo = 0, int n_hi = -1);
/// Fill only the θ rows [n_lo, n_hi] of an existing field.
void invert_theta_rows(const CharState& s, SpaceTimeField& theta, int n_lo, int n_hi, int* uncovered = nullptr,
                       int* folds = nullptr);

struct LevelEnergy {
    std::vector<double> t;
    std::vector<double> E;             // ∫(θ_t² + c²θ_x²) on t = τ
    std::vector<double> theta_t_sq;    // ∬_{0<t<τ} θ_t²
    std::vector<double> J_theta_t;     // ∬_{0<t<τ} J θ_t
    std::vector<double> abs_J_theta_t; // ∬_{0<t<τ} |J||θ_t|
};
/// Level energies and space-time integrals at the given times (ascending, first may be 0).
LevelEnergy energy_on_levels(const CharState& s, const SpaceTimeField& J, const std::vector<double>& times);
double energy_on_level(const CharState& s, double tau);

/// Lattice snapshot export.
void write_charstate_csv(const CharState& s, const std::string& path, int stride = 1);
void write_level_csv(const XtFields& f, int n, const std::string& path);

/// Earliest node with 1 + cos z (or w) below tol, or a crossing of z (w) through π.
struct SingularNode {
    bool found = false;
    bool in_z = true;
    int i = -1, j = -1;
    double x = 0, t = 0;
};
SingularNode first_singular_node(const CharState& s, double tol);

}  // namespace nlc
