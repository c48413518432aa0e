#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nlc/model.hpp"

namespace nlc {

struct Grid1D {
    double x_min = 0.0;
    double dx = 1.0;
    int n = 0;
    double x(int i) const { return x_min + dx * i; }
    double x_max() const { return x_min + dx * (n - 1); }
    static Grid1D covering(double lo, double hi, double dx_target);
};

/// Pointwise evaluator for initial data and its first derivatives.
class Profile {
public:
    virtual ~Profile() = default;
    virtual double theta0(double x) const = 0;
    virtual double theta0_x(double x) const = 0;
    virtual double theta1(double x) const = 0;
    virtual double u0(double x) const = 0;
    virtual double u0_x(double x) const = 0;
    /// Everything is trivial outside [lo, hi].
    virtual double support_lo() const = 0;
    virtual double support_hi() const = 0;
    virtual double theta_far() const = 0;
};

struct InitialData {
    Grid1D grid;
    std::vector<double> u0, theta0, theta1;
    bool tail_flag = true;
    std::shared_ptr<const Profile> profile;

    double R(const LeslieParams& p, double x) const;
    double S(const LeslieParams& p, double x) const;
    double J0(double x) const { return profile->u0_x(x) + profile->theta1(x); }
};

/// Samples a profile on a grid.
InitialData sample_profile(std::shared_ptr<const Profile> prof, const Grid1D& grid);

/// Check of the decay / boundedness invariants on the sampled data.
struct DataCheck {
    bool finite = true;
    double h1_u0 = 0, h1_theta0 = 0, l2_theta1 = 0;
    double end_magnitude = 0;  // max of |θ1|,|θ0'|,|u0'| at the two grid ends
};
DataCheck check_data(const InitialData& d);

// ---------------------------------------------------------------- blow-up family

struct PhiValue {
    double phi;
    double dphi;
};
/// φ(a) = -M a (1-a²)² on [-1,1], zero outside.
PhiValue bump_phi(double M, double a);
/// ∫(φ')² over [-1,1] = 256 M²/315.
double bump_phi_energy(double M);

struct BlowupFamily {
    double epsilon = 0.01;
    double theta_star = 0.78539816339744831;
    double M = 40.0;

    double C2() const { return M; }
    double k0() const;
    /// max{16 C_U/(c'(θ*) C_L), 2/C_L}
    static double threshold(const LeslieParams& p, double theta_star);
};

/// Truncated domain half width ε + pad + 2 C_U T.
double blowup_half_width(const LeslieParams& p, double epsilon, double T, double pad = 2.0);

/// Throws std::invalid_argument on inadmissible ε or θ*.
std::shared_ptr<const Profile> blowup_profile(const LeslieParams& p, const BlowupFamily& f);
InitialData build_blowup_data(const LeslieParams& p, const BlowupFamily& f, double T,
                              int nodes_per_epsilon = 64, double pad = 2.0);

/// S(0,0) of the blow-up data.
double blowup_S00(const LeslieParams& p, const BlowupFamily& f);

// ---------------------------------------------------------------- smooth family

struct GaussianFamily {
    double theta_star = 0.78539816339744831;
    double amp_theta = 0.1;
    double amp_theta1 = 0.0;
    double amp_u = 0.0;
    double width = 0.5;
    double center = 0.0;
    double cutoff = 8.0;  // support radius in widths
};
std::shared_ptr<const Profile> gaussian_profile(const GaussianFamily& f);

/// Piecewise cubic Hermite interpolant of sampled data.
std::shared_ptr<const Profile> sampled_profile(const Grid1D& grid, std::vector<double> u0,
                                               std::vector<double> theta0, std::vector<double> theta1);

// ---------------------------------------------------------------- energy, IO

/// Trapezoid approximation of ½∫(θ1² + c²θ0'² + u0²).
double initial_energy(const InitialData& d, const LeslieParams& p);
/// ∫(θ1² + c²θ0'²) = ½∫(R² + S²), the level energy E at t = 0.
double initial_wave_energy(const InitialData& d, const LeslieParams& p);

void write_initial_csv(const InitialData& d, const std::string& path);
InitialData read_initial_csv(const std::string& path);

}  // namespace nlc
