#include "nlc/initial_data.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlc {

Grid1D Grid1D::covering(double lo, double hi, double dx_target) {
    const int cells = std::max(1, static_cast<int>(std::ceil((hi - lo) / dx_target - 1e-9)));
    return Grid1D{lo, (hi - lo) / cells, cells + 1};
}

double InitialData::R(const LeslieParams& p, double x) const {
    const double th = profile->theta0(x);
    return profile->theta1(x) + wave_speed(p, th).c * profile->theta0_x(x);
}

double InitialData::S(const LeslieParams& p, double x) const {
    const double th = profile->theta0(x);
    return profile->theta1(x) - wave_speed(p, th).c * profile->theta0_x(x);
}

InitialData sample_profile(std::shared_ptr<const Profile> prof, const Grid1D& grid) {
    InitialData d;
    d.grid = grid;
    d.u0.resize(grid.n);
    d.theta0.resize(grid.n);
    d.theta1.resize(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        d.u0[i] = prof->u0(x);
        d.theta0[i] = prof->theta0(x);
        d.theta1[i] = prof->theta1(x);
    }
    d.tail_flag = prof->support_lo() > grid.x_min && prof->support_hi() < grid.x_max();
    d.profile = std::move(prof);
    return d;
}

DataCheck check_data(const InitialData& d) {
    DataCheck c;
    const auto& pr = *d.profile;
    for (int i = 0; i < d.grid.n; ++i) {
        const double x = d.grid.x(i);
        const double vals[] = {d.u0[i], d.theta0[i], d.theta1[i], pr.u0_x(x), pr.theta0_x(x)};
        for (double v : vals)
            if (!std::isfinite(v)) c.finite = false;
        const double w = (i == 0 || i == d.grid.n - 1) ? 0.5 * d.grid.dx : d.grid.dx;
        const double dth = d.theta0[i] - pr.theta_far();
        c.h1_u0 += w * (d.u0[i] * d.u0[i] + pr.u0_x(x) * pr.u0_x(x));
        c.h1_theta0 += w * (dth * dth + pr.theta0_x(x) * pr.theta0_x(x));
        c.l2_theta1 += w * d.theta1[i] * d.theta1[i];
    }
    c.h1_u0 = std::sqrt(c.h1_u0);
    c.h1_theta0 = std::sqrt(c.h1_theta0);
    c.l2_theta1 = std::sqrt(c.l2_theta1);
    for (double x : {d.grid.x_min, d.grid.x_max()}) {
        c.end_magnitude = std::max({c.end_magnitude, std::abs(pr.theta1(x)), std::abs(pr.theta0_x(x)),
                                    std::abs(pr.u0_x(x))});
    }
    return c;
}

// ---------------------------------------------------------------- blow-up family

PhiValue bump_phi(double M, double a) {
    if (a <= -1.0 || a >= 1.0) return {0.0, 0.0};
    const double s = 1.0 - a * a;
    return {-M * a * s * s, -M * s * (1.0 - 5.0 * a * a)};
}

double bump_phi_energy(double M) { return 256.0 * M * M / 315.0; }

double BlowupFamily::k0() const { return bump_phi_energy(M) * (1.0 + 1e-9); }

double BlowupFamily::threshold(const LeslieParams& p, double theta_star) {
    const double dc = wave_speed(p, theta_star).dc;
    return std::max(16.0 * p.CU() / (dc * p.CL()), 2.0 / p.CL());
}

double blowup_half_width(const LeslieParams& p, double epsilon, double T, double pad) {
    return epsilon + pad + 2.0 * p.CU() * T;
}

namespace {

class BlowupProfile final : public Profile {
public:
    BlowupProfile(const LeslieParams& p, const BlowupFamily& f) : p_(p), f_(f) {}

    double theta0(double x) const override { return f_.theta_star + f_.epsilon * bump_phi(f_.M, x / f_.epsilon).phi; }
    double theta0_x(double x) const override { return bump_phi(f_.M, x / f_.epsilon).dphi; }
    double theta1(double x) const override {
        const double c = wave_speed(p_, theta0(x)).c;
        return (-c + f_.epsilon) * theta0_x(x);
    }
    double u0(double x) const override {
        if (x <= -f_.epsilon || x >= f_.epsilon) return 0.0;
        // ∫_{-ε}^x c(θ0)θ0' = ∫_{θ*}^{θ0(x)} c(s) ds
        auto cf = [this](double s) { return wave_speed(p_, s).c; };
        return boost::math::quadrature::gauss<double, 20>::integrate(cf, f_.theta_star, theta0(x));
    }
    double u0_x(double x) const override { return wave_speed(p_, theta0(x)).c * theta0_x(x); }
    double support_lo() const override { return -f_.epsilon; }
    double support_hi() const override { return f_.epsilon; }
    double theta_far() const override { return f_.theta_star; }

private:
    LeslieParams p_;
    BlowupFamily f_;
};

class GaussianProfile final : public Profile {
public:
    explicit GaussianProfile(const GaussianFamily& f) : f_(f) {}
    double theta0(double x) const override { return f_.theta_star + f_.amp_theta * bell(x); }
    double theta0_x(double x) const override { return f_.amp_theta * dbell(x); }
    double theta1(double x) const override { return f_.amp_theta1 * bell(x); }
    double u0(double x) const override { return f_.amp_u * bell(x); }
    double u0_x(double x) const override { return f_.amp_u * dbell(x); }
    double support_lo() const override { return f_.center - f_.cutoff * f_.width; }
    double support_hi() const override { return f_.center + f_.cutoff * f_.width; }
    double theta_far() const override { return f_.theta_star; }

private:
    double bell(double x) const {
        const double s = (x - f_.center) / f_.width;
        return std::exp(-s * s);
    }
    double dbell(double x) const {
        const double s = (x - f_.center) / f_.width;
        return -2.0 * s / f_.width * std::exp(-s * s);
    }
    GaussianFamily f_;
};

class SampledProfile final : public Profile {
public:
    SampledProfile(const Grid1D& g, std::vector<double> u0, std::vector<double> th0, std::vector<double> th1)
        : g_(g), u_(std::move(u0)), a_(std::move(th0)), b_(std::move(th1)) {
        du_ = slopes(u_);
        da_ = slopes(a_);
        db_ = slopes(b_);
        far_ = 0.5 * (a_.front() + a_.back());
        lo_ = g_.x_max();
        hi_ = g_.x_min;
        for (int i = 0; i < g_.n; ++i) {
            if (std::abs(u_[i]) > 0 || std::abs(a_[i] - far_) > 0 || std::abs(b_[i]) > 0) {
                lo_ = std::min(lo_, g_.x(std::max(i - 1, 0)));
                hi_ = std::max(hi_, g_.x(std::min(i + 1, g_.n - 1)));
            }
        }
        if (lo_ > hi_) lo_ = hi_ = 0.5 * (g_.x_min + g_.x_max());
    }
    double theta0(double x) const override { return eval(a_, da_, x, false); }
    double theta0_x(double x) const override { return eval(a_, da_, x, true); }
    double theta1(double x) const override { return eval(b_, db_, x, false); }
    double u0(double x) const override { return eval(u_, du_, x, false); }
    double u0_x(double x) const override { return eval(u_, du_, x, true); }
    double support_lo() const override { return lo_; }
    double support_hi() const override { return hi_; }
    double theta_far() const override { return far_; }

private:
    std::vector<double> slopes(const std::vector<double>& v) const {
        std::vector<double> s(v.size(), 0.0);
        for (std::size_t i = 1; i + 1 < v.size(); ++i) s[i] = (v[i + 1] - v[i - 1]) / (2.0 * g_.dx);
        return s;
    }
    double eval(const std::vector<double>& v, const std::vector<double>& s, double x, bool deriv) const {
        if (x <= g_.x_min) return deriv ? 0.0 : v.front();
        if (x >= g_.x_max()) return deriv ? 0.0 : v.back();
        const double r = (x - g_.x_min) / g_.dx;
        const int i = std::min(static_cast<int>(r), g_.n - 2);
        const double t = r - i, h = g_.dx;
        const double y0 = v[i], y1 = v[i + 1], m0 = s[i] * h, m1 = s[i + 1] * h;
        if (!deriv) {
            const double t2 = t * t, t3 = t2 * t;
            return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
        }
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * m1) / h;
    }
    Grid1D g_;
    std::vector<double> u_, a_, b_, du_, da_, db_;
    double far_, lo_, hi_;
};

}  // namespace

std::shared_ptr<const Profile> blowup_profile(const LeslieParams& p, const BlowupFamily& f) {
    if (!(f.epsilon > 0.0) || f.epsilon >= p.CL())
        throw std::invalid_argument("epsilon must lie in (0, C_L)");
    if (!(wave_speed(p, f.theta_star).dc > 0.0))
        throw std::invalid_argument("theta_star must satisfy c'(theta_star) > 0");
    if (!(f.M > 0.0)) throw std::invalid_argument("M must be positive");
    return std::make_shared<BlowupProfile>(p, f);
}

InitialData build_blowup_data(const LeslieParams& p, const BlowupFamily& f, double T, int nodes_per_epsilon,
                              double pad) {
    auto prof = blowup_profile(p, f);
    const double L = blowup_half_width(p, f.epsilon, T, pad);
    return sample_profile(prof, Grid1D::covering(-L, L, f.epsilon / nodes_per_epsilon));
}

double blowup_S00(const LeslieParams& p, const BlowupFamily& f) {
    const double c = wave_speed(p, f.theta_star).c;
    return (-2.0 * c + f.epsilon) * bump_phi(f.M, 0.0).dphi;
}

std::shared_ptr<const Profile> gaussian_profile(const GaussianFamily& f) {
    if (!(f.width > 0.0)) throw std::invalid_argument("width must be positive");
    return std::make_shared<GaussianProfile>(f);
}

std::shared_ptr<const Profile> sampled_profile(const Grid1D& grid, std::vector<double> u0,
                                               std::vector<double> theta0, std::vector<double> theta1) {
    if (grid.n < 2 || static_cast<int>(u0.size()) != grid.n || static_cast<int>(theta0.size()) != grid.n ||
        static_cast<int>(theta1.size()) != grid.n)
        throw std::invalid_argument("sampled profile: size mismatch");
    return std::make_shared<SampledProfile>(grid, std::move(u0), std::move(theta0), std::move(theta1));
}

double initial_wave_energy(const InitialData& d, const LeslieParams& p) {
    double e = 0.0;
    for (int i = 0; i < d.grid.n; ++i) {
        const double x = d.grid.x(i);
        const double c = wave_speed(p, d.theta0[i]).c;
        const double tx = d.profile->theta0_x(x);
        const double w = (i == 0 || i == d.grid.n - 1) ? 0.5 : 1.0;
        e += w * (d.theta1[i] * d.theta1[i] + c * c * tx * tx);
    }
    return e * d.grid.dx;
}

double initial_energy(const InitialData& d, const LeslieParams& p) {
    double e = 0.0;
    for (int i = 0; i < d.grid.n; ++i) {
        const double w = (i == 0 || i == d.grid.n - 1) ? 0.5 : 1.0;
        e += w * d.u0[i] * d.u0[i];
    }
    return 0.5 * (initial_wave_energy(d, p) + e * d.grid.dx);
}

void write_initial_csv(const InitialData& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "x,u0,theta0,theta1\n";
    char buf[128];
    for (int i = 0; i < d.grid.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", d.grid.x(i), d.u0[i], d.theta0[i], d.theta1[i]);
        out << buf;
    }
}

InitialData read_initial_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<double> xs, u, a, b;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double v[4];
        for (double& vi : v) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("malformed row in " + path);
            vi = std::stod(cell);
        }
        xs.push_back(v[0]);
        u.push_back(v[1]);
        a.push_back(v[2]);
        b.push_back(v[3]);
    }
    if (xs.size() < 2) throw std::runtime_error("too few rows in " + path);
    const double dx = (xs.back() - xs.front()) / (xs.size() - 1);
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (std::abs(xs[i] - xs[i - 1] - dx) > 1e-9 * (1.0 + std::abs(dx)))
            throw std::runtime_error("non-uniform grid in " + path);
    Grid1D g{xs.front(), dx, static_cast<int>(xs.size())};
    InitialData d;
    d.grid = g;
    d.u0 = u;
    d.theta0 = a;
    d.theta1 = b;
    d.profile = sampled_profile(g, u, a, b);
    d.tail_flag = d.profile->support_lo() > g.x_min && d.profile->support_hi() < g.x_max();
    return d;
}

}  // namespace nlc
