#pragma once

#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlc/coupled.hpp"
#include "nlc/singularity.hpp"

namespace nlc {

/// Every tolerance used by the validate scenario and the acceptance driver.
struct Tolerances {
    double energy_rel = 1e-3;          // |slack| / 𝓔(0) on smooth runs
    double energy_one_sided = 1e-3;    // 𝓔(t) + D(t) <= 𝓔(0)(1 + tol) on blow-up runs
    double oracle_l2 = 1e-3;           // lattice vs FD, θ at t = 0.5
    double fixed_point_sup = 1e-6;
    double fixed_point_l2 = 1e-6;
    double singular_tol = 2e-6;        // 1 + cos z flag
    double S_detect = 1e3;
    double R_fiber = 10.0;
    double heat_mass = 1e-10;
    double heat_semigroup = 1e-8;
    double heat_duhamel = 1e-6;
    double holder_change = 0.2;
    double lipschitz_growth = 4.0;
    double theta_x_growth = 10.0;
    double refinement_order = 1.0;
};

enum class Scenario { smooth, blowup, sweep, validate };
Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);

struct RunConfig {
    Scenario scenario = Scenario::smooth;
    LeslieParams params = LeslieParams::special();
    BlowupFamily family;
    GaussianFamily smooth;
    std::vector<double> epsilons = {0.04, 0.02, 0.01};
    int resolution = 1;   // refinement level, grids scale as 1/resolution
    double T = 0;         // 0: scenario default
    double half_width = 0;  // 0: scenario default
    FixedPointConfig fixed_point;
    Tolerances tol;
    std::string out;
    int workers = 1;
    std::uint64_t seed = 1;
    double T_or_default() const;
};

/// Names the offending key, e.g. "params.K1".
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& why)
        : std::runtime_error("config key '" + key + "': " + why), key(key) {}
    std::string key;
};

/// params.K1 and params.K3 are required; everything else falls back to defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);
void check_config(const RunConfig& c);

/// Output root: the NLCSIM_OUT environment variable, else "nlc_out".
std::string default_output_root();

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
    const std::vector<double>& col(const std::string& name) const;
};
void write_csv(const CsvTable& t, const std::string& path);
CsvTable read_csv(const std::string& path);
CsvTable energy_table(const EnergyReport& e);

struct ChartSeries {
    std::string name;
    std::vector<double> y;
};
void write_svg_chart(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::vector<double>& x, const std::vector<ChartSeries>& series);

CoupledGrid smooth_coupled_grid(const RunConfig& c);
CoupledGrid blowup_coupled_grid(const RunConfig& c, double epsilon);
InitialData smooth_initial_data(const RunConfig& c);

struct RunResult {
    int status = 0;  // 0 ok, 1 failed check
    nlohmann::json summary;
    std::vector<std::string> failures;
};

RunResult run_smooth(const RunConfig& c, const std::string& dir);
RunResult run_blowup(const RunConfig& c, double epsilon, const std::string& dir);
/// Members run on up to c.workers threads; a failed member is recorded in its row.
RunResult run_sweep(const RunConfig& c, const std::string& dir);
RunResult run_validate(const RunConfig& c, const std::string& dir);
RunResult run(const RunConfig& c);

}  // namespace nlc
