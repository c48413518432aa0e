#include <CLI11.hpp>
#include <iostream>

#include "nlc/diagnostics.hpp"

namespace {

struct Flags {
    std::string config;
    std::string scenario;
    std::vector<double> epsilon;
    int resolution = 0;
    double T = 0;
    std::string out;
    int workers = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_flags(CLI::App* app, Flags& f, bool with_scenario) {
    app->add_option("--config", f.config, "JSON run configuration");
    if (with_scenario) app->add_option("--scenario", f.scenario, "smooth | blowup | sweep | validate");
    app->add_option("--epsilon", f.epsilon, "bump width (several values for a sweep)");
    app->add_option("--resolution", f.resolution, "refinement level, 1 = base grids");
    app->add_option("--T", f.T, "final time");
    app->add_option("--out", f.out, "output directory (default $NLCSIM_OUT/<scenario>)");
    app->add_option("--workers", f.workers, "concurrent sweep members");
    app->add_option("--seed", f.seed, "seed for Hölder pair sampling");
}

nlc::RunConfig build_config(const Flags& f, nlc::Scenario scenario) {
    nlc::RunConfig c = f.config.empty() ? nlc::RunConfig{} : nlc::load_config(f.config);
    c.scenario = f.scenario.empty() ? scenario : nlc::scenario_from_string(f.scenario);
    if (!f.epsilon.empty()) {
        if (c.scenario == nlc::Scenario::sweep) {
            c.epsilons = f.epsilon;
        } else {
            if (f.epsilon.size() != 1) throw nlc::ConfigError("--epsilon", "only a sweep takes several values");
            c.family.epsilon = f.epsilon[0];
        }
    }
    if (f.resolution) c.resolution = f.resolution;
    if (f.T) c.T = f.T;
    if (!f.out.empty()) c.out = f.out;
    if (f.workers) c.workers = f.workers;
    if (f.seed) c.seed = f.seed;
    nlc::check_config(c);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poiseuille flow of nematic liquid crystals: coupled solver and blow-up diagnostics"};
    app.require_subcommand(1);
    Flags fs, fb, fw, fv;
    auto* sim = app.add_subcommand("simulate", "run a scenario (smooth by default)");
    auto* blow = app.add_subcommand("blowup", "blow-up family run with detection report");
    auto* sweep = app.add_subcommand("sweep", "blow-up runs over several epsilon values");
    auto* val = app.add_subcommand("validate", "invariant suite; nonzero exit on any failure");
    add_flags(sim, fs, true);
    add_flags(blow, fb, false);
    add_flags(sweep, fw, false);
    add_flags(val, fv, false);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        nlc::RunConfig c;
        if (*sim) c = build_config(fs, nlc::Scenario::smooth);
        if (*blow) c = build_config(fb, nlc::Scenario::blowup);
        if (*sweep) c = build_config(fw, nlc::Scenario::sweep);
        if (*val) c = build_config(fv, nlc::Scenario::validate);
        const nlc::RunResult r = nlc::run(c);
        std::cout << r.summary.dump(2) << '\n';
        for (const auto& f : r.failures) std::cerr << "FAILED: " << f << '\n';
        return r.status;
    } catch (const nlc::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run aborted: " << e.what() << '\n';
        return 1;
    }
}
