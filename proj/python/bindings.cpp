#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlc/diagnostics.hpp"

namespace py = pybind11;
using namespace nlc;

namespace {

py::tuple run_json(const std::string& config) {
    try {
        const RunResult r = run(config_from_json(nlohmann::json::parse(config)));
        return py::make_tuple(r.status, r.summary.dump());
    } catch (const ConfigError& e) {
        throw py::value_error(e.what());
    } catch (const nlohmann::json::parse_error& e) {
        throw py::value_error(e.what());
    }
}

}  // namespace

PYBIND11_MODULE(_nlc, m) {
    m.doc() = "Poiseuille flow of nematic liquid crystals: coupled solver and blow-up diagnostics";

    py::class_<LeslieParams>(m, "LeslieParams")
        .def(py::init<>())
        .def_static("special", &LeslieParams::special)
        .def_readwrite("K1", &LeslieParams::K1)
        .def_readwrite("K3", &LeslieParams::K3)
        .def_readwrite("rho", &LeslieParams::rho)
        .def_readwrite("nu", &LeslieParams::nu)
        .def_readonly("gamma1", &LeslieParams::gamma1)
        .def_readonly("gamma2", &LeslieParams::gamma2)
        .def_property(
            "alpha", [](const LeslieParams& p) { return std::vector<double>(p.alpha + 1, p.alpha + 7); },
            [](LeslieParams& p, const std::vector<double>& a) {
                if (a.size() != 6) throw py::value_error("alpha needs 6 values");
                for (int k = 0; k < 6; ++k) p.alpha[k + 1] = a[k];
                p.derive_gammas();
            })
        .def("CL", &LeslieParams::CL)
        .def("CU", &LeslieParams::CU);

    m.def("validate", [](const LeslieParams& p) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& v : validate(p)) out.emplace_back(v.relation, v.value);
        return out;
    });
    m.def("wave_speed", [](const LeslieParams& p, double theta) {
        const auto s = wave_speed(p, theta);
        return py::make_tuple(s.c, s.dc);
    });
    m.def("is_unit_gh", &is_unit_gh);
    m.def("kernel", &kernel, py::arg("x"), py::arg("t"));
    m.def("kernel_dx", &kernel_dx, py::arg("x"), py::arg("t"));
    m.def("k2_constant", &k2_constant, py::arg("k0"), py::arg("k1"), py::arg("CU"));
    m.def("predicted_time", &predicted_time, py::arg("params"), py::arg("theta_star"), py::arg("k3"),
          py::arg("epsilon"));

    py::class_<BlowupFamily>(m, "BlowupFamily")
        .def(py::init<>())
        .def_readwrite("epsilon", &BlowupFamily::epsilon)
        .def_readwrite("theta_star", &BlowupFamily::theta_star)
        .def_readwrite("M", &BlowupFamily::M)
        .def("k0", &BlowupFamily::k0)
        .def_static("threshold", &BlowupFamily::threshold);
    m.def("blowup_S00", &blowup_S00);

    m.def("default_config", [] { return config_to_json(RunConfig{}).dump(); });
    m.def("run_json", &run_json, py::arg("config"),
          "Run a scenario from a JSON config; returns (status, summary JSON).");
}
