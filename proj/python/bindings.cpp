#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "lpsim/config.hpp"
#include "lpsim/decoherence.hpp"
#include "lpsim/direct_integral.hpp"
#include "lpsim/errors.hpp"
#include "lpsim/friedrichs.hpp"
#include "lpsim/scenarios.hpp"

namespace py = pybind11;
using namespace lpsim;

namespace {

LpVector state(const TimeGrid& grid, const CMatrix& values) {
    return LpVector(grid, AuxSpace(static_cast<int>(values.cols())), values);
}

py::dict report_dict(const ScenarioReport& rep) {
    py::list checks;
    for (const InvariantCheck& c : rep.checks) {
        py::dict d;
        d["name"] = c.name;
        d["measured"] = c.measured;
        d["relation"] = c.relation;
        d["bound"] = c.bound;
        d["passed"] = c.passed;
        checks.append(d);
    }
    py::dict out;
    out["scenario"] = rep.scenario;
    out["seed"] = rep.seed;
    out["tolerance_scale"] = rep.tolerance_scale;
    out["out_dir"] = rep.out_dir;
    out["passed"] = rep.passed();
    out["checks"] = checks;
    out["files"] = rep.files;
    out["text"] = rep.text();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Direct-integral time representation: Friedrichs model, scenarios, decoherence";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<double, double, std::size_t>(), py::arg("t_min"), py::arg("t_max"), py::arg("n_points"))
        .def_property_readonly("t_min", &TimeGrid::t_min)
        .def_property_readonly("t_max", &TimeGrid::t_max)
        .def_property_readonly("spacing", &TimeGrid::spacing)
        .def("__len__", &TimeGrid::size)
        .def("points", &TimeGrid::points)
        .def("sigma", &TimeGrid::sigma);

    py::class_<Coupling>(m, "Coupling")
        .def_static("flat", &Coupling::flat, py::arg("gamma"))
        .def_static("half_line_sqrt", &Coupling::half_line_sqrt, py::arg("lam"), py::arg("omega_c"));

    py::class_<FriedrichsModel>(m, "FriedrichsModel")
        .def(py::init<double, Coupling>(), py::arg("e0"), py::arg("coupling"))
        .def_property_readonly("e0", &FriedrichsModel::e0);

    py::enum_<Sheet>(m, "Sheet").value("first", Sheet::first).value("second", Sheet::second);
    py::enum_<SurvivalMethod>(m, "SurvivalMethod")
        .value("spectral_quadrature", SurvivalMethod::spectral_quadrature)
        .value("pole_plus_background", SurvivalMethod::pole_plus_background);

    py::class_<ResonancePole>(m, "ResonancePole")
        .def_readonly("position", &ResonancePole::position)
        .def_readonly("residue", &ResonancePole::residue)
        .def_readonly("iterations", &ResonancePole::iterations);

    m.def(
        "self_energy", [](const FriedrichsModel& model, cplx z, Sheet sheet) { return self_energy(model, z, sheet).sigma; },
        py::arg("model"), py::arg("z"), py::arg("sheet") = Sheet::first);
    m.def("find_resonance_pole", &find_resonance_pole, py::arg("model"));
    m.def("bound_states", &bound_states, py::arg("model"));
    m.def("spectral_weight", &spectral_weight, py::arg("model"), py::arg("omega"));
    m.def(
        "survival_curve",
        [](const FriedrichsModel& model, const std::vector<double>& t, SurvivalMethod method) {
            return survival_curve(model, t, method);
        },
        py::arg("model"), py::arg("t"), py::arg("method") = SurvivalMethod::spectral_quadrature);
    m.def("decay_probability", &decay_probability, py::arg("model"), py::arg("t"),
          py::arg("method") = SurvivalMethod::spectral_quadrature);

    m.def(
        "reduced_density", [](const TimeGrid& grid, const CMatrix& values) { return reduce(state(grid, values)).matrix(); },
        py::arg("grid"), py::arg("values"), "Reduced density of the n x d value matrix.");
    m.def(
        "purity", [](const TimeGrid& grid, const CMatrix& values) { return purity(reduce(state(grid, values))); },
        py::arg("grid"), py::arg("values"));
    m.def(
        "effectively_pure",
        [](const TimeGrid& grid, const CMatrix& values) {
            const PurityWitness w = effectively_pure_check(state(grid, values));
            return py::make_tuple(w.effectively_pure, w.singular_ratio);
        },
        py::arg("grid"), py::arg("values"));
    m.def(
        "liouville_offdiagonal_mass",
        [](const CMatrix& h0, const CMatrix& v, const TimeGrid& grid) {
            return liouville_kernel(h0, v, grid).interaction_offdiagonal_mass();
        },
        py::arg("h0"), py::arg("v"), py::arg("grid"));

    m.def("list_scenarios", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const ScenarioInfo& s : scenario_registry()) out.emplace_back(s.name, s.description);
        return out;
    });
    m.def(
        "run_config",
        [](const std::string& path, std::optional<std::string> out, std::optional<unsigned long long> seed,
           double tolerance_scale) {
            RunOptions opts;
            opts.out_dir = std::move(out);
            opts.seed = seed;
            opts.tolerance_scale = tolerance_scale;
            ScenarioReport rep;
            {
                py::gil_scoped_release release;
                rep = run_scenario(Config::load(path), opts);
            }
            return report_dict(rep);
        },
        py::arg("path"), py::arg("out") = py::none(), py::arg("seed") = py::none(), py::arg("tolerance_scale") = 1.0);
}
