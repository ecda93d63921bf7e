#include "wavelab/compat.hpp"
#include "wavelab/diagnostics.hpp"
#include "wavelab/error.hpp"
#include "wavelab/experiment.hpp"
#include "wavelab/penrose.hpp"
#include "wavelab/perturbation.hpp"
#include "wavelab/profiles.hpp"
#include "wavelab/radial.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace wavelab;

namespace {

py::array_t<double> to_array(const Field& f) { return py::array_t<double>(static_cast<py::ssize_t>(f.size()), f.data()); }

ProfileSpec profile_from(const std::string& name, double amplitude) {
    ProfileSpec s = preset(name);
    s.amplitude = amplitude;
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "radial defocusing wave equation outside the unit ball";
    m.attr("__version__") = WAVELAB_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<Params>(m, "Params")
        .def(py::init(&make_params), py::arg("n") = 3, py::arg("p") = 7.0, py::arg("label") = "")
        .def_readonly("n", &Params::n)
        .def_readonly("p", &Params::p)
        .def("__repr__", [](const Params& p) { return "Params(n=" + std::to_string(p.n) + ", p=" + std::to_string(p.p) + ")"; });

    m.def("profiles", [](const std::string& filter) {
              py::list out;
              for (const auto& e : list_profiles(filter)) {
                  py::dict d;
                  d["name"] = e.name;
                  d["compat_order"] = e.compat_order;
                  d["description"] = e.description;
                  out.append(d);
              }
              return out;
          },
          py::arg("filter") = "");

    m.def("radial_grid", [](double r_max, double h) { return to_array(make_grid_with_spacing(r_max, h).coordinates()); },
          py::arg("r_max"), py::arg("h"));

    m.def("sample_profile",
          [](const std::string& name, double r_max, double h, double amplitude) {
              return to_array(sample(profile_from(name, amplitude), make_grid_with_spacing(r_max, h)));
          },
          py::arg("name"), py::arg("r_max"), py::arg("h"), py::arg("amplitude") = 1.0);

    m.def("evolve_radial",
          [](const std::string& u0, double amplitude, const Params& params, double r_max, double h, double t_end,
             double dt, std::size_t log_stride) {
              const RadialGrid g = make_grid_with_spacing(r_max, h);
              RadialState s = zero_state(g);
              s.u = sample(profile_from(u0, amplitude), g);
              s.u[0] = 0.0;
              EvolveOptions eo;
              eo.log_stride = log_stride;
              EvolveResult res;
              {
                  py::gil_scoped_release release;
                  res = evolve(s, t_end, dt, NonlinearitySpec::defocusing(params.p), params, eo);
              }
              Field t, E;
              for (const auto& e : res.log) {
                  t.push_back(e.t);
                  E.push_back(e.energy.total);
              }
              py::dict d;
              d["r"] = to_array(g.coordinates());
              d["u"] = to_array(res.final_state.u);
              d["v"] = to_array(res.final_state.v);
              d["t"] = to_array(t);
              d["energy"] = to_array(E);
              return d;
          },
          py::arg("u0") = "bump4", py::arg("amplitude") = 1.0, py::arg("params") = make_params(3, 7.0),
          py::arg("r_max") = 14.0, py::arg("h") = 0.01, py::arg("t_end") = 1.0, py::arg("dt") = 0.005,
          py::arg("log_stride") = 10);

    m.def("to_penrose", [](double t, double r) {
        const auto pt = to_penrose(t, r);
        return py::make_tuple(pt.T, pt.alpha);
    });
    m.def("from_penrose", [](double T, double alpha) {
        const auto x = from_penrose({T, alpha});
        return py::make_tuple(x.t, x.r);
    });
    m.def("omega_physical", &omega_physical, py::arg("t"), py::arg("r"));
    m.def("boundary_alpha", &boundary_alpha, py::arg("T"));
    m.def("boundary_time", &boundary_time, py::arg("alpha"));

    m.def("F_kernel", &F_kernel, py::arg("u"), py::arg("w"), py::arg("p"));

    m.def("compat_order",
          [](const std::string& u0, const std::string& u1, const Params& params) {
              return compat_order(make_grid(5.0, 401), params, preset(u0), preset(u1));
          },
          py::arg("u0"), py::arg("u1") = "zero", py::arg("params") = make_params(3, 7.0));

    m.def("hardy_constants",
          [](std::size_t trials, std::uint64_t seed, int n, std::vector<double> lambdas, std::size_t num_quad) {
              const auto s = hardy_suite(trials, seed, n, lambdas, num_quad);
              py::dict d;
              d["C_H"] = s.C_H;
              d["max_variation"] = s.max_variation;
              d["finite"] = s.finite;
              d["stable"] = s.stable;
              return d;
          },
          py::arg("trials"), py::arg("seed") = 1, py::arg("n") = 3,
          py::arg("lambdas") = std::vector<double>{0.5, 2.0}, py::arg("num_quad") = 257);

    m.def("run_config",
          [](const std::string& text, const std::string& out_dir) {
              const auto cfg = parse_config(text, "<python>");
              const auto r = run_experiment(cfg, out_dir);
              py::dict d;
              d["exit_code"] = r.exit_code;
              d["failures"] = r.failures;
              d["error"] = r.error;
              d["files"] = r.files;
              return d;
          },
          py::arg("config_json"), py::arg("out_dir"));
}
