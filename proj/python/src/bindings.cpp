#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vmm/acceptance.hpp"
#include "vmm/pipeline.hpp"

namespace py = pybind11;
using namespace vmm;

namespace {

RunConfig config_from(const std::vector<std::string>& overrides) {
  RunConfig c;
  for (const auto& kv : overrides) apply_override(c, kv);
  c.validate();
  return c;
}

py::dict record_dict(const CriticalPointRecord& r) {
  return py::module_::import("json").attr("loads")(nlohmann::json(r).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Viscosity min-max numerics";

  static py::exception<Error> base_exc(m, "VmmError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_exc(m, "ConfigError", base_exc.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_exc, e.what());
    } catch (const Error& e) {
      py::set_error(base_exc, e.what());
    }
  });

  m.def("problem_names", &problem_names);
  m.def("canonical_problem_key", &canonical_problem_key, py::arg("key"));
  m.def("config_keys", &config_keys);
  m.def("entropy_bound", [](double s) { return entropy_bound(s); }, py::arg("sigma"));

  py::class_<Problem>(m, "Problem")
      .def(py::init([](const std::string& key, int frames) {
             try {
               return make_problem(key, frames);
             } catch (const DomainError& e) {
               throw ConfigError(e.what());
             }
           }),
           py::arg("key"), py::arg("frames") = 33)
      .def_readonly("key", &Problem::key)
      .def_property_readonly("dim", [](const Problem& p) { return p.family.dim(); })
      .def_property_readonly("seed_frames",
                             [](const Problem& p) {
                               Matrix f(p.seed.size(), p.family.dim());
                               for (std::size_t i = 0; i < p.seed.size(); ++i) f.row(i) = p.seed.frames[i].transpose();
                               return f;
                             })
      .def("value", [](const Problem& p, double s, const Vector& x) { return p.family.value(s, x); },
           py::arg("sigma"), py::arg("x"))
      .def("gradient", [](const Problem& p, double s, const Vector& x) { return p.family.gradient(s, x); },
           py::arg("sigma"), py::arg("x"))
      .def("hessian", [](const Problem& p, double s, const Vector& x) { return p.family.hessian(s, x); },
           py::arg("sigma"), py::arg("x"))
      .def("refine",
           [](const Problem& p, const Vector& x0, double s) {
             RefineOptions o;
             o.norm_bound = p.norm_bound;
             return record_dict(refine(x0, p.family, s, o));
           },
           py::arg("x0"), py::arg("sigma"))
      .def("width_curve",
           [](const Problem& p, const std::vector<double>& grid, int budget) {
             const auto c = estimate_width_curve(p.seed, p.family, grid, budget);
             py::dict d;
             d["sigmas"] = c.sigmas;
             d["betas"] = c.betas;
             d["raw_betas"] = c.raw_betas;
             d["argmax_frames"] = c.argmax_frames;
             return d;
           },
           py::arg("grid"), py::arg("budget") = 200);

  m.def("_default_config", [] { return nlohmann::json(RunConfig{}).dump(); });
  m.def("_run", [](const std::vector<std::string>& overrides, bool with_timings) {
    const auto rec = run(config_from(overrides));
    return with_timings ? nlohmann::json(rec).dump() : deterministic_json(rec).dump();
  });
  m.def("_solve", [](const std::vector<std::string>& overrides, const std::string& dir) {
    const auto rec = run(config_from(overrides));
    emit(rec, dir);
    return nlohmann::json(rec).dump();
  });
  m.def("_load_run", [](const std::string& path) { return nlohmann::json(load_run(path)).dump(); });
  m.def("_selftest", [](const std::string& filter) {
    AcceptanceOptions o;
    o.filter = filter;
    py::list rows;
    for (const auto& r : run_acceptance(o)) {
      py::dict d;
      d["id"] = r.id;
      d["name"] = r.name;
      d["pass"] = r.pass;
      d["known_gap"] = r.known_gap;
      d["actual"] = r.actual;
      d["seconds"] = r.seconds;
      rows.append(d);
    }
    return rows;
  });
}
