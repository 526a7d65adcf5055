#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tdvsa/scenario.hpp"

namespace py = pybind11;
using namespace tdvsa;

namespace {

// nlohmann::json -> Python object via the json module; keeps the binding thin.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict curve_dict(const PVCurve& c) {
    std::vector<double> lam, v;
    for (const auto& s : c.samples) {
        lam.push_back(s.lambda);
        v.push_back(s.v_monitored);
    }
    py::dict d;
    d["lambda"] = lam;
    d["v"] = v;
    d["lambda_max"] = c.lambda_max;
    d["nose_index"] = c.nose_index;
    d["monitored_bus"] = c.monitored_bus;
    d["termination"] = std::string(to_string(c.termination));
    return d;
}

CpfOptions cpf_from(const py::kwargs& kw) {
    CpfOptions o;
    if (kw.contains("initial_step")) o.initial_step = kw["initial_step"].cast<double>();
    if (kw.contains("max_step")) o.max_step = kw["max_step"].cast<double>();
    if (kw.contains("min_step")) o.min_step = kw["min_step"].cast<double>();
    o.check();
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Transmission-distribution voltage stability analysis";

    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
    py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception<StallError>(m, "StallError", PyExc_RuntimeError);

    py::class_<NetworkModel>(m, "Network")
        .def_readonly("name", &NetworkModel::name)
        .def_readonly("base_mva", &NetworkModel::base_mva)
        .def_property_readonly("kind", [](const NetworkModel& n) { return std::string(to_string(n.kind)); })
        .def_property_readonly("bus_ids",
                               [](const NetworkModel& n) {
                                   std::vector<int> ids;
                                   for (const auto& b : n.buses) ids.push_back(b.id);
                                   return ids;
                               })
        .def("__len__", &NetworkModel::size)
        .def("total_load_mw", &NetworkModel::total_load_mw)
        .def("to_dict", [](const NetworkModel& n) { return to_py(to_json(n)); })
        .def("__repr__", [](const NetworkModel& n) {
            return "<Network '" + n.name + "' " + std::string(to_string(n.kind)) + ", " +
                   std::to_string(n.size()) + " buses>";
        });

    m.def("load_network", &load_network, py::arg("path"));
    m.def("ieee9", &build_ieee9);
    m.def(
        "feeder",
        [](const std::string& templ, std::vector<double> lengths_mi, double load_mw, double load_mvar,
           double base_kv) {
            FeederConfig c;
            c.segment_lengths_mi = std::move(lengths_mi);
            c.load_mw = load_mw;
            c.load_mvar = load_mvar;
            c.base_kv = base_kv;
            return build_feeder(parse_feeder_template(templ), c);
        },
        py::arg("template"), py::arg("segment_lengths_mi"), py::arg("load_mw"), py::arg("load_mvar"),
        py::arg("base_kv") = 4.16);
    m.def(
        "compose_td",
        [](const NetworkModel& t, int bus, const NetworkModel& f, int copies, bool auto_scale) {
            return compose_td(t, bus, f, copies, {0.01, auto_scale});
        },
        py::arg("transmission"), py::arg("load_bus"), py::arg("feeder"), py::arg("copies"),
        py::arg("auto_scale") = false);

    m.def(
        "solve",
        [](const NetworkModel& net, double lambda, std::optional<double> vb, double scale) {
            const auto sol = solve(net, lambda, {}, vb, scale);
            if (!sol.converged) throw InfeasibleError("power flow did not converge: " + sol.diagnostic);
            return to_py(to_json(sol, net));
        },
        py::arg("network"), py::arg("lam") = 0.0, py::arg("v_b") = py::none(), py::arg("direction_scale") = 1.0);

    m.def(
        "trace_pv",
        [](const NetworkModel& net, int bus, double scale, std::optional<double> vb, const py::kwargs& kw) {
            return curve_dict(trace_pv(net, LoadDirection::proportional(net, scale), bus, cpf_from(kw), vb));
        },
        py::arg("network"), py::arg("bus"), py::arg("direction_scale") = 1.0, py::arg("v_b") = py::none());

    m.def(
        "d_vsa",
        [](const NetworkModel& feeder, double vb, double scale) {
            const auto r = d_vsa_margin(feeder, LoadDirection::proportional(feeder, scale), vb);
            py::dict d;
            d["lambda_max"] = r.lambda_max;
            d["mw"] = r.mw;
            d["mw_base"] = r.mw_base;
            return d;
        },
        py::arg("feeder"), py::arg("v_b") = 1.0, py::arg("direction_scale") = 1.0);

    m.def(
        "hypersurface",
        [](const NetworkModel& feeder, double lo, double hi, double step, double scale, int threads) {
            HypersurfaceOptions o;
            o.v_b_grid = HypersurfaceOptions::uniform_grid(lo, hi, step);
            o.threads = threads;
            const auto h = trace_hypersurface(feeder, LoadDirection::proportional(feeder, scale), o);
            std::vector<std::pair<double, double>> pts;
            for (const auto& s : h.samples) pts.emplace_back(s.v_b, s.lambda_max);
            return pts;
        },
        py::arg("feeder"), py::arg("vb_min") = 0.5, py::arg("vb_max") = 1.1, py::arg("vb_step") = 0.01,
        py::arg("direction_scale") = 1.0, py::arg("threads") = 1);

    m.def(
        "td_vsa",
        [](const NetworkModel& net, double scale) {
            const auto r = td_vsa(net, LoadDirection::proportional(net, scale));
            auto d = curve_dict(r.curve);
            d["lambda_td_max"] = r.lambda_td_max;
            return d;
        },
        py::arg("integrated"), py::arg("direction_scale") = 1.0);

    m.def("apply_load_shed", [](const NetworkModel& net, int boundary, double mw) {
        return apply_load_shed(net, ShedRegion::feeders_at(net, boundary), mw);
    });
    m.def("apply_der", [](const NetworkModel& net, double pen) { return apply_der(net, pen); });

    m.def(
        "validate_scenario",
        [](const std::filesystem::path& path) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& d : validate_scenario(path)) out.emplace_back(d.code, d.message);
            return out;
        },
        py::arg("path"));
    m.def(
        "run_scenario",
        [](const std::filesystem::path& path, std::optional<std::filesystem::path> out_dir, int threads) {
            const auto cfg = load_scenario(path);
            ScenarioResult r;
            {
                py::gil_scoped_release release;
                r = run_scenario(cfg, {threads});
                if (out_dir) write_outputs(r, *out_dir);
            }
            py::dict d;
            d["report"] = to_py(r.report());
            d["tables"] = r.tables();
            return d;
        },
        py::arg("path"), py::arg("out_dir") = py::none(), py::arg("threads") = 1);
}
