// Python view of the simulator: configuration, single runs, batches and the
// closed-form TOR pdfs. Enums cross the boundary as their string names.

#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tocsim/analytics.hpp"
#include "tocsim/error.hpp"
#include "tocsim/sim_engine.hpp"

namespace py = pybind11;
using namespace tocsim;

namespace {

Variant variant_arg(const std::string& name) {
    const auto v = parse_variant(name);
    if (!v) throw Error(ErrorKind::invalid_config, "variant: unknown variant '" + name + "'");
    return *v;
}

ScenarioConfig make_config(const std::string& variant, int spots) {
    ScenarioConfig cfg;
    apply_variant(cfg, variant_arg(variant));
    cfg.spot_count = spots;
    cfg.validate();
    return cfg;
}

BatchOptions quiet(const CalibrationProfile& profile, unsigned threads) {
    BatchOptions o;
    o.run.profile = profile;
    o.run.trace = TraceLevel::none;
    o.threads = threads;
    return o;
}

py::dict pdf_dict(const AnalyticalPdf& pdf) {
    py::list atoms, bands;
    for (const auto& a : pdf.atoms) atoms.append(py::make_tuple(a.x, a.mass));
    for (const auto& b : pdf.bands) bands.append(py::make_tuple(b.lo, b.hi, b.density));
    py::dict d;
    d["atoms"] = atoms;
    d["bands"] = bands;
    d["total_mass"] = pdf.total_mass();
    return d;
}

}  // namespace

PYBIND11_MODULE(_tocsim, m) {
    m.doc() = "ToC/MRM simulator";

    static py::exception<Error> error(m, "TocsimError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::class_<CalibrationProfile>(m, "CalibrationProfile")
        .def(py::init<>())
        .def_readwrite("v_drive", &CalibrationProfile::v_drive)
        .def_readwrite("v_mrm", &CalibrationProfile::v_mrm)
        .def_readwrite("t_tor", &CalibrationProfile::t_tor)
        .def_readwrite("d_2speedmrm", &CalibrationProfile::d_2speedmrm)
        .def_readwrite("d_2stop", &CalibrationProfile::d_2stop)
        .def_readwrite("d_lc", &CalibrationProfile::d_lc)
        .def_readwrite("theta_park", &CalibrationProfile::theta_park)
        .def_property_readonly("d_tor", &CalibrationProfile::d_tor)
        .def_property_readonly("a_to_mrm", &CalibrationProfile::a_to_mrm)
        .def_property_readonly("a_to_stop", &CalibrationProfile::a_to_stop)
        .def("validate", &CalibrationProfile::validate, py::arg("spot_length"));

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init(&make_config), py::arg("variant") = "denm_zero", py::arg("spots") = 1)
        .def_readwrite("relevance_distance", &ScenarioConfig::relevance_distance)
        .def_readwrite("max_toc_range", &ScenarioConfig::max_toc_range)
        .def_readwrite("s_len", &ScenarioConfig::s_len)
        .def_readwrite("n_sections", &ScenarioConfig::n_sections)
        .def_readwrite("spot_sections", &ScenarioConfig::spot_sections)
        .def_readwrite("spot_count", &ScenarioConfig::spot_count)
        .def_readwrite("y_margin", &ScenarioConfig::y_margin)
        .def_readwrite("timestep", &ScenarioConfig::timestep)
        .def_readwrite("comm_range", &ScenarioConfig::comm_range)
        .def_readwrite("p_loss", &ScenarioConfig::p_loss)
        .def_readwrite("sensor_range", &ScenarioConfig::sensor_range)
        .def_readwrite("replicates", &ScenarioConfig::replicates)
        .def_property(
            "variant", [](const ScenarioConfig& c) { return std::string(to_string(variant_of(c))); },
            [](ScenarioConfig& c, const std::string& v) { apply_variant(c, variant_arg(v)); })
        .def_property_readonly("spot_length", &ScenarioConfig::spot_length)
        .def_property_readonly("window_count", &ScenarioConfig::window_count)
        .def("validate", &ScenarioConfig::validate);

    py::class_<RunResult>(m, "RunResult")
        .def_property_readonly("variant", [](const RunResult& r) { return std::string(to_string(r.variant)); })
        .def_property_readonly("outcome", [](const RunResult& r) { return std::string(to_string(r.outcome)); })
        .def_readonly("layout_id", &RunResult::layout_id)
        .def_readonly("seed", &RunResult::seed)
        .def_readonly("toc_x", &RunResult::toc_x)
        .def_readonly("stop_x", &RunResult::stop_x)
        .def_readonly("dist_at_mrm_speed", &RunResult::dist_at_mrm_speed)
        .def_readonly("parked_window", &RunResult::parked_window)
        .def_property_readonly("trace", [](const RunResult& r) {
            py::list out;
            for (const auto& e : r.trace) out.append(py::make_tuple(e.t, e.entity, e.kind, e.x, e.v, e.detail));
            return out;
        });

    m.def("variants", [] {
        std::vector<std::string> out;
        for (auto v : all_variants) out.emplace_back(to_string(v));
        return out;
    });

    m.def("windows", &enumerate_windows, py::arg("cfg"), "Candidate safe-spot window indices.");

    m.def(
        "run",
        [](const ScenarioConfig& cfg, std::vector<int> windows, std::uint64_t seed, const CalibrationProfile& profile,
           bool trace) {
            RunOptions o;
            o.profile = profile;
            o.trace = trace ? TraceLevel::info : TraceLevel::none;
            const auto layout = EmergencyLaneOccupancy::from_windows(cfg, std::move(windows));
            py::gil_scoped_release release;
            return run(cfg, layout, seed, o);
        },
        py::arg("cfg"), py::arg("windows"), py::arg("seed") = 1, py::arg("profile") = CalibrationProfile{},
        py::arg("trace") = false, "One run with the given windows free.");

    m.def(
        "batch",
        [](const ScenarioConfig& cfg, std::optional<int> runs, std::uint64_t seed, const CalibrationProfile& profile,
           unsigned threads) {
            const auto mode = runs ? BatchMode::monte_carlo(*runs) : BatchMode::enumerate();
            py::gil_scoped_release release;
            return batch(cfg, mode, seed, quiet(profile, threads));
        },
        py::arg("cfg"), py::arg("runs") = py::none(), py::arg("seed") = 1, py::arg("profile") = CalibrationProfile{},
        py::arg("threads") = 0u, "Enumerate every layout, or draw `runs` Monte-Carlo runs.");

    m.def(
        "success_rate",
        [](const std::vector<RunResult>& rs, const ScenarioConfig& cfg, const CalibrationProfile& profile) {
            return aggregate(rs, cfg, profile).success_rate;
        },
        py::arg("results"), py::arg("cfg"), py::arg("profile") = CalibrationProfile{});

    m.def(
        "toc_pdf",
        [](const ScenarioConfig& cfg, const CalibrationProfile& profile) {
            return pdf_dict(pdf_for(variant_of(cfg), cfg, profile));
        },
        py::arg("cfg"), py::arg("profile") = CalibrationProfile{},
        "Closed-form TOR position pdf: atoms (x, mass) and bands (lo, hi, density).");

    m.def(
        "toc_l1",
        [](const std::vector<RunResult>& rs, const ScenarioConfig& cfg, const CalibrationProfile& profile) {
            auto hist = toc_histogram(cfg, profile);
            for (const auto& r : rs) {
                if (r.toc_x) hist.add(*r.toc_x);
            }
            return l1_distance(hist, pdf_for(variant_of(cfg), cfg, profile));
        },
        py::arg("results"), py::arg("cfg"), py::arg("profile") = CalibrationProfile{},
        "L1 distance between the sampled TOR histogram and the closed form.");
}
