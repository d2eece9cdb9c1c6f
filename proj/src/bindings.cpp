#include "qvi/mc.hpp"
#include "qvi/runio.hpp"
#include "qvi/verify.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qvi;

namespace {

Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct PyRun {
    LoadedConfig cfg;
    Grid grid;
    SolveResult result;

    std::vector<std::vector<double>> values() const {
        std::vector<std::vector<double>> out;
        for (const auto& lvl : result.levels) out.push_back(lvl.v);
        return out;
    }
    std::vector<double> times() const { return grid.times; }
    std::vector<std::vector<double>> axes() const { return grid.axes; }
    double value(double t, const std::vector<double>& x) const {
        std::size_t lvl = 0;
        if (!grid.times.empty()) {
            while (lvl + 1 < grid.times.size() &&
                   std::abs(grid.times[lvl + 1] - t) <
                       std::abs(grid.times[lvl] - t))
                ++lvl;
        }
        return eval_field(grid, cfg.problem,
                          grid.times.empty() ? 0.0 : grid.times[lvl],
                          to_vec(x), result.levels[lvl]);
    }
    void save(const std::string& dir) const {
        save_run(dir, cfg, grid, result, 0.0);
    }
};

PyRun py_solve(const LoadedConfig& cfg) {
    PyRun run{cfg, make_grid(cfg.problem, cfg.grid_nodes, cfg.n_time), {}};
    run.result = solve(cfg.problem, cfg.levy, run.grid, cfg.options);
    return run;
}

PyRun py_load_run(const std::string& dir, const LoadedConfig& cfg) {
    RunDir rd = load_run(dir, cfg);
    return PyRun{cfg, std::move(rd.grid), std::move(rd.result)};
}

py::dict py_estimate(const PyRun& run, const std::vector<double>& x0,
                     double t0, std::size_t paths, double dt,
                     std::uint64_t seed, int threads) {
    Strategy strat = policy_strategy(run.result, run.grid, run.cfg.problem);
    if (dt <= 0.0) dt = run.cfg.problem.T / std::max(1, run.cfg.n_time);
    McEstimate est = estimate_value(run.cfg.problem, run.cfg.levy, strat, t0,
                                    to_vec(x0), paths, dt, seed, threads);
    py::dict d;
    d["mean"] = est.mean;
    d["std_error"] = est.std_error;
    d["n_paths"] = est.n_paths;
    d["aborted_fraction"] = est.aborted_fraction;
    d["mean_impulse_count"] = est.mean_impulse_count;
    return d;
}

py::dict py_check_dpp(const PyRun& run, const std::vector<double>& x0,
                      double t0, const std::string& rule, double rule_value,
                      std::size_t paths, double dt, std::uint64_t seed,
                      int threads) {
    StopRule stop;
    if (rule == "time") {
        stop.kind = StopRule::Kind::FixedTime;
        stop.time = rule_value;
    } else if (rule == "box") {
        stop.kind = StopRule::Kind::Box;
        stop.halfwidth = rule_value;
        stop.center = to_vec(x0);
    } else {
        throw Error("stop rule must be 'time' or 'box'");
    }
    Strategy strat = policy_strategy(run.result, run.grid, run.cfg.problem);
    if (dt <= 0.0) dt = run.cfg.problem.T / std::max(1, run.cfg.n_time);
    DppReport rep = check_dpp(run.cfg.problem, run.cfg.levy, run.result,
                              run.grid, strat, t0, to_vec(x0), stop, paths,
                              dt, seed, threads);
    py::dict d;
    d["v0"] = rep.v0;
    d["estimate"] = rep.estimate;
    d["std_error"] = rep.std_error;
    d["residual"] = rep.residual;
    return d;
}

py::tuple py_verify(const std::string& run_dir, const LoadedConfig& cfg,
                    bool with_supersolution) {
    RunDir rd = load_run(run_dir, cfg);
    VerifyOptions opts;
    opts.with_supersolution = with_supersolution;
    VerifyReport rep = run_suite(rd, cfg, opts);
    return py::make_tuple(rep.all_passed(), rep.render());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "HJB quasi-variational inequality solver for combined "
              "impulse / stochastic control of jump-diffusions";

    py::register_exception<Error>(m, "QviError");

    py::class_<LoadedConfig>(m, "Config")
        .def_property_readonly("hash",
                               [](const LoadedConfig& c) { return c.hash; })
        .def_property_readonly(
            "canonical", [](const LoadedConfig& c) { return c.canonical; })
        .def_property_readonly(
            "grid_nodes", [](const LoadedConfig& c) { return c.grid_nodes; })
        .def_property_readonly("n_time",
                               [](const LoadedConfig& c) { return c.n_time; });

    py::class_<PyRun>(m, "Run")
        .def_property_readonly("values", &PyRun::values)
        .def_property_readonly("times", &PyRun::times)
        .def_property_readonly("axes", &PyRun::axes)
        .def("value", &PyRun::value, py::arg("t"), py::arg("x"))
        .def("save", &PyRun::save, py::arg("run_dir"));

    m.def("load_config", &load_config, py::arg("path"));
    m.def("load_config_text", &load_config_text, py::arg("text"));
    m.def("validate",
          [](const LoadedConfig& cfg) { return validate(cfg.problem).summary(); },
          py::arg("config"));
    m.def("solve", &py_solve, py::arg("config"));
    m.def("load_run", &py_load_run, py::arg("run_dir"), py::arg("config"));
    m.def("estimate_value", &py_estimate, py::arg("run"), py::arg("x0"),
          py::arg("t0") = 0.0, py::arg("paths") = 10000, py::arg("dt") = 0.0,
          py::arg("seed") = 0, py::arg("threads") = 1);
    m.def("check_dpp", &py_check_dpp, py::arg("run"), py::arg("x0"),
          py::arg("t0") = 0.0, py::arg("rule") = "time",
          py::arg("rule_value") = 0.5, py::arg("paths") = 10000,
          py::arg("dt") = 0.0, py::arg("seed") = 0, py::arg("threads") = 1);
    m.def("verify", &py_verify, py::arg("run_dir"), py::arg("config"),
          py::arg("with_supersolution") = false);
}
