#include "qvi/mc.hpp"
#include "qvi/runio.hpp"
#include "qvi/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace qvi;

std::vector<int> parse_grid_arg(const std::string& s, int dim_x, int& n_time,
                                bool parabolic) {
    std::vector<int> nums;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) nums.push_back(std::stoi(tok));
    std::vector<int> nodes;
    if (parabolic) {
        if (static_cast<int>(nums.size()) != dim_x + 1)
            throw Error("--grid: expected " + std::to_string(dim_x) +
                        " space counts plus one time count");
        n_time = nums.back();
        nums.pop_back();
        nodes = nums;
    } else {
        if (static_cast<int>(nums.size()) != dim_x)
            throw Error("--grid: expected " + std::to_string(dim_x) +
                        " space counts");
        nodes = nums;
    }
    return nodes;
}

Vec parse_point(const std::string& s, int d) {
    if (s.empty()) return Vec();
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    if (static_cast<int>(v.size()) != d)
        throw Error("point argument is not " + std::to_string(d) +
                    "-dimensional: " + s);
    return Eigen::Map<Vec>(v.data(), d);
}

StopRule parse_stop_rule(const std::string& s, const Vec& x0) {
    StopRule rule;
    auto colon = s.find(':');
    if (colon == std::string::npos)
        throw Error("--stop-rule: expected time:<t> or box:<halfwidth>");
    std::string kind = s.substr(0, colon);
    double val = std::stod(s.substr(colon + 1));
    if (kind == "time") {
        rule.kind = StopRule::Kind::FixedTime;
        rule.time = val;
    } else if (kind == "box") {
        rule.kind = StopRule::Kind::Box;
        rule.halfwidth = val;
        rule.center = x0;
    } else {
        throw Error("--stop-rule: unknown kind '" + kind + "'");
    }
    return rule;
}

void dump_quad(const LevyModel& levy, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "zone,z,w\n";
    char buf[64];
    auto row = [&](const char* zone, const JumpAtom& a) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", a.z[0], a.w);
        out << zone << ',' << buf << '\n';
    };
    for (const auto& a : levy.small_nodes) row("small", a);
    for (const auto& a : levy.large_nodes) row("large", a);
}

int cmd_solve(const std::string& config_path, const std::string& grid_arg,
              const std::string& out_dir, bool elliptic, double rho,
              double tol, const std::string& certify,
              const std::string& dump_quad_path) {
    LoadedConfig cfg = load_config(config_path);
    if (elliptic && cfg.problem.horizon == HorizonType::Parabolic) {
        if (rho <= 0.0)
            throw Error("--elliptic on a finite-horizon config needs --rho");
        cfg.problem = to_elliptic(cfg.problem, rho);
    }
    if (tol > 0.0) cfg.options.tol = tol;

    ValidationReport vr = validate(cfg.problem);
    if (!vr.all_passed()) {
        std::cerr << vr.summary();
        std::cerr << "problem validation failed\n";
        return 1;
    }

    bool parabolic = cfg.problem.horizon == HorizonType::Parabolic;
    if (!grid_arg.empty())
        cfg.grid_nodes =
            parse_grid_arg(grid_arg, cfg.problem.dim_x, cfg.n_time, parabolic);
    Grid grid = make_grid(cfg.problem, cfg.grid_nodes, cfg.n_time);

    if (!dump_quad_path.empty() && cfg.levy.kind != LevyKind::None)
        dump_quad(cfg.levy, dump_quad_path);

    auto start = std::chrono::steady_clock::now();
    SolveResult result = solve(cfg.problem, cfg.levy, grid, cfg.options);
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    save_run(out_dir, cfg, grid, result, wall);

    double max_res = 0.0;
    for (const auto& c : result.certificates)
        max_res = std::max(max_res, c.residual);
    std::printf("solved %zu level(s), %zu nodes, max residual %.3e, "
                "pb constant %.6g, wall %.2fs\n",
                result.levels.size(), grid.num_nodes(), max_res,
                result.pb_constant, wall);
    std::printf("run written to %s\n", out_dir.c_str());

    if (!certify.empty()) {
        double q = cfg.problem.growth_p + 1.0, kappa = 1e-3;
        std::stringstream ss(certify);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos)
                throw Error("--certify-supersolution: expected q=..,kappa=..");
            std::string key = item.substr(0, eq);
            double val = std::stod(item.substr(eq + 1));
            if (key == "q")
                q = val;
            else if (key == "kappa")
                kappa = val;
            else
                throw Error("--certify-supersolution: unknown key " + key);
        }
        SupersolutionCertificate cert =
            build_strict_supersolution(cfg.problem, cfg.levy, grid, q, kappa);
        std::printf("supersolution certificate: %s (w1=%g, w2=%g, "
                    "kappa~=%g, margin=%.6g, kappa=%g)\n",
                    cert.certified ? "CERTIFIED" : "NOT FOUND", cert.w1,
                    cert.w2, cert.kappa_tilde, cert.achieved_margin, kappa);
        if (!cert.certified) return 2;
    }
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& run_dir,
                 std::size_t paths, double dt, std::uint64_t seed, int threads,
                 double t0, const std::string& x0_arg,
                 const std::string& path_csv) {
    LoadedConfig cfg = load_config(config_path);
    RunDir run = load_run(run_dir, cfg);
    Vec x0 = x0_arg.empty()
                 ? Vec(0.5 * (cfg.problem.box_min + cfg.problem.box_max))
                 : parse_point(x0_arg, cfg.problem.dim_x);
    if (dt <= 0.0)
        dt = cfg.problem.T / std::max(1, cfg.n_time);
    Strategy strat = policy_strategy(run.result, run.grid, cfg.problem);

    McEstimate est = estimate_value(cfg.problem, cfg.levy, strat, t0, x0,
                                    paths, dt, seed, threads);
    double v0 = eval_field(run.grid, cfg.problem,
                           run.grid.times.empty() ? 0.0 : run.grid.times[0],
                           x0, run.result.levels.front());
    std::printf("paths          %zu\n", est.n_paths);
    std::printf("estimate J     %.17g\n", est.mean);
    std::printf("std error      %.17g\n", est.std_error);
    std::printf("solved v(t0,x0) %.17g\n", v0);
    std::printf("mean impulses  %.6g\n", est.mean_impulse_count);
    std::printf("aborted frac   %.6g\n", est.aborted_fraction);

    if (!path_csv.empty()) {
        std::ofstream out(path_csv);
        out << "path,time,";
        for (int a = 0; a < cfg.problem.dim_x; ++a) out << "x" << (a + 1) << ",";
        out << "event\n";
        for (std::size_t pi = 0; pi < std::min<std::size_t>(paths, 100); ++pi) {
            CounterRng rng(seed, pi);
            PathRecord rec =
                simulate_path(cfg.problem, cfg.levy, strat, t0, x0, dt, rng);
            for (std::size_t k = 0; k < rec.times.size(); ++k) {
                out << pi << ',' << rec.times[k] << ',';
                for (int a = 0; a < cfg.problem.dim_x; ++a)
                    out << rec.states[k][a] << ',';
                out << "step\n";
            }
            for (const auto& ev : rec.impulses) {
                out << pi << ',' << ev.t << ',';
                for (int a = 0; a < cfg.problem.dim_x; ++a)
                    out << ev.post[a] << ',';
                out << "impulse\n";
            }
        }
    }
    return 0;
}

int cmd_check_dpp(const std::string& config_path, const std::string& run_dir,
                  const std::string& stop_arg, std::size_t paths, double dt,
                  std::uint64_t seed, int threads, double t0,
                  const std::string& x0_arg, double allowance) {
    LoadedConfig cfg = load_config(config_path);
    RunDir run = load_run(run_dir, cfg);
    Vec x0 = x0_arg.empty()
                 ? Vec(0.5 * (cfg.problem.box_min + cfg.problem.box_max))
                 : parse_point(x0_arg, cfg.problem.dim_x);
    if (dt <= 0.0) dt = cfg.problem.T / std::max(1, cfg.n_time);
    StopRule rule = parse_stop_rule(stop_arg, x0);
    Strategy strat = policy_strategy(run.result, run.grid, cfg.problem);

    DppReport rep = check_dpp(cfg.problem, cfg.levy, run.result, run.grid,
                              strat, t0, x0, rule, paths, dt, seed, threads);
    // Floating-point floor so exact cases (SE = 0) still pass.
    double bound = 3.0 * rep.std_error + allowance +
                   1e-12 * std::max(1.0, std::abs(rep.v0));
    bool pass = std::abs(rep.residual) <= bound;
    std::printf("v(t0,x0)      %.17g\n", rep.v0);
    std::printf("DPP estimate  %.17g\n", rep.estimate);
    std::printf("residual      %.17g\n", rep.residual);
    std::printf("std error     %.17g\n", rep.std_error);
    std::printf("bound         %.17g (3*SE + allowance %.3g)\n", bound,
                allowance);
    std::printf("dpp check     %s\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 2;
}

int cmd_verify(const std::string& config_path, const std::string& run_dir,
               bool with_supersolution, double q, double kappa) {
    LoadedConfig cfg = load_config(config_path);
    RunDir run = load_run(run_dir, cfg);
    VerifyOptions vopts;
    vopts.with_supersolution = with_supersolution;
    vopts.q = q;
    vopts.kappa = kappa;
    VerifyReport rep = run_suite(run, cfg, vopts);
    std::fputs(rep.render().c_str(), stdout);
    return rep.all_passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HJB quasi-variational inequality solver and verification "
                 "suite for combined impulse / stochastic control"};
    app.require_subcommand(1);

    // solve
    std::string config_path, grid_arg, out_dir, certify, dump_quad_path;
    bool elliptic = false;
    double rho = 0.0, tol = 0.0;
    auto* solve_cmd = app.add_subcommand("solve", "solve a problem instance");
    solve_cmd->add_option("--config", config_path, "problem config file")
        ->required();
    solve_cmd->add_option("--grid", grid_arg,
                          "nodes per axis, plus time steps for finite horizon "
                          "(e.g. 201,200)");
    solve_cmd->add_option("--out", out_dir, "output run directory")->required();
    solve_cmd->add_flag("--elliptic", elliptic,
                        "solve the stationary (discounted) form");
    solve_cmd->add_option("--rho", rho, "discount rate for --elliptic");
    solve_cmd->add_option("--tol", tol, "solver tolerance override");
    solve_cmd->add_option("--certify-supersolution", certify,
                          "q=<exponent>,kappa=<margin>");
    solve_cmd->add_option("--dump-quad", dump_quad_path,
                          "write jump-quadrature diagnostics CSV");

    // simulate
    std::string sim_config, sim_run, sim_x0, sim_path_csv;
    std::size_t sim_paths = 10000;
    double sim_dt = 0.0, sim_t0 = 0.0;
    std::uint64_t sim_seed = 0;
    int sim_threads = 1;
    auto* sim_cmd =
        app.add_subcommand("simulate", "Monte Carlo policy evaluation");
    sim_cmd->add_option("--config", sim_config)->required();
    sim_cmd->add_option("--policy", sim_run, "run directory with the policy")
        ->required();
    sim_cmd->add_option("--paths", sim_paths);
    sim_cmd->add_option("--dt", sim_dt);
    sim_cmd->add_option("--seed", sim_seed);
    sim_cmd->add_option("--threads", sim_threads);
    sim_cmd->add_option("--t0", sim_t0);
    sim_cmd->add_option("--x0", sim_x0, "start point (comma list)");
    sim_cmd->add_option("--path-csv", sim_path_csv, "per-path CSV (first 100)");

    // check-dpp
    std::string dpp_config, dpp_run, dpp_stop, dpp_x0;
    std::size_t dpp_paths = 10000;
    double dpp_dt = 0.0, dpp_t0 = 0.0, dpp_allow = 0.0;
    std::uint64_t dpp_seed = 0;
    int dpp_threads = 1;
    auto* dpp_cmd = app.add_subcommand(
        "check-dpp", "dynamic-programming-principle cross-check");
    dpp_cmd->add_option("--config", dpp_config)->required();
    dpp_cmd->add_option("--policy", dpp_run)->required();
    dpp_cmd->add_option("--stop-rule", dpp_stop, "time:<t> or box:<halfwidth>")
        ->required();
    dpp_cmd->add_option("--paths", dpp_paths);
    dpp_cmd->add_option("--dt", dpp_dt);
    dpp_cmd->add_option("--seed", dpp_seed);
    dpp_cmd->add_option("--threads", dpp_threads);
    dpp_cmd->add_option("--t0", dpp_t0);
    dpp_cmd->add_option("--x0", dpp_x0);
    dpp_cmd->add_option("--allowance", dpp_allow,
                        "extra discretization allowance in the pass bound");

    // verify
    std::string ver_config, ver_run;
    bool ver_super = false;
    double ver_q = 0.0, ver_kappa = 1e-3;
    auto* ver_cmd =
        app.add_subcommand("verify", "property suite over a persisted run");
    ver_cmd->add_option("--config", ver_config)->required();
    ver_cmd->add_option("--run", ver_run)->required();
    ver_cmd->add_flag("--with-supersolution", ver_super);
    ver_cmd->add_option("--q", ver_q, "supersolution growth exponent");
    ver_cmd->add_option("--kappa", ver_kappa, "required certificate margin");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed())
            return cmd_solve(config_path, grid_arg, out_dir, elliptic, rho,
                             tol, certify, dump_quad_path);
        if (sim_cmd->parsed())
            return cmd_simulate(sim_config, sim_run, sim_paths, sim_dt,
                                sim_seed, sim_threads, sim_t0, sim_x0,
                                sim_path_csv);
        if (dpp_cmd->parsed())
            return cmd_check_dpp(dpp_config, dpp_run, dpp_stop, dpp_paths,
                                 dpp_dt, dpp_seed, dpp_threads, dpp_t0, dpp_x0,
                                 dpp_allow);
        if (ver_cmd->parsed())
            return cmd_verify(ver_config, ver_run, ver_super, ver_q,
                              ver_kappa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
