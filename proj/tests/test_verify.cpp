#include "qvi/verify.hpp"

#include <doctest.h>

#include <filesystem>

using namespace qvi;

namespace {

const char* kParabolicToy = R"([problem]
T = 1.0
dim_x = 1
growth_p = 0
box_min = -2
box_max = 2

[mu]
kind = const
value = 0

[sigma]
kind = const
value = 1

[f]
kind = const
value = 1

[g]
kind = const
value = 0

[k]
kind = fixed
k0 = 1

[gamma]
kind = origin

[z]
kind = origin

[grid]
nodes = 17
n_time = 8
)";

const char* kEllipticToy = R"([problem]
rho = 1.0
dim_x = 1
growth_p = 2
box_min = -2
box_max = 2

[mu]
kind = const
value = 0

[sigma]
kind = const
value = 1

[f]
kind = const
value = 1

[g]
kind = const
value = 0

[k]
kind = fixed
k0 = 1

[gamma]
kind = origin

[z]
kind = origin

[grid]
nodes = 17
)";

RunDir make_run(const char* text, const char* tag, LoadedConfig& cfg_out) {
    cfg_out = load_config_text(text);
    Grid grid = make_grid(cfg_out.problem, cfg_out.grid_nodes, cfg_out.n_time);
    SolveResult r = solve(cfg_out.problem, cfg_out.levy, grid, cfg_out.options);
    auto dir = std::filesystem::temp_directory_path() /
               (std::string("qvi_verify_test_") + tag);
    std::filesystem::remove_all(dir);
    save_run(dir.string(), cfg_out, grid, r, 0.0);
    return load_run(dir.string(), cfg_out);
}

bool has_item(const VerifyReport& rep, const std::string& needle,
              bool* passed = nullptr) {
    for (const auto& it : rep.items)
        if (it.name.find(needle) != std::string::npos) {
            if (passed) *passed = it.passed;
            return true;
        }
    return false;
}

}  // namespace

TEST_CASE("property suite passes on a solved parabolic run") {
    LoadedConfig cfg;
    RunDir run = make_run(kParabolicToy, "parabolic", cfg);
    VerifyReport rep = run_suite(run, cfg);
    INFO(rep.render());
    CHECK(rep.all_passed());
    for (const char* name :
         {"M monotone", "M convex", "M anticonvex", "M translation invariant",
          "QVI residual certificate", "value dominates intervention",
          "M modulus bound", "discrete comparison"})
        CHECK(has_item(rep, name));
    CHECK_FALSE(has_item(rep, "supersolution"));

    std::string text = rep.render();
    CHECK(text.find("PASS") != std::string::npos);
    CHECK(text.find("FAIL") == std::string::npos);
    std::filesystem::remove_all(run.path);
}

TEST_CASE("supersolution path certifies the elliptic fixed-cost toy") {
    LoadedConfig cfg;
    RunDir run = make_run(kEllipticToy, "elliptic", cfg);
    VerifyOptions opts;
    opts.with_supersolution = true;
    VerifyReport rep = run_suite(run, cfg, opts);
    INFO(rep.render());
    CHECK(rep.all_passed());
    bool cert_ok = false;
    CHECK(has_item(rep, "strict supersolution certificate", &cert_ok));
    CHECK(cert_ok);
    bool perturbed_ok = false;
    CHECK(has_item(rep, "perturbed-field residual", &perturbed_ok));
    CHECK(perturbed_ok);
    std::filesystem::remove_all(run.path);
}

TEST_CASE("a corrupted field fails the residual recheck") {
    LoadedConfig cfg;
    RunDir run = make_run(kParabolicToy, "corrupt", cfg);
    run.result.levels[0][run.grid.num_nodes() / 2] += 0.5;
    VerifyReport rep = run_suite(run, cfg);
    CHECK_FALSE(rep.all_passed());
    bool resid_ok = true;
    CHECK(has_item(rep, "QVI residual certificate", &resid_ok));
    CHECK_FALSE(resid_ok);
    std::string text = rep.render();
    CHECK(text.find("FAIL") != std::string::npos);
    std::filesystem::remove_all(run.path);
}

TEST_CASE("verification is deterministic for a fixed seed") {
    LoadedConfig cfg;
    RunDir run = make_run(kParabolicToy, "seeded", cfg);
    VerifyOptions opts;
    opts.seed = 777;
    VerifyReport a = run_suite(run, cfg, opts);
    VerifyReport b = run_suite(run, cfg, opts);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        CHECK(a.items[i].name == b.items[i].name);
        CHECK(a.items[i].margin == b.items[i].margin);  // bitwise
    }
    std::filesystem::remove_all(run.path);
}
