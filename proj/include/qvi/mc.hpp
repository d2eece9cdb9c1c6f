#pragma once

#include "qvi/levy.hpp"
#include "qvi/solver.hpp"

namespace qvi {

struct ImpulseEvent {
    double t = 0.0;
    Vec pre;   // state before the impulse (after any jump), X-check_{tau-}
    Vec post;  // Gamma(t, pre, zeta)
    Vec zeta;
    double cost = 0.0;
};

// One simulated controlled trajectory.
struct PathRecord {
    std::vector<double> times;
    std::vector<Vec> states;  // post-impulse states at step boundaries
    std::vector<ImpulseEvent> impulses;

    double exit_time = 0.0;
    Vec exit_state;
    bool exited_S = false;    // stopped by leaving S before T

    double integral_f = 0.0;
    double terminal_g = 0.0;
    double total_K = 0.0;
    double payoff = 0.0;      // integral_f + terminal_g + total_K

    bool aborted = false;     // step-explosion guard tripped
    bool stopped_early = false;  // stop rule fired before tau
    double stop_time = 0.0;
    Vec stop_state;
};

struct StrategyDecision {
    bool impulse = false;
    Vec zeta;
    Vec beta;
};

using Strategy = std::function<StrategyDecision(double, const Vec&)>;

// Markov strategy read off a solved run: nearest time level, nearest node.
Strategy policy_strategy(const SolveResult& run, const Grid& grid,
                         const Problem& problem);

// Bounded stopping rule for the DPP check.
struct StopRule {
    enum class Kind { None, FixedTime, Box } kind = Kind::None;
    double time = 0.0;       // FixedTime
    double halfwidth = 0.0;  // Box: first exit of {|x - x0| < halfwidth}
    Vec center;
};

// Euler-Maruyama between impulses; impulse decisions at step boundaries;
// exit detection on the post-impulse state.
PathRecord simulate_path(const Problem& problem, const LevyModel& levy,
                         const Strategy& strategy, double t0, const Vec& x0,
                         double dt, CounterRng& rng,
                         const StopRule& stop = {});

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double aborted_fraction = 0.0;
    double mean_impulse_count = 0.0;
};

// Sample mean / standard error of the payoff over independent paths;
// deterministic for a given seed under any worker count (counter-based
// streams, pairwise-tree reduction).
McEstimate estimate_value(const Problem& problem, const LevyModel& levy,
                          const Strategy& strategy, double t0, const Vec& x0,
                          std::size_t n_paths, double dt, std::uint64_t seed,
                          int n_threads = 1);

struct DppReport {
    double v0 = 0.0;        // solved v(t0, x0)
    double estimate = 0.0;  // E[ int f + sum K + v(tau~, X_tau~) ]
    double std_error = 0.0;
    double residual = 0.0;  // estimate - v0
    double aborted_fraction = 0.0;
};

DppReport check_dpp(const Problem& problem, const LevyModel& levy,
                    const SolveResult& run, const Grid& grid,
                    const Strategy& strategy, double t0, const Vec& x0,
                    const StopRule& stop, std::size_t n_paths, double dt,
                    std::uint64_t seed, int n_threads = 1);

}  // namespace qvi
