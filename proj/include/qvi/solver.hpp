#pragma once

#include "qvi/generator.hpp"
#include "qvi/impulse.hpp"

namespace qvi {

struct SolveOptions {
    double tol = 1e-9;
    int max_outer = 500;           // policy iterations per level
    int max_terminal_sweeps = 1000;
};

struct LevelCertificate {
    double residual = 0.0;          // max |min(...)| over all nodes
    double min_u_minus_Mu = 0.0;    // min over nodes of u - Mu
    int iterations = 0;
};

struct SolveResult {
    std::vector<ValueField> levels;  // per time level (elliptic: one field)
    std::vector<Policy> policies;
    std::vector<LevelCertificate> certificates;
    double pb_constant = 0.0;

    const ValueField& field(std::size_t level = 0) const { return levels.at(level); }
};

// One implicit backward Euler step of the parabolic min-system from
// t_next to t, by policy iteration with lagged obstacle and lagged
// explicit nonlocal part.
std::pair<ValueField, Policy> step_parabolic(const ValueField& u_next,
                                             double t, double t_next,
                                             const Problem& problem,
                                             const LevyModel& levy,
                                             const Grid& grid,
                                             const SolveOptions& opts,
                                             LevelCertificate* cert = nullptr);

// Full backward sweep; terminal data is sup(g, Mg, M^2 g, ...) unless an
// explicit terminal field is injected (used by the elliptic/parabolic
// transform consistency check).
SolveResult solve_parabolic(const Problem& problem, const LevyModel& levy,
                            const Grid& grid, const SolveOptions& opts = {},
                            const ValueField* terminal_override = nullptr);

// Stationary min-system by Howard iteration.
SolveResult solve_elliptic(const Problem& problem, const LevyModel& levy,
                           const Grid& grid, const SolveOptions& opts = {});

SolveResult solve(const Problem& problem, const LevyModel& levy,
                  const Grid& grid, const SolveOptions& opts = {});

// Discrete min-system residual of an arbitrary field (elliptic form):
// min(-sup_b {L u + f}, u - Mu) inside S, min(u - g, u - Mu) outside.
std::vector<double> min_system_residual(const ValueField& u,
                                        const Problem& problem,
                                        const LevyModel& levy,
                                        const Grid& grid, double t = 0.0);

// Same residual for one parabolic level, including the backward-Euler time
// term (u_next - u)/dt; u_next = nullptr reduces to the elliptic form.
std::vector<double> level_residual(const ValueField& u, const ValueField* u_next,
                                   double dt, double t, const Problem& problem,
                                   const LevyModel& levy, const Grid& grid);

// Searches w(x) = w1 |x|^q + w2 (parabolic: e^{-kt} (w1 |x|^q + w2)) over a
// logarithmic ladder until the discrete strict-supersolution certificate
// min(...) >= kappa holds at every node.
struct SupersolutionCertificate {
    bool certified = false;
    double w1 = 0.0, w2 = 0.0, q = 2.0;
    double kappa_tilde = 0.0;   // parabolic decay rate
    double kappa = 0.0;         // requested margin
    double achieved_margin = 0.0;
    ValueField w;               // spatial factor w1 |x|^q + w2 on the grid
    std::vector<double> margins;
};

SupersolutionCertificate build_strict_supersolution(const Problem& problem,
                                                    const LevyModel& levy,
                                                    const Grid& grid, double q,
                                                    double kappa);

}  // namespace qvi
