#pragma once

#include "qvi/grid.hpp"

namespace qvi {

// Best immediate impulse at one node: M u = max over the finite candidate
// list of u(t, Gamma(t,x,zeta)) + K(t,x,zeta). Ties break on the smallest
// candidate index.
struct InterventionResult {
    double value = 0.0;
    Vec argmax_zeta;
    Vec target;        // Gamma(t, x, zeta*)
    double cost = 0.0; // K(t, x, zeta*)
    LinComb row;       // affine functional giving u(t, target)
};

InterventionResult apply_M(const ValueField& u, double t, const Vec& x,
                           const Problem& problem, const Grid& grid);

struct MField {
    ValueField values;
    std::vector<InterventionResult> nodes;
};

MField apply_M_field(const ValueField& u, double t, const Problem& problem,
                     const Grid& grid);

// Terminal condition v = sup(g, Mg, M^2 g, ...) at t = T by sweeping to the
// fixed point u = max(u, Mu). With K <= -k0 < 0 and bounded g this needs at
// most ceil((max g - min g)/k0) + 1 sweeps.
struct TerminalResult {
    ValueField u;
    Policy policy;  // intervention where the sup is attained by an impulse
    int sweeps = 0;
};

TerminalResult iterate_M_terminal(const ValueField& g_field,
                                  const Problem& problem, const Grid& grid,
                                  int max_iter = 1000);

}  // namespace qvi
