#include "qvi/impulse.hpp"

#include <cmath>
#include <sstream>

namespace qvi {

InterventionResult apply_M(const ValueField& u, double t, const Vec& x,
                           const Problem& problem, const Grid& grid) {
    auto candidates = problem.Z(t, x);
    if (candidates.empty()) {
        std::ostringstream os;
        os << "apply_M: empty transaction set at t=" << t << ", x=(";
        for (int i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
        os << ")";
        throw Error(os.str());
    }
    InterventionResult best;
    bool first = true;
    for (const auto& zeta : candidates) {
        Vec target = problem.Gamma(t, x, zeta);
        double cost = problem.K(t, x, zeta);
        LinComb row = interpolate(grid, problem, t, target);
        double val = row.eval(u) + cost;
        if (first || val > best.value) {
            best.value = val;
            best.argmax_zeta = zeta;
            best.target = std::move(target);
            best.cost = cost;
            best.row = std::move(row);
            first = false;
        }
    }
    return best;
}

MField apply_M_field(const ValueField& u, double t, const Problem& problem,
                     const Grid& grid) {
    MField out;
    std::size_t n = grid.num_nodes();
    out.values.v.resize(n);
    out.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            out.nodes[i] = apply_M(u, t, grid.point(i), problem, grid);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " [node " + std::to_string(i) + "]");
        }
        out.values[i] = out.nodes[i].value;
    }
    return out;
}

TerminalResult iterate_M_terminal(const ValueField& g_field,
                                  const Problem& problem, const Grid& grid,
                                  int max_iter) {
    double t = problem.horizon == HorizonType::Parabolic ? problem.T : 0.0;
    std::size_t n = grid.num_nodes();

    TerminalResult res;
    res.u = g_field;
    res.policy.region.assign(n, Region::Stopped);
    res.policy.beta_index.assign(n, 0);
    res.policy.zeta.assign(n, Vec());

    for (int sweep = 1; sweep <= max_iter; ++sweep) {
        MField m = apply_M_field(res.u, t, problem, grid);
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (m.values[i] > res.u[i] + 1e-14 * (1.0 + std::abs(res.u[i]))) {
                res.u[i] = m.values[i];
                res.policy.region[i] = Region::Intervention;
                res.policy.zeta[i] = m.nodes[i].argmax_zeta;
                changed = true;
            }
        }
        res.sweeps = sweep;
        if (!changed) return res;
    }

    // Report the residual (Mu - u)^+ on non-convergence.
    MField m = apply_M_field(res.u, t, problem, grid);
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        resid = std::max(resid, m.values[i] - res.u[i]);
    std::ostringstream os;
    os << "iterate_M_terminal: no fixed point within " << max_iter
       << " sweeps, residual max(Mu - u)^+ = " << resid;
    throw Error(os.str());
}

}  // namespace qvi
