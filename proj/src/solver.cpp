#include "qvi/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qvi {

namespace {

// Precomputed level operators: coefficient rows do not depend on the
// iterate, only on (t, beta).
struct LevelOperators {
    std::vector<std::vector<OpRow>> rows;       // [beta][node]
    std::vector<std::vector<LinComb>> nonlocal; // [beta][node]
    std::vector<std::vector<double>> f;         // [beta][node]
    std::vector<double> g;                      // [node]
};

LevelOperators build_operators(double t, const Problem& problem,
                               const LevyModel& levy, const Grid& grid) {
    std::size_t n = grid.num_nodes();
    std::size_t nb = problem.B.size();
    LevelOperators ops;
    ops.rows.resize(nb);
    ops.nonlocal.resize(nb);
    ops.f.resize(nb);
    ops.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) ops.g[i] = problem.g(t, grid.point(i));
    for (std::size_t b = 0; b < nb; ++b) {
        ops.rows[b].resize(n);
        ops.nonlocal[b].resize(n);
        ops.f[b].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            ops.rows[b][i] = assemble_local_row(i, t, problem.B[b], problem, levy, grid);
            ops.nonlocal[b][i] = nonlocal_row(i, t, problem.B[b], problem, levy, grid);
            ops.f[b][i] = problem.f(t, grid.point(i), problem.B[b]);
        }
    }
    return ops;
}

double apply_row(const OpRow& row, const ValueField& u, std::size_t i) {
    double s = row.diag * u[i] + row.rhs;
    for (const auto& [j, w] : row.off) s += w * u[j];
    return s;
}

// Residual of the discrete min-system for the field u. inv_dt > 0 adds the
// backward Euler time term (u_next - u)/dt to the PDE part.
struct ResidualReport {
    std::vector<double> residual;  // nodewise min(...)
    double max_abs = 0.0;
    double min_u_minus_Mu = 0.0;
};

ResidualReport residual_report(const ValueField& u, const ValueField* u_next,
                               double inv_dt, double t, const Problem& problem,
                               const Grid& grid, const LevelOperators& ops) {
    std::size_t n = grid.num_nodes();
    MField m = apply_M_field(u, t, problem, grid);
    ResidualReport rep;
    rep.residual.resize(n);
    rep.min_u_minus_Mu = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double obst = u[i] - m.values[i];
        rep.min_u_minus_Mu = std::min(rep.min_u_minus_Mu, obst);
        double r;
        if (grid.inside[i]) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < ops.rows.size(); ++b) {
                double lb = apply_row(ops.rows[b][i], u, i) +
                            ops.nonlocal[b][i].eval(u) + ops.f[b][i];
                best = std::max(best, lb);
            }
            if (u_next) best += (( *u_next)[i] - u[i]) * inv_dt;
            r = std::min(-best, obst);
        } else {
            r = std::min(u[i] - ops.g[i], obst);
        }
        rep.residual[i] = r;
        rep.max_abs = std::max(rep.max_abs, std::abs(r));
    }
    return rep;
}

// Policy iteration for one level of the min-system (elliptic: inv_dt = 0,
// u_next = nullptr). The obstacle and the explicit nonlocal part lag one
// inner iteration; at the fixed point the system is satisfied exactly.
std::pair<ValueField, Policy> solve_level(ValueField u, const ValueField* u_next,
                                          double inv_dt, double t,
                                          const Problem& problem,
                                          const LevyModel& levy,
                                          const Grid& grid,
                                          const SolveOptions& opts,
                                          LevelCertificate* cert) {
    std::size_t n = grid.num_nodes();
    std::size_t nb = problem.B.size();
    if (nb == 0) throw Error("solve: B is empty");
    LevelOperators ops = build_operators(t, problem, levy, grid);

    Policy pol;
    pol.region.assign(n, Region::Continuation);
    pol.beta_index.assign(n, 0);
    pol.zeta.assign(n, Vec());

    std::vector<double> history;
    double prev_norm = std::numeric_limits<double>::infinity();
    int grow_streak = 0;

    for (int it = 1; it <= opts.max_outer; ++it) {
        MField m = apply_M_field(u, t, problem, grid);

        // Row selection from the current iterate.
        for (std::size_t i = 0; i < n; ++i) {
            double obst = u[i] - m.values[i];
            if (grid.inside[i]) {
                int bstar = 0;
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t b = 0; b < nb; ++b) {
                    double lb = apply_row(ops.rows[b][i], u, i) +
                                ops.nonlocal[b][i].eval(u) + ops.f[b][i];
                    if (lb > best) { best = lb; bstar = static_cast<int>(b); }
                }
                if (u_next) best += ((*u_next)[i] - u[i]) * inv_dt;
                // Tie between continuation and intervention -> intervention.
                if (obst <= -best) {
                    pol.region[i] = Region::Intervention;
                    pol.zeta[i] = m.nodes[i].argmax_zeta;
                } else {
                    pol.region[i] = Region::Continuation;
                    pol.beta_index[i] = bstar;
                }
            } else {
                if (ops.g[i] >= m.values[i]) {
                    pol.region[i] = Region::Stopped;
                } else {
                    pol.region[i] = Region::Intervention;
                    pol.zeta[i] = m.nodes[i].argmax_zeta;
                }
            }
        }

        // Assemble and solve the linear system for the selected rows.
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            switch (pol.region[i]) {
                case Region::Continuation: {
                    const OpRow& row = ops.rows[pol.beta_index[i]][i];
                    trips.emplace_back(i, i, inv_dt - row.diag);
                    for (const auto& [j, w] : row.off)
                        trips.emplace_back(i, j, -w);
                    double b = ops.f[pol.beta_index[i]][i] + row.rhs +
                               ops.nonlocal[pol.beta_index[i]][i].eval(u);
                    if (u_next) b += (*u_next)[i] * inv_dt;
                    rhs[i] = b;
                    break;
                }
                case Region::Intervention: {
                    const LinComb& lc = m.nodes[i].row;
                    double diag = 1.0, extra = 0.0;
                    for (const auto& [j, w] : lc.terms) {
                        if (j == i) {
                            // Self-referencing impulse; lag it to keep the
                            // row nonsingular.
                            if (1.0 - w < 1e-10)
                                extra += w * u[i];
                            else
                                diag -= w;
                        } else {
                            trips.emplace_back(i, j, -w);
                        }
                    }
                    trips.emplace_back(i, i, diag);
                    rhs[i] = m.nodes[i].cost + lc.constant + extra;
                    break;
                }
                case Region::Stopped:
                    trips.emplace_back(i, i, 1.0);
                    rhs[i] = ops.g[i];
                    break;
            }
        }
        Eigen::SparseMatrix<double> A(n, n);
        A.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
        if (lu.info() != Eigen::Success)
            throw Error("solve: singular policy-iteration system");
        Eigen::VectorXd x = lu.solve(rhs);

        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diff = std::max(diff, std::abs(x[i] - u[i]));
            u[i] = x[i];
        }

        ResidualReport rep = residual_report(u, u_next, inv_dt, t, problem, grid, ops);
        history.push_back(rep.max_abs);
        if (rep.max_abs <= opts.tol) {
            u.iterations = it;
            u.residual = rep.max_abs;
            if (cert) {
                cert->residual = rep.max_abs;
                cert->min_u_minus_Mu = rep.min_u_minus_Mu;
                cert->iterations = it;
            }
            return {std::move(u), std::move(pol)};
        }

        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm = std::max(norm, std::abs(u[i]));
        grow_streak = norm > 2.0 * prev_norm + 1.0 ? grow_streak + 1 : 0;
        prev_norm = norm;
        if (grow_streak >= 5 || !std::isfinite(norm)) {
            if (problem.horizon == HorizonType::Elliptic)
                throw Error("solve_elliptic: iteration diverging; rho appears to "
                            "lie below the empirical kappa~ of condition (L1) -- "
                            "try a larger rho");
            throw Error("step_parabolic: iteration diverging");
        }
    }

    std::ostringstream os;
    os << "policy iteration did not converge within " << opts.max_outer
       << " iterations; residual history (last 10):";
    for (std::size_t i = history.size() >= 10 ? history.size() - 10 : 0;
         i < history.size(); ++i)
        os << " " << history[i];
    os << " (non-convergence on a monotone scheme signals a non-monotone "
          "configuration)";
    throw Error(os.str());
}

double pb_constant_of(const ValueField& u, const Grid& grid, double p) {
    double c = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        c = std::max(c, std::abs(u[i]) /
                            (1.0 + std::pow(grid.point(i).norm(), p)));
    return c;
}

}  // namespace

std::pair<ValueField, Policy> step_parabolic(const ValueField& u_next,
                                             double t, double t_next,
                                             const Problem& problem,
                                             const LevyModel& levy,
                                             const Grid& grid,
                                             const SolveOptions& opts,
                                             LevelCertificate* cert) {
    double dt = t_next - t;
    if (!(dt > 0.0)) throw Error("step_parabolic: t_next must exceed t");
    return solve_level(u_next, &u_next, 1.0 / dt, t, problem, levy, grid,
                       opts, cert);
}

SolveResult solve_parabolic(const Problem& problem, const LevyModel& levy,
                            const Grid& grid, const SolveOptions& opts,
                            const ValueField* terminal_override) {
    if (problem.horizon != HorizonType::Parabolic)
        throw Error("solve_parabolic: problem is not parabolic");
    if (grid.times.size() < 2)
        throw Error("solve_parabolic: grid has no time levels");
    std::size_t n = grid.num_nodes();
    std::size_t nlev = grid.times.size();

    ValueField gT;
    gT.v.resize(n);
    if (terminal_override) {
        gT = *terminal_override;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            gT[i] = problem.g(problem.T, grid.point(i));
    }
    TerminalResult term = iterate_M_terminal(gT, problem, grid,
                                             opts.max_terminal_sweeps);

    SolveResult res;
    res.levels.resize(nlev);
    res.policies.resize(nlev);
    res.certificates.resize(nlev);
    res.levels[nlev - 1] = term.u;
    res.policies[nlev - 1] = term.policy;
    res.certificates[nlev - 1].iterations = term.sweeps;

    for (std::size_t lev = nlev - 1; lev-- > 0;) {
        try {
            auto [u, pol] = step_parabolic(res.levels[lev + 1], grid.times[lev],
                                           grid.times[lev + 1], problem, levy,
                                           grid, opts, &res.certificates[lev]);
            res.levels[lev] = std::move(u);
            res.policies[lev] = std::move(pol);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " [time level " +
                        std::to_string(lev) + "]");
        }
    }
    res.pb_constant = pb_constant_of(res.levels[0], grid, problem.growth_p);
    return res;
}

SolveResult solve_elliptic(const Problem& problem, const LevyModel& levy,
                           const Grid& grid, const SolveOptions& opts) {
    if (problem.horizon != HorizonType::Elliptic)
        throw Error("solve_elliptic: problem is not elliptic");
    if (!(problem.rho > 0.0)) throw Error("solve_elliptic: rho > 0 required");
    std::size_t n = grid.num_nodes();

    ValueField g0;
    g0.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) g0[i] = problem.g(0.0, grid.point(i));
    TerminalResult warm = iterate_M_terminal(g0, problem, grid,
                                             opts.max_terminal_sweeps);

    SolveResult res;
    res.levels.resize(1);
    res.policies.resize(1);
    res.certificates.resize(1);
    auto [u, pol] = solve_level(warm.u, nullptr, 0.0, 0.0, problem, levy, grid,
                                opts, &res.certificates[0]);
    res.levels[0] = std::move(u);
    res.policies[0] = std::move(pol);
    res.pb_constant = pb_constant_of(res.levels[0], grid, problem.growth_p);
    return res;
}

SolveResult solve(const Problem& problem, const LevyModel& levy,
                  const Grid& grid, const SolveOptions& opts) {
    return problem.horizon == HorizonType::Parabolic
               ? solve_parabolic(problem, levy, grid, opts)
               : solve_elliptic(problem, levy, grid, opts);
}

std::vector<double> min_system_residual(const ValueField& u,
                                        const Problem& problem,
                                        const LevyModel& levy,
                                        const Grid& grid, double t) {
    LevelOperators ops = build_operators(t, problem, levy, grid);
    return residual_report(u, nullptr, 0.0, t, problem, grid, ops).residual;
}

std::vector<double> level_residual(const ValueField& u, const ValueField* u_next,
                                   double dt, double t, const Problem& problem,
                                   const LevyModel& levy, const Grid& grid) {
    LevelOperators ops = build_operators(t, problem, levy, grid);
    double inv_dt = u_next ? 1.0 / dt : 0.0;
    return residual_report(u, u_next, inv_dt, t, problem, grid, ops).residual;
}

SupersolutionCertificate build_strict_supersolution(const Problem& problem,
                                                    const LevyModel& levy,
                                                    const Grid& grid, double q,
                                                    double kappa) {
    if (!(q > problem.growth_p))
        throw Error("build_strict_supersolution: q must exceed growth_p");
    if (!(kappa > 0.0))
        throw Error("build_strict_supersolution: kappa > 0 required");

    std::size_t n = grid.num_nodes();
    const bool parabolic = problem.horizon == HorizonType::Parabolic;

    SupersolutionCertificate best;
    best.q = q;
    best.kappa = kappa;
    best.achieved_margin = -std::numeric_limits<double>::infinity();

    const LevelOperators ops = build_operators(0.0, problem, levy, grid);

    // Backward-Euler time factor of the decaying scale e^{-k t}: the time
    // term of c_n phi at level n is c_n * expm1(-k dt)/dt * phi, so using it
    // makes the per-level certificate exact for the discrete scheme.
    const double dt_grid =
        grid.times.size() >= 2 ? grid.times[1] - grid.times[0] : 0.0;

    // Margin of the time-scaled field c * phi; the min-system pieces are
    // affine in c, so endpoint scales bound the whole time interval.
    auto margin_of = [&](const ValueField& phi, double kappa_tilde,
                         std::vector<double>* out) {
        double lo = 1.0;
        std::vector<double> scales{1.0};
        if (parabolic) {
            lo = std::exp(-kappa_tilde * problem.T);
            scales = {1.0, lo};
        }
        const double time_factor =
            parabolic && dt_grid > 0.0
                ? std::expm1(-kappa_tilde * dt_grid) / dt_grid
                : -kappa_tilde;
        double worst = std::numeric_limits<double>::infinity();
        if (out) out->assign(n, std::numeric_limits<double>::infinity());
        for (double c : scales) {
            ValueField w;
            w.v.resize(n);
            for (std::size_t i = 0; i < n; ++i) w[i] = c * phi[i];
            // Elliptic-form residual; the parabolic w_t = -kappa~ w enters
            // as an extra zeroth-order term.
            MField m = apply_M_field(w, 0.0, problem, grid);
            for (std::size_t i = 0; i < n; ++i) {
                double obst = w[i] - m.values[i];
                double r;
                if (grid.inside[i]) {
                    double bestb = -std::numeric_limits<double>::infinity();
                    for (std::size_t b = 0; b < ops.rows.size(); ++b) {
                        double lb = apply_row(ops.rows[b][i], w, i) +
                                    ops.nonlocal[b][i].eval(w) + ops.f[b][i];
                        if (parabolic) lb += time_factor * w[i];
                        bestb = std::max(bestb, lb);
                    }
                    r = std::min(-bestb, obst);
                } else {
                    r = std::min(w[i] - ops.g[i], obst);
                }
                if (out) (*out)[i] = std::min((*out)[i], r);
                worst = std::min(worst, r);
            }
        }
        return worst;
    };

    std::vector<double> kt_ladder{0.0};
    if (parabolic) {
        kt_ladder.clear();
        for (int c = 0; c <= 10; ++c) kt_ladder.push_back(std::pow(2.0, c));
    }

    for (double kt : kt_ladder) {
        for (int a = -3; a <= 4; ++a) {
            double w1 = std::pow(10.0, a);
            for (int bexp = -2; bexp <= 8; ++bexp) {
                double w2 = std::pow(10.0, bexp);
                ValueField phi;
                phi.v.resize(n);
                for (std::size_t i = 0; i < n; ++i)
                    phi[i] = w1 * std::pow(grid.point(i).norm(), q) + w2;
                std::vector<double> margins;
                double worst = margin_of(phi, kt, &margins);
                if (worst > best.achieved_margin) {
                    best.achieved_margin = worst;
                    best.w1 = w1;
                    best.w2 = w2;
                    best.kappa_tilde = kt;
                    best.w = phi;
                    best.margins = std::move(margins);
                }
                if (worst >= kappa) {
                    best.certified = true;
                    return best;
                }
            }
        }
    }
    best.certified = false;
    return best;
}

}  // namespace qvi
