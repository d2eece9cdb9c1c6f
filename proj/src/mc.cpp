#include "qvi/mc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace qvi {

namespace {

std::size_t nearest_node(const Grid& grid, const Vec& x) {
    std::vector<int> mi(grid.dim(), 0);
    for (int a = 0; a < grid.dim(); ++a) {
        const auto& c = grid.axes[a];
        auto it = std::lower_bound(c.begin(), c.end(), x[a]);
        int i = static_cast<int>(it - c.begin());
        if (i >= static_cast<int>(c.size())) i = static_cast<int>(c.size()) - 1;
        if (i > 0 && x[a] - c[i - 1] <= c[i] - x[a]) --i;
        mi[a] = i;
    }
    return grid.flat_index(mi);
}

std::size_t nearest_level(const Grid& grid, double t) {
    if (grid.times.empty()) return 0;
    auto it = std::lower_bound(grid.times.begin(), grid.times.end(), t);
    std::size_t i = static_cast<std::size_t>(it - grid.times.begin());
    if (i >= grid.times.size()) return grid.times.size() - 1;
    if (i > 0 && t - grid.times[i - 1] < grid.times[i] - t) --i;
    return i;
}

// Field value at (t, x) with linear interpolation between time levels.
double eval_run(const SolveResult& run, const Grid& grid,
                const Problem& problem, double t, const Vec& x) {
    if (grid.times.empty() || run.levels.size() == 1)
        return eval_field(grid, problem, t, x, run.levels.front());
    const auto& ts = grid.times;
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    if (hi == 0) return eval_field(grid, problem, ts[0], x, run.levels[0]);
    if (hi >= ts.size())
        return eval_field(grid, problem, ts.back(), x, run.levels.back());
    std::size_t lo = hi - 1;
    double s = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return (1.0 - s) * eval_field(grid, problem, ts[lo], x, run.levels[lo]) +
           s * eval_field(grid, problem, ts[hi], x, run.levels[hi]);
}

double pairwise_sum(const double* a, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

bool stop_hit(const StopRule& stop, double t, const Vec& x) {
    switch (stop.kind) {
        case StopRule::Kind::FixedTime:
            return t >= stop.time - 1e-12;
        case StopRule::Kind::Box:
            return (x - stop.center).cwiseAbs().maxCoeff() >= stop.halfwidth;
        default:
            return false;
    }
}

}  // namespace

Strategy policy_strategy(const SolveResult& run, const Grid& grid,
                         const Problem& problem) {
    std::vector<Vec> B = problem.B;
    if (B.empty()) throw Error("policy_strategy: empty control set B");
    return [&run, &grid, B](double t, const Vec& x) {
        std::size_t lvl = std::min(nearest_level(grid, t),
                                   run.policies.size() - 1);
        const Policy& pol = run.policies[lvl];
        std::size_t i = nearest_node(grid, x);
        StrategyDecision d;
        d.beta = B.front();
        switch (pol.region[i]) {
            case Region::Intervention:
                d.impulse = true;
                d.zeta = pol.zeta[i];
                break;
            case Region::Continuation: {
                int bi = pol.beta_index[i];
                if (bi >= 0 && bi < static_cast<int>(B.size()))
                    d.beta = B[static_cast<std::size_t>(bi)];
                break;
            }
            default:
                break;
        }
        return d;
    };
}

PathRecord simulate_path(const Problem& problem, const LevyModel& levy,
                         const Strategy& strategy, double t0, const Vec& x0,
                         double dt, CounterRng& rng, const StopRule& stop) {
    if (problem.horizon != HorizonType::Parabolic)
        throw Error("simulate_path requires a parabolic problem; lift the "
                    "stationary problem to a finite horizon first");
    if (dt <= 0.0) throw Error("simulate_path: dt must be positive");

    const double T = problem.T;
    const Vec mid = 0.5 * (problem.box_min + problem.box_max);
    const double diam = (problem.box_max - problem.box_min).norm();
    const double explode = 1e3 * diam;

    PathRecord rec;
    double t = t0;
    Vec x = x0;
    Vec beta = problem.B.at(0);

    while (true) {
        // Impulse decisions at the step boundary (post-jump state).
        int chain = 0;
        bool exited = false;
        while (true) {
            StrategyDecision d = strategy(t, x);
            if (!d.impulse) {
                if (d.beta.size() > 0) beta = d.beta;
                break;
            }
            if (++chain > 64) {
                rec.aborted = true;
                return rec;
            }
            ImpulseEvent ev;
            ev.t = t;
            ev.pre = x;
            ev.zeta = d.zeta;
            ev.cost = problem.K(t, x, d.zeta);
            x = problem.Gamma(t, x, d.zeta);
            ev.post = x;
            rec.total_K += ev.cost;
            rec.impulses.push_back(ev);
            if (!problem.inside_S(x)) {
                exited = true;
                break;
            }
        }
        rec.times.push_back(t);
        rec.states.push_back(x);

        if (exited || !problem.inside_S(x)) {
            rec.exited_S = true;
            rec.exit_time = t;
            rec.exit_state = x;
            rec.terminal_g = problem.g(t, x);
            break;
        }
        if (stop_hit(stop, t, x)) {
            rec.stopped_early = true;
            rec.stop_time = t;
            rec.stop_state = x;
            break;
        }
        if (t >= T - 1e-12) {
            rec.exit_time = T;
            rec.exit_state = x;
            rec.terminal_g = problem.g(T, x);
            break;
        }

        double h = std::min(dt, T - t);
        if (stop.kind == StopRule::Kind::FixedTime)
            h = std::min(h, stop.time - t);

        rec.integral_f += problem.f(t, x, beta) * h;

        Vec dw(problem.dim_w);
        for (int k = 0; k < problem.dim_w; ++k) dw[k] = rng.normal();
        Vec xn = x + problem.mu(t, x, beta) * h +
                 problem.sigma(t, x, beta) * (std::sqrt(h) * dw);
        if (levy.kind != LevyKind::None)
            xn += sample_increment(levy, problem, t, x, beta, h, rng);
        x = xn;
        t += h;

        if (!x.allFinite() || (x - mid).norm() > explode) {
            rec.aborted = true;
            return rec;
        }
    }

    rec.payoff = rec.integral_f + rec.total_K + rec.terminal_g;
    return rec;
}

namespace {

// Runs one estimator per path (counter-based stream = path index) across
// n_threads workers, then reduces with a pairwise tree so the result is
// independent of the schedule.
McEstimate run_estimator(
    std::size_t n_paths, std::uint64_t seed, int n_threads,
    const std::function<PathRecord(CounterRng&)>& walk,
    const std::function<double(const PathRecord&)>& value) {
    if (n_paths == 0) throw Error("monte-carlo estimate needs at least one path");
    std::vector<double> vals(n_paths, 0.0);
    std::vector<char> ok(n_paths, 0);
    std::vector<double> n_imp(n_paths, 0.0);

    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            CounterRng rng(seed, i);
            PathRecord rec = walk(rng);
            if (rec.aborted) continue;
            ok[i] = 1;
            vals[i] = value(rec);
            n_imp[i] = static_cast<double>(rec.impulses.size());
        }
    };

    int nt = std::max(1, n_threads);
    if (nt == 1) {
        worker(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (n_paths + nt - 1) / nt;
        for (int w = 0; w < nt; ++w) {
            std::size_t lo = w * chunk, hi = std::min(n_paths, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // Compact kept paths preserving path order.
    std::vector<double> kept;
    kept.reserve(n_paths);
    double imp_sum = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i)
        if (ok[i]) {
            kept.push_back(vals[i]);
            imp_sum += n_imp[i];
        }
    std::size_t n = kept.size();
    double frac = 1.0 - static_cast<double>(n) / static_cast<double>(n_paths);
    if (frac > 0.01) {
        std::ostringstream os;
        os << "monte-carlo aborted fraction " << frac
           << " exceeds 1% (paths exploded or impulse-chained); "
              "reduce dt or revisit the strategy";
        throw Error(os.str());
    }

    McEstimate est;
    est.n_paths = n;
    est.aborted_fraction = frac;
    est.mean = pairwise_sum(kept.data(), n) / static_cast<double>(n);
    est.mean_impulse_count = imp_sum / static_cast<double>(n);
    if (n > 1) {
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) {
            double d = kept[i] - est.mean;
            sq[i] = d * d;
        }
        double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
        est.std_error = std::sqrt(var / static_cast<double>(n));
    }
    return est;
}

}  // namespace

McEstimate estimate_value(const Problem& problem, const LevyModel& levy,
                          const Strategy& strategy, double t0, const Vec& x0,
                          std::size_t n_paths, double dt, std::uint64_t seed,
                          int n_threads) {
    return run_estimator(
        n_paths, seed, n_threads,
        [&](CounterRng& rng) {
            return simulate_path(problem, levy, strategy, t0, x0, dt, rng);
        },
        [](const PathRecord& rec) { return rec.payoff; });
}

DppReport check_dpp(const Problem& problem, const LevyModel& levy,
                    const SolveResult& run, const Grid& grid,
                    const Strategy& strategy, double t0, const Vec& x0,
                    const StopRule& stop, std::size_t n_paths, double dt,
                    std::uint64_t seed, int n_threads) {
    if (stop.kind == StopRule::Kind::None)
        throw Error("check_dpp needs a bounded stopping rule (fixed time or box)");
    McEstimate est = run_estimator(
        n_paths, seed, n_threads,
        [&](CounterRng& rng) {
            return simulate_path(problem, levy, strategy, t0, x0, dt, rng, stop);
        },
        [&](const PathRecord& rec) {
            double tail =
                rec.stopped_early
                    ? eval_run(run, grid, problem, rec.stop_time, rec.stop_state)
                    : rec.terminal_g;
            return rec.integral_f + rec.total_K + tail;
        });
    DppReport rep;
    rep.v0 = eval_run(run, grid, problem, t0, x0);
    rep.estimate = est.mean;
    rep.std_error = est.std_error;
    rep.residual = est.mean - rep.v0;
    rep.aborted_fraction = est.aborted_fraction;
    return rep;
}

}  // namespace qvi
