#include "qvi/levy.hpp"

#include <algorithm>
#include <cmath>

namespace qvi {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

// Geometrically graded segment boundaries on [lo, hi] with a break at 1.
std::vector<double> graded_segments(double lo, double hi) {
    std::vector<double> b{lo};
    double z = lo;
    while (z < std::min(1.0, hi) * (1.0 - 1e-12)) {
        z = std::min(z * 2.0, std::min(1.0, hi));
        b.push_back(z);
    }
    while (z < hi * (1.0 - 1e-12)) {
        z = std::min(z * 2.0, hi);
        b.push_back(z);
    }
    return b;
}

// Quadrature pseudo-atoms of a 1-d density over {lo <= |z| <= hi}.
void density_nodes(const LevyModel& m, double lo, double hi,
                   std::vector<JumpAtom>& out) {
    if (!m.density || hi <= lo) return;
    std::vector<double> gx, gw;
    gauss_legendre(m.quad.nodes_per_segment, gx, gw);
    auto b = graded_segments(lo, hi);
    for (int sign : {1, -1}) {
        for (std::size_t s = 0; s + 1 < b.size(); ++s) {
            double a = b[s], c = b[s + 1];
            double mid = 0.5 * (a + c), half = 0.5 * (c - a);
            for (std::size_t q = 0; q < gx.size(); ++q) {
                double z = sign * (mid + half * gx[q]);
                double w = half * gw[q] * m.density(z);
                if (w > 0.0) out.push_back({vec1(z), w});
            }
        }
    }
}

double tail_moment(const LevyModel& m, double lo, double hi, double expo) {
    std::vector<JumpAtom> nodes;
    density_nodes(m, lo, hi, nodes);
    double s = 0.0;
    for (const auto& a : nodes) s += a.w * std::pow(a.z.norm(), expo);
    return s;
}

Vec jump_map(const Problem& p, double t, const Vec& x, const Vec& beta,
             const Vec& z) {
    if (!p.ell) return Vec::Zero(p.dim_x);
    return p.ell(t, x, beta, z);
}

}  // namespace

LevyModel prepare(LevyModel m) {
    if (m.kind == LevyKind::None) {
        m.prepared = true;
        return m;
    }
    if (!(m.delta > 0.0 && m.delta < 1.0))
        throw Error("levy: delta must lie in (0, 1)");
    if (m.density && m.dim_z != 1)
        throw Error("levy: density representation requires dim_z == 1");

    // Truncation radius: discarded tail mass of |z|^p* nu below 1e-10.
    double R = m.quad.radius;
    if (R <= 0.0) {
        R = 1.0;
        for (const auto& a : m.atoms) R = std::max(R, 2.0 * a.z.norm());
        if (m.density) {
            while (R < 1e9 && tail_moment(m, R, 2.0 * R, m.p_star) > 1e-10)
                R *= 2.0;
        }
    }
    m.radius = R;

    m.large_nodes.clear();
    m.small_nodes.clear();
    m.sim_nodes.clear();
    m.sim_small_nodes.clear();
    for (const auto& a : m.atoms) {
        (a.z.norm() >= m.delta ? m.large_nodes : m.small_nodes).push_back(a);
        (a.z.norm() >= m.eps_sim ? m.sim_nodes : m.sim_small_nodes).push_back(a);
    }
    if (m.density) {
        double floor_scheme = m.delta * 0x1.0p-45;
        double floor_sim = m.eps_sim * 0x1.0p-45;
        if (m.kind == LevyKind::FiniteActivity) {
            // Integrable at zero; a tiny fixed floor is below quadrature noise.
            floor_scheme = floor_sim = 1e-12;
        }
        density_nodes(m, m.delta, R, m.large_nodes);
        density_nodes(m, floor_scheme, m.delta, m.small_nodes);
        density_nodes(m, m.eps_sim, R, m.sim_nodes);
        density_nodes(m, floor_sim, m.eps_sim, m.sim_small_nodes);
    }

    m.mass_large = 0.0;
    for (const auto& a : m.large_nodes) m.mass_large += a.w;
    m.sq_mass = 0.0;
    for (const auto* tbl : {&m.small_nodes, &m.large_nodes})
        for (const auto& a : *tbl)
            m.sq_mass += a.w * std::min(a.z.squaredNorm(), 1.0);
    if (!std::isfinite(m.sq_mass) || m.sq_mass > 1e14)
        throw Error("levy: int (|z|^2 ^ 1) nu(dz) appears infinite");

    if (m.kind == LevyKind::FiniteActivity) {
        double total = m.mass_large;
        for (const auto& a : m.small_nodes) total += a.w;
        if (!std::isfinite(total) || total > 1e12)
            throw Error("levy: finite-activity measure has infinite mass");
    }
    m.prepared = true;
    return m;
}

double integral_small(double /*u_x*/, const Vec& grad, const Mat& hess,
                      double t, const Vec& x, const Vec& beta,
                      const Problem& problem, const LevyModel& levy) {
    if (levy.kind == LevyKind::None) return 0.0;
    if (!(levy.delta < 1.0)) throw Error("integral_small: delta >= 1");
    if (hess.rows() != problem.dim_x || hess.cols() != problem.dim_x)
        throw Error("integral_small: local Hessian unavailable");
    if (grad.size() != problem.dim_x)
        throw Error("integral_small: gradient unavailable");
    double s = 0.0;
    for (const auto& a : levy.small_nodes) {
        Vec l = jump_map(problem, t, x, beta, a.z);
        s += a.w * 0.5 * l.dot(hess * l);
    }
    return s;
}

double small_jump_taylor_bound(const Mat& hess, double t, const Vec& x,
                               const Vec& beta, const Problem& problem,
                               const LevyModel& levy) {
    double m2 = 0.0;
    for (const auto& a : levy.small_nodes) {
        Vec l = jump_map(problem, t, x, beta, a.z);
        m2 += a.w * l.squaredNorm();
    }
    return m2 * hess.norm();
}

double integral_large(const ValueField& u, const Grid& grid, const Vec& p,
                      double t, const Vec& x, const Vec& beta,
                      const Problem& problem, const LevyModel& levy) {
    if (levy.kind == LevyKind::None) return 0.0;
    if (levy.prepared && levy.radius > 0.0 && levy.radius < 1.0)
        throw Error("integral_large: truncation radius < 1 would cut the compensated zone");
    double u_x = eval_field(grid, problem, t, x, u);
    double s = 0.0;
    for (const auto& a : levy.large_nodes) {
        Vec l = jump_map(problem, t, x, beta, a.z);
        double comp = a.z.norm() < 1.0 ? p.dot(l) : 0.0;
        s += a.w * (eval_field(grid, problem, t, x + l, u) - u_x - comp);
    }
    return s;
}

Mat small_second_moment(double t, const Vec& x, const Vec& beta,
                        const Problem& problem, const LevyModel& levy) {
    Mat c = Mat::Zero(problem.dim_x, problem.dim_x);
    for (const auto& a : levy.small_nodes) {
        Vec l = jump_map(problem, t, x, beta, a.z);
        c += a.w * (l * l.transpose());
    }
    return c;
}

Vec compensator_drift(const std::vector<JumpAtom>& nodes, double t,
                      const Vec& x, const Vec& beta, const Problem& problem) {
    Vec c = Vec::Zero(problem.dim_x);
    for (const auto& a : nodes)
        if (a.z.norm() < 1.0) c += a.w * jump_map(problem, t, x, beta, a.z);
    return c;
}

Vec sample_increment(const LevyModel& levy, const Problem& problem, double t,
                     const Vec& x, const Vec& beta, double dt, CounterRng& rng) {
    if (!(dt > 0.0)) throw Error("sample_increment: dt > 0 required");
    Vec disp = Vec::Zero(problem.dim_x);
    if (levy.kind == LevyKind::None) return disp;
    if (!levy.prepared) throw Error("sample_increment: model not prepared");

    // Tables for exact simulation.
    const std::vector<JumpAtom>* exact = &levy.sim_nodes;
    std::vector<JumpAtom> all;
    if (levy.kind == LevyKind::FiniteActivity) {
        all = levy.sim_nodes;
        all.insert(all.end(), levy.sim_small_nodes.begin(),
                   levy.sim_small_nodes.end());
        exact = &all;
    }

    double lambda = 0.0;
    for (const auto& a : *exact) lambda += a.w;
    int njumps = rng.poisson(lambda * dt);
    for (int j = 0; j < njumps; ++j) {
        double u = rng.uniform() * lambda;
        double acc = 0.0;
        const JumpAtom* pick = &exact->back();
        for (const auto& a : *exact) {
            acc += a.w;
            if (u <= acc) {
                pick = &a;
                break;
            }
        }
        disp += jump_map(problem, t, x, beta, pick->z);
    }
    disp -= dt * compensator_drift(*exact, t, x, beta, problem);

    if (levy.kind == LevyKind::InfiniteActivity &&
        !levy.sim_small_nodes.empty()) {
        // Asmussen-Rosinski closure: compensated small jumps -> Gaussian
        // with matched covariance.
        Mat cov = Mat::Zero(problem.dim_x, problem.dim_x);
        for (const auto& a : levy.sim_small_nodes) {
            Vec l = jump_map(problem, t, x, beta, a.z);
            cov += a.w * (l * l.transpose());
        }
        Eigen::LLT<Mat> llt(dt * cov + 1e-30 * Mat::Identity(problem.dim_x, problem.dim_x));
        Vec gauss(problem.dim_x);
        for (int i = 0; i < problem.dim_x; ++i) gauss[i] = rng.normal();
        disp += llt.matrixL() * gauss;
    }
    return disp;
}

}  // namespace qvi
