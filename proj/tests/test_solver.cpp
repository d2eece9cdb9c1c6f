#include "toys.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace qvi;

namespace {

LevyModel no_jumps() {
    LevyModel m;
    m.kind = LevyKind::None;
    return m;
}

}  // namespace

TEST_CASE("constant data yields a constant value function") {
    Problem p = toys::base_1d();
    p.growth_p = 0.0;  // bounded value: unit-weight far-field closure
    p.g = [](double, const Vec&) { return 5.0; };
    Grid grid = make_grid(p, {11}, 4);
    LevyModel m = no_jumps();
    SolveResult r = solve(p, m, grid);
    REQUIRE(r.levels.size() == 5);
    for (const auto& lev : r.levels)
        for (std::size_t i = 0; i < lev.size(); ++i)
            CHECK(lev[i] == doctest::Approx(5.0).epsilon(1e-12));
    for (std::size_t l = 0; l + 1 < r.certificates.size(); ++l) {
        CHECK(r.certificates[l].residual <= 1e-9);
        CHECK(r.certificates[l].min_u_minus_Mu ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("elliptic unit reward with unit discount gives v = 1") {
    Problem p = toys::base_1d();
    p.horizon = HorizonType::Elliptic;
    p.rho = 1.0;
    p.T = 0.0;
    p.growth_p = 0.0;
    p.f = [](double, const Vec&, const Vec&) { return 1.0; };
    p.g = [](double, const Vec&) { return 0.0; };
    Grid grid = make_grid(p, {41}, 0);
    LevyModel m = no_jumps();
    SolveResult r = solve(p, m, grid);
    for (std::size_t i = 0; i < grid.num_nodes(); ++i)
        CHECK(r.levels[0][i] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.certificates[0].residual <= 1e-9);
}

TEST_CASE("parabolic unit reward integrates to T - t") {
    Problem p = toys::base_1d();
    p.growth_p = 0.0;
    p.f = [](double, const Vec&, const Vec&) { return 1.0; };
    Grid grid = make_grid(p, {21}, 10);
    LevyModel m = no_jumps();
    SolveResult r = solve(p, m, grid);
    for (std::size_t l = 0; l < grid.times.size(); ++l) {
        double expect = p.T - grid.times[l];
        for (std::size_t i = 0; i < grid.num_nodes(); ++i)
            CHECK(r.levels[l][i] == doctest::Approx(expect).epsilon(1e-8));
    }
    // PB_0 constant: max |v| / (1 + |x|^0) = T / 2.
    CHECK(r.pb_constant == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("one implicit step matches exhaustive policy enumeration") {
    // 5 nodes, 2 drift controls, 2 impulse candidates, 1 backward step:
    // every of the 4^5 regime assignments is solved as a dense linear
    // system; the assignments whose solution satisfies the discrete
    // min-system are the oracle, and the policy-iteration answer must
    // coincide with it.
    Problem p = toys::base_1d();
    p.T = 0.5;
    p.mu = [](double, const Vec&, const Vec& beta) { return beta; };
    p.B = {vec1(-0.5), vec1(0.5)};
    p.f = [](double, const Vec& x, const Vec&) { return 0.3 * x[0]; };
    p.Z = [](double, const Vec&) {
        return std::vector<Vec>{vec1(0.0), vec1(0.75)};
    };
    p.K = [](double, const Vec&, const Vec&) { return -0.6; };
    p.fixed_cost_k0 = 0.6;
    Grid grid = make_grid(p, {5}, 1);
    LevyModel m = no_jumps();

    std::size_t n = grid.num_nodes();
    REQUIRE(n == 5);
    double dt = 0.5, inv_dt = 2.0;

    ValueField u_next;
    u_next.v.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        u_next[i] = -std::abs(grid.point(i)[0]);

    SolveOptions opts;
    auto [u_solver, pol] = step_parabolic(u_next, 0.0, 0.5, p, m, grid, opts);

    // Precompute per-node rows for each regime choice.
    struct Choice {
        bool impulse;
        int idx;  // beta index or zeta index
    };
    std::vector<Choice> choices{{false, 0}, {false, 1}, {true, 0}, {true, 1}};
    std::vector<std::vector<OpRow>> rows(2);
    for (int b = 0; b < 2; ++b) {
        rows[b].resize(n);
        for (std::size_t i = 0; i < n; ++i)
            rows[b][i] = assemble_local_row(i, 0.0, p.B[b], p, m, grid);
    }
    std::vector<std::vector<LinComb>> jump(2);
    std::vector<std::vector<double>> jump_cost(2);
    std::vector<Vec> zetas{vec1(0.0), vec1(0.75)};
    for (int z = 0; z < 2; ++z) {
        jump[z].resize(n);
        jump_cost[z].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec target = p.Gamma(0.0, grid.point(i), zetas[z]);
            jump[z][i] = interpolate(grid, p, 0.0, target);
            jump_cost[z][i] = p.K(0.0, grid.point(i), zetas[z]);
        }
    }

    int matches = 0;
    for (int code = 0; code < 1024; ++code) {
        int c = code;
        std::vector<Choice> assign(n);
        for (std::size_t i = 0; i < n; ++i, c /= 4) assign[i] = choices[c % 4];

        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!assign[i].impulse) {
                const OpRow& row = rows[assign[i].idx][i];
                A(i, i) = inv_dt - row.diag;
                for (const auto& [j, w] : row.off) A(i, j) -= w;
                b[i] = p.f(0.0, grid.point(i), p.B[assign[i].idx]) + row.rhs +
                       u_next[i] * inv_dt;
            } else {
                const LinComb& lc = jump[assign[i].idx][i];
                A(i, i) = 1.0;
                for (const auto& [j, w] : lc.terms) A(i, j) -= w;
                b[i] = jump_cost[assign[i].idx][i] + lc.constant;
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) continue;  // e.g. jump onto the own node
        Eigen::VectorXd x = lu.solve(b);

        ValueField u;
        u.v.resize(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = x[i];
        auto resid = level_residual(u, &u_next, dt, 0.0, p, m, grid);
        double rmax = 0.0;
        for (double r : resid) rmax = std::max(rmax, std::abs(r));
        if (rmax > 1e-8) continue;

        ++matches;
        for (std::size_t i = 0; i < n; ++i)
            CHECK(u[i] == doctest::Approx(u_solver[i]).epsilon(5e-8));
    }
    CHECK(matches >= 1);
}

TEST_CASE("strict supersolution certifies a fixed-cost diffusion") {
    Problem p = toys::base_1d();
    LevyModel m = no_jumps();
    Grid grid = make_grid(p, {21}, 10);
    SupersolutionCertificate cert =
        build_strict_supersolution(p, m, grid, 3.0, 1e-3);
    CHECK(cert.certified);
    CHECK(cert.achieved_margin >= 1e-3);
    CHECK(cert.w.size() == grid.num_nodes());
    for (double margin : cert.margins) CHECK(margin >= 1e-3);
    for (std::size_t i = 0; i < cert.w.size(); ++i) CHECK(cert.w[i] > 0.0);
}

TEST_CASE("vanishing discount defeats the supersolution ladder") {
    // With rho ~ 0 and f = 1 the stationary inequality rho w >= f cannot be
    // met by any ladder rung, so the certificate must come back negative.
    Problem p = toys::base_1d();
    p.horizon = HorizonType::Elliptic;
    p.rho = 1e-12;
    p.T = 0.0;
    p.f = [](double, const Vec&, const Vec&) { return 1.0; };
    LevyModel m = no_jumps();
    Grid grid = make_grid(p, {11}, 0);
    SupersolutionCertificate cert =
        build_strict_supersolution(p, m, grid, 3.0, 1e-3);
    CHECK_FALSE(cert.certified);
    CHECK(cert.achieved_margin < 1e-3);
}

TEST_CASE("supersolution rejects bad parameters") {
    Problem p = toys::base_1d();
    LevyModel m = no_jumps();
    Grid grid = make_grid(p, {11}, 2);
    CHECK_THROWS_AS(build_strict_supersolution(p, m, grid, 2.0, 1e-3), Error);
    CHECK_THROWS_AS(build_strict_supersolution(p, m, grid, 3.0, 0.0), Error);
}

TEST_CASE("horizon mismatches are rejected") {
    Problem p = toys::base_1d();
    LevyModel m = no_jumps();
    Grid grid = make_grid(p, {11}, 2);
    CHECK_THROWS_AS(solve_elliptic(p, m, grid), Error);
    Problem e = p;
    e.horizon = HorizonType::Elliptic;
    e.rho = 0.0;
    CHECK_THROWS_AS(solve_elliptic(e, m, grid), Error);
    CHECK_THROWS_AS(solve_parabolic(e, m, grid), Error);
}
