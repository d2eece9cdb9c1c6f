#include "toys.hpp"

#include <doctest.h>

#include <cmath>

using namespace qvi;

namespace {

Problem jump_problem() {
    Problem p = toys::base_1d();
    p.box_min = vec1(-4.0);
    p.box_max = vec1(4.0);
    p.ell = [](double, const Vec&, const Vec&, const Vec& z) { return z; };
    return p;
}

Grid wide_grid(const Problem& p, int n) { return make_grid(p, {n}, 2); }

}  // namespace

TEST_CASE("preparation validates the cutoff") {
    LevyModel m;
    m.kind = LevyKind::FiniteActivity;
    m.atoms.push_back({vec1(1.0), 1.0});
    m.delta = 1.0;
    CHECK_THROWS_AS(prepare(m), Error);
    m.delta = 0.0;
    CHECK_THROWS_AS(prepare(m), Error);
}

TEST_CASE("small-jump integral vanishes for affine data") {
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{0.5, 1.0}}, 0.6);
    Mat hess = Mat::Zero(1, 1);  // affine: zero curvature
    double v = integral_small(3.0, vec1(2.0), hess, 0.0, vec1(0.3), vec1(0.0),
                              p, m);
    CHECK(v == 0.0);
}

TEST_CASE("small-jump integral on a quadratic matches the atom sum") {
    // u(x) = x^2, atom at z = 0.5 inside the small zone (delta = 0.6):
    // (x+0.5)^2 - x^2 - 2x*0.5 = 0.25 for every x.
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{0.5, 1.0}}, 0.6);
    Mat hess(1, 1);
    hess(0, 0) = 2.0;
    for (double x : {-1.0, 0.0, 0.7}) {
        double v = integral_small(x * x, vec1(2.0 * x), hess, 0.0, vec1(x),
                                  vec1(0.0), p, m);
        CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("small-jump integral vanishes for constant data") {
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{0.5, 1.0}}, 0.6);
    Mat hess = Mat::Zero(1, 1);
    CHECK(integral_small(7.0, vec1(0.0), hess, 0.0, vec1(0.0), vec1(0.0), p,
                         m) == 0.0);
}

TEST_CASE("small-jump integral respects the Taylor bound") {
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{0.5, 2.0}, {0.2, 3.0}}, 0.6);
    Mat hess(1, 1);
    hess(0, 0) = 2.0;
    double v = integral_small(0.0, vec1(0.0), hess, 0.0, vec1(0.0), vec1(0.0),
                              p, m);
    double bound = small_jump_taylor_bound(hess, 0.0, vec1(0.0), vec1(0.0), p, m);
    CHECK(std::abs(v) <= bound + 1e-14);
}

TEST_CASE("large-jump integral: uncompensated atom on a quadratic") {
    // nu = 2 * delta_{1.5}, u = x^2, x = 0: 2 * (1.5^2 - 0) = 4.5.
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{1.5, 2.0}}, 0.5);
    Grid grid = wide_grid(p, 17);  // spacing 0.5: 1.5 is a node
    ValueField u = toys::field_of(grid, [](const Vec& x) { return x[0] * x[0]; });
    double v = integral_large(u, grid, vec1(0.0), 0.0, vec1(0.0), vec1(0.0), p, m);
    CHECK(v == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("large-jump integral vanishes for constant data") {
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{1.5, 2.0}}, 0.5);
    Grid grid = wide_grid(p, 17);
    ValueField u = toys::field_of(grid, [](const Vec&) { return 4.2; });
    double v = integral_large(u, grid, vec1(9.0), 0.0, vec1(0.0), vec1(0.0), p, m);
    CHECK(v == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("large-jump integral: compensator cancels affine data") {
    // u = x, atom z = 0.8 (compensated zone), p = 1: (x+0.8) - x - 0.8 = 0.
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{0.8, 1.0}}, 0.5);
    Grid grid = wide_grid(p, 21);  // spacing 0.4: 0.8 is a node
    ValueField u = toys::field_of(grid, [](const Vec& x) { return x[0]; });
    double v = integral_large(u, grid, vec1(1.0), 0.0, vec1(0.0), vec1(0.0), p, m);
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("split is consistent across the cutoff for finite activity") {
    // Globally quadratic u: small + large must equal the full atom integral
    // regardless of where delta falls.
    Problem p = jump_problem();
    Grid grid = wide_grid(p, 81);  // spacing 0.1: atoms land on nodes
    ValueField u = toys::field_of(grid, [](const Vec& x) { return x[0] * x[0]; });
    Mat hess(1, 1);
    hess(0, 0) = 2.0;
    double x0 = 0.0;
    auto total = [&](double delta) {
        LevyModel m = toys::atom_levy({{0.3, 1.0}, {0.9, 0.5}}, delta);
        return integral_small(0.0, vec1(0.0), hess, 0.0, vec1(x0), vec1(0.0),
                              p, m) +
               integral_large(u, grid, vec1(0.0), 0.0, vec1(x0), vec1(0.0), p,
                              m);
    };
    // Oracle: both atoms compensated, u quadratic -> sum w * z^2.
    double exact = 1.0 * 0.09 + 0.5 * 0.81;
    CHECK(total(0.2) == doctest::Approx(exact).epsilon(1e-12));
    CHECK(total(0.5) == doctest::Approx(exact).epsilon(1e-12));
    CHECK(total(0.95) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("large-jump integral is monotone and translation invariant") {
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{1.5, 2.0}, {0.8, 1.0}}, 0.5);
    Grid grid = wide_grid(p, 41);
    ValueField u1 = toys::field_of(grid, [](const Vec& x) { return x[0] * x[0]; });
    ValueField u2 = u1;
    std::size_t mid = grid.num_nodes() / 2;  // x = 0 node
    for (std::size_t i = 0; i < u2.size(); ++i)
        if (i != mid) u2[i] += 0.3;  // u2 >= u1, equal value at x = 0
    double x0 = 0.0;
    double i1 = integral_large(u1, grid, vec1(0.0), 0.0, vec1(x0), vec1(0.0), p, m);
    double i2 = integral_large(u2, grid, vec1(0.0), 0.0, vec1(x0), vec1(0.0), p, m);
    CHECK(i1 <= i2 + 1e-14);

    ValueField shifted = u1;
    for (auto& v : shifted.v) v += 11.0;
    double i3 = integral_large(shifted, grid, vec1(0.0), 0.0, vec1(x0),
                               vec1(0.0), p, m);
    // Constant shifts cancel in u(x+l) - u(x).
    CHECK(i3 == doctest::Approx(i1).epsilon(1e-12));
}

TEST_CASE("density quadrature matches a closed-form moment") {
    // nu(z) = lambda * N(m, s^2) density; int z^2 nu = lambda (m^2 + s^2).
    LevyModel m;
    m.kind = LevyKind::FiniteActivity;
    m.delta = 0.01;
    double lambda = 2.0, mean = 0.4, sd = 0.15;
    m.density = [lambda, mean, sd](double z) {
        double u = (z - mean) / sd;
        return lambda * std::exp(-0.5 * u * u) /
               (sd * std::sqrt(2.0 * M_PI));
    };
    m = prepare(std::move(m));
    double mass = 0.0, m2 = 0.0;
    for (const auto* tbl : {&m.small_nodes, &m.large_nodes})
        for (const auto& a : *tbl) {
            mass += a.w;
            m2 += a.w * a.z.squaredNorm();
        }
    CHECK(mass == doctest::Approx(lambda).epsilon(1e-8));
    CHECK(m2 == doctest::Approx(lambda * (mean * mean + sd * sd)).epsilon(1e-8));
}

TEST_CASE("no jumps means zero displacement") {
    Problem p = jump_problem();
    LevyModel m;
    m.kind = LevyKind::None;
    CounterRng rng(1, 0);
    Vec d = sample_increment(m, p, 0.0, vec1(0.0), vec1(0.0), 0.1, rng);
    CHECK(d.norm() == 0.0);
}

TEST_CASE("compound-Poisson displacement has the analytic mean") {
    // lambda = 2, atom z = 1 (|z| >= 1: uncompensated): mean over dt = 1 is 2.
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{1.0, 2.0}});
    int n = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        CounterRng rng(42, static_cast<std::uint64_t>(i));
        double d = sample_increment(m, p, 0.0, vec1(0.0), vec1(0.0), 1.0, rng)[0];
        sum += d;
        sumsq += d * d;
    }
    double mean = sum / n;
    double se = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean - 2.0) <= 3.0 * se);
}

TEST_CASE("compensated compound-Poisson displacement is centered") {
    // Atom z = 0.5 (compensated), lambda = 4: drift cancels the jump mean.
    Problem p = jump_problem();
    LevyModel m = toys::atom_levy({{0.5, 4.0}});
    int n = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        CounterRng rng(43, static_cast<std::uint64_t>(i));
        double d = sample_increment(m, p, 0.0, vec1(0.0), vec1(0.0), 1.0, rng)[0];
        sum += d;
        sumsq += d * d;
    }
    double mean = sum / n;
    double se = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("infinite-activity model prepares and simulates") {
    Problem p = jump_problem();
    LevyModel m;
    m.kind = LevyKind::InfiniteActivity;
    m.delta = 0.05;
    m.q_star = 1.0;
    m.density = [](double z) {
        double a = std::abs(z);
        return std::exp(-5.0 * a) / a;
    };
    m = prepare(std::move(m));
    CHECK(m.radius >= 1.0);
    CHECK(std::isfinite(m.sq_mass));
    CHECK(!m.small_nodes.empty());
    CHECK(!m.large_nodes.empty());
    CounterRng rng(7, 0);
    Vec d = sample_increment(m, p, 0.0, vec1(0.0), vec1(0.0), 0.01, rng);
    CHECK(std::isfinite(d[0]));
}
