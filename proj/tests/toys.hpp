#pragma once

#include "qvi/levy.hpp"
#include "qvi/solver.hpp"

#include <cmath>

// Shared toy problem builders for the test suites.
namespace toys {

using namespace qvi;

// 1-d finite-horizon base instance: frozen dynamics (mu = 0, sigma = 1),
// no jumps, f = 0, g = 0, jump-to-zeta impulses with unit fixed cost,
// Z = {0}, B = {0}, S = the whole space, box [-2, 2].
inline Problem base_1d() {
    Problem p;
    p.horizon = HorizonType::Parabolic;
    p.T = 1.0;
    p.dim_x = p.dim_w = p.dim_z = 1;
    p.mu = [](double, const Vec&, const Vec&) { return vec1(0.0); };
    p.sigma = [](double, const Vec&, const Vec&) {
        return Mat::Identity(1, 1);
    };
    p.ell = nullptr;
    p.f = [](double, const Vec&, const Vec&) { return 0.0; };
    p.g = [](double, const Vec&) { return 0.0; };
    p.K = [](double, const Vec&, const Vec&) { return -1.0; };
    p.Gamma = [](double, const Vec&, const Vec& z) { return z; };
    p.Z = [](double, const Vec&) { return std::vector<Vec>{vec1(0.0)}; };
    p.B = {vec1(0.0)};
    p.inside_S = [](const Vec&) { return true; };
    p.box_min = vec1(-2.0);
    p.box_max = vec1(2.0);
    p.growth_p = 2.0;
    p.fixed_cost_k0 = 1.0;
    return p;
}

inline ValueField field_from(const Grid& grid, double (*fn)(double)) {
    ValueField u;
    u.v.resize(grid.num_nodes());
    for (std::size_t i = 0; i < grid.num_nodes(); ++i)
        u[i] = fn(grid.point(i)[0]);
    return u;
}

template <class F>
ValueField field_of(const Grid& grid, F fn) {
    ValueField u;
    u.v.resize(grid.num_nodes());
    for (std::size_t i = 0; i < grid.num_nodes(); ++i) u[i] = fn(grid.point(i));
    return u;
}

inline LevyModel atom_levy(std::vector<std::pair<double, double>> zw,
                           double delta = 0.01) {
    LevyModel m;
    m.kind = LevyKind::FiniteActivity;
    m.delta = delta;
    for (const auto& [z, w] : zw) m.atoms.push_back({vec1(z), w});
    return prepare(std::move(m));
}

}  // namespace toys
