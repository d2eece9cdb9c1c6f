#pragma once

#include "qvi/grid.hpp"
#include "qvi/rng.hpp"

#include <functional>

namespace qvi {

enum class LevyKind { None, FiniteActivity, InfiniteActivity };

struct QuadSpec {
    int nodes_per_segment = 16;  // Gauss-Legendre nodes per smooth segment
    double radius = 0.0;         // large-jump truncation; 0 = choose from tail mass
};

struct JumpAtom {
    Vec z;
    double w;  // nu mass (atoms) or density * quadrature weight
};

// Representation of the jump measure nu with the small/large split at
// |z| = delta. Atoms are summed exactly; a 1-d density is integrated by
// composite Gauss-Legendre on geometrically graded segments.
struct LevyModel {
    LevyKind kind = LevyKind::None;
    int dim_z = 1;
    std::vector<JumpAtom> atoms;
    std::function<double(double)> density;  // Levy density on z != 0 (dim_z == 1)
    double delta = 1e-2;                    // small-jump cutoff, in (0, 1)
    double p_star = 2.0;                    // largest moment exponent at infinity
    double q_star = 2.0;                    // smallest moment exponent at zero
    QuadSpec quad;
    double eps_sim = 1e-3;                  // simulation cutoff (Gaussian closure)

    // Prepared tables (see prepare()).
    bool prepared = false;
    std::vector<JumpAtom> large_nodes;      // |z| >= delta
    std::vector<JumpAtom> small_nodes;      // |z| < delta
    std::vector<JumpAtom> sim_nodes;        // |z| >= eps_sim
    std::vector<JumpAtom> sim_small_nodes;  // |z| < eps_sim
    double radius = 0.0;
    double mass_large = 0.0;                // sum of large-node weights
    double sq_mass = 0.0;                   // int (|z|^2 ^ 1) nu(dz)
};

// Builds the quadrature tables; validates the Levy property
// int (|z|^2 ^ 1) nu(dz) < infinity numerically.
LevyModel prepare(LevyModel model);

// I^{1,delta}: int_{|z|<delta} [u(x+l) - u(x) - <grad, l>] nu(dz), evaluated
// on the local quadratic model (value, gradient, Hessian) of u at x.
double integral_small(double u_x, const Vec& grad, const Mat& hess, double t,
                      const Vec& x, const Vec& beta, const Problem& problem,
                      const LevyModel& levy);

// Taylor bound int_{|z|<delta} |l|^2 nu(dz) * |hess| on |I^{1,delta}|.
double small_jump_taylor_bound(const Mat& hess, double t, const Vec& x,
                               const Vec& beta, const Problem& problem,
                               const LevyModel& levy);

// I^{2,delta}: int_{|z|>=delta} [u(x+l) - u(x) - <p, l> 1_{|z|<1}] nu(dz).
// Off-lattice points are interpolated monotonically; beyond the box the
// far-field closure applies.
double integral_large(const ValueField& u, const Grid& grid, const Vec& p,
                      double t, const Vec& x, const Vec& beta,
                      const Problem& problem, const LevyModel& levy);

// Second moment tensor int_{|z|<delta} l l^T nu(dz) of the small-jump zone
// (the scheme folds 1/2 of it into the diffusion term).
Mat small_second_moment(double t, const Vec& x, const Vec& beta,
                        const Problem& problem, const LevyModel& levy);

// Compensator drift int_{|z|<1} l nu(dz) over the given node table.
Vec compensator_drift(const std::vector<JumpAtom>& nodes, double t,
                      const Vec& x, const Vec& beta, const Problem& problem);

// One-step jump displacement of the compensated Poisson integral over dt.
// Finite activity: exact compound-Poisson sampling minus compensator.
// Infinite activity: jumps |z| >= eps_sim exact, smaller ones replaced by a
// Gaussian with matched covariance.
Vec sample_increment(const LevyModel& levy, const Problem& problem, double t,
                     const Vec& x, const Vec& beta, double dt, CounterRng& rng);

}  // namespace qvi
