#pragma once

#include "qvi/levy.hpp"

namespace qvi {

// One assembled row of the local (implicit) part of L^beta: diag * u_i +
// sum_j off_j * u_j + rhs. The monotone-scheme certificate requires every
// off-diagonal weight to be nonnegative; assembly throws otherwise.
struct OpRow {
    double diag = 0.0;
    std::vector<std::pair<std::size_t, double>> off;
    double rhs = 0.0;  // far-field ghost contributions
};

// Local part at one node: upwinded drift (including the large-jump
// compensator drift), central second differences with positivity-preserving
// cross-term stencils, the small-jump zone folded into the diffusion
// tensor, the -u(x) mass of the large-jump integral, and -rho u for
// elliptic problems.
OpRow assemble_local_row(std::size_t node, double t, const Vec& beta,
                         const Problem& problem, const LevyModel& levy,
                         const Grid& grid);

// Explicit complement of the nonlocal term: sum over large-jump nodes of
// w * u(x + ell), as an affine functional of the grid values.
LinComb nonlocal_row(std::size_t node, double t, const Vec& beta,
                     const Problem& problem, const LevyModel& levy,
                     const Grid& grid);

// Nodewise L^beta u + f^beta on one time level (elliptic: includes -rho u).
std::vector<double> discretize_generator(const ValueField& u, double t,
                                         const Vec& beta,
                                         const Problem& problem,
                                         const LevyModel& levy,
                                         const Grid& grid);

}  // namespace qvi
