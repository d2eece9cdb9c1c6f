#pragma once

#include "qvi/problem.hpp"

#include <cstddef>
#include <span>

namespace qvi {

// Tensor-product spatial lattice inside the bounding box, with time levels
// for the parabolic problem and a per-node inside-S tag.
struct Grid {
    std::vector<std::vector<double>> axes;  // strictly increasing per axis
    std::vector<double> times;              // 0 = t_0 < ... < t_N = T; empty for elliptic
    std::vector<char> inside;               // 1 if node lies in S
    Vec box_min, box_max;

    std::size_t num_nodes() const;
    int dim() const { return static_cast<int>(axes.size()); }
    std::size_t num_levels() const { return times.empty() ? 1 : times.size(); }

    std::vector<std::size_t> strides() const;
    std::vector<int> multi_index(std::size_t node) const;
    std::size_t flat_index(std::span<const int> mi) const;
    Vec point(std::size_t node) const;
    // Per-axis spacing around a node (left, right); clamps at the edges.
    void spacing(const std::vector<int>& mi, int axis, double& hl, double& hr) const;
};

// Uniform grid over the problem's bounding box; n_per_axis >= 3 nodes per
// axis, n_time + 1 levels for parabolic problems (n_time ignored otherwise).
Grid make_grid(const Problem& problem, const std::vector<int>& n_per_axis,
               int n_time = 0);

// Grid function on one time level (or the elliptic field).
struct ValueField {
    std::vector<double> v;
    // Metadata recorded by the solver.
    int iterations = 0;
    double residual = 0.0;
    double pb_constant = 0.0;  // recorded C with |u(x)| <= C (1 + |x|^p)

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
};

enum class Region : int { Continuation = 0, Intervention = 1, Stopped = 2 };

// Per-node decision at one time level.
struct Policy {
    std::vector<Region> region;
    std::vector<int> beta_index;     // valid for continuation nodes
    std::vector<Vec> zeta;           // valid for intervention nodes
};

// Affine functional sum_j w_j u_j + c representing an off-lattice
// evaluation of a grid function.
struct LinComb {
    std::vector<std::pair<std::size_t, double>> terms;
    double constant = 0.0;

    double eval(const ValueField& u) const {
        double s = constant;
        for (const auto& [j, w] : terms) s += w * u[j];
        return s;
    }
};

// Monotone (positive-weight) multilinear interpolation at x; points beyond
// the bounding box use the far-field closure: g(t, x) when the clamped edge
// point lies outside S, and the PB_p growth extension otherwise.
LinComb interpolate(const Grid& grid, const Problem& problem, double t,
                    const Vec& x);

double eval_field(const Grid& grid, const Problem& problem, double t,
                  const Vec& x, const ValueField& u);

}  // namespace qvi
