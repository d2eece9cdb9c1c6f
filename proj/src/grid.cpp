#include "qvi/grid.hpp"

#include <cmath>

namespace qvi {

std::size_t Grid::num_nodes() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
}

std::vector<std::size_t> Grid::strides() const {
    // Row-major with axis order (x_1, ..., x_d).
    std::vector<std::size_t> s(axes.size());
    std::size_t acc = 1;
    for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
        s[a] = acc;
        acc *= axes[a].size();
    }
    return s;
}

std::vector<int> Grid::multi_index(std::size_t node) const {
    std::vector<int> mi(axes.size());
    auto s = strides();
    for (std::size_t a = 0; a < axes.size(); ++a) {
        mi[a] = static_cast<int>(node / s[a]);
        node %= s[a];
    }
    return mi;
}

std::size_t Grid::flat_index(std::span<const int> mi) const {
    auto s = strides();
    std::size_t idx = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) idx += mi[a] * s[a];
    return idx;
}

Vec Grid::point(std::size_t node) const {
    auto mi = multi_index(node);
    Vec x(dim());
    for (int a = 0; a < dim(); ++a) x[a] = axes[a][mi[a]];
    return x;
}

void Grid::spacing(const std::vector<int>& mi, int axis, double& hl,
                   double& hr) const {
    const auto& c = axes[axis];
    int i = mi[axis];
    int n = static_cast<int>(c.size());
    hl = i > 0 ? c[i] - c[i - 1] : c[1] - c[0];
    hr = i < n - 1 ? c[i + 1] - c[i] : c[n - 1] - c[n - 2];
}

Grid make_grid(const Problem& problem, const std::vector<int>& n_per_axis,
               int n_time) {
    if (static_cast<int>(n_per_axis.size()) != problem.dim_x)
        throw Error("make_grid: axis count does not match dim_x");
    Grid grid;
    grid.box_min = problem.box_min;
    grid.box_max = problem.box_max;
    grid.axes.resize(problem.dim_x);
    for (int a = 0; a < problem.dim_x; ++a) {
        int n = n_per_axis[a];
        if (n < 3) throw Error("make_grid: at least 3 nodes per axis");
        double lo = problem.box_min[a], hi = problem.box_max[a];
        if (!(hi > lo)) throw Error("make_grid: degenerate bounding box");
        grid.axes[a].resize(n);
        for (int i = 0; i < n; ++i)
            grid.axes[a][i] = lo + (hi - lo) * i / (n - 1);
    }
    if (problem.horizon == HorizonType::Parabolic) {
        if (n_time < 1) throw Error("make_grid: parabolic grid needs n_time >= 1");
        grid.times.resize(n_time + 1);
        for (int i = 0; i <= n_time; ++i)
            grid.times[i] = problem.T * i / n_time;
    }
    grid.inside.resize(grid.num_nodes());
    for (std::size_t i = 0; i < grid.inside.size(); ++i)
        grid.inside[i] = problem.inside_S(grid.point(i)) ? 1 : 0;
    return grid;
}

LinComb interpolate(const Grid& grid, const Problem& problem, double t,
                    const Vec& x) {
    const int d = grid.dim();
    // Clamp to the box; remember whether we actually left it.
    Vec xc = x;
    bool outside = false;
    for (int a = 0; a < d; ++a) {
        if (xc[a] < grid.box_min[a]) { xc[a] = grid.box_min[a]; outside = true; }
        if (xc[a] > grid.box_max[a]) { xc[a] = grid.box_max[a]; outside = true; }
    }

    double scale = 1.0;
    if (outside) {
        if (!problem.inside_S(xc)) {
            // Outside-S semantics: the game is over out there, value = g.
            LinComb lc;
            lc.constant = problem.g(t, x);
            return lc;
        }
        // PB_p growth extension from the box edge.
        double p = problem.growth_p;
        if (p > 0.0)
            scale = (1.0 + std::pow(x.norm(), p)) /
                    (1.0 + std::pow(xc.norm(), p));
    }

    // Multilinear weights (all nonnegative).
    std::vector<int> lo(d);
    std::vector<double> frac(d);
    for (int a = 0; a < d; ++a) {
        const auto& c = grid.axes[a];
        int n = static_cast<int>(c.size());
        int i = 0;
        while (i < n - 2 && c[i + 1] <= xc[a]) ++i;
        lo[a] = i;
        double h = c[i + 1] - c[i];
        double f = (xc[a] - c[i]) / h;
        frac[a] = std::min(std::max(f, 0.0), 1.0);
    }

    LinComb lc;
    auto strides = grid.strides();
    int corners = 1 << d;
    std::vector<int> mi(d);
    for (int mask = 0; mask < corners; ++mask) {
        double w = scale;
        for (int a = 0; a < d; ++a) {
            bool hi = mask & (1 << a);
            w *= hi ? frac[a] : 1.0 - frac[a];
            mi[a] = lo[a] + (hi ? 1 : 0);
        }
        if (w != 0.0) lc.terms.emplace_back(grid.flat_index(mi), w);
    }
    return lc;
}

double eval_field(const Grid& grid, const Problem& problem, double t,
                  const Vec& x, const ValueField& u) {
    return interpolate(grid, problem, t, x).eval(u);
}

}  // namespace qvi
