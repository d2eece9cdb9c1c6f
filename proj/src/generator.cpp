#include "qvi/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qvi {

namespace {

// Accumulates w * u(node at mi + offset) into the row; neighbors beyond the
// box go through the far-field closure as ghost points.
struct RowBuilder {
    const Grid& grid;
    const Problem& problem;
    double t;
    std::size_t node;
    OpRow row;

    void add(const std::vector<int>& mi, const std::vector<int>& offset,
             double w) {
        if (w == 0.0) return;
        std::vector<int> nb = mi;
        bool inside = true;
        for (std::size_t a = 0; a < nb.size(); ++a) {
            nb[a] += offset[a];
            if (nb[a] < 0 || nb[a] >= static_cast<int>(grid.axes[a].size()))
                inside = false;
        }
        if (inside) {
            std::size_t j = grid.flat_index(nb);
            if (j == node)
                row.diag += w;
            else
                row.off.emplace_back(j, w);
            return;
        }
        // Ghost point at the extrapolated coordinate.
        Vec xg(grid.dim());
        for (int a = 0; a < grid.dim(); ++a) {
            const auto& c = grid.axes[a];
            int n = static_cast<int>(c.size());
            int i = nb[a];
            if (i >= 0 && i < n) {
                xg[a] = c[i];
            } else if (i < 0) {
                xg[a] = c[0] + i * (c[1] - c[0]);
            } else {
                xg[a] = c[n - 1] + (i - (n - 1)) * (c[n - 1] - c[n - 2]);
            }
        }
        LinComb lc = interpolate(grid, problem, t, xg);
        for (const auto& [j, wj] : lc.terms) {
            if (j == node)
                row.diag += w * wj;
            else
                row.off.emplace_back(j, w * wj);
        }
        row.rhs += w * lc.constant;
    }
};

void check_monotone(const OpRow& row, std::size_t node) {
    for (const auto& [j, w] : row.off) {
        if (w < -1e-12) {
            std::ostringstream os;
            os << "monotone-scheme certificate violated at node " << node
               << ": off-diagonal weight " << w << " toward node " << j
               << " (cross-diffusion dominance broken; consider grid grading)";
            throw Error(os.str());
        }
    }
}

}  // namespace

OpRow assemble_local_row(std::size_t node, double t, const Vec& beta,
                         const Problem& problem, const LevyModel& levy,
                         const Grid& grid) {
    const int d = grid.dim();
    auto mi = grid.multi_index(node);
    Vec x = grid.point(node);

    RowBuilder b{grid, problem, t, node, {}};

    // Effective drift: mu minus the large-jump compensator drift.
    Vec drift = problem.mu(t, x, beta);
    if (levy.kind != LevyKind::None)
        drift -= compensator_drift(levy.large_nodes, t, x, beta, problem);

    // Effective diffusion: 1/2 sigma sigma^T plus half the small-jump
    // second moment (the I^{1,delta} Taylor fold).
    Mat s = problem.sigma(t, x, beta);
    Mat A = 0.5 * (s * s.transpose());
    if (levy.kind != LevyKind::None)
        A += 0.5 * small_second_moment(t, x, beta, problem, levy);

    std::vector<int> off(d, 0);
    for (int a = 0; a < d; ++a) {
        double hl, hr;
        grid.spacing(mi, a, hl, hr);

        // Upwind first difference.
        double v = drift[a];
        if (v >= 0.0) {
            off.assign(d, 0);
            off[a] = 1;
            b.add(mi, off, v / hr);
            off[a] = 0;
            b.add(mi, off, -v / hr);
        } else {
            off.assign(d, 0);
            off[a] = -1;
            b.add(mi, off, -v / hl);
            off[a] = 0;
            b.add(mi, off, v / hl);
        }

        // Central second difference, nonuniform-safe.
        double aii = A(a, a);
        if (aii != 0.0) {
            off.assign(d, 0);
            off[a] = -1;
            b.add(mi, off, aii * 2.0 / (hl * (hl + hr)));
            off[a] = 1;
            b.add(mi, off, aii * 2.0 / (hr * (hl + hr)));
            off[a] = 0;
            b.add(mi, off, -aii * 2.0 / (hl * hr));
        }
    }

    // Cross terms: positivity-preserving 7-point stencils.
    for (int a = 0; a < d; ++a) {
        for (int c = a + 1; c < d; ++c) {
            double cab = 2.0 * A(a, c);  // coefficient of d2u/dxa dxc
            if (cab == 0.0) continue;
            double hla, hra, hlc, hrc;
            grid.spacing(mi, a, hla, hra);
            grid.spacing(mi, c, hlc, hrc);
            double ha = 0.5 * (hla + hra), hc = 0.5 * (hlc + hrc);
            double w = std::abs(cab) / (2.0 * ha * hc);
            int sgn = cab > 0.0 ? 1 : -1;
            // Corners along (sgn, 1) and (-sgn, -1).
            off.assign(d, 0);
            off[a] = sgn;  off[c] = 1;  b.add(mi, off, w);
            off[a] = -sgn; off[c] = -1; b.add(mi, off, w);
            off[a] = 0;    off[c] = 0;  b.add(mi, off, 2.0 * w);
            // Axis neighbors get -w each.
            off[a] = 1;  off[c] = 0; b.add(mi, off, -w);
            off[a] = -1;            b.add(mi, off, -w);
            off[a] = 0;  off[c] = 1; b.add(mi, off, -w);
            off[c] = -1;            b.add(mi, off, -w);
            off[c] = 0;
        }
    }

    // -u(x) mass of the large-jump integral.
    if (levy.kind != LevyKind::None) b.row.diag -= levy.mass_large;

    // Elliptic zeroth-order term.
    if (problem.horizon == HorizonType::Elliptic) b.row.diag -= problem.rho;

    // Merge duplicate column entries before the certificate check.
    auto& o = b.row.off;
    std::sort(o.begin(), o.end());
    std::size_t k = 0;
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (k > 0 && o[k - 1].first == o[i].first)
            o[k - 1].second += o[i].second;
        else
            o[k++] = o[i];
    }
    o.resize(k);

    check_monotone(b.row, node);
    return b.row;
}

LinComb nonlocal_row(std::size_t node, double t, const Vec& beta,
                     const Problem& problem, const LevyModel& levy,
                     const Grid& grid) {
    LinComb lc;
    if (levy.kind == LevyKind::None) return lc;
    Vec x = grid.point(node);
    for (const auto& a : levy.large_nodes) {
        Vec l = problem.ell ? problem.ell(t, x, beta, a.z) : Vec::Zero(grid.dim());
        LinComb tgt = interpolate(grid, problem, t, x + l);
        for (const auto& [j, w] : tgt.terms) lc.terms.emplace_back(j, a.w * w);
        lc.constant += a.w * tgt.constant;
    }
    return lc;
}

std::vector<double> discretize_generator(const ValueField& u, double t,
                                         const Vec& beta,
                                         const Problem& problem,
                                         const LevyModel& levy,
                                         const Grid& grid) {
    std::size_t n = grid.num_nodes();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        OpRow row = assemble_local_row(i, t, beta, problem, levy, grid);
        double s = row.diag * u[i] + row.rhs;
        for (const auto& [j, w] : row.off) s += w * u[j];
        s += nonlocal_row(i, t, beta, problem, levy, grid).eval(u);
        s += problem.f(t, grid.point(i), beta);
        out[i] = s;
    }
    return out;
}

}  // namespace qvi
