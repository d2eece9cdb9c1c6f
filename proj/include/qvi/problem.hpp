#pragma once

#include "qvi/common.hpp"

#include <functional>
#include <optional>

namespace qvi {

enum class HorizonType { Parabolic, Elliptic };

// One combined impulse / stochastic control problem instance.
//
// All coefficient callbacks must be pure; a Problem is immutable after
// construction and safe to share across workers.
struct Problem {
    HorizonType horizon = HorizonType::Parabolic;
    double T = 1.0;    // parabolic horizon
    double rho = 0.0;  // elliptic discount rate

    int dim_x = 1;
    int dim_w = 1;
    int dim_z = 1;

    // Dynamics: (t, x, beta)
    std::function<Vec(double, const Vec&, const Vec&)> mu;
    std::function<Mat(double, const Vec&, const Vec&)> sigma;
    // Jump map: (t, x, beta, z)
    std::function<Vec(double, const Vec&, const Vec&, const Vec&)> ell;

    // Profits and costs.
    std::function<double(double, const Vec&, const Vec&)> f;  // (t, x, beta)
    std::function<double(double, const Vec&)> g;              // (t, x)
    std::function<double(double, const Vec&, const Vec&)> K;  // (t, x, zeta)
    std::function<Vec(double, const Vec&, const Vec&)> Gamma; // (t, x, zeta)

    // Transaction-set oracle: finite candidate list of impulses at (t, x).
    std::function<std::vector<Vec>(double, const Vec&)> Z;
    // Finite list of continuous-control values.
    std::vector<Vec> B;

    // Open domain S (predicate) plus bounding box for truncation.
    std::function<bool(const Vec&)> inside_S;
    Vec box_min, box_max;

    // Polynomial growth exponent of the PB_p class.
    double growth_p = 0.0;

    // Declared fixed-cost constant k0 > 0 (condition K <= -k0 < 0);
    // 0 means not declared.
    double fixed_cost_k0 = 0.0;

    double horizon_T() const { return horizon == HorizonType::Parabolic ? T : 0.0; }
};

struct ValidationItem {
    std::string name;
    enum class Status { Pass, Fail, Unverifiable } status = Status::Pass;
    std::string detail;
    std::optional<Vec> sample;  // offending sample point on failure
};

struct ValidationReport {
    std::vector<ValidationItem> items;
    double lipschitz_mu = 0.0;     // empirical constants over the box
    double lipschitz_sigma = 0.0;
    bool all_passed() const;
    std::string summary() const;
};

// Finite-sampling validation of the standing assumptions; deterministic
// given the seed (low-discrepancy cloud, `samples` points).
// Hard-errors on empty Z, empty B or a degenerate bounding box.
ValidationReport validate(const Problem& problem, unsigned seed = 0,
                          int samples = 4096);

// Strips an e^{-rho t} discount from time-dependent parabolic data and
// returns the corresponding elliptic problem. Rejects rho <= 0 and data
// that is not of the discounted time-independent form.
Problem to_elliptic(const Problem& problem, double rho);

// Inverse lift: elliptic problem -> parabolic problem on [0, T] with
// f~(t,x,b) = e^{-rho t} f(x,b), and likewise for g and K.
Problem lift_to_parabolic(const Problem& problem, double T);

}  // namespace qvi
