#pragma once

#include "qvi/runio.hpp"

namespace qvi {

struct PropertyResult {
    std::string name;
    bool passed = false;
    double margin = 0.0;     // worst measured slack (>= 0 means pass)
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<PropertyResult> items;
    bool all_passed() const;
    std::string render() const;  // one line per property
};

struct VerifyOptions {
    bool with_supersolution = false;
    double q = 0.0;        // 0 = growth_p + 1 (supersolution exponent)
    double kappa = 1e-3;
    double resid_tol = 1e-8;
    std::uint64_t seed = 12345;
};

// Property suite over a persisted run: intervention-operator algebra on
// randomized fields, residual recheck of every level, value-dominates-
// intervention, boundary rows, adjacent-node modulus bound, an ordered-pair
// comparison on a coarsened grid, and (optionally) the strict-supersolution
// certificate with the perturbed-field residual check for m in {2, 10, 100}.
VerifyReport run_suite(const RunDir& run, const LoadedConfig& config,
                       const VerifyOptions& opts = {});

}  // namespace qvi
