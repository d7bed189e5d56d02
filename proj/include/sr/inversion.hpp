#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sr/dataset.hpp"

namespace sr {

enum class CiMethod { Sr, ApproxSr, Pc, Hc0, Hc1, Hc3, F };

const char* ci_method_name(CiMethod m);

struct ConfidenceInterval {
    CiMethod method = CiMethod::Sr;
    double alpha = 0.05;
    double level = 0.95;
    double lo = 0;  // -inf when unbounded below, NaN when empty
    double hi = 0;
    bool empty = false;
    bool trivial = false;            // all-singleton strata: (-inf, inf)
    bool convexified = false;        // acceptance region had holes
    bool boundary_saturated = false; // acceptance touches a grid end
    std::vector<double> grid;
    std::vector<char> accepted;      // per grid point
    std::vector<double> raw_region;  // accepted grid values
    std::uint64_t seed = 0;
};

struct CiOptions {
    CiMethod method = CiMethod::Sr;
    double alpha = 0.05;
    int n_prime = 499;
    std::uint64_t seed = 1;
    int threads = 1;
    std::optional<int> s_bins;  // ApproxSr only; data-driven when absent
};

// Inclusive uniform grid lo, lo+step, ..., hi.
std::vector<double> make_grid(double lo, double hi, double step);

// Confidence set for a scalar beta by test inversion. All grid points share
// one permutation set and one randomization uniform, so the accepted set is
// monotone in alpha and each accepted point is exactly what a standalone test
// with the same seed would accept. The interval endpoints extend half a grid
// step beyond the outermost accepted points; a region with holes is reported
// convexified with the flag set.
ConfidenceInterval invert_test(const Dataset& d, const std::vector<double>& grid,
                               const CiOptions& opt);

// Interval summary of an acceptance pattern (exposed for direct testing).
struct IntervalSummary {
    double lo = 0;
    double hi = 0;
    bool empty = false;
    bool convexified = false;
    bool boundary_saturated = false;
    std::vector<double> raw_region;
};

IntervalSummary summarize_acceptance(const std::vector<double>& grid,
                                     const std::vector<char>& accepted);

}  // namespace sr
