#pragma once

#include <Eigen/Core>
#include <vector>

#include "sr/dataset.hpp"
#include "sr/sr_test.hpp"

namespace sr {

// Fitted single index z * gammahat from the long regression of y on [x z].
Eigen::VectorXd fitted_index(const Dataset& d);

// max_j |corr(x_j, fitted index)|; 0 when either side is constant.
double index_correlation(const Dataset& d);

// Bin count floor(n / min(sqrt(n), 1 + 2/|corr|)), at least 1. A vanishing
// correlation selects the sqrt(n) branch.
int data_driven_s(const Dataset& d);

struct IndexDiscretization {
    Eigen::VectorXd index;
    Eigen::VectorXd edges;          // s_bins + 1 equally spaced cut points
    std::vector<std::int32_t> bin;  // per row, in [0, s_bins)
    int s_bins = 0;
    bool degenerate = false;  // constant index collapsed to a single bin
};

// Equally spaced bins spanning [min index, max index]; the maximum lands in
// the last bin. A constant index degenerates to one bin and sets the flag.
IndexDiscretization discretize_index(const Eigen::VectorXd& index, int s_bins);

// SR test on strata built from the discretized fitted index; s_bins = 0
// selects the data-driven count. Result carries the discretization detail.
TestResult approx_sr_test(const Dataset& d, const Eigen::VectorXd& beta0, const SrOptions& opt,
                          int s_bins = 0);

}  // namespace sr
