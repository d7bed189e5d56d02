#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "sr/dataset.hpp"

namespace sr {

enum class HcFlavor { Hc0, Hc1, Hc3 };

struct ComparatorResult {
    std::string method;
    double statistic = 0;
    double critical = 0;
    double p_value = 1;
    double alpha = 0;
    bool rejected = false;       // p_value <= alpha
    int n_replicas = 0;          // permutation methods only
    bool enumerated = false;     // permutation methods only
    std::uint64_t seed = 0;      // permutation methods only
    bool generalized_inverse = false;
};

// Residual-permutation test (Freedman-Lane): regress y - x*beta0 on z, permute
// the residuals over all n rows (uniform draws with replacement; the full n!
// group when it is small enough), rebuild pseudo-outcomes and recompute the
// robust Wald form on the z-residualized x.
ComparatorResult pc_test(const Dataset& d, const Eigen::VectorXd& beta0, double alpha,
                         int n_draws, std::uint64_t seed, int threads = 1);

// Heteroskedasticity-robust Wald test of beta = beta0 from the long
// regression, with the chi-square(k) critical value. Hc3 throws LeverageOne
// when a leverage reaches 1.
ComparatorResult hc_wald_test(const Dataset& d, const Eigen::VectorXd& beta0, HcFlavor flavor,
                              double alpha);

// Classical homoskedastic F test via restricted/unrestricted residual sums of
// squares, F(k, n-k-p).
ComparatorResult f_test(const Dataset& d, const Eigen::VectorXd& beta0, double alpha);

}  // namespace sr
