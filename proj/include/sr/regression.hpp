#pragma once

#include <Eigen/Core>

#include "sr/strata.hpp"

namespace sr {

// Subtracts the stratum mean from every entry (the block-diagonal centering
// projection). Strata beyond 10^4 rows use compensated summation for the mean.
Eigen::VectorXd within_demean(const Eigen::VectorXd& v, const StrataPartition& p);
Eigen::MatrixXd within_demean_cols(const Eigen::MatrixXd& m, const StrataPartition& p);

// Demeaned tested regressors, precomputed once per dataset and shared across
// permutations and grid points. Owns its partition copy so it is self-contained
// and safe to read concurrently.
struct DemeanedDesign {
    Eigen::MatrixXd xt;    // demeaned x
    Eigen::MatrixXd gram;  // xt' xt
    StrataPartition partition;
};

DemeanedDesign demean_design(const Eigen::MatrixXd& x, const StrataPartition& p);

struct OlsFit {
    Eigen::VectorXd coef;
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    Eigen::VectorXd leverage;  // empty unless requested
    int rank = 0;
};

// Least squares via column-pivoted QR. Throws RankDeficient when the numerical
// rank at relative tolerance `rank_tol` falls short of the column count.
OlsFit ols(const Eigen::MatrixXd& w, const Eigen::VectorXd& y, bool with_leverage = false,
           double rank_tol = 1e-10);

}  // namespace sr
