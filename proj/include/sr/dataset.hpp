#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace sr {

// Regression data for testing a subvector: y = x*beta + z*gamma + u.
// z always carries the intercept as its first column.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;  // n x k, tested regressors
    Eigen::MatrixXd z;  // n x p, controls, z.col(0) all ones
};

struct CsvSpec {
    std::string y;
    std::vector<std::string> x;
    // Control columns. With add_intercept the constant is synthesized and z
    // names the remaining controls; otherwise the first z column must already
    // be identically 1.
    std::vector<std::string> z;
    bool add_intercept = true;
};

Dataset load_csv(const std::string& path, const CsvSpec& spec);

// Column names from the first record, for building a CsvSpec by convention.
std::vector<std::string> csv_header(const std::string& path);

// Canonical headers y, x1..xk, z1..zp (z1 is the stored intercept column).
// Values are written with shortest round-trip formatting, so
// load_csv(write_csv(d)) with add_intercept=false reproduces d exactly.
void write_csv(const Dataset& d, const std::string& path);

// Shape, finiteness and intercept checks; throws InvalidDataset / DimensionMismatch.
void validate(const Dataset& d);

// Numerical rank of [x z] from singular values at relative tolerance `tol`.
// Throws RankDeficient when rank < k + p; returns the rank otherwise.
int validate_rank(const Dataset& d, double tol = 1e-10);

// Offset outcome y - x*beta0, the vector whose permutation distribution the
// test simulates (also the autoregression reduction: pass the lagged outcome
// as x).
Eigen::VectorXd ar_offset(const Dataset& d, const Eigen::VectorXd& beta0);

}  // namespace sr
