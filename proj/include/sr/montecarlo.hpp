#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sr/dataset.hpp"

namespace sr {

// Synthetic designs used throughout the simulation harness.  Families 1-3
// share the same regressor construction and differ in the error law; the
// primed variants swap the Poisson covariates for standard normals so the
// covariate index is continuous.
enum class DgpFamily { Dgp1, Dgp2, Dgp3, Dgp1Exp, Dgp1Prime, Dgp2Prime, Dgp3Prime };

const char* dgp_name(DgpFamily f);
std::optional<DgpFamily> parse_dgp(const std::string& name);

struct DgpSpec {
    DgpFamily family = DgpFamily::Dgp1;
    int n = 50;
    int p = 2;  // columns of z including the intercept
    double beta = 0.0;
};

Dataset generate(const DgpSpec& spec, std::uint64_t seed);

// Moments of the exact-match stratification across repeated draws.
struct StrataMoments {
    double mean_s = 0.0;          // average number of strata
    double mean_max = 0.0;        // average largest stratum
    double mean_log_size = 0.0;   // average log |group|
    double log_mean_size = 0.0;   // log of average |group|
    int reps = 0;
};

StrataMoments strata_characteristics(const DgpSpec& spec, int reps, std::uint64_t seed,
                                     int threads = 1);

enum class Method { Sr, Sra, ApproxSr, Pc, Hc0, Hc1, Hc3, F };

const char* method_label(Method m);
std::optional<Method> parse_method(const std::string& name);

struct PowerOptions {
    double alpha = 0.05;
    int n_prime = 499;
    int reps = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct PowerPoint {
    Method method = Method::Sr;
    double beta = 0.0;
    int n = 0;
    int p = 0;
    double rejection_rate = 0.0;
    double se = 0.0;
    int reps = 0;
};

// Rejection rate of each method at each beta, with datasets shared across
// methods within a replication.  Deterministic for a fixed seed regardless
// of thread count.
std::vector<PowerPoint> power_curve(const DgpSpec& base, const std::vector<double>& betas,
                                    const std::vector<Method>& methods, const PowerOptions& opt);

}  // namespace sr
