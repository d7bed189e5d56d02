#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sr/rng.hpp"

namespace sr {

// Rows grouped by identical covariate pattern. Strata ids follow the
// lexicographic order of the distinct z rows; member lists are ascending.
struct StrataPartition {
    std::vector<std::int32_t> assignment;         // row -> stratum id
    std::vector<std::vector<std::int32_t>> rows;  // stratum id -> member rows

    int n() const { return static_cast<int>(assignment.size()); }
    int n_strata() const { return static_cast<int>(rows.size()); }
    bool all_singletons() const { return n_strata() == n(); }
    int max_size() const;
};

// Strata = groups of exactly equal z rows (floating equality, no tolerance;
// values come from a common parse or generator, so equal means equal).
StrataPartition partition_by_z(const Eigen::MatrixXd& z);

// Strata = groups of equal integer labels, ordered by ascending label.
StrataPartition partition_by_labels(const std::vector<std::int32_t>& labels);

// ln prod_s n_s! computed in log space; never overflows.
double log_group_size(const StrataPartition& p);

// prod_s n_s! when it fits in 64 bits.
std::optional<std::uint64_t> exact_group_size(const StrataPartition& p);

struct StrataDiagnostics {
    int n_strata = 0;
    int n = 0;
    double s_over_n = 0;
    int max_size = 0;
    int singletons = 0;
    int effective_sample = 0;  // rows living in strata of size >= 2
    double log_group_size = 0;
    bool high_strata_warning = false;  // S/n > 1/2
};

StrataDiagnostics diagnose(const StrataPartition& p);

// Identity plus sampled stratified permutations, duplicates removed, or the
// fully enumerated group when it is small enough. Storage is one flat block;
// perm(j)[i] is the source row for position i.
class PermutationSet {
public:
    // Draws n_prime - 1 stratified permutations (independent streams derived
    // from `seed`), prepends the identity and deletes exact duplicates.
    // When prod n_s! <= max(n_prime, 10000) the whole group is enumerated
    // instead, identity first.
    static PermutationSet sample(const StrataPartition& p, int n_prime, std::uint64_t seed,
                                 int threads = 1);

    int size() const { return count_; }
    int n() const { return n_; }
    std::span<const std::int32_t> perm(int j) const {
        return {flat_.data() + static_cast<std::size_t>(j) * n_, static_cast<std::size_t>(n_)};
    }
    bool enumerated() const { return enumerated_; }
    int requested() const { return requested_; }
    std::uint64_t seed() const { return seed_; }

    nlohmann::json to_json() const;
    static PermutationSet from_json(const nlohmann::json& j);

private:
    PermutationSet() = default;
    std::vector<std::int32_t> flat_;
    int n_ = 0;
    int count_ = 0;
    int requested_ = 0;
    bool enumerated_ = false;
    std::uint64_t seed_ = 0;
};

// One uniform draw from the stratified permutation group (independent
// Fisher-Yates shuffle inside each stratum). Building block of sample(); also
// what the uniformity tests exercise.
void draw_stratified(const StrataPartition& p, Rng& rng, std::span<std::int32_t> out);

std::vector<std::int32_t> identity_permutation(int n);

// out[i] = v[perm[i]].
Eigen::VectorXd apply_permutation(std::span<const std::int32_t> perm, const Eigen::VectorXd& v);

}  // namespace sr
