#include "sr/strata.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <string_view>
#include <unordered_set>

#include "sr/distributions.hpp"
#include "sr/errors.hpp"
#include "sr/parallel.hpp"

namespace sr {

namespace {

constexpr std::uint64_t kEnumerationFloor = 10000;
// Guards against absurd table sizes (count * n int32 entries).
constexpr std::size_t kMaxTableElements = std::size_t{1} << 29;

StrataPartition group_sorted(std::vector<std::int32_t> idx,
                             const std::function<bool(std::int32_t, std::int32_t)>& same) {
    StrataPartition part;
    part.assignment.assign(idx.size(), -1);
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && same(idx[i], idx[j])) ++j;
        const auto id = static_cast<std::int32_t>(part.rows.size());
        auto& members = part.rows.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i),
                                               idx.begin() + static_cast<std::ptrdiff_t>(j));
        std::sort(members.begin(), members.end());
        for (const auto r : members) part.assignment[static_cast<std::size_t>(r)] = id;
        i = j;
    }
    return part;
}

}  // namespace

int StrataPartition::max_size() const {
    std::size_t best = 0;
    for (const auto& members : rows) best = std::max(best, members.size());
    return static_cast<int>(best);
}

StrataPartition partition_by_z(const Eigen::MatrixXd& z) {
    const auto n = static_cast<std::int32_t>(z.rows());
    if (n == 0) throw InvalidDataset("cannot partition an empty matrix");
    std::vector<std::int32_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    const auto cols = z.cols();
    std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (z(a, c) < z(b, c)) return true;
            if (z(b, c) < z(a, c)) return false;
        }
        return a < b;
    });
    return group_sorted(std::move(idx), [&](std::int32_t a, std::int32_t b) {
        for (Eigen::Index c = 0; c < cols; ++c)
            if (z(a, c) != z(b, c)) return false;
        return true;
    });
}

StrataPartition partition_by_labels(const std::vector<std::int32_t>& labels) {
    if (labels.empty()) throw InvalidDataset("cannot partition an empty label vector");
    std::vector<std::int32_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
        if (labels[static_cast<std::size_t>(a)] != labels[static_cast<std::size_t>(b)])
            return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
        return a < b;
    });
    return group_sorted(std::move(idx), [&](std::int32_t a, std::int32_t b) {
        return labels[static_cast<std::size_t>(a)] == labels[static_cast<std::size_t>(b)];
    });
}

double log_group_size(const StrataPartition& p) {
    double total = 0.0;
    for (const auto& members : p.rows)
        total += log_gamma(static_cast<double>(members.size()) + 1.0);
    return total;
}

std::optional<std::uint64_t> exact_group_size(const StrataPartition& p) {
    std::uint64_t total = 1;
    for (const auto& members : p.rows) {
        for (std::uint64_t f = 2; f <= members.size(); ++f) {
            if (total > std::numeric_limits<std::uint64_t>::max() / f) return std::nullopt;
            total *= f;
        }
    }
    return total;
}

StrataDiagnostics diagnose(const StrataPartition& p) {
    StrataDiagnostics d;
    d.n_strata = p.n_strata();
    d.n = p.n();
    d.s_over_n = static_cast<double>(d.n_strata) / d.n;
    d.max_size = p.max_size();
    for (const auto& members : p.rows)
        if (members.size() == 1) ++d.singletons;
    d.effective_sample = d.n - d.singletons;
    d.log_group_size = log_group_size(p);
    d.high_strata_warning = 2 * d.n_strata > d.n;
    return d;
}

void draw_stratified(const StrataPartition& p, Rng& rng, std::span<std::int32_t> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::int32_t>(i);
    for (const auto& members : p.rows) {
        const std::size_t m = members.size();
        for (std::size_t i = m; i > 1; --i) {
            const std::uint32_t j = rng.next_below(static_cast<std::uint32_t>(i));
            std::swap(out[static_cast<std::size_t>(members[i - 1])],
                      out[static_cast<std::size_t>(members[j])]);
        }
    }
}

std::vector<std::int32_t> identity_permutation(int n) {
    std::vector<std::int32_t> id(static_cast<std::size_t>(n));
    std::iota(id.begin(), id.end(), 0);
    return id;
}

Eigen::VectorXd apply_permutation(std::span<const std::int32_t> perm, const Eigen::VectorXd& v) {
    if (static_cast<std::size_t>(v.size()) != perm.size())
        throw DimensionMismatch("permutation and vector lengths differ");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v(perm[i]);
    return out;
}

PermutationSet PermutationSet::sample(const StrataPartition& p, int n_prime, std::uint64_t seed,
                                      int threads) {
    if (n_prime < 1) throw DomainError("n_prime must be at least 1");
    const int n = p.n();

    PermutationSet set;
    set.n_ = n;
    set.requested_ = n_prime;
    set.seed_ = seed;

    const auto exact = exact_group_size(p);
    const std::uint64_t cap = std::max<std::uint64_t>(static_cast<std::uint64_t>(n_prime),
                                                      kEnumerationFloor);
    if (exact && *exact <= cap) {
        // Full group, identity first: odometer over per-stratum permutations,
        // each cycled with next_permutation from its ascending start.
        const std::uint64_t total = *exact;
        if (total * static_cast<std::uint64_t>(n) > kMaxTableElements)
            throw Error("permutation table would exceed the in-memory limit");
        set.enumerated_ = true;
        set.count_ = static_cast<int>(total);
        set.flat_.resize(static_cast<std::size_t>(total) * static_cast<std::size_t>(n));
        std::vector<std::vector<std::int32_t>> wheels = p.rows;
        std::vector<std::int32_t> current = identity_permutation(n);
        std::size_t write = 0;
        for (std::uint64_t c = 0;; ++c) {
            std::copy(current.begin(), current.end(), set.flat_.begin() + static_cast<std::ptrdiff_t>(write));
            write += static_cast<std::size_t>(n);
            if (c + 1 == total) break;
            for (std::size_t s = 0;; ++s) {
                auto& wheel = wheels[s];
                const bool carried = !std::next_permutation(wheel.begin(), wheel.end());
                const auto& slots = p.rows[s];
                for (std::size_t i = 0; i < slots.size(); ++i)
                    current[static_cast<std::size_t>(slots[i])] = wheel[i];
                if (!carried) break;
            }
        }
        return set;
    }

    if (static_cast<std::uint64_t>(n_prime) * static_cast<std::uint64_t>(n) > kMaxTableElements)
        throw Error("permutation table would exceed the in-memory limit");

    // Slot 0 = identity; slot j >= 1 drawn from its own derived stream so the
    // table is identical for any thread count.
    set.flat_.resize(static_cast<std::size_t>(n_prime) * static_cast<std::size_t>(n));
    std::copy_n(identity_permutation(n).begin(), n, set.flat_.begin());
    parallel_for(n_prime - 1, threads, [&](std::int64_t i) {
        const std::int64_t slot = i + 1;
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(slot)));
        draw_stratified(p, rng,
                        {set.flat_.data() + slot * n, static_cast<std::size_t>(n)});
    });

    // Stable dedup: keep first occurrences, compact in place.
    const std::size_t row_bytes = static_cast<std::size_t>(n) * sizeof(std::int32_t);
    std::unordered_set<std::string_view> seen;
    seen.reserve(static_cast<std::size_t>(n_prime) * 2);
    std::size_t write = 0;
    for (std::size_t read = 0; read < static_cast<std::size_t>(n_prime); ++read) {
        const char* src = reinterpret_cast<const char*>(set.flat_.data()) + read * row_bytes;
        if (seen.contains(std::string_view(src, row_bytes))) continue;
        char* dst = reinterpret_cast<char*>(set.flat_.data()) + write * row_bytes;
        if (write != read) std::memmove(dst, src, row_bytes);
        seen.insert(std::string_view(dst, row_bytes));
        ++write;
    }
    set.count_ = static_cast<int>(write);
    set.flat_.resize(write * static_cast<std::size_t>(n));
    return set;
}

nlohmann::json PermutationSet::to_json() const {
    nlohmann::json perms = nlohmann::json::array();
    for (int j = 0; j < count_; ++j) {
        const auto view = perm(j);
        perms.push_back(std::vector<std::int32_t>(view.begin(), view.end()));
    }
    return {{"n", n_},
            {"requested", requested_},
            {"seed", seed_},
            {"enumerated", enumerated_},
            {"perms", std::move(perms)}};
}

PermutationSet PermutationSet::from_json(const nlohmann::json& j) {
    PermutationSet set;
    set.n_ = j.at("n").get<int>();
    set.requested_ = j.at("requested").get<int>();
    set.seed_ = j.at("seed").get<std::uint64_t>();
    set.enumerated_ = j.at("enumerated").get<bool>();
    const auto& perms = j.at("perms");
    set.count_ = static_cast<int>(perms.size());
    set.flat_.reserve(static_cast<std::size_t>(set.count_) * static_cast<std::size_t>(set.n_));
    for (const auto& row : perms) {
        if (static_cast<int>(row.size()) != set.n_)
            throw DimensionMismatch("permutation row length differs from n");
        for (const auto& v : row) set.flat_.push_back(v.get<std::int32_t>());
    }
    return set;
}

}  // namespace sr
