#include "sr/inversion.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "sr/approx.hpp"
#include "sr/comparators.hpp"
#include "sr/errors.hpp"
#include "sr/parallel.hpp"
#include "sr/regression.hpp"
#include "sr/sr_test.hpp"

namespace sr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw UnsortedGrid("grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw UnsortedGrid("grid must be strictly increasing");
}

// Permutation-based acceptance: shared permutation set, shared uniform.
std::vector<char> sr_acceptance(const Dataset& d, const StrataPartition& partition,
                                const std::vector<double>& grid, const CiOptions& opt) {
    const DemeanedDesign dd = demean_design(d.x, partition);
    const PermutationSet perms =
        PermutationSet::sample(partition, opt.n_prime, opt.seed, opt.threads);
    const double u = randomization_uniform(opt.seed);
    std::vector<char> accepted(grid.size(), 0);
    parallel_for(static_cast<std::int64_t>(grid.size()), opt.threads, [&](std::int64_t g) {
        const Eigen::VectorXd v = d.y - d.x.col(0) * grid[static_cast<std::size_t>(g)];
        const std::vector<double> stats = permuted_statistics(dd, v, perms, 1);
        const double phi = phi_alpha(stats, opt.alpha).phi;
        accepted[static_cast<std::size_t>(g)] = u < phi ? 0 : 1;
    });
    return accepted;
}

std::vector<char> pc_acceptance(const Dataset& d, const std::vector<double>& grid,
                                const CiOptions& opt) {
    const auto n = static_cast<int>(d.y.size());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zqr(d.z);
    zqr.setThreshold(1e-10);
    if (zqr.rank() < d.z.cols())
        throw RankDeficient(static_cast<int>(zqr.rank()), static_cast<int>(d.z.cols()));
    const Eigen::MatrixXd xres = d.x - d.z * zqr.solve(d.x);

    // Shared index shuffles, reused at every grid point.
    std::vector<std::int32_t> draws(static_cast<std::size_t>(opt.n_prime) *
                                    static_cast<std::size_t>(n));
    parallel_for(opt.n_prime, opt.threads, [&](std::int64_t j) {
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(j) + 1));
        const auto row = draws.data() + static_cast<std::size_t>(j) * n;
        for (int i = 0; i < n; ++i) row[i] = i;
        shuffle_span(std::span<std::int32_t>(row, static_cast<std::size_t>(n)), rng);
    });

    std::vector<char> accepted(grid.size(), 0);
    parallel_for(static_cast<std::int64_t>(grid.size()), opt.threads, [&](std::int64_t g) {
        const Eigen::VectorXd v = d.y - d.x.col(0) * grid[static_cast<std::size_t>(g)];
        const Eigen::VectorXd fitted = d.z * zqr.solve(v);
        const Eigen::VectorXd ehat = v - fitted;
        auto form = [&](const Eigen::VectorXd& w) {
            double b = 0.0, a = 0.0;
            for (int i = 0; i < n; ++i) {
                const double xw = xres(i, 0) * w(i);
                b += xw;
                a += xw * xw;
            }
            return a > 0.0 ? b * b / a : 0.0;
        };
        const double observed = form(ehat);
        int count = 0;
        Eigen::VectorXd pseudo(n);
        for (int j = 0; j < opt.n_prime; ++j) {
            const auto pi = draws.data() + static_cast<std::size_t>(j) * n;
            for (int i = 0; i < n; ++i) pseudo(i) = fitted(i) + ehat(pi[i]);
            const Eigen::VectorXd e2 = pseudo - d.z * zqr.solve(pseudo);
            if (form(e2) >= observed) ++count;
        }
        const double p = (1.0 + count) / static_cast<double>(opt.n_prime + 1);
        accepted[static_cast<std::size_t>(g)] = p > opt.alpha ? 1 : 0;
    });
    return accepted;
}

std::vector<char> analytic_acceptance(const Dataset& d, const std::vector<double>& grid,
                                      const CiOptions& opt) {
    std::vector<char> accepted(grid.size(), 0);
    parallel_for(static_cast<std::int64_t>(grid.size()), opt.threads, [&](std::int64_t g) {
        Eigen::VectorXd beta0(1);
        beta0 << grid[static_cast<std::size_t>(g)];
        ComparatorResult r;
        switch (opt.method) {
            case CiMethod::Hc0:
                r = hc_wald_test(d, beta0, HcFlavor::Hc0, opt.alpha);
                break;
            case CiMethod::Hc1:
                r = hc_wald_test(d, beta0, HcFlavor::Hc1, opt.alpha);
                break;
            case CiMethod::Hc3:
                r = hc_wald_test(d, beta0, HcFlavor::Hc3, opt.alpha);
                break;
            default:
                r = f_test(d, beta0, opt.alpha);
                break;
        }
        accepted[static_cast<std::size_t>(g)] = r.rejected ? 0 : 1;
    });
    return accepted;
}

}  // namespace

const char* ci_method_name(CiMethod m) {
    switch (m) {
        case CiMethod::Sr:
            return "sr";
        case CiMethod::ApproxSr:
            return "approx-sr";
        case CiMethod::Pc:
            return "pc";
        case CiMethod::Hc0:
            return "hc0";
        case CiMethod::Hc1:
            return "hc1";
        case CiMethod::Hc3:
            return "hc3";
        case CiMethod::F:
            return "f";
    }
    return "unknown";
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0)) throw UnsortedGrid("grid step must be positive");
    if (!(hi >= lo)) throw UnsortedGrid("grid upper end below lower end");
    std::vector<double> grid;
    const double slack = step * 1e-9;
    for (int i = 0;; ++i) {
        const double v = lo + step * i;
        if (v > hi + slack) break;
        grid.push_back(v);
    }
    return grid;
}

IntervalSummary summarize_acceptance(const std::vector<double>& grid,
                                     const std::vector<char>& accepted) {
    if (grid.size() != accepted.size())
        throw DimensionMismatch("grid and acceptance vector lengths differ");
    IntervalSummary s;
    int first = -1, last = -1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!accepted[i]) continue;
        if (first < 0) first = static_cast<int>(i);
        last = static_cast<int>(i);
        s.raw_region.push_back(grid[i]);
    }
    if (first < 0) {
        s.empty = true;
        s.lo = kNan;
        s.hi = kNan;
        return s;
    }
    for (int i = first; i <= last; ++i)
        if (!accepted[static_cast<std::size_t>(i)]) s.convexified = true;
    s.boundary_saturated = accepted.front() || accepted.back();

    // Endpoints stretch half a neighbouring grid gap beyond the outermost
    // accepted points.
    const auto gap_below = [&](int i) {
        if (i > 0) return grid[static_cast<std::size_t>(i)] - grid[static_cast<std::size_t>(i - 1)];
        if (grid.size() > 1) return grid[1] - grid[0];
        return 0.0;
    };
    const auto gap_above = [&](int i) {
        if (i + 1 < static_cast<int>(grid.size()))
            return grid[static_cast<std::size_t>(i + 1)] - grid[static_cast<std::size_t>(i)];
        if (grid.size() > 1) return grid[grid.size() - 1] - grid[grid.size() - 2];
        return 0.0;
    };
    s.lo = grid[static_cast<std::size_t>(first)] - 0.5 * gap_below(first);
    s.hi = grid[static_cast<std::size_t>(last)] + 0.5 * gap_above(last);
    return s;
}

ConfidenceInterval invert_test(const Dataset& d, const std::vector<double>& grid,
                               const CiOptions& opt) {
    if (d.x.cols() != 1)
        throw MultidimensionalBeta("interval inversion handles a single tested coefficient");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    check_grid(grid);

    ConfidenceInterval ci;
    ci.method = opt.method;
    ci.alpha = opt.alpha;
    ci.level = 1.0 - opt.alpha;
    ci.grid = grid;
    ci.seed = opt.seed;

    StrataPartition partition;
    bool permutation_method = false;
    if (opt.method == CiMethod::Sr) {
        partition = partition_by_z(d.z);
        permutation_method = true;
    } else if (opt.method == CiMethod::ApproxSr) {
        const int requested = opt.s_bins.value_or(data_driven_s(d));
        partition = partition_by_labels(discretize_index(fitted_index(d), requested).bin);
        permutation_method = true;
    }

    if (permutation_method && partition.all_singletons()) {
        // Trivial test: nothing is ever rejected with certainty, so the
        // inverted set is the whole real line.
        ci.trivial = true;
        ci.lo = -kInf;
        ci.hi = kInf;
        ci.accepted.assign(grid.size(), 1);
        ci.raw_region = grid;
        return ci;
    }

    if (permutation_method)
        ci.accepted = sr_acceptance(d, partition, grid, opt);
    else if (opt.method == CiMethod::Pc)
        ci.accepted = pc_acceptance(d, grid, opt);
    else
        ci.accepted = analytic_acceptance(d, grid, opt);

    const IntervalSummary s = summarize_acceptance(grid, ci.accepted);
    ci.lo = s.lo;
    ci.hi = s.hi;
    ci.empty = s.empty;
    ci.convexified = s.convexified;
    ci.boundary_saturated = s.boundary_saturated;
    ci.raw_region = s.raw_region;
    return ci;
}

}  // namespace sr
