#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sr/dataset.hpp"
#include "sr/distributions.hpp"
#include "sr/errors.hpp"
#include "sr/rng.hpp"
#include "sr/sr_test.hpp"

namespace {

struct Fixture {
    sr::Dataset d;
    sr::StrataPartition part;
};

// z takes few distinct values so the strata are nontrivial.
Fixture make_fixture(int n, int k, std::uint64_t seed, int n_patterns = 3) {
    sr::Rng rng(seed);
    Fixture f;
    f.d.y.resize(n);
    f.d.x.resize(n, k);
    f.d.z.resize(n, 2);
    f.d.z.col(0).setOnes();
    for (int i = 0; i < n; ++i) {
        f.d.z(i, 1) = static_cast<double>(rng.next_below(static_cast<std::uint32_t>(n_patterns)));
        f.d.y(i) = f.d.z(i, 1) + rng.next_normal();
        for (int j = 0; j < k; ++j) f.d.x(i, j) = rng.next_normal() + 0.5 * f.d.z(i, 1);
    }
    f.part = sr::partition_by_z(f.d.z);
    return f;
}

}  // namespace

TEST_CASE("the statistic matches the dense-projector oracle") {
    for (int k : {1, 2}) {
        const auto f = make_fixture(14, k, 100 + static_cast<std::uint64_t>(k));
        const Eigen::VectorXd v = f.d.y;
        const auto dd = sr::demean_design(f.d.x, f.part);
        const auto w = sr::wald_statistic(dd, v);
        const double expect = oracle::wald_dense(f.d.x, f.part, v);
        CHECK(w.value == doctest::Approx(expect).epsilon(1e-10));
        CHECK_FALSE(w.generalized_inverse);
    }
}

TEST_CASE("the statistic is invariant to rescaling the offset vector") {
    const auto f = make_fixture(12, 1, 7);
    const auto dd = sr::demean_design(f.d.x, f.part);
    const double base = sr::wald_statistic(dd, f.d.y).value;
    const double scaled = sr::wald_statistic(dd, Eigen::VectorXd(7.3 * f.d.y)).value;
    CHECK(scaled == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("the statistic ignores stratum-constant shifts of the offset") {
    const auto f = make_fixture(12, 1, 9);
    const auto dd = sr::demean_design(f.d.x, f.part);
    Eigen::VectorXd shifted = f.d.y;
    for (int i = 0; i < 12; ++i) shifted(i) += 10.0 * (1 + f.part.assignment[i]);
    CHECK(sr::wald_statistic(dd, shifted).value ==
          doctest::Approx(sr::wald_statistic(dd, f.d.y).value).epsilon(1e-10));
}

TEST_CASE("permuted statistics agree with from-scratch evaluation at every permutation") {
    const auto f = make_fixture(8, 1, 21, 2);
    const auto dd = sr::demean_design(f.d.x, f.part);
    const auto set = sr::PermutationSet::sample(f.part, 499, 5);
    REQUIRE(set.enumerated());
    const auto stats = sr::permuted_statistics(dd, f.d.y, set);
    REQUIRE(static_cast<int>(stats.size()) == set.size());
    for (int j = 0; j < set.size(); ++j) {
        const Eigen::VectorXd pv = sr::apply_permutation(set.perm(j), f.d.y);
        CHECK(stats[static_cast<std::size_t>(j)] ==
              doctest::Approx(oracle::wald_dense(f.d.x, f.part, pv)).epsilon(1e-10));
    }
    CHECK(stats[0] == doctest::Approx(sr::wald_statistic(dd, f.d.y).value).epsilon(1e-14));
}

TEST_CASE("the enumerated permutation distribution matches the brute-force oracle") {
    const auto f = make_fixture(7, 1, 33, 2);
    const auto dd = sr::demean_design(f.d.x, f.part);
    const auto set = sr::PermutationSet::sample(f.part, 499, 5);
    REQUIRE(set.enumerated());
    auto stats = sr::permuted_statistics(dd, f.d.y, set);
    auto expect = oracle::enumerate_statistics(f.d.x, f.part, f.d.y);
    REQUIRE(stats.size() == expect.size());
    std::sort(stats.begin(), stats.end());
    std::sort(expect.begin(), expect.end());
    for (std::size_t j = 0; j < stats.size(); ++j)
        CHECK(stats[j] == doctest::Approx(expect[j]).epsilon(1e-9));
}

TEST_CASE("multi-thread permuted statistics are byte-identical to single-thread") {
    const auto f = make_fixture(40, 1, 55, 4);
    const auto dd = sr::demean_design(f.d.x, f.part);
    const auto set = sr::PermutationSet::sample(f.part, 400, 3);
    const auto a = sr::permuted_statistics(dd, f.d.y, set, 1);
    const auto b = sr::permuted_statistics(dd, f.d.y, set, 4);
    CHECK(a == b);
}

TEST_CASE("phi splits ties so the rejection probability is exactly alpha") {
    SUBCASE("observed strictly above the critical order statistic") {
        const auto r = sr::phi_alpha({5, 1, 2, 3, 4}, 0.2);
        CHECK(r.q == 4);
        CHECK(r.critical == 4);
        CHECK(r.phi == 1.0);
    }
    SUBCASE("all ties yield phi = alpha") {
        const auto r = sr::phi_alpha({2, 2, 2, 2, 2}, 0.2);
        CHECK(r.critical == 2);
        CHECK(r.n_tied == 5);
        CHECK(r.phi == doctest::Approx(0.2).epsilon(1e-15));
    }
    SUBCASE("a single permutation yields phi = alpha") {
        const auto r = sr::phi_alpha({3.7}, 0.05);
        CHECK(r.phi == doctest::Approx(0.05).epsilon(1e-15));
    }
    SUBCASE("observed below the critical value yields phi = 0") {
        const auto r = sr::phi_alpha({1, 2, 3, 4, 5}, 0.2);
        CHECK(r.phi == 0.0);
    }
    SUBCASE("randomization exactly fills the gap to alpha") {
        // N = 10, alpha = 0.25: q = 8, two values strictly above the critical
        // order statistic would overshoot, so ties are split.
        const std::vector<double> stats{8, 1, 2, 3, 4, 5, 6, 8, 8, 7};
        const auto r = sr::phi_alpha(stats, 0.25);
        CHECK(r.critical == 8);
        CHECK(r.n_above == 0);
        CHECK(r.n_tied == 3);
        CHECK(r.phi == doctest::Approx(2.5 / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("permutation p-value counts ties in favor of the null") {
    CHECK(sr::permutation_p_value({5, 1, 2, 3, 4}) == doctest::Approx(0.2));
    CHECK(sr::permutation_p_value({3, 3, 1, 5}) == doctest::Approx(0.75));
    CHECK(sr::permutation_p_value({1, 2, 3, 4}) == doctest::Approx(1.0));
}

TEST_CASE("sr_test on an enumerable group reproduces the brute-force p-value") {
    const auto f = make_fixture(7, 1, 77, 2);
    sr::SrOptions opt;
    opt.n_prime = 499;
    opt.seed = 2;
    const auto r = sr::sr_test(f.d, Eigen::VectorXd::Zero(1), opt);
    REQUIRE(r.enumerated);

    const auto all = oracle::enumerate_statistics(f.d.x, f.part, f.d.y);
    const double observed = oracle::wald_dense(f.d.x, f.part, f.d.y);
    int count = 0;
    for (double s : all)
        if (s >= observed) ++count;
    CHECK(r.p_value == doctest::Approx(static_cast<double>(count) /
                                       static_cast<double>(all.size()))
                           .epsilon(1e-12));
    CHECK(r.n_permutations == static_cast<int>(all.size()));
    CHECK(r.statistic == doctest::Approx(observed).epsilon(1e-10));
}

TEST_CASE("all-singleton strata give the trivial randomized test") {
    sr::Dataset d;
    const int n = 9;
    d.y.resize(n);
    d.x.resize(n, 1);
    d.z.resize(n, 2);
    d.z.col(0).setOnes();
    sr::Rng rng(13);
    for (int i = 0; i < n; ++i) {
        d.z(i, 1) = i;  // all distinct: every stratum is a singleton
        d.y(i) = rng.next_normal();
        d.x(i, 0) = rng.next_normal();
    }
    sr::SrOptions opt;
    opt.alpha = 0.05;

    opt.randomization_u = 0.01;
    auto r = sr::sr_test(d, Eigen::VectorXd::Zero(1), opt);
    CHECK(r.trivial);
    CHECK(r.phi == doctest::Approx(0.05));
    CHECK(r.p_value == 1.0);
    CHECK(r.decision == sr::Decision::RandomizedReject);
    CHECK(r.rejected);  // u < alpha
    CHECK(std::isnan(r.statistic));

    opt.randomization_u = 0.9;
    r = sr::sr_test(d, Eigen::VectorXd::Zero(1), opt);
    CHECK_FALSE(r.rejected);

    opt.conservative = true;
    opt.randomization_u = 0.01;
    r = sr::sr_test(d, Eigen::VectorXd::Zero(1), opt);
    CHECK_FALSE(r.rejected);  // conservative mode never randomizes
    CHECK(r.decision == sr::Decision::Accept);
}

TEST_CASE("randomization uniform is reproducible from the seed") {
    CHECK(sr::randomization_uniform(42) == sr::randomization_uniform(42));
    CHECK(sr::randomization_uniform(42) != sr::randomization_uniform(43));
    const auto f = make_fixture(7, 1, 77, 2);
    sr::SrOptions opt;
    opt.seed = 5;
    const auto a = sr::sr_test(f.d, Eigen::VectorXd::Zero(1), opt);
    const auto b = sr::sr_test(f.d, Eigen::VectorXd::Zero(1), opt);
    CHECK(a.p_value == b.p_value);
    CHECK(a.rejected == b.rejected);
}

TEST_CASE("a degenerate statistic throws instead of reporting garbage") {
    sr::Dataset d;
    d.y.resize(4);
    d.y << 1, 2, 3, 4;
    d.x.resize(4, 1);
    d.x << 3, 3, 5, 5;  // constant within each stratum
    d.z.resize(4, 2);
    d.z << 1, 0, 1, 0, 1, 1, 1, 1;
    CHECK_THROWS_AS(sr::sr_test(d, Eigen::VectorXd::Zero(1), sr::SrOptions{}),
                    sr::DegenerateStatistic);
}

TEST_CASE("collinear tested regressors fall back to the generalized inverse") {
    auto f = make_fixture(12, 2, 91);
    f.d.x.col(1) = 2.0 * f.d.x.col(0);
    sr::SrOptions opt;
    opt.n_prime = 50;
    const auto r = sr::sr_test(f.d, Eigen::VectorXd::Zero(2), opt);
    CHECK(r.generalized_inverse);
    CHECK(std::isfinite(r.statistic));
}

TEST_CASE("psd quadratic form handles singular and zero matrices") {
    Eigen::MatrixXd a(2, 2);
    a << 2, 0, 0, 0;
    Eigen::VectorXd b(2);
    b << 1, 1;
    bool gen = false, degen = false;
    CHECK(sr::psd_quadratic_form(a, b, &gen, &degen) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(gen);
    CHECK_FALSE(degen);

    gen = degen = false;
    CHECK(sr::psd_quadratic_form(Eigen::MatrixXd::Zero(2, 2), b, &gen, &degen) == 0.0);
    CHECK(degen);

    Eigen::MatrixXd full(2, 2);
    full << 3, 1, 1, 2;
    gen = degen = false;
    const double expect =
        b.dot(oracle::gauss_jordan_inverse(full) * b);
    CHECK(sr::psd_quadratic_form(full, b, &gen, &degen) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK_FALSE(gen);
}

TEST_CASE("sra uses the chi-square critical value") {
    const auto f = make_fixture(30, 1, 111, 3);
    const auto r = sr::sra_test(f.d, Eigen::VectorXd::Zero(1), 0.05);
    CHECK(r.method == "sra");
    CHECK(r.critical == doctest::Approx(3.841458820694124).epsilon(1e-8));
    CHECK(r.rejected == (r.statistic > r.critical));
    CHECK(r.p_value == doctest::Approx(sr::chi2_sf(r.statistic, 1)).epsilon(1e-12));
    CHECK(r.permuted.empty());
}

TEST_CASE("test results record the inputs") {
    const auto f = make_fixture(10, 1, 131, 2);
    sr::SrOptions opt;
    opt.alpha = 0.1;
    opt.n_prime = 99;
    opt.seed = 7;
    Eigen::VectorXd b0(1);
    b0 << 0.25;
    const auto r = sr::sr_test(f.d, b0, opt);
    CHECK(r.method == "sr");
    CHECK(r.alpha == 0.1);
    CHECK(r.requested == 99);
    CHECK(r.seed == 7);
    CHECK(r.beta0(0) == 0.25);
    CHECK(r.strata.n == 10);
    CHECK(r.n_permutations == static_cast<int>(r.permuted.size()));
}
