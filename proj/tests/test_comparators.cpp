#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sr/comparators.hpp"
#include "sr/dataset.hpp"
#include "sr/distributions.hpp"
#include "sr/errors.hpp"
#include "sr/regression.hpp"
#include "sr/rng.hpp"
#include "sr/sr_test.hpp"
#include "sr/strata.hpp"

namespace {

sr::Dataset random_dataset(int n, int extra_z, std::uint64_t seed) {
    sr::Rng rng(seed);
    sr::Dataset d;
    d.y.resize(n);
    d.x.resize(n, 1);
    d.z.resize(n, 1 + extra_z);
    d.z.col(0).setOnes();
    for (int i = 0; i < n; ++i) {
        d.x(i, 0) = rng.next_normal();
        for (int j = 1; j <= extra_z; ++j) d.z(i, j) = rng.next_normal();
        d.y(i) = 0.5 * d.x(i, 0) + d.z.row(i).tail(extra_z).sum() + rng.next_normal();
    }
    return d;
}

}  // namespace

TEST_CASE("with only an intercept the PC statistic equals the single-stratum statistic") {
    const auto d = random_dataset(15, 0, 3);
    const auto pc = sr::pc_test(d, Eigen::VectorXd::Zero(1), 0.05, 99, 7);
    // One stratum holding every row: demeaning and residualizing on the
    // intercept coincide.
    const auto part = sr::partition_by_labels(std::vector<std::int32_t>(15, 0));
    const auto dd = sr::demean_design(d.x, part);
    const auto w = sr::wald_statistic(dd, d.y);
    CHECK(pc.statistic == doctest::Approx(w.value).epsilon(1e-10));
}

TEST_CASE("small samples enumerate all n! residual permutations") {
    const auto d = random_dataset(6, 1, 5);
    const Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(1);
    const auto pc = sr::pc_test(d, beta0, 0.05, 499, 11);
    CHECK(pc.enumerated);
    CHECK(pc.n_replicas == 720);

    // Brute force with the dense oracle.
    const Eigen::VectorXd v = d.y;
    const Eigen::VectorXd gamma = oracle::mgs_solve(d.z, v);
    const Eigen::VectorXd fitted = d.z * gamma;
    const Eigen::VectorXd ehat = v - fitted;
    const Eigen::VectorXd xres = d.x.col(0) - d.z * oracle::mgs_solve(d.z, d.x.col(0));
    auto robust_form = [&](const Eigen::VectorXd& e) {
        double b = 0.0, a = 0.0;
        for (int i = 0; i < 6; ++i) {
            b += xres(i) * e(i);
            a += xres(i) * xres(i) * e(i) * e(i);
        }
        return a > 0 ? b * b / a : 0.0;
    };
    const double observed = robust_form(ehat);
    int count = 0, total = 0;
    oracle::for_each_full_permutation(6, [&](const std::vector<int>& perm) {
        Eigen::VectorXd pseudo(6);
        for (int i = 0; i < 6; ++i) pseudo(i) = fitted(i) + ehat(perm[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd e2 = pseudo - d.z * oracle::mgs_solve(d.z, pseudo);
        if (robust_form(e2) >= observed - 1e-12 * std::abs(observed)) ++count;
        ++total;
    });
    CHECK(total == 720);
    CHECK(pc.statistic == doctest::Approx(observed).epsilon(1e-10));
    CHECK(pc.p_value ==
          doctest::Approx(static_cast<double>(count) / 720.0).epsilon(1e-9));
}

TEST_CASE("sampled PC replicas are deterministic in the seed") {
    const auto d = random_dataset(30, 2, 9);
    // Test at the coefficient the data were built with so the observed
    // statistic sits inside the permutation distribution.
    Eigen::VectorXd beta0(1);
    beta0 << 0.5;
    const auto a = sr::pc_test(d, beta0, 0.05, 199, 13);
    const auto b = sr::pc_test(d, beta0, 0.05, 199, 13, 4);
    CHECK_FALSE(a.enumerated);
    CHECK(a.n_replicas == 199);
    CHECK(a.p_value == b.p_value);
    CHECK(a.statistic == b.statistic);
    const auto c = sr::pc_test(d, beta0, 0.05, 199, 14);
    CHECK(a.p_value != c.p_value);
}

TEST_CASE("robust Wald matches the dense sandwich oracle") {
    const auto d = random_dataset(40, 2, 17);
    Eigen::VectorXd beta0(1);
    beta0 << 0.2;
    const int n = 40, m = 4;
    Eigen::MatrixXd w(n, m);
    w << d.x, d.z;
    const Eigen::VectorXd coef = oracle::mgs_solve(w, d.y);
    const Eigen::VectorXd resid = d.y - w * coef;
    const Eigen::MatrixXd bread = oracle::gauss_jordan_inverse(oracle::matmul(
        Eigen::MatrixXd(w.transpose()), w));
    for (auto flavor : {sr::HcFlavor::Hc0, sr::HcFlavor::Hc1, sr::HcFlavor::Hc3}) {
        Eigen::VectorXd lev(n);
        for (int i = 0; i < n; ++i)
            lev(i) = (w.row(i) * bread * w.row(i).transpose())(0, 0);
        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < n; ++i) {
            double wgt = resid(i) * resid(i);
            if (flavor == sr::HcFlavor::Hc1) wgt *= static_cast<double>(n) / (n - m);
            if (flavor == sr::HcFlavor::Hc3) wgt /= (1.0 - lev(i)) * (1.0 - lev(i));
            meat += wgt * w.row(i).transpose() * w.row(i);
        }
        const Eigen::MatrixXd v = oracle::matmul(oracle::matmul(bread, meat), bread);
        const double expect = (coef(0) - beta0(0)) * (coef(0) - beta0(0)) / v(0, 0);
        const auto r = sr::hc_wald_test(d, beta0, flavor, 0.05);
        CHECK(r.statistic == doctest::Approx(expect).epsilon(1e-8));
        CHECK(r.critical == doctest::Approx(sr::chi2_quantile(0.95, 1)).epsilon(1e-10));
        CHECK(r.p_value == doctest::Approx(sr::chi2_sf(r.statistic, 1)).epsilon(1e-12));
        CHECK(r.rejected == (r.p_value <= 0.05));
    }
}

TEST_CASE("HC1 rescales the HC0 statistic by (n-m)/n") {
    const auto d = random_dataset(35, 3, 23);
    const Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(1);
    const auto hc0 = sr::hc_wald_test(d, beta0, sr::HcFlavor::Hc0, 0.05);
    const auto hc1 = sr::hc_wald_test(d, beta0, sr::HcFlavor::Hc1, 0.05);
    const int n = 35, m = 5;
    CHECK(hc1.statistic ==
          doctest::Approx(hc0.statistic * static_cast<double>(n - m) / n).epsilon(1e-12));
}

TEST_CASE("HC3 refuses a leverage of one") {
    auto d = random_dataset(12, 1, 29);
    d.x.col(0).setZero();
    d.x(0, 0) = 1.0;  // indicator column: row 0 has leverage 1
    CHECK_THROWS_AS(sr::hc_wald_test(d, Eigen::VectorXd::Zero(1), sr::HcFlavor::Hc3, 0.05),
                    sr::LeverageOne);
    // HC0 still works on the same data.
    CHECK_NOTHROW(sr::hc_wald_test(d, Eigen::VectorXd::Zero(1), sr::HcFlavor::Hc0, 0.05));
}

TEST_CASE("the F statistic vanishes at the unrestricted estimate") {
    const auto d = random_dataset(30, 2, 31);
    Eigen::MatrixXd w(30, 4);
    w << d.x, d.z;
    const auto fit = sr::ols(w, d.y);
    Eigen::VectorXd beta0(1);
    beta0 << fit.coef(0);
    const auto r = sr::f_test(d, beta0, 0.05);
    CHECK(r.statistic == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("with one tested regressor the F statistic is the squared t statistic") {
    const auto d = random_dataset(26, 2, 37);
    Eigen::VectorXd beta0(1);
    beta0 << -0.3;
    const int n = 26, m = 4;
    Eigen::MatrixXd w(n, m);
    w << d.x, d.z;
    const Eigen::VectorXd coef = oracle::mgs_solve(w, d.y);
    const Eigen::VectorXd resid = d.y - w * coef;
    const double sigma2 = resid.squaredNorm() / (n - m);
    const Eigen::MatrixXd inv = oracle::gauss_jordan_inverse(oracle::matmul(
        Eigen::MatrixXd(w.transpose()), w));
    const double t2 = (coef(0) - beta0(0)) * (coef(0) - beta0(0)) / (sigma2 * inv(0, 0));
    const auto r = sr::f_test(d, beta0, 0.05);
    CHECK(r.statistic == doctest::Approx(t2).epsilon(1e-9));
    CHECK(r.critical == doctest::Approx(sr::f_quantile(0.95, 1, n - m)).epsilon(1e-10));
    CHECK(r.p_value == doctest::Approx(sr::f_sf(r.statistic, 1, n - m)).epsilon(1e-10));
}

TEST_CASE("scaling the outcome leaves the tests of beta0 = 0 unchanged") {
    const auto d = random_dataset(24, 1, 41);
    sr::Dataset scaled = d;
    scaled.y *= 3.7;
    const Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(1);
    CHECK(sr::f_test(d, beta0, 0.05).statistic ==
          doctest::Approx(sr::f_test(scaled, beta0, 0.05).statistic).epsilon(1e-10));
    CHECK(sr::hc_wald_test(d, beta0, sr::HcFlavor::Hc0, 0.05).statistic ==
          doctest::Approx(sr::hc_wald_test(scaled, beta0, sr::HcFlavor::Hc0, 0.05).statistic)
              .epsilon(1e-10));
    const auto pa = sr::pc_test(d, beta0, 0.05, 99, 3);
    const auto pb = sr::pc_test(scaled, beta0, 0.05, 99, 3);
    CHECK(pa.p_value == doctest::Approx(pb.p_value).epsilon(1e-12));
}

TEST_CASE("comparator results label their method") {
    const auto d = random_dataset(20, 1, 43);
    const Eigen::VectorXd b0 = Eigen::VectorXd::Zero(1);
    CHECK(sr::pc_test(d, b0, 0.05, 49, 1).method == "pc");
    CHECK(sr::hc_wald_test(d, b0, sr::HcFlavor::Hc0, 0.05).method == "hc0");
    CHECK(sr::hc_wald_test(d, b0, sr::HcFlavor::Hc1, 0.05).method == "hc1");
    CHECK(sr::hc_wald_test(d, b0, sr::HcFlavor::Hc3, 0.05).method == "hc3");
    CHECK(sr::f_test(d, b0, 0.05).method == "f");
}
