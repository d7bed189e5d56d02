#include "sr/comparators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "sr/distributions.hpp"
#include "sr/errors.hpp"
#include "sr/parallel.hpp"
#include "sr/regression.hpp"
#include "sr/rng.hpp"
#include "sr/sr_test.hpp"

namespace sr {

namespace {

constexpr std::uint64_t kEnumerationFloor = 10000;
constexpr double kLeverageTol = 1e-8;

std::optional<std::uint64_t> factorial64(int n) {
    std::uint64_t f = 1;
    for (std::uint64_t i = 2; i <= static_cast<std::uint64_t>(n); ++i) {
        if (f > std::numeric_limits<std::uint64_t>::max() / i) return std::nullopt;
        f *= i;
    }
    return f;
}

// Robust Wald form on an already z-residualized input vector.
double residual_form(const Eigen::MatrixXd& xres, const Eigen::VectorXd& w, bool* generalized,
                     bool* degenerate) {
    const Eigen::Index n = xres.rows();
    const Eigen::Index k = xres.cols();
    if (k == 1) {
        const double* xr = xres.col(0).data();
        double b = 0.0, a = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double xw = xr[i] * w(i);
            b += xw;
            a += xw * xw;
        }
        if (a == 0.0) {
            *degenerate = true;
            return 0.0;
        }
        return b * b / a;
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = xres.row(i).transpose();
        b.noalias() += w(i) * row;
        a.noalias() += (w(i) * w(i)) * (row * row.transpose());
    }
    return psd_quadratic_form(a, b, generalized, degenerate);
}

}  // namespace

ComparatorResult pc_test(const Dataset& d, const Eigen::VectorXd& beta0, double alpha,
                         int n_draws, std::uint64_t seed, int threads) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (n_draws < 1) throw DomainError("n_draws must be at least 1");
    const Eigen::VectorXd v = ar_offset(d, beta0);
    const auto n = static_cast<int>(d.y.size());

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zqr(d.z);
    zqr.setThreshold(1e-10);
    if (zqr.rank() < d.z.cols())
        throw RankDeficient(static_cast<int>(zqr.rank()), static_cast<int>(d.z.cols()));
    const Eigen::VectorXd fitted = d.z * zqr.solve(v);
    const Eigen::VectorXd ehat = v - fitted;
    const Eigen::MatrixXd xres = d.x - d.z * zqr.solve(d.x);

    std::atomic<bool> generalized{false};
    bool obs_generalized = false, obs_degenerate = false;
    const double observed = residual_form(xres, ehat, &obs_generalized, &obs_degenerate);
    if (obs_degenerate)
        throw DegenerateStatistic("residualized x is zero wherever the residuals are not");
    if (obs_generalized) generalized.store(true);

    // One replica: permute the residuals over all rows, rebuild the
    // pseudo-outcome, re-residualize, re-evaluate.
    auto replica = [&](std::span<const std::int32_t> pi) {
        Eigen::VectorXd pseudo(n);
        for (int i = 0; i < n; ++i) pseudo(i) = fitted(i) + ehat(pi[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd e2 = pseudo - d.z * zqr.solve(pseudo);
        bool gen = false, degen = false;
        const double t = residual_form(xres, e2, &gen, &degen);
        if (gen) generalized.store(true, std::memory_order_relaxed);
        return t;
    };

    const auto total = factorial64(n);
    const std::uint64_t cap =
        std::max<std::uint64_t>(static_cast<std::uint64_t>(n_draws), kEnumerationFloor);
    std::vector<double> stats;
    bool enumerated = false;
    if (total && *total <= cap) {
        enumerated = true;
        stats.reserve(static_cast<std::size_t>(*total));
        std::vector<std::int32_t> pi = identity_permutation(n);
        do {
            stats.push_back(replica({pi.data(), pi.size()}));
        } while (std::next_permutation(pi.begin(), pi.end()));
    } else {
        stats.assign(static_cast<std::size_t>(n_draws) + 1, 0.0);
        stats[0] = observed;
        parallel_for(n_draws, threads, [&](std::int64_t j) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j) + 1));
            std::vector<std::int32_t> pi = identity_permutation(n);
            shuffle_span(std::span<std::int32_t>(pi), rng);
            stats[static_cast<std::size_t>(j) + 1] = replica({pi.data(), pi.size()});
        });
    }

    ComparatorResult r;
    r.method = "pc";
    r.alpha = alpha;
    r.seed = seed;
    r.enumerated = enumerated;
    r.n_replicas = static_cast<int>(stats.size()) - (enumerated ? 0 : 1);
    r.statistic = observed;
    r.p_value = permutation_p_value(stats);
    r.critical = phi_alpha(stats, alpha).critical;
    r.rejected = r.p_value <= alpha;
    r.generalized_inverse = generalized.load();
    return r;
}

ComparatorResult hc_wald_test(const Dataset& d, const Eigen::VectorXd& beta0, HcFlavor flavor,
                              double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (beta0.size() != d.x.cols())
        throw DimensionMismatch("beta0 length differs from the x column count");
    const auto n = static_cast<int>(d.y.size());
    const auto k = static_cast<int>(d.x.cols());
    const auto m = static_cast<int>(d.x.cols() + d.z.cols());

    Eigen::MatrixXd w(n, m);
    w << d.x, d.z;
    const OlsFit fit = ols(w, d.y, flavor == HcFlavor::Hc3);

    Eigen::VectorXd weights = fit.residuals.array().square();
    if (flavor == HcFlavor::Hc1) {
        if (n <= m) throw DomainError("HC1 needs n > k + p");
        weights *= static_cast<double>(n) / (n - m);
    } else if (flavor == HcFlavor::Hc3) {
        for (int i = 0; i < n; ++i) {
            const double h = fit.leverage(i);
            if (h >= 1.0 - kLeverageTol)
                throw LeverageOne("leverage of row " + std::to_string(i) +
                                  " is 1; HC3 weights are undefined");
            weights(i) /= (1.0 - h) * (1.0 - h);
        }
    }

    const Eigen::MatrixXd scaled = w.array().colwise() * weights.array().sqrt();
    const Eigen::MatrixXd meat = scaled.transpose() * scaled;
    const Eigen::LLT<Eigen::MatrixXd> llt(w.transpose() * w);
    const Eigen::MatrixXd v = llt.solve(llt.solve(meat).transpose());

    ComparatorResult r;
    switch (flavor) {
        case HcFlavor::Hc0:
            r.method = "hc0";
            break;
        case HcFlavor::Hc1:
            r.method = "hc1";
            break;
        case HcFlavor::Hc3:
            r.method = "hc3";
            break;
    }
    r.alpha = alpha;
    const Eigen::VectorXd delta = fit.coef.head(k) - beta0;
    bool gen = false, degen = false;
    r.statistic = psd_quadratic_form(v.topLeftCorner(k, k), delta, &gen, &degen);
    if (degen) throw DegenerateStatistic("robust covariance of the tested block is zero");
    r.generalized_inverse = gen;
    r.critical = chi2_quantile(1.0 - alpha, k);
    r.p_value = chi2_sf(r.statistic, k);
    r.rejected = r.p_value <= alpha;
    return r;
}

ComparatorResult f_test(const Dataset& d, const Eigen::VectorXd& beta0, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const auto n = static_cast<int>(d.y.size());
    const auto k = static_cast<int>(d.x.cols());
    const auto m = static_cast<int>(d.x.cols() + d.z.cols());
    if (n <= m) throw DomainError("F test needs n > k + p");

    Eigen::MatrixXd w(n, m);
    w << d.x, d.z;
    const double rss_u = ols(w, d.y).residuals.squaredNorm();
    const double rss_r = ols(d.z, ar_offset(d, beta0)).residuals.squaredNorm();

    ComparatorResult r;
    r.method = "f";
    r.alpha = alpha;
    const int df2 = n - m;
    const double numerator = std::max(0.0, rss_r - rss_u) / k;
    r.statistic = rss_u > 0.0 ? numerator / (rss_u / df2)
                              : std::numeric_limits<double>::infinity();
    r.critical = f_quantile(1.0 - alpha, k, df2);
    r.p_value = f_sf(r.statistic, k, df2);
    r.rejected = r.p_value <= alpha;
    return r;
}

}  // namespace sr
