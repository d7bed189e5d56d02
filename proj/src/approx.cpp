#include "sr/approx.hpp"

#include <algorithm>
#include <cmath>

#include "sr/errors.hpp"
#include "sr/regression.hpp"

namespace sr {

namespace {

double abs_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    const double va = ac.squaredNorm();
    const double vb = bc.squaredNorm();
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return std::fabs(ac.dot(bc)) / std::sqrt(va * vb);
}

}  // namespace

Eigen::VectorXd fitted_index(const Dataset& d) {
    validate(d);
    Eigen::MatrixXd w(d.y.size(), d.x.cols() + d.z.cols());
    w << d.x, d.z;
    const OlsFit fit = ols(w, d.y);
    return d.z * fit.coef.tail(d.z.cols());
}

double index_correlation(const Dataset& d) {
    const Eigen::VectorXd index = fitted_index(d);
    double best = 0.0;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j)
        best = std::max(best, abs_correlation(d.x.col(j), index));
    return best;
}

int data_driven_s(const Dataset& d) {
    const auto n = static_cast<double>(d.y.size());
    const double corr = index_correlation(d);
    const double root = std::sqrt(n);
    const double denom = corr > 0.0 ? std::min(root, 1.0 + 2.0 / corr) : root;
    const int s = static_cast<int>(std::floor(n / denom));
    return std::max(1, s);
}

IndexDiscretization discretize_index(const Eigen::VectorXd& index, int s_bins) {
    if (index.size() == 0) throw DomainError("cannot discretize an empty index");
    if (s_bins < 1) throw DomainError("bin count must be at least 1");
    IndexDiscretization out;
    out.index = index;
    const double lo = index.minCoeff();
    const double hi = index.maxCoeff();
    if (lo == hi) {
        out.degenerate = true;
        out.s_bins = 1;
        out.edges.resize(2);
        out.edges << lo, hi;
        out.bin.assign(static_cast<std::size_t>(index.size()), 0);
        return out;
    }
    out.s_bins = s_bins;
    out.edges.resize(s_bins + 1);
    for (int j = 0; j <= s_bins; ++j)
        out.edges(j) = lo + (hi - lo) * static_cast<double>(j) / s_bins;
    out.edges(s_bins) = hi;
    out.bin.resize(static_cast<std::size_t>(index.size()));
    for (Eigen::Index i = 0; i < index.size(); ++i) {
        const auto raw = static_cast<int>(std::floor((index(i) - lo) / (hi - lo) * s_bins));
        out.bin[static_cast<std::size_t>(i)] =
            static_cast<std::int32_t>(std::clamp(raw, 0, s_bins - 1));
    }
    return out;
}

TestResult approx_sr_test(const Dataset& d, const Eigen::VectorXd& beta0, const SrOptions& opt,
                          int s_bins) {
    const double corr = index_correlation(d);
    const int requested = s_bins > 0 ? s_bins : data_driven_s(d);
    const IndexDiscretization disc = discretize_index(fitted_index(d), requested);
    const StrataPartition partition = partition_by_labels(disc.bin);

    TestResult r = sr_test_with_partition(d, beta0, partition, opt, "approx-sr");
    ApproxDetail detail;
    detail.s_requested = requested;
    detail.s_realized = partition.n_strata();
    detail.correlation = corr;
    detail.degenerate = disc.degenerate;
    detail.edges.assign(disc.edges.data(), disc.edges.data() + disc.edges.size());
    r.approx = std::move(detail);
    return r;
}

}  // namespace sr
