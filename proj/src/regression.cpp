#include "sr/regression.hpp"

#include <Eigen/QR>

#include "sr/errors.hpp"

namespace sr {

namespace {

constexpr std::size_t kCompensatedThreshold = 10000;

double stratum_mean(const Eigen::VectorXd& v, const std::vector<std::int32_t>& members) {
    if (members.size() > kCompensatedThreshold) {
        // Kahan summation: plain accumulation loses digits on very large strata.
        double sum = 0.0, carry = 0.0;
        for (const auto r : members) {
            const double item = v(r) - carry;
            const double next = sum + item;
            carry = (next - sum) - item;
            sum = next;
        }
        return sum / static_cast<double>(members.size());
    }
    double sum = 0.0;
    for (const auto r : members) sum += v(r);
    return sum / static_cast<double>(members.size());
}

}  // namespace

Eigen::VectorXd within_demean(const Eigen::VectorXd& v, const StrataPartition& p) {
    if (v.size() != p.n()) throw DimensionMismatch("vector length differs from partition size");
    Eigen::VectorXd out(v.size());
    for (const auto& members : p.rows) {
        const double mean = stratum_mean(v, members);
        for (const auto r : members) out(r) = v(r) - mean;
    }
    return out;
}

Eigen::MatrixXd within_demean_cols(const Eigen::MatrixXd& m, const StrataPartition& p) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        out.col(c) = within_demean(m.col(c), p);
    return out;
}

DemeanedDesign demean_design(const Eigen::MatrixXd& x, const StrataPartition& p) {
    DemeanedDesign d;
    d.xt = within_demean_cols(x, p);
    d.gram = d.xt.transpose() * d.xt;
    d.partition = p;
    return d;
}

OlsFit ols(const Eigen::MatrixXd& w, const Eigen::VectorXd& y, bool with_leverage,
           double rank_tol) {
    if (w.rows() != y.size()) throw DimensionMismatch("design and outcome row counts differ");
    if (w.rows() < w.cols()) throw RankDeficient(static_cast<int>(w.rows()), static_cast<int>(w.cols()));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
    qr.setThreshold(rank_tol);
    if (qr.rank() < w.cols()) throw RankDeficient(static_cast<int>(qr.rank()), static_cast<int>(w.cols()));

    OlsFit fit;
    fit.rank = static_cast<int>(qr.rank());
    fit.coef = qr.solve(y);
    fit.fitted = w * fit.coef;
    fit.residuals = y - fit.fitted;
    if (with_leverage) {
        // h_ii = row norm of Q1 squared; obtained as rows of (W P) R^{-1}
        // without materializing Q.
        const Eigen::MatrixXd r =
            qr.matrixR().topLeftCorner(w.cols(), w.cols()).triangularView<Eigen::Upper>();
        Eigen::MatrixXd m = w * qr.colsPermutation();
        r.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(m);
        fit.leverage = m.rowwise().squaredNorm();
    }
    return fit;
}

}  // namespace sr
