#include "sr/montecarlo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "sr/approx.hpp"
#include "sr/comparators.hpp"
#include "sr/errors.hpp"
#include "sr/parallel.hpp"
#include "sr/rng.hpp"
#include "sr/sr_test.hpp"
#include "sr/strata.hpp"

namespace sr {

namespace {

std::string lowered(const std::string& s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool continuous_z(DgpFamily f) {
    return f == DgpFamily::Dgp1Prime || f == DgpFamily::Dgp2Prime || f == DgpFamily::Dgp3Prime;
}

bool exponential_x(DgpFamily f) {
    return f != DgpFamily::Dgp1 && f != DgpFamily::Dgp1Prime;
}

}  // namespace

const char* dgp_name(DgpFamily f) {
    switch (f) {
        case DgpFamily::Dgp1:
            return "dgp1";
        case DgpFamily::Dgp2:
            return "dgp2";
        case DgpFamily::Dgp3:
            return "dgp3";
        case DgpFamily::Dgp1Exp:
            return "dgp1exp";
        case DgpFamily::Dgp1Prime:
            return "dgp1p";
        case DgpFamily::Dgp2Prime:
            return "dgp2p";
        case DgpFamily::Dgp3Prime:
            return "dgp3p";
    }
    return "unknown";
}

std::optional<DgpFamily> parse_dgp(const std::string& name) {
    const std::string s = lowered(name);
    if (s == "dgp1" || s == "1") return DgpFamily::Dgp1;
    if (s == "dgp2" || s == "2") return DgpFamily::Dgp2;
    if (s == "dgp3" || s == "3") return DgpFamily::Dgp3;
    if (s == "dgp1exp" || s == "dgp1-exp") return DgpFamily::Dgp1Exp;
    if (s == "dgp1p" || s == "dgp1'" || s == "dgp1-prime") return DgpFamily::Dgp1Prime;
    if (s == "dgp2p" || s == "dgp2'" || s == "dgp2-prime") return DgpFamily::Dgp2Prime;
    if (s == "dgp3p" || s == "dgp3'" || s == "dgp3-prime") return DgpFamily::Dgp3Prime;
    return std::nullopt;
}

// Draw order is part of the reproducibility contract: the covariate block
// row by row, then the n normals entering x, then the error-specific draws.
Dataset generate(const DgpSpec& spec, std::uint64_t seed) {
    if (spec.p < 2) throw DomainError("dgp requires p >= 2 (intercept plus one covariate)");
    if (spec.n < 2) throw DomainError("dgp requires n >= 2");
    const int n = spec.n;
    const int m = spec.p - 1;  // covariates besides the intercept
    Rng rng(seed);

    Eigen::MatrixXd zraw(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            zraw(i, j) = continuous_z(spec.family) ? rng.next_normal()
                                                   : static_cast<double>(rng.next_poisson_unit());

    Eigen::VectorXd vx(n);
    for (int i = 0; i < n; ++i) vx(i) = rng.next_normal();

    const double root_m = std::sqrt(static_cast<double>(m));
    const Eigen::VectorXd zsum = zraw.rowwise().sum();
    // The index is standardized (mean zero, unit variance) in every family;
    // count-valued covariates need their mean removed, continuous ones are
    // already centered. The heteroskedastic error normalizer assumes this.
    const double zmean = continuous_z(spec.family) ? 0.0 : static_cast<double>(m);
    const Eigen::VectorXd xstar = ((zsum.array() - zmean) / root_m + vx.array()) / std::sqrt(2.0);

    Eigen::VectorXd x(n);
    if (exponential_x(spec.family))
        x = xstar.array().exp();
    else
        x = xstar;

    Eigen::VectorXd u(n);
    switch (spec.family) {
        case DgpFamily::Dgp1:
        case DgpFamily::Dgp1Exp:
        case DgpFamily::Dgp1Prime:
            for (int i = 0; i < n; ++i) u(i) = rng.next_normal();
            break;
        case DgpFamily::Dgp2:
        case DgpFamily::Dgp2Prime:
            for (int i = 0; i < n; ++i)
                u(i) = (zsum(i) - m) / root_m * static_cast<double>(rng.next_sign());
            break;
        case DgpFamily::Dgp3:
        case DgpFamily::Dgp3Prime: {
            const double scale = 1.0 + std::exp(2.0);
            for (int i = 0; i < n; ++i)
                u(i) = rng.next_normal() * std::sqrt((1.0 + x(i) * x(i)) / scale);
            break;
        }
    }

    Dataset d;
    d.y = x * spec.beta + zsum + u;
    d.x = x;
    d.z.resize(n, spec.p);
    d.z.col(0).setOnes();
    d.z.rightCols(m) = zraw;
    validate(d);
    return d;
}

StrataMoments strata_characteristics(const DgpSpec& spec, int reps, std::uint64_t seed,
                                     int threads) {
    if (reps < 1) throw DomainError("strata characteristics need reps >= 1");
    std::vector<double> s_count(reps), largest(reps), log_size(reps);
    parallel_for(reps, threads, [&](std::int64_t r) {
        const Dataset d = generate(spec, derive_seed(seed, static_cast<std::uint64_t>(r)));
        const StrataPartition part = partition_by_z(d.z);
        s_count[r] = static_cast<double>(part.n_strata());
        largest[r] = static_cast<double>(part.max_size());
        log_size[r] = log_group_size(part);
    });
    StrataMoments out;
    out.reps = reps;
    double lmax = log_size[0];
    for (int r = 0; r < reps; ++r) {
        out.mean_s += s_count[r];
        out.mean_max += largest[r];
        out.mean_log_size += log_size[r];
        lmax = std::max(lmax, log_size[r]);
    }
    out.mean_s /= reps;
    out.mean_max /= reps;
    out.mean_log_size /= reps;
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) acc += std::exp(log_size[r] - lmax);
    out.log_mean_size = lmax + std::log(acc) - std::log(static_cast<double>(reps));
    return out;
}

const char* method_label(Method m) {
    switch (m) {
        case Method::Sr:
            return "SR";
        case Method::Sra:
            return "SRa";
        case Method::ApproxSr:
            return "AppSR";
        case Method::Pc:
            return "PC";
        case Method::Hc0:
            return "HC0";
        case Method::Hc1:
            return "HC1";
        case Method::Hc3:
            return "HC3";
        case Method::F:
            return "N-R";
    }
    return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
    const std::string s = lowered(name);
    if (s == "sr") return Method::Sr;
    if (s == "sra") return Method::Sra;
    if (s == "appsr" || s == "approx" || s == "approx-sr" || s == "app-sr") return Method::ApproxSr;
    if (s == "pc") return Method::Pc;
    if (s == "hc0") return Method::Hc0;
    if (s == "hc1") return Method::Hc1;
    if (s == "hc3") return Method::Hc3;
    if (s == "f" || s == "n-r" || s == "nr") return Method::F;
    return std::nullopt;
}

std::vector<PowerPoint> power_curve(const DgpSpec& base, const std::vector<double>& betas,
                                    const std::vector<Method>& methods, const PowerOptions& opt) {
    if (betas.empty()) throw DomainError("power curve needs at least one beta");
    if (methods.empty()) throw DomainError("power curve needs at least one method");
    if (opt.reps < 1) throw DomainError("power curve needs reps >= 1");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");

    const std::size_t n_methods = methods.size();
    const std::int64_t items = static_cast<std::int64_t>(betas.size()) * opt.reps;
    std::vector<double> contrib(static_cast<std::size_t>(items) * n_methods, 0.0);

    // One independent seed lane per (beta, rep) item so results are identical
    // for every thread count.
    parallel_for(items, opt.threads, [&](std::int64_t item) {
        const auto b = static_cast<std::size_t>(item / opt.reps);
        const std::uint64_t item_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(item));
        const std::uint64_t dgp_seed = derive_seed(item_seed, 1);
        const std::uint64_t test_seed = derive_seed(item_seed, 2);
        const std::uint64_t pc_seed = derive_seed(item_seed, 3);

        DgpSpec spec = base;
        spec.beta = betas[b];
        const Dataset d = generate(spec, dgp_seed);
        Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(1);

        SrOptions sropt;
        sropt.alpha = opt.alpha;
        sropt.n_prime = opt.n_prime;
        sropt.seed = test_seed;
        sropt.threads = 1;

        double* slot = contrib.data() + static_cast<std::size_t>(item) * n_methods;
        for (std::size_t m = 0; m < n_methods; ++m) {
            switch (methods[m]) {
                case Method::Sr:
                    slot[m] = sr_test(d, beta0, sropt).phi;
                    break;
                case Method::Sra:
                    slot[m] = sra_test(d, beta0, opt.alpha).rejected ? 1.0 : 0.0;
                    break;
                case Method::ApproxSr:
                    slot[m] = approx_sr_test(d, beta0, sropt).phi;
                    break;
                case Method::Pc:
                    slot[m] =
                        pc_test(d, beta0, opt.alpha, opt.n_prime, pc_seed).rejected ? 1.0 : 0.0;
                    break;
                case Method::Hc0:
                    slot[m] = hc_wald_test(d, beta0, HcFlavor::Hc0, opt.alpha).rejected ? 1.0 : 0.0;
                    break;
                case Method::Hc1:
                    slot[m] = hc_wald_test(d, beta0, HcFlavor::Hc1, opt.alpha).rejected ? 1.0 : 0.0;
                    break;
                case Method::Hc3:
                    slot[m] = hc_wald_test(d, beta0, HcFlavor::Hc3, opt.alpha).rejected ? 1.0 : 0.0;
                    break;
                case Method::F:
                    slot[m] = f_test(d, beta0, opt.alpha).rejected ? 1.0 : 0.0;
                    break;
            }
        }
    });

    std::vector<PowerPoint> out;
    out.reserve(n_methods * betas.size());
    for (std::size_t m = 0; m < n_methods; ++m) {
        for (std::size_t b = 0; b < betas.size(); ++b) {
            double sum = 0.0, sum2 = 0.0;
            for (int r = 0; r < opt.reps; ++r) {
                const auto item = static_cast<std::size_t>(b) * opt.reps + static_cast<std::size_t>(r);
                const double c = contrib[item * n_methods + m];
                sum += c;
                sum2 += c * c;
            }
            PowerPoint pt;
            pt.method = methods[m];
            pt.beta = betas[b];
            pt.n = base.n;
            pt.p = base.p;
            pt.reps = opt.reps;
            const double mean = sum / opt.reps;
            pt.rejection_rate = mean;
            pt.se = std::sqrt(std::max(0.0, sum2 / opt.reps - mean * mean) /
                              static_cast<double>(opt.reps));
            out.push_back(pt);
        }
    }
    return out;
}

}  // namespace sr
