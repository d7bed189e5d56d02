#include "sr/distributions.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "sr/errors.hpp"

namespace sr {

namespace {

constexpr double kEps = 1e-15;
constexpr int kMaxIter = 500;

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

// Lanczos approximation (g = 7, n = 9). Implemented here instead of
// std::lgamma because glibc's lgamma writes the signgam global, which is not
// thread safe, and because fixed coefficients keep results identical across
// C libraries.
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

double lower_gamma_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(a * std::log(x) - x - log_gamma(a));
}

// Continued fraction for Q(a,x), modified Lentz.
double upper_gamma_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return h * std::exp(a * std::log(x) - x - log_gamma(a));
}

double inc_beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return h;
}

// Monotone CDF inversion: safeguarded Newton with a maintained bracket.
double invert_cdf(const std::function<double(double)>& cdf,
                  const std::function<double(double)>& pdf, double p, double x0,
                  double lo, double hi) {
    while (cdf(hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw DomainError("quantile bracket expansion failed");
    }
    double x = std::min(std::max(x0, lo), hi);
    for (int it = 0; it < 200; ++it) {
        const double err = cdf(x) - p;
        if (err > 0)
            hi = x;
        else
            lo = x;
        const double dens = pdf(x);
        double next = (dens > 0) ? x - err / dens : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) <= 1e-12 * (1.0 + std::fabs(next))) return next;
        x = next;
    }
    return x;
}

}  // namespace

double log_gamma(double x) {
    require(x > 0.0 || x != std::floor(x), "log_gamma requires non-pole argument");
    if (x < 0.5) {
        // Reflection keeps the series argument above 0.5.
        return std::log(M_PI / std::fabs(std::sin(M_PI * x))) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double acc = kLanczos[0];
    for (int i = 1; i < 9; ++i) acc += kLanczos[i] / (z + i);
    const double t = z + 7.5;
    return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(acc);
}

double reg_lower_gamma(double a, double x) {
    require(a > 0.0, "reg_lower_gamma requires a > 0");
    require(x >= 0.0, "reg_lower_gamma requires x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - upper_gamma_cf(a, x);
}

double reg_upper_gamma(double a, double x) {
    require(a > 0.0, "reg_upper_gamma requires a > 0");
    require(x >= 0.0, "reg_upper_gamma requires x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - lower_gamma_series(a, x);
    return upper_gamma_cf(a, x);
}

double inc_beta(double a, double b, double x) {
    require(a > 0.0 && b > 0.0, "inc_beta requires a, b > 0");
    require(x >= 0.0 && x <= 1.0, "inc_beta requires x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front = std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                                  a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * inc_beta_cf(a, b, x) / a;
    return 1.0 - front * inc_beta_cf(b, a, 1.0 - x) / b;
}

double chi2_cdf(double x, int k) {
    require(k > 0, "chi2_cdf requires k > 0");
    if (x <= 0.0) return 0.0;
    return reg_lower_gamma(0.5 * k, 0.5 * x);
}

double chi2_sf(double x, int k) {
    require(k > 0, "chi2_sf requires k > 0");
    if (x <= 0.0) return 1.0;
    return reg_upper_gamma(0.5 * k, 0.5 * x);
}

double chi2_pdf(double x, int k) {
    require(k > 0, "chi2_pdf requires k > 0");
    if (x <= 0.0) return 0.0;
    const double h = 0.5 * k;
    return std::exp((h - 1.0) * std::log(x) - 0.5 * x - h * std::log(2.0) - log_gamma(h));
}

double chi2_quantile(double p, int k) {
    require(k > 0, "chi2_quantile requires k > 0");
    require(p > 0.0 && p < 1.0, "chi2_quantile requires p in (0, 1)");
    // Wilson-Hilferty starting point.
    const double z = normal_quantile(p);
    const double c = 2.0 / (9.0 * k);
    double x0 = k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
    if (!(x0 > 0.0)) x0 = 0.5;
    return invert_cdf([k](double x) { return chi2_cdf(x, k); },
                      [k](double x) { return chi2_pdf(x, k); }, p, x0, 0.0,
                      std::max(4.0 * x0, 8.0 + 2.0 * k));
}

double f_cdf(double x, int d1, int d2) {
    require(d1 > 0 && d2 > 0, "f_cdf requires positive dof");
    if (x <= 0.0) return 0.0;
    return inc_beta(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

double f_sf(double x, int d1, int d2) {
    require(d1 > 0 && d2 > 0, "f_sf requires positive dof");
    if (x <= 0.0) return 1.0;
    return inc_beta(0.5 * d2, 0.5 * d1, d2 / (d1 * x + d2));
}

double f_pdf(double x, int d1, int d2) {
    require(d1 > 0 && d2 > 0, "f_pdf requires positive dof");
    if (x <= 0.0) return 0.0;
    const double a = 0.5 * d1;
    const double b = 0.5 * d2;
    const double log_beta = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
    return std::exp(a * std::log(static_cast<double>(d1) / d2) + (a - 1.0) * std::log(x) -
                    (a + b) * std::log1p(static_cast<double>(d1) / d2 * x) - log_beta);
}

double f_quantile(double p, int d1, int d2) {
    require(d1 > 0 && d2 > 0, "f_quantile requires positive dof");
    require(p > 0.0 && p < 1.0, "f_quantile requires p in (0, 1)");
    const double x0 = chi2_quantile(p, d1) / d1;
    return invert_cdf([d1, d2](double x) { return f_cdf(x, d1, d2); },
                      [d1, d2](double x) { return f_pdf(x, d1, d2); }, p, x0, 0.0,
                      std::max(8.0, 4.0 * x0));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal_quantile requires p in (0, 1)");
    // Acklam's rational approximation, then one Halley step.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double err = normal_cdf(x) - p;
    const double u = err * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double quantile(const QuantileRequest& req) {
    switch (req.family) {
        case QuantileRequest::Family::ChiSquare:
            return chi2_quantile(req.prob, req.dof1);
        case QuantileRequest::Family::FisherF:
            return f_quantile(req.prob, req.dof1, req.dof2);
        case QuantileRequest::Family::Normal:
            return normal_quantile(req.prob);
    }
    throw DomainError("unknown quantile family");
}

}  // namespace sr
