#pragma once

namespace sr {

// Special-function kernels kept in-repo so results are reproducible bit for bit
// with the checked-in sources. Quantiles are accurate to better than 1e-8.

double log_gamma(double x);

// Regularized incomplete gamma P(a,x) and Q(a,x) = 1 - P(a,x), a > 0, x >= 0.
double reg_lower_gamma(double a, double x);
double reg_upper_gamma(double a, double x);

// Regularized incomplete beta I_x(a,b), a,b > 0, x in [0,1].
double inc_beta(double a, double b, double x);

double chi2_cdf(double x, int k);
double chi2_sf(double x, int k);
double chi2_pdf(double x, int k);
double chi2_quantile(double p, int k);

double f_cdf(double x, int d1, int d2);
double f_sf(double x, int d1, int d2);
double f_pdf(double x, int d1, int d2);
double f_quantile(double p, int d1, int d2);

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

struct QuantileRequest {
    enum class Family { ChiSquare, FisherF, Normal };
    Family family = Family::ChiSquare;
    int dof1 = 1;
    int dof2 = 1;  // FisherF only
    double prob = 0.5;
};

double quantile(const QuantileRequest& req);

}  // namespace sr
