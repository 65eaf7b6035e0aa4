#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spdecouple {

/// Two-sided standard normal quantile for confidence `level` (1.959964 at 0.95).
double normal_two_sided_z(double level);

struct MeanCI {
    std::size_t n = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Sample mean with a normal-approximation interval. Throws InsufficientData if empty.
MeanCI mean_ci(std::span<const double> xs, double level = 0.95);

double sample_variance(std::span<const double> xs);

struct BinomialCI {
    std::size_t successes = 0;
    std::size_t trials = 0;
    double p_hat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Exact (Clopper-Pearson) interval for a binomial proportion.
BinomialCI clopper_pearson(std::size_t successes, std::size_t trials, double level = 0.95);

struct KSResult {
    double statistic = 0.0;  // sup |F_a - F_b|
    double p_value = 1.0;    // asymptotic, with the Stephens small-sample correction
};

/// Kolmogorov distribution tail P(K > lambda) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 lambda^2}.
double kolmogorov_tail(double lambda);

/// Two-sample Kolmogorov-Smirnov test. Throws InsufficientData if either sample is empty.
KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct DecayFit {
    double rate = 0.0;       // -slope of log p_k against k
    double intercept = 0.0;  // of log p_k
    double goodness = 0.0;   // coefficient of determination
    std::size_t points_used = 0;
    bool truncated = false;  // a zero entry cut the fit range short
};

/// Least squares on log p_k over the leading run of positive entries.
/// Throws DegenerateFit with fewer than 3 usable points.
DecayFit fit_decay(std::span<const double> k, std::span<const double> p);

} // namespace spdecouple
