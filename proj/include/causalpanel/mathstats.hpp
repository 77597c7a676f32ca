#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace causalpanel {

// Smallest probability admitted by expit(); keeps fitted probabilities
// strictly inside (0,1) so downstream ratios stay finite.
inline constexpr double kProbEps = 1e-15;

// Numerically stable logistic function, clamped into [kProbEps, 1-kProbEps].
double expit(double x);

// Log-odds of p. Requires p in (0,1).
double logit(double p);

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile (inverse CDF). Requires p in (0,1).
// Acklam's rational approximation polished with one Halley step.
double normal_quantile(double p);

// Linear-interpolation quantile between order statistics: with sorted
// values x[0..n-1] and h = (n-1)*q, returns x[floor(h)] plus the
// fractional part of h times the gap to the next order statistic
// (the R type-7 definition). q in [0,1].
double quantile_linear(std::span<const double> values, double q);

double mean(std::span<const double> values);
// Sample variance (n-1 denominator).
double sample_variance(std::span<const double> values);
double sample_stddev(std::span<const double> values);

// Weighted mean and population-style weighted variance
// (sum w*(x-m)^2 / sum w).
double weighted_mean(std::span<const double> values, std::span<const double> weights);
double weighted_variance(std::span<const double> values, std::span<const double> weights);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

// Equal-width bins over [min(values), max(values)]; the top bin is closed
// so counts always sum to values.size(). Requires a non-degenerate range.
std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins);

}  // namespace causalpanel
