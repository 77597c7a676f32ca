#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "causalpanel/mathstats.hpp"
#include "causalpanel/panel.hpp"

namespace causalpanel {

// Scalar statistic of a panel. Must be pure and safe for concurrent calls
// (every estimator in this library is); exceptions mark the resample failed.
using PanelEstimator = std::function<double(const Panel&)>;

struct BcaResult {
  double estimate = 0.0;      // statistic on the full panel
  std::size_t n_resamples = 0;  // requested B
  // Successful resample statistics, in resample-index order.
  std::vector<double> resample_estimates;
  double z0 = 0.0;     // bias correction
  double accel = 0.0;  // jackknife acceleration
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double level = 0.0;
  double boot_se = 0.0;  // sample SD of resample_estimates
  std::uint64_t seed = 0;
  std::size_t failures = 0;       // resamples whose estimation errored
  std::size_t jack_failures = 0;  // jackknife groups dropped the same way
  bool degenerate = false;        // all resample estimates identical
  // ci_lo <= estimate <= ci_hi in all non-pathological runs; recorded as a
  // warning flag, never an error.
  bool ci_contains_estimate = true;
};

// BCa confidence interval for `estimator` on `panel`.
//
// Resampling is stratified: each resample draws within the treated and
// control arms separately, preserving both arm sizes exactly, with the RNG
// stream for resample b derived from (seed, b) so any thread schedule gives
// bit-identical results. The acceleration constant comes from a grouped
// (delete-a-block) jackknife with `jack_groups` contiguous blocks stratified
// by arm. Failed resamples are dropped and counted; a failure rate >= 1%
// aborts with EstimatorFailure. All resample estimates identical yields the
// degenerate point interval with a flag instead of an error.
//
// Pre: B >= 100, jack_groups >= 20, level in (0,1); `estimator` must
// succeed on the full panel.
BcaResult bca(const Panel& panel, const PanelEstimator& estimator, std::size_t B,
              double level, std::uint64_t seed, std::size_t jack_groups,
              unsigned threads = 1);

// Equal-width histogram of the resample estimates; counts sum to
// B - failures. Throws DegenerateDistribution on a degenerate result.
std::vector<HistogramBin> bootstrap_histogram(const BcaResult& result,
                                              std::size_t bins);

// The pure BCa pieces, exposed so the arithmetic is testable in isolation.
// z0 = Phi^-1(share of estimates strictly below `estimate`), with the share
// clamped to [1/(B+1), B/(B+1)] where B = estimates.size().
double bca_z0(std::span<const double> estimates, double estimate);
// a = sum(d^3) / (6 * sum(d^2)^1.5) with d_i = mean(jack) - jack_i; 0 when
// the jackknife values are constant.
double bca_accel(std::span<const double> jack_estimates);
// Percentile transform: endpoints are the linear-interpolation quantiles of
// `sorted_estimates` at Phi(z0 + (z0 + z_alpha) / (1 - a*(z0 + z_alpha))).
// With z0 = 0 and a = 0 this is the plain percentile interval.
std::pair<double, double> bca_interval(std::span<const double> sorted_estimates,
                                       double z0, double accel, double level);

}  // namespace causalpanel
