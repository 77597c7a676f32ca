#include "causalpanel/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "causalpanel/errors.hpp"
#include "causalpanel/rng.hpp"

namespace causalpanel {

namespace {

// Runs task(i) for i in [0, count) across `threads` workers with strided
// assignment. Each index is handled exactly once and tasks write to disjoint
// slots, so the schedule never affects the result.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& task) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += n_workers) task(i);
    });
  }
  for (auto& w : workers) w.join();
}

std::vector<std::size_t> arm_indices(const Panel& panel, int arm) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (panel.rows()[i].treatment == arm) idx.push_back(i);
  }
  return idx;
}

// Contiguous block partition of `indices` into `groups` blocks whose sizes
// differ by at most one; block k spans [bounds[k], bounds[k+1]).
std::vector<std::size_t> block_bounds(std::size_t n, std::size_t groups) {
  std::vector<std::size_t> bounds(groups + 1);
  for (std::size_t k = 0; k <= groups; ++k) bounds[k] = k * n / groups;
  return bounds;
}

Panel resample_panel(const Panel& panel, const std::vector<std::size_t>& treated,
                     const std::vector<std::size_t>& control, RandomStream& rng) {
  std::vector<PanelRow> rows;
  rows.reserve(panel.size());
  for (std::size_t j = 0; j < treated.size(); ++j) {
    rows.push_back(panel.rows()[treated[rng.next_below(treated.size())]]);
  }
  for (std::size_t j = 0; j < control.size(); ++j) {
    rows.push_back(panel.rows()[control[rng.next_below(control.size())]]);
  }
  // Drawing with replacement duplicates unit ids; renumber to keep the
  // Panel uniqueness invariant.
  for (std::size_t j = 0; j < rows.size(); ++j) rows[j].unit_id = std::to_string(j);
  return Panel(panel.schema(), std::move(rows), "resample");
}

}  // namespace

double bca_z0(std::span<const double> estimates, double estimate) {
  const auto b = static_cast<double>(estimates.size());
  double below = 0.0;
  for (const double e : estimates) {
    if (e < estimate) below += 1.0;
  }
  const double share = std::clamp(below / b, 1.0 / (b + 1.0), b / (b + 1.0));
  return normal_quantile(share);
}

double bca_accel(std::span<const double> jack_estimates) {
  const double m = mean(jack_estimates);
  double d2 = 0.0, d3 = 0.0;
  for (const double j : jack_estimates) {
    const double d = m - j;
    d2 += d * d;
    d3 += d * d * d;
  }
  if (d2 == 0.0) return 0.0;
  return d3 / (6.0 * std::pow(d2, 1.5));
}

std::pair<double, double> bca_interval(std::span<const double> sorted_estimates,
                                       double z0, double accel, double level) {
  const double alpha = 0.5 * (1.0 - level);
  const auto adjusted = [&](double z_alpha) {
    const double z = z0 + z_alpha;
    const double denom = 1.0 - accel * z;
    // A non-positive denominator means the transform left its domain
    // (extreme skew); pin the percentile to the matching tail.
    const double t = denom > 0.0 ? z0 + z / denom : (z > 0.0 ? 8.0 : -8.0);
    return normal_cdf(t);
  };
  const double a_lo = adjusted(normal_quantile(alpha));
  const double a_hi = adjusted(normal_quantile(1.0 - alpha));
  return {quantile_linear(sorted_estimates, a_lo),
          quantile_linear(sorted_estimates, a_hi)};
}

BcaResult bca(const Panel& panel, const PanelEstimator& estimator, std::size_t B,
              double level, std::uint64_t seed, std::size_t jack_groups,
              unsigned threads) {
  if (B < 100) {
    raise(ErrorKind::invalid_config, "need B >= 100, got " + std::to_string(B));
  }
  if (jack_groups < 20) {
    raise(ErrorKind::invalid_config,
          "need jack_groups >= 20, got " + std::to_string(jack_groups));
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    raise(ErrorKind::invalid_config, "confidence level must be inside (0,1)");
  }
  panel.require_both_arms();

  BcaResult result;
  result.n_resamples = B;
  result.level = level;
  result.seed = seed;
  result.estimate = estimator(panel);

  const std::vector<std::size_t> treated = arm_indices(panel, 1);
  const std::vector<std::size_t> control = arm_indices(panel, 0);

  // Resamples: slot per index, aggregated in index order afterwards, so the
  // thread schedule cannot reorder anything.
  std::vector<double> values(B, 0.0);
  std::vector<std::uint8_t> ok(B, 0);
  parallel_for(B, threads, [&](std::size_t b) {
    RandomStream rng = RandomStream::for_index(seed, b);
    try {
      values[b] = estimator(resample_panel(panel, treated, control, rng));
      ok[b] = 1;
    } catch (const Error&) {
      ok[b] = 0;
    }
  });

  result.resample_estimates.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    if (ok[b]) {
      result.resample_estimates.push_back(values[b]);
    } else {
      ++result.failures;
    }
  }
  if (result.failures * 100 >= B) {
    raise(ErrorKind::estimator_failure,
          std::to_string(result.failures) + " of " + std::to_string(B) +
              " resamples failed estimation (>= 1%)");
  }

  const auto& est = result.resample_estimates;
  const auto [min_it, max_it] = std::minmax_element(est.begin(), est.end());
  if (*min_it == *max_it) {
    result.degenerate = true;
    result.ci_lo = result.ci_hi = *min_it;
    result.boot_se = 0.0;
    result.ci_contains_estimate =
        result.ci_lo <= result.estimate && result.estimate <= result.ci_hi;
    return result;
  }
  result.boot_se = sample_stddev(est);
  result.z0 = bca_z0(est, result.estimate);

  // Grouped jackknife, stratified by arm: blocks are apportioned to the two
  // arms by size (each arm keeps at least one block).
  const std::size_t groups = std::min(jack_groups, panel.size());
  std::size_t g_treated = static_cast<std::size_t>(std::lround(
      static_cast<double>(groups) * static_cast<double>(treated.size()) /
      static_cast<double>(panel.size())));
  g_treated = std::clamp<std::size_t>(g_treated, 1, treated.size());
  std::size_t g_control = groups > g_treated ? groups - g_treated : 1;
  g_control = std::clamp<std::size_t>(g_control, 1, control.size());

  const std::vector<std::size_t> t_bounds = block_bounds(treated.size(), g_treated);
  const std::vector<std::size_t> c_bounds = block_bounds(control.size(), g_control);
  const std::size_t total_groups = g_treated + g_control;

  std::vector<double> jack(total_groups, 0.0);
  std::vector<std::uint8_t> jack_ok(total_groups, 0);
  parallel_for(total_groups, threads, [&](std::size_t g) {
    std::vector<std::uint8_t> drop(panel.size(), 0);
    if (g < g_treated) {
      for (std::size_t j = t_bounds[g]; j < t_bounds[g + 1]; ++j) {
        drop[treated[j]] = 1;
      }
    } else {
      const std::size_t k = g - g_treated;
      for (std::size_t j = c_bounds[k]; j < c_bounds[k + 1]; ++j) {
        drop[control[j]] = 1;
      }
    }
    std::vector<PanelRow> rows;
    rows.reserve(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i) {
      if (!drop[i]) rows.push_back(panel.rows()[i]);
    }
    try {
      jack[g] = estimator(Panel(panel.schema(), std::move(rows), "jackknife"));
      jack_ok[g] = 1;
    } catch (const Error&) {
      jack_ok[g] = 0;
    }
  });

  std::vector<double> jack_values;
  jack_values.reserve(total_groups);
  for (std::size_t g = 0; g < total_groups; ++g) {
    if (jack_ok[g]) {
      jack_values.push_back(jack[g]);
    } else {
      ++result.jack_failures;
    }
  }
  if (jack_values.size() < 20) {
    raise(ErrorKind::estimator_failure,
          "jackknife left fewer than 20 usable groups (" +
              std::to_string(result.jack_failures) + " failed)");
  }
  result.accel = bca_accel(jack_values);

  std::vector<double> sorted = est;
  std::sort(sorted.begin(), sorted.end());
  std::tie(result.ci_lo, result.ci_hi) =
      bca_interval(sorted, result.z0, result.accel, level);
  result.ci_contains_estimate =
      result.ci_lo <= result.estimate && result.estimate <= result.ci_hi;
  return result;
}

std::vector<HistogramBin> bootstrap_histogram(const BcaResult& result,
                                              std::size_t bins) {
  if (result.degenerate || result.resample_estimates.empty()) {
    raise(ErrorKind::degenerate_distribution,
          "resample distribution is a point mass; no histogram");
  }
  return histogram(result.resample_estimates, bins);
}

}  // namespace causalpanel
