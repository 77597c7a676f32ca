#include "causalpanel/mathstats.hpp"

#include <algorithm>
#include <cmath>

#include "causalpanel/errors.hpp"

namespace causalpanel {

double expit(double x) {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    raise(ErrorKind::invalid_config, "logit requires p in (0,1)");
  }
  return std::log(p / (1.0 - p));
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    raise(ErrorKind::invalid_config, "normal_quantile requires p in (0,1)");
  }

  // Acklam's rational approximation (relative error < 1.15e-9).
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
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
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against the exact CDF brings the result to near
  // machine precision.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double quantile_linear(std::span<const double> values, double q) {
  if (values.empty()) {
    raise(ErrorKind::invalid_config, "quantile of empty range");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    raise(ErrorKind::invalid_config, "quantile level outside [0,1]");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) raise(ErrorKind::invalid_config, "mean of empty range");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

double sample_stddev(std::span<const double> values) {
  return std::sqrt(sample_variance(values));
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size() || values.empty()) {
    raise(ErrorKind::dimension_mismatch, "weighted_mean length mismatch");
  }
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    swx += weights[i] * values[i];
  }
  if (sw <= 0.0) raise(ErrorKind::invalid_config, "weights sum to zero");
  return swx / sw;
}

double weighted_variance(std::span<const double> values, std::span<const double> weights) {
  const double m = weighted_mean(values, weights);
  double sw = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    ss += weights[i] * (values[i] - m) * (values[i] - m);
  }
  return ss / sw;
}

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty() || bins == 0) {
    raise(ErrorKind::invalid_config, "histogram needs values and bins");
  }
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx > mn)) {
    raise(ErrorKind::degenerate_distribution, "histogram range is a single point");
  }
  std::vector<HistogramBin> out(bins);
  const double width = (mx - mn) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = mn + width * static_cast<double>(b);
    out[b].hi = (b + 1 == bins) ? mx : mn + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    auto idx = static_cast<std::size_t>((v - mn) / width);
    if (idx >= bins) idx = bins - 1;
    ++out[idx].count;
  }
  return out;
}

}  // namespace causalpanel
