#include "causalpanel/gest.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

#include "causalpanel/errors.hpp"
#include "causalpanel/glm.hpp"
#include "design.hpp"

namespace causalpanel {

namespace {

constexpr double kCoefTol = 1e-6;   // defining estimating-equation tolerance
constexpr double kWidthTol = 1e-5;  // stop once the bracket is this narrow
constexpr int kMaxBisectFits = 200; // hard cap; never reached in practice

std::string format_psi(double psi) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", psi);
  return buf;
}

// Treatment model A ~ intercept + L + y_star with the last column left for
// the caller to overwrite per candidate psi.
DesignMatrix treatment_design(const Panel& panel) {
  DesignMatrix X = detail::covariate_design(panel, 1);
  X.columns.push_back("y_star");
  return X;
}

struct IndepFit {
  double coef = 0.0;
  double se = 0.0;
  Eigen::VectorXd beta;
};

// Refits the treatment model at `psi`, reusing `X` storage and warm-starting
// from `init` when available.
IndepFit fit_at(double psi, const Panel& panel, DesignMatrix& X,
                const Eigen::VectorXd& a,
                const std::optional<Eigen::VectorXd>& init) {
  X.values.col(X.values.cols() - 1) = residual_outcome(psi, panel);
  FitOptions options;
  options.init = init;
  LogisticFit fit;
  try {
    fit = fit_logistic(X, a, nullptr, options);
  } catch (const Error& e) {
    raise(e.kind(),
          "treatment model at psi=" + format_psi(psi) + ": " + e.what());
  }
  const Eigen::Index last = X.values.cols() - 1;
  return {fit.coefficients[last], fit.se_model(last), fit.coefficients};
}

}  // namespace

std::vector<double> GestGrid::points() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
    raise(ErrorKind::invalid_config, "grid bounds must be finite");
  }
  if (!(lo < hi)) {
    raise(ErrorKind::invalid_config, "grid needs lo < hi");
  }
  if (!(step > 0.0)) {
    raise(ErrorKind::invalid_config, "grid needs step > 0");
  }
  const double span = (hi - lo) / step;
  if (span > 100000.0) {
    raise(ErrorKind::invalid_config, "grid would exceed 100,000 points");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(span) + 2);
  const double slack = step * 1e-9;
  for (std::size_t i = 0;; ++i) {
    const double psi = lo + static_cast<double>(i) * step;
    if (psi > hi + slack) break;
    out.push_back(psi);
  }
  return out;
}

Eigen::VectorXd residual_outcome(double psi, const Panel& panel) {
  Eigen::VectorXd y_star(static_cast<Eigen::Index>(panel.size()));
  for (Eigen::Index i = 0; i < y_star.size(); ++i) {
    const auto& row = panel.rows()[static_cast<std::size_t>(i)];
    y_star[i] = row.outcome - psi * row.treatment;
  }
  return y_star;
}

std::vector<GestCurvePoint> gest_curve(const Panel& panel, const GestGrid& grid) {
  const std::vector<double> psis = grid.points();
  panel.require_both_arms();

  DesignMatrix X = treatment_design(panel);
  const Eigen::VectorXd a = detail::treatment_vector(panel);

  std::vector<GestCurvePoint> curve;
  curve.reserve(psis.size());
  std::optional<Eigen::VectorXd> warm;
  for (const double psi : psis) {
    const IndepFit fit = fit_at(psi, panel, X, a, warm);
    curve.push_back({psi, fit.coef, fit.se});
    warm = fit.beta;
  }
  return curve;
}

GestResult solve_psi(const std::vector<GestCurvePoint>& curve, const Panel& panel) {
  if (curve.size() < 2) {
    raise(ErrorKind::invalid_config, "curve needs at least two grid points");
  }

  // Sign changes on the grid, including exact zeros (treated as on-grid
  // roots with a degenerate bracket).
  struct Crossing {
    std::size_t lo;
    bool exact;
  };
  std::vector<Crossing> crossings;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].indep_coef == 0.0) {
      crossings.push_back({i, true});
    } else if (i + 1 < curve.size() && curve[i + 1].indep_coef != 0.0 &&
               std::signbit(curve[i].indep_coef) !=
                   std::signbit(curve[i + 1].indep_coef)) {
      crossings.push_back({i, false});
    }
  }
  if (crossings.empty()) {
    raise(ErrorKind::no_crossing,
          "independence coefficient has no sign change on [" +
              format_psi(curve.front().psi) + ", " + format_psi(curve.back().psi) +
              "]; the effect lies outside the grid — widen it");
  }

  GestResult result;
  result.curve = curve;
  result.multiple_crossings = crossings.size() > 1;
  result.treatment_model_terms = treatment_design(panel).columns;

  const Crossing first = crossings.front();
  if (first.exact) {
    result.psi_hat = curve[first.lo].psi;
    result.indep_coef_at_hat = 0.0;
    result.crossing_bracket = {curve[first.lo].psi, curve[first.lo].psi};
    return result;
  }

  double lo = curve[first.lo].psi;
  double hi = curve[first.lo + 1].psi;
  double f_lo = curve[first.lo].indep_coef;
  result.crossing_bracket = {lo, hi};

  DesignMatrix X = treatment_design(panel);
  const Eigen::VectorXd a = detail::treatment_vector(panel);
  std::optional<Eigen::VectorXd> warm;

  double mid = 0.5 * (lo + hi);
  double f_mid = 0.0;
  for (int i = 0; i < kMaxBisectFits; ++i) {
    mid = 0.5 * (lo + hi);
    const IndepFit fit = fit_at(mid, panel, X, a, warm);
    warm = fit.beta;
    f_mid = fit.coef;
    ++result.refine_fits;
    if (std::abs(f_mid) < kCoefTol) break;
    if (hi - lo < kWidthTol) break;
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }

  result.psi_hat = mid;
  result.indep_coef_at_hat = std::abs(f_mid);
  result.refined = true;
  return result;
}

GestResult estimate_psi(const Panel& panel, const GestGrid& grid) {
  return solve_psi(gest_curve(panel, grid), panel);
}

}  // namespace causalpanel
