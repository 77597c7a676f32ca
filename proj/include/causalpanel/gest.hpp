#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "causalpanel/panel.hpp"

namespace causalpanel {

// Candidate grid for the structural parameter psi. Points are
// lo, lo + step, ... up to and including hi (when hi lands on the lattice);
// the default spans [0.00, 0.50] in 0.005 increments, 101 points.
struct GestGrid {
  double lo = 0.0;
  double hi = 0.5;
  double step = 0.005;

  // Materializes the lattice; throws InvalidConfig on lo >= hi, step <= 0,
  // non-finite bounds or more than 100,000 points.
  std::vector<double> points() const;
};

// One evaluation of the conditional-independence criterion: the coefficient
// of the residualized outcome Y*(psi) = Y - psi*A in the logistic treatment
// model A ~ intercept + L + Y*(psi), with its model-based Wald SE.
struct GestCurvePoint {
  double psi = 0.0;
  double indep_coef = 0.0;
  double se = 0.0;
};

struct GestResult {
  double psi_hat = 0.0;
  // |indep_coef| at psi_hat; < 1e-6 whenever a refit was performed.
  double indep_coef_at_hat = 0.0;
  std::vector<GestCurvePoint> curve;
  // Grid pair bracketing the sign change (equal when the root lies exactly
  // on a grid point).
  std::pair<double, double> crossing_bracket{0.0, 0.0};
  bool refined = false;            // bisection ran (root was off-grid)
  bool multiple_crossings = false; // curve crossed zero more than once
  int refine_fits = 0;             // treatment-model refits during bisection
  std::vector<std::string> treatment_model_terms;
};

// Y - psi*A per row; control rows keep Y exactly. The result is a real
// vector (it can be negative) and is used as a continuous regressor.
Eigen::VectorXd residual_outcome(double psi, const Panel& panel);

// Fits the treatment model at every grid point and records the Y*(psi)
// coefficient and SE. Grid fits are warm-started from the neighbouring
// solution, so the scan is deterministic and cheap. Throws the underlying
// glm error tagged with the offending psi.
std::vector<GestCurvePoint> gest_curve(const Panel& panel, const GestGrid& grid);

// Locates the zero crossing of indep_coef on the curve and refines it by
// bisection, refitting the treatment model at each midpoint until
// |indep_coef| < 1e-6 (a bracket-width floor guards termination). With
// several crossings the smallest-psi root wins and multiple_crossings is
// set. Throws NoCrossing when the curve is entirely one-signed — the effect
// lies outside the grid and the caller should widen it.
GestResult solve_psi(const std::vector<GestCurvePoint>& curve, const Panel& panel);

// Convenience: gest_curve followed by solve_psi.
GestResult estimate_psi(const Panel& panel, const GestGrid& grid = {});

}  // namespace causalpanel
