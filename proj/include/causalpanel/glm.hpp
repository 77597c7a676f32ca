#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace causalpanel {

// Regressor matrix with named columns. When has_intercept is set the first
// column must be all ones.
struct DesignMatrix {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
  bool has_intercept = false;

  // Checks shape, finiteness, the intercept column and the no-zero-column
  // rule; throws InvalidDesign / DimensionMismatch.
  void validate() const;

  static DesignMatrix intercept_only(Eigen::Index n);
};

struct LogisticFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd cov_model;     // inverse weighted observed information
  Eigen::MatrixXd cov_sandwich;  // HC0: bread * weight-squared residual meat * bread
  bool converged = false;
  int n_iter = 0;
  double deviance = 0.0;

  double se_model(Eigen::Index j) const { return std::sqrt(cov_model(j, j)); }
  double se_sandwich(Eigen::Index j) const { return std::sqrt(cov_sandwich(j, j)); }
};

struct FitOptions {
  double coef_tol = 1e-10;
  double deviance_tol = 1e-12;
  int max_iter = 100;
  double separation_threshold = 30.0;
  // Optional starting coefficients (e.g. the previous fit in a grid scan).
  std::optional<Eigen::VectorXd> init;
};

// Weighted Bernoulli maximum likelihood via IRLS with step-halving.
// Throws Separation, Singular or NotConverged.
LogisticFit fit_logistic(const DesignMatrix& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd* weights = nullptr,
                         const FitOptions& options = {});

// expit(X beta), strictly inside (0,1). Throws DimensionMismatch.
Eigen::VectorXd predict_prob(const LogisticFit& fit, const DesignMatrix& X);

// Weighted log-likelihood and its gradient at beta; shared by the fitter
// and by diagnostics.
double logistic_loglik(const DesignMatrix& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd* weights, const Eigen::VectorXd& beta);
Eigen::VectorXd logistic_score(const DesignMatrix& X, const Eigen::VectorXd& y,
                               const Eigen::VectorXd* weights,
                               const Eigen::VectorXd& beta);

}  // namespace causalpanel
