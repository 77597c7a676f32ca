#include "causalpanel/glm.hpp"

#include <cmath>

#include "causalpanel/errors.hpp"
#include "causalpanel/mathstats.hpp"

namespace causalpanel {

namespace {

Eigen::VectorXd expit_vec(const Eigen::VectorXd& eta) {
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) p[i] = expit(eta[i]);
  return p;
}

// -2 * weighted Bernoulli log-likelihood, evaluated from the linear
// predictor for stability: log(p) = -log1p(exp(-eta)).
double deviance_from_eta(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                         const Eigen::VectorXd* w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    const double log_p = e > 0.0 ? -std::log1p(std::exp(-e)) : e - std::log1p(std::exp(e));
    const double log_q = e > 0.0 ? -e - std::log1p(std::exp(-e)) : -std::log1p(std::exp(e));
    const double term = y[i] * log_p + (1.0 - y[i]) * log_q;
    ll += w ? (*w)[i] * term : term;
  }
  return -2.0 * ll;
}

void check_weights(const Eigen::VectorXd& w, Eigen::Index n) {
  if (w.size() != n) {
    raise(ErrorKind::dimension_mismatch, "weight vector length mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      raise(ErrorKind::invalid_design, "weights must be finite and non-negative");
    }
    total += w[i];
  }
  if (total <= 0.0) {
    raise(ErrorKind::invalid_design, "weights must not all be zero");
  }
}

}  // namespace

void DesignMatrix::validate() const {
  const Eigen::Index n = values.rows();
  const Eigen::Index p = values.cols();
  if (static_cast<std::size_t>(p) != columns.size()) {
    raise(ErrorKind::invalid_design, "column-name count does not match matrix");
  }
  if (p == 0 || n < p) {
    raise(ErrorKind::invalid_design,
          "need n >= p >= 1, got n=" + std::to_string(n) + " p=" + std::to_string(p));
  }
  if (!values.allFinite()) {
    raise(ErrorKind::invalid_design, "design matrix has non-finite entries");
  }
  if (has_intercept && (values.col(0).array() != 1.0).any()) {
    raise(ErrorKind::invalid_design, "intercept flag set but first column is not all ones");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    if ((values.col(j).array() == 0.0).all()) {
      raise(ErrorKind::invalid_design,
            "column '" + columns[static_cast<std::size_t>(j)] + "' is constant zero");
    }
  }
}

DesignMatrix DesignMatrix::intercept_only(Eigen::Index n) {
  DesignMatrix X;
  X.columns = {"(intercept)"};
  X.values = Eigen::MatrixXd::Ones(n, 1);
  X.has_intercept = true;
  return X;
}

double logistic_loglik(const DesignMatrix& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd* weights, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X.values * beta;
  return -0.5 * deviance_from_eta(eta, y, weights);
}

Eigen::VectorXd logistic_score(const DesignMatrix& X, const Eigen::VectorXd& y,
                               const Eigen::VectorXd* weights,
                               const Eigen::VectorXd& beta) {
  const Eigen::VectorXd p = expit_vec(X.values * beta);
  Eigen::VectorXd resid = y - p;
  if (weights) resid = resid.cwiseProduct(*weights);
  return X.values.transpose() * resid;
}

LogisticFit fit_logistic(const DesignMatrix& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd* weights, const FitOptions& options) {
  X.validate();
  const Eigen::Index n = X.values.rows();
  const Eigen::Index p = X.values.cols();
  if (y.size() != n) {
    raise(ErrorKind::dimension_mismatch, "response length mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      raise(ErrorKind::invalid_design, "response must be binary 0/1");
    }
  }
  if (weights) check_weights(*weights, n);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (options.init) {
    if (options.init->size() != p) {
      raise(ErrorKind::dimension_mismatch, "init coefficient length mismatch");
    }
    beta = *options.init;
  } else if (X.has_intercept) {
    double sw = 0.0, swy = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double wi = weights ? (*weights)[i] : 1.0;
      sw += wi;
      swy += wi * y[i];
    }
    const double ybar = std::clamp(swy / sw, 1e-6, 1.0 - 1e-6);
    beta[0] = logit(ybar);
  }

  Eigen::VectorXd eta = X.values * beta;
  double dev = deviance_from_eta(eta, y, weights);
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd info(p, p);

  auto information_at = [&](const Eigen::VectorXd& prob) {
    Eigen::VectorXd irls_w = prob.array() * (1.0 - prob.array());
    if (weights) irls_w = irls_w.cwiseProduct(*weights);
    return Eigen::MatrixXd(X.values.transpose() * irls_w.asDiagonal() * X.values);
  };
  auto score_at = [&](const Eigen::VectorXd& prob) {
    Eigen::VectorXd resid = y - prob;
    if (weights) resid = resid.cwiseProduct(*weights);
    return Eigen::VectorXd(X.values.transpose() * resid);
  };

  while (iter < options.max_iter) {
    const Eigen::VectorXd p_hat = expit_vec(eta);
    const Eigen::VectorXd score = score_at(p_hat);
    info = information_at(p_hat);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      raise(ErrorKind::singular, "information matrix is not invertible");
    }
    Eigen::VectorXd delta = ldlt.solve(score);

    // Step-halving keeps the deviance monotone non-increasing.
    double new_dev = 0.0;
    Eigen::VectorXd candidate;
    Eigen::VectorXd eta_candidate;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      candidate = beta + delta;
      eta_candidate = X.values * candidate;
      new_dev = deviance_from_eta(eta_candidate, y, weights);
      if (new_dev <= dev + 1e-12) {
        accepted = true;
        break;
      }
      delta *= 0.5;
    }
    if (!accepted) {
      // Deviance cannot be decreased at any step scale: numerically at the
      // optimum already.
      converged = true;
      break;
    }

    const double max_change = delta.cwiseAbs().maxCoeff();
    const double dev_change = std::abs(dev - new_dev);
    beta = candidate;
    eta = std::move(eta_candidate);
    dev = new_dev;
    ++iter;

    if (beta.cwiseAbs().maxCoeff() > options.separation_threshold) {
      raise(ErrorKind::separation,
            "coefficients diverging (max |beta| > " +
                std::to_string(options.separation_threshold) +
                "); fitted probabilities pinned to 0/1");
    }
    if (max_change < options.coef_tol || dev_change < options.deviance_tol) {
      converged = true;
      break;
    }
  }

  if (!converged && iter >= options.max_iter) {
    raise(ErrorKind::not_converged,
          "IRLS hit the iteration cap (" + std::to_string(options.max_iter) + ")");
  }

  const Eigen::VectorXd p_hat = expit_vec(eta);
  const Eigen::VectorXd score = score_at(p_hat);
  // The convergence contract includes a small score at the solution.
  converged = converged && score.cwiseAbs().maxCoeff() < 1e-6;

  info = information_at(p_hat);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success) {
    raise(ErrorKind::singular, "information matrix is not invertible at the solution");
  }
  const Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  // HC0 meat: outer products of weighted residuals (weight enters squared).
  Eigen::VectorXd wr = y - p_hat;
  if (weights) wr = wr.cwiseProduct(*weights);
  const Eigen::MatrixXd meat =
      X.values.transpose() * wr.cwiseAbs2().asDiagonal() * X.values;

  LogisticFit fit;
  fit.coefficients = beta;
  fit.cov_model = 0.5 * (bread + bread.transpose());
  fit.cov_sandwich = bread * meat * bread.transpose();
  fit.cov_sandwich = 0.5 * (fit.cov_sandwich + fit.cov_sandwich.transpose()).eval();
  fit.converged = converged;
  fit.n_iter = iter;
  fit.deviance = dev;
  return fit;
}

Eigen::VectorXd predict_prob(const LogisticFit& fit, const DesignMatrix& X) {
  if (X.values.cols() != fit.coefficients.size()) {
    raise(ErrorKind::dimension_mismatch,
          "design has " + std::to_string(X.values.cols()) + " columns, fit has " +
              std::to_string(fit.coefficients.size()) + " coefficients");
  }
  return expit_vec(X.values * fit.coefficients);
}

}  // namespace causalpanel
