#pragma once

// Internal helpers shared by the estimation modules: panel -> Eigen
// conversions for [1, L, ...] designs and the treatment/outcome vectors.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "causalpanel/panel.hpp"

namespace causalpanel::detail {

// [1, L] design with `extra` unnamed trailing columns left zero-initialized
// for the caller to fill (and name).
inline DesignMatrix covariate_design(const Panel& panel, Eigen::Index extra = 0) {
  const auto n = static_cast<Eigen::Index>(panel.size());
  const auto p = static_cast<Eigen::Index>(panel.n_covariates());
  DesignMatrix X;
  X.has_intercept = true;
  X.columns.reserve(static_cast<std::size_t>(1 + p + extra));
  X.columns.push_back("(intercept)");
  for (const auto& name : panel.schema()) X.columns.push_back(name);
  X.values = Eigen::MatrixXd::Zero(n, 1 + p + extra);
  X.values.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = panel.rows()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j) {
      X.values(i, 1 + j) = row.covariates[static_cast<std::size_t>(j)];
    }
  }
  return X;
}

inline Eigen::VectorXd treatment_vector(const Panel& panel) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(panel.size()));
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a[i] = panel.rows()[static_cast<std::size_t>(i)].treatment;
  }
  return a;
}

inline Eigen::VectorXd outcome_vector(const Panel& panel) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(panel.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    y[i] = panel.rows()[static_cast<std::size_t>(i)].outcome;
  }
  return y;
}

}  // namespace causalpanel::detail
