#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbgeo/hierarchy.hpp"
#include "hbgeo/stats.hpp"

namespace hbgeo::validation {

struct StationRow {
  std::string id;
  double observed = 0.0;  // natural scale
  double predicted_median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  bool covered = false;
};

struct ValidationReport {
  stats::Interval rmse;  // natural scale
  stats::Interval r2;    // percent; may be negative out of sample
  std::size_t covered_count = 0;
  std::size_t total_count = 0;
  std::vector<StationRow> stations;
  std::vector<double> rmse_draws;
  std::vector<double> r2_draws;
};

/// RMSE and R^2 = 100 (1 - SSE / SST) of one draw of natural-scale predictions.
double rmse(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed);
double r_squared(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed);

/// Builds a report from log-scale point-prediction draws (rows = draws) and
/// per-station predictive intervals.
ValidationReport build_report(const std::vector<std::string>& ids, const Eigen::VectorXd& observed_natural,
                              const Eigen::MatrixXd& log_draws,
                              const std::vector<hierarchy::PredictionResult>& intervals);

struct ValidationOptions {
  bool interval_includes_noise = true;
};

/// Predicts at the rural validation stations (rural covariates retained) and
/// summarises RMSE, R^2 and interval coverage over the posterior draws.
ValidationReport validate(const hierarchy::StageOneFit& fit, const data::Dataset& dataset, std::uint64_t seed,
                          const ValidationOptions& options = {});

}  // namespace hbgeo::validation
