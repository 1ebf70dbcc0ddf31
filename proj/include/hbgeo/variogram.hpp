#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "hbgeo/spatial_kernel.hpp"

namespace hbgeo::variogram {

struct Direction {
  double angle_deg = 0.0;      // bearing measured from the +x axis, axial (mod 180)
  double tolerance_deg = 90.0; // half-width of the accepted angular window
};

/// Equal-width bins over (0, max_distance_km]. A non-positive max distance
/// means half the maximum pairwise distance.
struct BinSpec {
  int bin_count = 30;
  double max_distance_km = 0.0;
};

struct EmpiricalVariogram {
  Eigen::VectorXd bin_centers;
  Eigen::VectorXd gamma_hat;   // NaN where pair_counts == 0
  Eigen::VectorXi pair_counts;
  std::optional<Direction> direction;
};

/// Matheron estimator: gamma(b) = sum (v_i - v_j)^2 / (2 N_b).
EmpiricalVariogram empirical_variogram(const Eigen::Ref<const Eigen::VectorXd>& values,
                                       std::span<const spatial::Point> points, const BinSpec& bins = {},
                                       const std::optional<Direction>& direction = std::nullopt);

struct ExponentialVariogramFit {
  double nugget = 0.0;
  double partial_sill = 0.0;
  double range_km = 1.0;
  double effective_range_05 = 0.0;  // distance where correlation drops to 0.05
  double weighted_sse = 0.0;
  bool degenerate = false;

  double total_sill() const { return nugget + partial_sill; }
  double operator()(double d_km) const;
};

/// Pair-count weighted least squares of nugget + psill (1 - exp(-d / range)).
/// Bins with zero pairs are ignored.
ExponentialVariogramFit fit_exponential_variogram(const EmpiricalVariogram& emp);

/// Weighted SSE of a candidate model against the non-empty bins.
double weighted_sse(const EmpiricalVariogram& emp, double nugget, double partial_sill, double range_km);

/// Starting grid used by the fitter (log-spaced ranges).
Eigen::VectorXd range_start_grid(const EmpiricalVariogram& emp);

}  // namespace hbgeo::variogram
