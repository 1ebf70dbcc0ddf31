#pragma once

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hbgeo/rng.hpp"

namespace hbgeo::spatial {

struct Point {
  double x_km = 0.0;
  double y_km = 0.0;
};

/// Euclidean distances between all pairs; zero diagonal.
Eigen::MatrixXd distance_matrix(std::span<const Point> points);

/// Distances from each of `targets` (rows) to each of `sites` (columns).
Eigen::MatrixXd cross_distances(std::span<const Point> targets, std::span<const Point> sites);

inline double exp_correlation(double d_km, double phi) { return std::exp(-phi * d_km); }

/// Lower Cholesky factor with bounded diagonal jitter: starts at
/// 1e-10 * mean(diag) and escalates x10 up to 1e-6 * mean(diag).
struct CholeskyFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  Eigen::Index size() const { return llt.rows(); }
  Eigen::MatrixXd lower() const { return llt.matrixL(); }
  double log_determinant() const;
  /// x' A^{-1} x
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

CholeskyFactor factorize(const Eigen::Ref<const Eigen::MatrixXd>& matrix);

/// Exponential correlation over a fixed set of sites at decay `phi` (per km),
/// holding the factorisation used by every downstream solve.
class CorrelationStructure {
 public:
  CorrelationStructure(Eigen::MatrixXd distances, double phi);

  const Eigen::MatrixXd& distances() const { return distances_; }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  double phi() const { return phi_; }
  const CholeskyFactor& cholesky() const { return factor_; }
  Eigen::Index size() const { return correlation_.rows(); }

  /// Sigma^{-1}, formed from the Cholesky factor.
  Eigen::MatrixXd inverse() const;

 private:
  Eigen::MatrixXd distances_;
  double phi_;
  Eigen::MatrixXd correlation_;
  CholeskyFactor factor_;
};

/// Rows are new locations; entry (j, i) = exp(-phi * dist(new_j, site_i)).
struct CrossCorrelation {
  Eigen::MatrixXd delta;

  static CrossCorrelation from_distances(const Eigen::Ref<const Eigen::MatrixXd>& cross_dist, double phi);
};

struct ConditionalMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Kriging weights Sigma^{-1} delta' for a fixed (sites, targets, phi),
/// reusable across field realisations.
class KrigingWeights {
 public:
  KrigingWeights(const CorrelationStructure& corr, const CrossCorrelation& cross);

  std::vector<ConditionalMoments> moments(const Eigen::Ref<const Eigen::VectorXd>& m_obs, double sigma2_m) const;
  Eigen::Index target_count() const { return weights_.cols(); }

 private:
  Eigen::MatrixXd weights_;    // sites x targets
  Eigen::VectorXd explained_;  // delta_j' Sigma^{-1} delta_j
};

/// Kriging moments of the zero-mean field at new locations given its values
/// `m_obs` at the monitored sites:
///   mean_j = delta_j' Sigma^{-1} m,  var_j = sigma2_m (1 - delta_j' Sigma^{-1} delta_j).
std::vector<ConditionalMoments> conditional_mvn(const Eigen::Ref<const Eigen::VectorXd>& m_obs, double sigma2_m,
                                                const CorrelationStructure& corr, const CrossCorrelation& cross);

/// sigma_m * L z with z standard normal from `rng`.
Eigen::VectorXd sample_mvn_zero_mean(double sigma2_m, const CorrelationStructure& corr, RngStream& rng);

}  // namespace hbgeo::spatial
