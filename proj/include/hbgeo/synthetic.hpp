#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbgeo/data_model.hpp"

namespace hbgeo::synthetic {

struct Region {
  double x_min_km = 0.0;
  double x_max_km = 1000.0;
  double y_min_km = 0.0;
  double y_max_km = 1000.0;
};

/// Names and upper bounds of the covariates; each is drawn uniform on
/// [0, upper] independently per station.
struct CovariateGenerator {
  std::vector<std::string> global_names;
  std::vector<std::string> rural_names;
  std::vector<std::string> urban_names;
  std::vector<double> global_upper;  // empty means all 1
  std::vector<double> rural_upper;
  std::vector<double> urban_upper;
};

struct SimSpec {
  std::size_t n_rural = 200;             // rural training sites
  std::size_t n_rural_validation = 0;
  std::size_t n_urban = 100;
  Region region;
  Eigen::VectorXd beta;   // intercept | global | rural
  Eigen::VectorXd gamma;  // intercept | urban
  double sigma2_nu = 0.09;
  double sigma2_m = 0.25;
  double sigma2_omega = 0.04;
  double phi = 0.01;
  CovariateGenerator covariates;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Draws one dataset from the generative model: rural log responses are
/// X beta + m + nu; urban log responses are the background surface (global
/// effects + m) + W gamma + omega, with m a joint GP draw over all sites.
data::Dataset simulate(const SimSpec& spec);

/// Grouping entries (all identity transforms) matching a spec's covariates.
std::vector<data::GroupingEntry> grouping_of(const SimSpec& spec);

}  // namespace hbgeo::synthetic
