#include "hbgeo/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "hbgeo/error.hpp"
#include "hbgeo/rng.hpp"
#include "hbgeo/spatial_kernel.hpp"

namespace hbgeo::synthetic {

void SimSpec::validate() const {
  const auto& c = covariates;
  if (n_rural < 1 || n_urban < 1) throw Error(ErrorCode::Config, "simulation needs at least one rural and one urban site");
  if (!(sigma2_nu > 0 && sigma2_m > 0 && sigma2_omega > 0)) {
    throw Error(ErrorCode::Config, "simulation variance components must be positive");
  }
  if (!(phi > 0)) throw Error(ErrorCode::Config, "simulation phi must be positive");
  if (beta.size() != static_cast<Eigen::Index>(1 + c.global_names.size() + c.rural_names.size())) {
    throw Error(ErrorCode::Config, "beta must have 1 + global + rural entries");
  }
  if (gamma.size() != static_cast<Eigen::Index>(1 + c.urban_names.size())) {
    throw Error(ErrorCode::Config, "gamma must have 1 + urban entries");
  }
  if (!(region.x_max_km > region.x_min_km && region.y_max_km > region.y_min_km)) {
    throw Error(ErrorCode::Config, "simulation region is empty");
  }
}

std::vector<data::GroupingEntry> grouping_of(const SimSpec& spec) {
  std::vector<data::GroupingEntry> g;
  for (const auto& n : spec.covariates.global_names) g.push_back({n, data::CovariateGroup::Global, "identity"});
  for (const auto& n : spec.covariates.rural_names) g.push_back({n, data::CovariateGroup::Rural, "identity"});
  for (const auto& n : spec.covariates.urban_names) g.push_back({n, data::CovariateGroup::Urban, "identity"});
  return g;
}

namespace {

std::string make_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%05zu", prefix, i + 1);
  return buf;
}

double upper_of(const std::vector<double>& upper, std::size_t k) { return k < upper.size() ? upper[k] : 1.0; }

}  // namespace

data::Dataset simulate(const SimSpec& spec) {
  spec.validate();
  RngStream rng(spec.seed, {kStreamSimulation});
  const auto& gen = spec.covariates;
  const std::size_t G = gen.global_names.size();
  const std::size_t R = gen.rural_names.size();
  const std::size_t Q = gen.urban_names.size();
  const std::size_t n_total = spec.n_rural + spec.n_rural_validation + spec.n_urban;

  std::vector<data::Station> stations;
  std::vector<spatial::Point> points;
  for (std::size_t i = 0; i < n_total; ++i) {
    data::Station s;
    if (i < spec.n_rural) {
      s.id = make_id('R', i);
    } else if (i < spec.n_rural + spec.n_rural_validation) {
      s.id = make_id('V', i - spec.n_rural);
      s.role = data::Role::Validation;
    } else {
      s.id = make_id('U', i - spec.n_rural - spec.n_rural_validation);
      s.site_class = data::SiteClass::Urban;
    }
    s.x_km = spec.region.x_min_km + (spec.region.x_max_km - spec.region.x_min_km) * rng.uniform();
    s.y_km = spec.region.y_min_km + (spec.region.y_max_km - spec.region.y_min_km) * rng.uniform();
    points.push_back({s.x_km, s.y_km});
    stations.push_back(std::move(s));
  }

  const auto n = static_cast<Eigen::Index>(n_total);
  Eigen::MatrixXd cov(n, static_cast<Eigen::Index>(G + R + Q));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < G; ++k) cov(i, static_cast<Eigen::Index>(k)) = upper_of(gen.global_upper, k) * rng.uniform();
    for (std::size_t k = 0; k < R; ++k) cov(i, static_cast<Eigen::Index>(G + k)) = upper_of(gen.rural_upper, k) * rng.uniform();
    for (std::size_t k = 0; k < Q; ++k) cov(i, static_cast<Eigen::Index>(G + R + k)) = upper_of(gen.urban_upper, k) * rng.uniform();
  }

  spatial::CorrelationStructure corr(spatial::distance_matrix(points), spec.phi);
  const Eigen::VectorXd m = spatial::sample_mvn_zero_mean(spec.sigma2_m, corr, rng);

  const double sd_nu = std::sqrt(spec.sigma2_nu);
  const double sd_omega = std::sqrt(spec.sigma2_omega);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& s = stations[static_cast<std::size_t>(i)];
    double background = spec.beta(0);
    for (std::size_t k = 0; k < G; ++k) background += spec.beta(static_cast<Eigen::Index>(1 + k)) * cov(i, static_cast<Eigen::Index>(k));
    double log_value = 0.0;
    if (s.site_class == data::SiteClass::Rural) {
      double rural = 0.0;
      for (std::size_t k = 0; k < R; ++k) {
        rural += spec.beta(static_cast<Eigen::Index>(1 + G + k)) * cov(i, static_cast<Eigen::Index>(G + k));
      }
      log_value = background + rural + m(i) + sd_nu * rng.normal();
    } else {
      double urban = spec.gamma(0);
      for (std::size_t k = 0; k < Q; ++k) {
        urban += spec.gamma(static_cast<Eigen::Index>(1 + k)) * cov(i, static_cast<Eigen::Index>(G + R + k));
      }
      log_value = background + m(i) + urban + sd_omega * rng.normal();
    }
    s.annual_mean = std::exp(log_value);
  }

  std::vector<std::string> ids;
  for (const auto& s : stations) ids.push_back(s.id);
  std::vector<std::string> names = gen.global_names;
  names.insert(names.end(), gen.rural_names.begin(), gen.rural_names.end());
  names.insert(names.end(), gen.urban_names.begin(), gen.urban_names.end());
  return data::build_dataset(std::move(stations), ids, names, cov, grouping_of(spec));
}

}  // namespace hbgeo::synthetic
