#include <doctest.h>

#include <cmath>

#include "hbgeo/error.hpp"
#include "hbgeo/synthetic.hpp"
#include "oracles.hpp"

using namespace hbgeo;
using namespace hbgeo::synthetic;

namespace {

SimSpec base_spec() {
  SimSpec spec;
  spec.n_rural = 30;
  spec.n_urban = 10;
  spec.beta = Eigen::VectorXd::Constant(1, 2.0);
  spec.gamma = Eigen::VectorXd::Constant(1, 1.0);
  return spec;
}

}  // namespace

TEST_CASE("noise-free limit gives exp(beta0) at rural sites") {
  auto spec = base_spec();
  spec.sigma2_m = 1e-14;
  spec.sigma2_nu = 1e-14;
  spec.covariates.global_names = {"g"};
  spec.beta = Eigen::Vector2d(2.0, 0.0);
  const auto ds = simulate(spec);
  for (const auto* s : ds.select(data::SiteClass::Rural)) CHECK(s->annual_mean == doctest::Approx(7.389056).epsilon(1e-5));
}

TEST_CASE("same seed, same dataset; different seed, different dataset") {
  auto spec = base_spec();
  spec.covariates.urban_names = {"road"};
  spec.gamma = Eigen::Vector2d(3.294, 0.0623);
  const auto a = simulate(spec);
  const auto b = simulate(spec);
  REQUIRE(a.stations.size() == b.stations.size());
  for (std::size_t i = 0; i < a.stations.size(); ++i) {
    CHECK(a.stations[i].id == b.stations[i].id);
    CHECK(a.stations[i].annual_mean == b.stations[i].annual_mean);
    CHECK(a.stations[i].x_km == b.stations[i].x_km);
  }
  CHECK(a.covariates.values == b.covariates.values);
  spec.seed = 2;
  CHECK(simulate(spec).stations[0].annual_mean != a.stations[0].annual_mean);
}

TEST_CASE("station counts, ids and roles") {
  auto spec = base_spec();
  spec.n_rural_validation = 4;
  const auto ds = simulate(spec);
  CHECK(ds.select(data::SiteClass::Rural, data::Role::Training).size() == 30);
  CHECK(ds.select(data::SiteClass::Rural, data::Role::Validation).size() == 4);
  CHECK(ds.select(data::SiteClass::Urban).size() == 10);
  CHECK(ds.station("R00001").site_class == data::SiteClass::Rural);
  CHECK(ds.station("V00004").role == data::Role::Validation);
  CHECK(ds.station("U00010").site_class == data::SiteClass::Urban);
}

TEST_CASE("log-response moments over replicates") {
  // Intercept only: y_i - beta0 = m_i + nu_i, so E[(y_i - b)(y_j - b)] =
  // sigma2_m exp(-phi d_ij) and Var(y_i) = sigma2_m + sigma2_nu.
  auto spec = base_spec();
  spec.n_rural = 2;
  spec.n_urban = 1;
  spec.sigma2_m = 0.25;
  spec.sigma2_nu = 0.09;
  spec.phi = 0.01;
  spec.region = {0.0, 100.0, 0.0, 100.0};
  const int reps = 2000;
  std::vector<double> scaled_products, first, rural_far;
  for (int r = 0; r < reps; ++r) {
    spec.seed = 1000 + static_cast<std::uint64_t>(r);
    const auto ds = simulate(spec);
    const auto& a = ds.station("R00001");
    const auto& b = ds.station("R00002");
    const double d = std::hypot(a.x_km - b.x_km, a.y_km - b.y_km);
    const double ya = a.log_mean() - 2.0, yb = b.log_mean() - 2.0;
    scaled_products.push_back(ya * yb / std::exp(-spec.phi * d));
    first.push_back(ya);
  }
  const double total = spec.sigma2_m + spec.sigma2_nu;
  const double corr_ratio = oracle::sample_mean(scaled_products) / total;
  CHECK(corr_ratio == doctest::Approx(spec.sigma2_m / total).epsilon(0.10));
  CHECK(oracle::sample_var(first) == doctest::Approx(total).epsilon(0.10));
}

TEST_CASE("spec validation") {
  auto spec = base_spec();
  spec.beta = Eigen::Vector2d(1.0, 2.0);
  CHECK_THROWS_AS(simulate(spec), Error);
  spec = base_spec();
  spec.sigma2_m = 0.0;
  CHECK_THROWS_AS(simulate(spec), Error);
  spec = base_spec();
  spec.region.x_max_km = spec.region.x_min_km;
  CHECK_THROWS_AS(simulate(spec), Error);
}

TEST_CASE("grouping mirrors the generator") {
  auto spec = base_spec();
  spec.covariates.global_names = {"g1", "g2"};
  spec.covariates.urban_names = {"u"};
  const auto g = grouping_of(spec);
  REQUIRE(g.size() == 3);
  CHECK(g[2].group == data::CovariateGroup::Urban);
  CHECK(g[0].transform == "identity");
}
