#include <doctest.h>

#include <cmath>
#include <random>

#include "hbgeo/error.hpp"
#include "hbgeo/spatial_kernel.hpp"
#include "oracles.hpp"

using namespace hbgeo;
using spatial::Point;

namespace {

std::vector<Point> random_points(std::mt19937_64& gen, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Point> pts(n);
  for (auto& p : pts) p = {u(gen), u(gen)};
  return pts;
}

}  // namespace

TEST_CASE("distance matrix matches pair loop and is symmetric") {
  std::mt19937_64 gen(3);
  const auto pts = random_points(gen, 9, 500.0);
  const auto d = spatial::distance_matrix(pts);
  const auto ref = oracle::pair_distances(pts, pts);
  CHECK((d - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);

  const auto targets = random_points(gen, 4, 500.0);
  const auto cross = spatial::cross_distances(targets, pts);
  CHECK((cross - oracle::pair_distances(targets, pts)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exponential correlation values") {
  CHECK(spatial::exp_correlation(0.0, 0.3) == 1.0);
  CHECK(spatial::exp_correlation(100.0, 0.0437) == doctest::Approx(std::exp(-4.37)).epsilon(1e-14));
  CHECK(spatial::exp_correlation(100.0, 0.0075) > 0.47);
  CHECK(spatial::exp_correlation(100.0, 0.0075) < 0.48);
  // correlation falls with distance
  CHECK(spatial::exp_correlation(10.0, 0.01) > spatial::exp_correlation(20.0, 0.01));
}

TEST_CASE("correlation structure: unit diagonal, factor reconstructs, inverse") {
  std::mt19937_64 gen(11);
  const auto pts = random_points(gen, 12, 300.0);
  const spatial::CorrelationStructure corr(spatial::distance_matrix(pts), 0.02);
  CHECK(corr.correlation().diagonal().isOnes(0.0));
  const Eigen::MatrixXd L = corr.cholesky().lower();
  CHECK((L * L.transpose() - corr.correlation()).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd inv_ref = Eigen::FullPivLU<Eigen::MatrixXd>(corr.correlation()).inverse();
  CHECK((corr.inverse() - inv_ref).cwiseAbs().maxCoeff() < 1e-8);
  const double logdet_ref = std::log(Eigen::FullPivLU<Eigen::MatrixXd>(corr.correlation()).determinant());
  CHECK(corr.cholesky().log_determinant() == doctest::Approx(logdet_ref).epsilon(1e-9));
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(12, -1.0, 2.0);
  CHECK(corr.cholesky().quadratic_form(x) == doctest::Approx(x.dot(inv_ref * x)).epsilon(1e-9));
}

TEST_CASE("factorize: jitter rescues a singular PSD matrix, rejects indefinite ones") {
  Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(3, 3);
  const auto f = spatial::factorize(singular);
  CHECK(f.jitter > 0.0);
  CHECK(f.jitter <= 1e-6 + 1e-18);

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  try {
    spatial::factorize(indefinite);
    FAIL("expected factorization error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Factorization);
  }

  const auto clean = spatial::factorize(Eigen::MatrixXd::Identity(4, 4));
  CHECK(clean.jitter == 0.0);
}

TEST_CASE("conditional MVN matches dense joint conditioning") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> n_sites(2, 8), n_targets(1, 3);
  std::uniform_real_distribution<double> u_phi(0.002, 0.2), u_s2(0.05, 2.0);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 200; ++rep) {
    const auto sites = random_points(gen, n_sites(gen), 200.0);
    const auto targets = random_points(gen, n_targets(gen), 200.0);
    const double phi = u_phi(gen), s2 = u_s2(gen);
    Eigen::VectorXd m(sites.size());
    for (auto& v : m) v = z(gen);
    const spatial::CorrelationStructure corr(spatial::distance_matrix(sites), phi);
    const auto cross = spatial::CrossCorrelation::from_distances(spatial::cross_distances(targets, sites), phi);
    const auto got = spatial::conditional_mvn(m, s2, corr, cross);
    const auto ref = oracle::condition_joint(sites, targets, m, s2, phi);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      CHECK(std::abs(got[j].mean - ref.mean(j)) < 1e-10);
      CHECK(std::abs(got[j].variance - ref.variance(j)) < 1e-10);
    }
  }
}

TEST_CASE("kriging at a monitored site reproduces the site value with zero variance") {
  std::vector<Point> sites = {{0, 0}, {50, 10}, {120, 80}};
  const spatial::CorrelationStructure corr(spatial::distance_matrix(sites), 0.01);
  std::vector<Point> targets = {sites[1]};
  const auto cross = spatial::CrossCorrelation::from_distances(spatial::cross_distances(targets, sites), 0.01);
  Eigen::Vector3d m(0.3, -0.7, 1.1);
  const auto got = spatial::conditional_mvn(m, 0.8, corr, cross);
  CHECK(got[0].mean == doctest::Approx(-0.7).epsilon(1e-10));
  CHECK(got[0].variance == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("kriging far from every site returns the prior moments") {
  std::vector<Point> sites = {{0, 0}, {10, 0}};
  const spatial::CorrelationStructure corr(spatial::distance_matrix(sites), 0.05);
  std::vector<Point> targets = {{1e5, 1e5}};
  const auto cross = spatial::CrossCorrelation::from_distances(spatial::cross_distances(targets, sites), 0.05);
  const auto got = spatial::conditional_mvn(Eigen::Vector2d(2.0, -1.0), 0.6, corr, cross);
  CHECK(got[0].mean == doctest::Approx(0.0));
  CHECK(got[0].variance == doctest::Approx(0.6));
}

TEST_CASE("zero-mean MVN draws have the target covariance") {
  std::vector<Point> sites = {{0, 0}, {40, 0}, {0, 90}};
  const double s2 = 0.5, phi = 0.015;
  const spatial::CorrelationStructure corr(spatial::distance_matrix(sites), phi);
  RngStream rng(7, {1});
  const int n = 100000;
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = spatial::sample_mvn_zero_mean(s2, corr, rng);
    acc += x * x.transpose();
  }
  acc /= n;
  const Eigen::MatrixXd ref = oracle::exp_cov(oracle::pair_distances(sites, sites), phi, s2);
  CHECK((acc - ref).cwiseAbs().maxCoeff() < 0.02);
}
