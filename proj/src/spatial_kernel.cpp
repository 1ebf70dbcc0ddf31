#include "hbgeo/spatial_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hbgeo/error.hpp"

namespace hbgeo::spatial {

Eigen::MatrixXd distance_matrix(std::span<const Point> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = points[static_cast<std::size_t>(i)];
      const auto& b = points[static_cast<std::size_t>(j)];
      d(i, j) = d(j, i) = std::hypot(a.x_km - b.x_km, a.y_km - b.y_km);
    }
  }
  return d;
}

Eigen::MatrixXd cross_distances(std::span<const Point> targets, std::span<const Point> sites) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(targets.size()), static_cast<Eigen::Index>(sites.size()));
  for (std::size_t j = 0; j < targets.size(); ++j) {
    for (std::size_t i = 0; i < sites.size(); ++i) {
      d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          std::hypot(targets[j].x_km - sites[i].x_km, targets[j].y_km - sites[i].y_km);
    }
  }
  return d;
}

double CholeskyFactor::log_determinant() const {
  const auto& lu = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < lu.rows(); ++i) s += std::log(lu(i, i));
  return 2.0 * s;
}

double CholeskyFactor::quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd w = llt.matrixL().solve(x);
  return w.squaredNorm();
}

CholeskyFactor factorize(const Eigen::Ref<const Eigen::MatrixXd>& matrix) {
  auto ok = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const auto& lu = llt.matrixLLT();
    for (Eigen::Index i = 0; i < lu.rows(); ++i) {
      if (!(lu(i, i) > 0.0) || !std::isfinite(lu(i, i))) return false;
    }
    return true;
  };
  CholeskyFactor f;
  f.llt.compute(matrix);
  if (ok(f.llt)) return f;

  const double mean_diag = matrix.diagonal().mean();
  for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * mean_diag;
    Eigen::MatrixXd jittered = matrix;
    jittered.diagonal().array() += jitter;
    f.llt.compute(jittered);
    if (ok(f.llt)) {
      f.jitter = jitter;
      return f;
    }
  }
  throw Error(ErrorCode::Factorization, "matrix of size " + std::to_string(matrix.rows()) +
                                            " is not positive definite after maximum jitter");
}

CorrelationStructure::CorrelationStructure(Eigen::MatrixXd distances, double phi)
    : distances_(std::move(distances)), phi_(phi) {
  correlation_ = (-phi_ * distances_.array()).exp().matrix();
  correlation_.diagonal().setOnes();
  factor_ = factorize(correlation_);
}

Eigen::MatrixXd CorrelationStructure::inverse() const {
  return factor_.llt.solve(Eigen::MatrixXd::Identity(size(), size()));
}

CrossCorrelation CrossCorrelation::from_distances(const Eigen::Ref<const Eigen::MatrixXd>& cross_dist, double phi) {
  return CrossCorrelation{(-phi * cross_dist.array()).exp().matrix()};
}

KrigingWeights::KrigingWeights(const CorrelationStructure& corr, const CrossCorrelation& cross) {
  const auto& llt = corr.cholesky().llt;
  Eigen::MatrixXd w = llt.matrixL().solve(cross.delta.transpose());
  explained_ = w.colwise().squaredNorm().transpose();
  weights_ = llt.matrixU().solve(w);
}

std::vector<ConditionalMoments> KrigingWeights::moments(const Eigen::Ref<const Eigen::VectorXd>& m_obs,
                                                        double sigma2_m) const {
  const Eigen::VectorXd means = weights_.transpose() * m_obs;
  std::vector<ConditionalMoments> out(static_cast<std::size_t>(weights_.cols()));
  for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
    auto& r = out[static_cast<std::size_t>(j)];
    r.mean = means(j);
    r.variance = std::max(0.0, sigma2_m * (1.0 - explained_(j)));
  }
  return out;
}

std::vector<ConditionalMoments> conditional_mvn(const Eigen::Ref<const Eigen::VectorXd>& m_obs, double sigma2_m,
                                                const CorrelationStructure& corr, const CrossCorrelation& cross) {
  return KrigingWeights(corr, cross).moments(m_obs, sigma2_m);
}

Eigen::VectorXd sample_mvn_zero_mean(double sigma2_m, const CorrelationStructure& corr, RngStream& rng) {
  Eigen::VectorXd z(corr.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  Eigen::VectorXd draw = corr.cholesky().llt.matrixL() * z;
  return std::sqrt(sigma2_m) * draw;
}

}  // namespace hbgeo::spatial
