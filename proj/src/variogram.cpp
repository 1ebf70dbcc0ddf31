#include "hbgeo/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "hbgeo/error.hpp"

namespace hbgeo::variogram {

namespace {

double axial_difference_deg(double a, double b) {
  double d = std::fmod(std::abs(a - b), 180.0);
  return std::min(d, 180.0 - d);
}

struct LinearPart {
  double nugget = 0.0;
  double partial_sill = 0.0;
  double sse = 0.0;
};

// Best non-negative (nugget, psill) for a fixed range: a 2-variable weighted
// NNLS solved by checking the interior solution and both boundary faces.
LinearPart solve_linear(const EmpiricalVariogram& emp, double range_km) {
  double sw = 0, sg = 0, sgg = 0, sf = 0, sff = 0, sfg = 0;
  for (Eigen::Index b = 0; b < emp.bin_centers.size(); ++b) {
    if (emp.pair_counts(b) == 0) continue;
    const double w = emp.pair_counts(b);
    const double g = emp.gamma_hat(b);
    const double f = 1.0 - std::exp(-emp.bin_centers(b) / range_km);
    sw += w;
    sg += w * g;
    sgg += w * g * g;
    sf += w * f;
    sff += w * f * f;
    sfg += w * f * g;
  }
  auto sse = [&](double a, double c) {
    return sgg - 2 * a * sg - 2 * c * sfg + a * a * sw + 2 * a * c * sf + c * c * sff;
  };
  LinearPart best{0.0, 0.0, sse(0.0, 0.0)};
  auto consider = [&](double a, double c) {
    if (a < 0.0 || c < 0.0) return;
    const double s = sse(a, c);
    if (s < best.sse) best = {a, c, s};
  };
  const double det = sw * sff - sf * sf;
  if (det > 1e-14 * sw * sff) {
    consider((sg * sff - sf * sfg) / det, (sw * sfg - sf * sg) / det);
  }
  if (sw > 0) consider(sg / sw, 0.0);
  if (sff > 0) consider(0.0, sfg / sff);
  best.sse = std::max(best.sse, 0.0);
  return best;
}

// Gauss-Newton polish of (nugget, psill, log range) from a profile optimum.
// Parameters sitting on the zero bound stay fixed.
void polish(const EmpiricalVariogram& emp, ExponentialVariogramFit& fit) {
  const bool free_nugget = fit.nugget > 0.0;
  const bool free_sill = fit.partial_sill > 0.0;
  double sse = weighted_sse(emp, fit.nugget, fit.partial_sill, fit.range_km);
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (Eigen::Index b = 0; b < emp.bin_centers.size(); ++b) {
      if (emp.pair_counts(b) == 0) continue;
      const double w = emp.pair_counts(b);
      const double d = emp.bin_centers(b);
      const double e = std::exp(-d / fit.range_km);
      const double r = emp.gamma_hat(b) - (fit.nugget + fit.partial_sill * (1.0 - e));
      const Eigen::Vector3d j(free_nugget ? 1.0 : 0.0, free_sill ? 1.0 - e : 0.0,
                              fit.partial_sill * e * d / fit.range_km);
      jtj += w * j * j.transpose();
      jtr += w * j * r;
    }
    for (int k = 0; k < 3; ++k) {
      if (jtj(k, k) == 0.0) jtj(k, k) = 1.0;
    }
    const Eigen::Vector3d step = jtj.ldlt().solve(jtr);
    const double a = fit.nugget + step(0);
    const double c = fit.partial_sill + step(1);
    const double range = fit.range_km * std::exp(step(2));
    if (a < 0.0 || c < 0.0 || !std::isfinite(range)) break;
    const double next = weighted_sse(emp, a, c, range);
    if (!(next < sse)) break;
    fit.nugget = a;
    fit.partial_sill = c;
    fit.range_km = range;
    sse = next;
  }
}

}  // namespace

EmpiricalVariogram empirical_variogram(const Eigen::Ref<const Eigen::VectorXd>& values,
                                       std::span<const spatial::Point> points, const BinSpec& bins,
                                       const std::optional<Direction>& direction) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 2 || values.size() != n) {
    throw Error(ErrorCode::InsufficientData, "variogram needs at least 2 stations with one value each");
  }
  if (bins.bin_count < 1) throw Error(ErrorCode::Config, "bin count must be positive");

  const Eigen::MatrixXd dist = spatial::distance_matrix(points);
  double max_d = bins.max_distance_km;
  if (!(max_d > 0.0)) max_d = 0.5 * dist.maxCoeff();
  if (!(max_d > 0.0)) throw Error(ErrorCode::InsufficientData, "all stations coincide");

  const int nb = bins.bin_count;
  const double width = max_d / nb;
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(nb);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(nb);

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = dist(i, j);
      if (!(d > 0.0) || d > max_d) continue;
      if (direction) {
        const auto& a = points[static_cast<std::size_t>(i)];
        const auto& b = points[static_cast<std::size_t>(j)];
        const double bearing = std::atan2(b.y_km - a.y_km, b.x_km - a.x_km) * 180.0 / std::numbers::pi;
        if (axial_difference_deg(bearing, direction->angle_deg) > direction->tolerance_deg) continue;
      }
      // Bin k covers (k w, (k+1) w].
      int k = static_cast<int>(std::ceil(d / width)) - 1;
      k = std::clamp(k, 0, nb - 1);
      const double diff = values(i) - values(j);
      sums(k) += diff * diff;
      counts(k) += 1;
    }
  }

  EmpiricalVariogram out;
  out.direction = direction;
  out.bin_centers.resize(nb);
  out.gamma_hat.resize(nb);
  out.pair_counts = counts;
  for (int k = 0; k < nb; ++k) {
    out.bin_centers(k) = (k + 0.5) * width;
    out.gamma_hat(k) = counts(k) > 0 ? sums(k) / (2.0 * counts(k)) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double ExponentialVariogramFit::operator()(double d_km) const {
  return nugget + partial_sill * (1.0 - std::exp(-d_km / range_km));
}

double weighted_sse(const EmpiricalVariogram& emp, double nugget, double partial_sill, double range_km) {
  double s = 0.0;
  for (Eigen::Index b = 0; b < emp.bin_centers.size(); ++b) {
    if (emp.pair_counts(b) == 0) continue;
    const double model = nugget + partial_sill * (1.0 - std::exp(-emp.bin_centers(b) / range_km));
    const double r = emp.gamma_hat(b) - model;
    s += emp.pair_counts(b) * r * r;
  }
  return s;
}

Eigen::VectorXd range_start_grid(const EmpiricalVariogram& emp) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index b = 0; b < emp.bin_centers.size(); ++b) {
    if (emp.pair_counts(b) == 0) continue;
    lo = std::min(lo, emp.bin_centers(b));
    hi = std::max(hi, emp.bin_centers(b));
  }
  constexpr int kGrid = 48;
  const double log_lo = std::log(lo / 20.0);
  const double log_hi = std::log(hi * 20.0);
  Eigen::VectorXd grid(kGrid);
  for (int g = 0; g < kGrid; ++g) grid(g) = std::exp(log_lo + (log_hi - log_lo) * g / (kGrid - 1));
  return grid;
}

ExponentialVariogramFit fit_exponential_variogram(const EmpiricalVariogram& emp) {
  const auto non_empty = (emp.pair_counts.array() > 0).count();
  if (non_empty < 4) {
    throw Error(ErrorCode::InsufficientData,
                "variogram fit needs at least 4 non-empty bins, got " + std::to_string(non_empty));
  }
  const Eigen::VectorXd grid = range_start_grid(emp);

  ExponentialVariogramFit fit;
  bool all_zero = true;
  for (Eigen::Index b = 0; b < emp.gamma_hat.size(); ++b) {
    if (emp.pair_counts(b) > 0 && emp.gamma_hat(b) != 0.0) all_zero = false;
  }
  if (all_zero) {
    fit.range_km = grid(0);
    fit.effective_range_05 = -fit.range_km * std::log(0.05);
    fit.degenerate = true;
    return fit;
  }

  // Profile over log(range); the linear part has a closed form.
  auto profile = [&](double log_range) { return solve_linear(emp, std::exp(log_range)).sse; };
  Eigen::VectorXd grid_sse(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) grid_sse(g) = profile(std::log(grid(g)));

  double best_log_range = std::log(grid(0));
  double best_sse = std::numeric_limits<double>::infinity();
  // Refine around every local minimum of the grid.
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const bool left_ok = g == 0 || grid_sse(g) <= grid_sse(g - 1);
    const bool right_ok = g == grid.size() - 1 || grid_sse(g) <= grid_sse(g + 1);
    if (!(left_ok && right_ok)) continue;
    const double a = std::log(grid(std::max<Eigen::Index>(g - 1, 0)));
    const double b = std::log(grid(std::min<Eigen::Index>(g + 1, grid.size() - 1)));
    auto [x, fx] = boost::math::tools::brent_find_minima(profile, a, b, 52);
    if (grid_sse(g) < fx) {
      x = std::log(grid(g));
      fx = grid_sse(g);
    }
    if (fx < best_sse) {
      best_sse = fx;
      best_log_range = x;
    }
  }

  fit.range_km = std::exp(best_log_range);
  const auto lin = solve_linear(emp, fit.range_km);
  fit.nugget = lin.nugget;
  fit.partial_sill = lin.partial_sill;
  polish(emp, fit);
  fit.weighted_sse = weighted_sse(emp, fit.nugget, fit.partial_sill, fit.range_km);
  fit.effective_range_05 = -fit.range_km * std::log(0.05);
  return fit;
}

}  // namespace hbgeo::variogram
