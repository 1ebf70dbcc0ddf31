#include "hbgeo/validation.hpp"

#include <cmath>
#include <limits>

#include "hbgeo/error.hpp"

namespace hbgeo::validation {

double rmse(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed) {
  return std::sqrt((predicted - observed).squaredNorm() / static_cast<double>(observed.size()));
}

double r_squared(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed) {
  const double sse = (predicted - observed).squaredNorm();
  const double sst = (observed.array() - observed.mean()).matrix().squaredNorm();
  if (sst == 0.0) return sse == 0.0 ? 100.0 : std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (1.0 - sse / sst);
}

ValidationReport build_report(const std::vector<std::string>& ids, const Eigen::VectorXd& observed_natural,
                              const Eigen::MatrixXd& log_draws,
                              const std::vector<hierarchy::PredictionResult>& intervals) {
  if (ids.empty()) throw Error(ErrorCode::Validation, "validation set is empty");
  if (log_draws.cols() != observed_natural.size() || intervals.size() != ids.size()) {
    throw Error(ErrorCode::Validation, "validation inputs have inconsistent sizes");
  }
  ValidationReport report;
  report.rmse_draws.reserve(static_cast<std::size_t>(log_draws.rows()));
  report.r2_draws.reserve(static_cast<std::size_t>(log_draws.rows()));
  for (Eigen::Index t = 0; t < log_draws.rows(); ++t) {
    // std::exp, as in the prediction summaries
    const Eigen::VectorXd pred = log_draws.row(t).transpose().unaryExpr([](double v) { return std::exp(v); });
    report.rmse_draws.push_back(rmse(pred, observed_natural));
    report.r2_draws.push_back(r_squared(pred, observed_natural));
  }
  report.rmse = stats::summarize95(report.rmse_draws);
  report.r2 = stats::summarize95(report.r2_draws);
  report.total_count = ids.size();
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto& iv = intervals[j];
    StationRow row;
    row.id = ids[j];
    row.observed = observed_natural(static_cast<Eigen::Index>(j));
    row.predicted_median = iv.natural_median;
    row.lo95 = iv.natural_lo95;
    row.hi95 = iv.natural_hi95;
    // Same interval as the reported columns.
    row.covered = row.lo95 <= row.observed && row.observed <= row.hi95;
    if (row.covered) ++report.covered_count;
    report.stations.push_back(std::move(row));
  }
  return report;
}

ValidationReport validate(const hierarchy::StageOneFit& fit, const data::Dataset& dataset, std::uint64_t seed,
                          const ValidationOptions& options) {
  const auto target = hierarchy::validation_targets(dataset, fit.spec);
  if (target.ids.empty()) throw Error(ErrorCode::Validation, "no rural validation stations");

  const auto surface = hierarchy::predict_draws(fit, target, {false}, seed, kStreamValidation);
  hierarchy::PredictionDraws predictive = surface;
  if (options.interval_includes_noise) {
    for (std::size_t c = 0; c < surface.chains; ++c) {
      RngStream rng(seed, {kStreamValidation, c, 1});
      for (std::size_t d = 0; d < surface.draws_per_chain; ++d) {
        const auto row = static_cast<Eigen::Index>(c * surface.draws_per_chain + d);
        const double sd = std::sqrt(fit.samples.chains[c][d].sigma2_nu);
        for (Eigen::Index j = 0; j < predictive.values.cols(); ++j) predictive.values(row, j) += sd * rng.normal();
      }
    }
  }
  Eigen::VectorXd observed(static_cast<Eigen::Index>(target.ids.size()));
  for (std::size_t j = 0; j < target.ids.size(); ++j) {
    observed(static_cast<Eigen::Index>(j)) = dataset.station(target.ids[j]).annual_mean;
  }
  return build_report(target.ids, observed, surface.values, hierarchy::summarize_predictions(predictive));
}

}  // namespace hbgeo::validation
