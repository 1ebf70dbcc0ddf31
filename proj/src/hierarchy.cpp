#include "hbgeo/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "hbgeo/error.hpp"
#include "hbgeo/stats.hpp"

namespace hbgeo::hierarchy {

std::string_view to_string(CovariateSet set) noexcept {
  switch (set) {
    case CovariateSet::InterceptOnly: return "intercept";
    case CovariateSet::Global: return "global";
    case CovariateSet::GlobalRural: return "global_rural";
  }
  return "global_rural";
}

CovariateSet parse_covariate_set(std::string_view text) {
  if (text == "intercept") return CovariateSet::InterceptOnly;
  if (text == "global") return CovariateSet::Global;
  if (text == "global_rural") return CovariateSet::GlobalRural;
  throw Error(ErrorCode::Config, "unknown covariate set '" + std::string(text) +
                                     "' (expected intercept, global or global_rural)");
}

mcmc::StageOneData StageOneSpec::as_mcmc_data() const {
  return mcmc::StageOneData{response, design, spatial::distance_matrix(sites), coef_names};
}

void check_design(const Eigen::Ref<const Eigen::MatrixXd>& design, const std::vector<std::string>& names) {
  const auto p = design.cols();
  for (Eigen::Index j = 1; j < p; ++j) {
    const double span = design.col(j).maxCoeff() - design.col(j).minCoeff();
    if (!(span > 0.0)) {
      throw Error(ErrorCode::Design, "design column '" + names[static_cast<std::size_t>(j)] +
                                         "' is constant and duplicates the intercept");
    }
  }
  // Scale columns so the rank threshold is unit-free.
  Eigen::MatrixXd scaled = design;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  constexpr double kTol = 1e-9;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  qr.setThreshold(kTol);
  if (qr.rank() == p) return;

  std::vector<std::string> dependent;
  Eigen::Index rank = 0;
  Eigen::MatrixXd prefix(scaled.rows(), 0);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::MatrixXd trial(scaled.rows(), prefix.cols() + 1);
    trial << prefix, scaled.col(j);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> q(trial);
    q.setThreshold(kTol);
    if (q.rank() > rank) {
      rank = q.rank();
      prefix = std::move(trial);
    } else {
      dependent.push_back(names[static_cast<std::size_t>(j)]);
    }
  }
  std::string msg = "design is rank deficient; collinear columns:";
  for (const auto& d : dependent) msg += " '" + d + "'";
  throw Error(ErrorCode::Design, msg);
}

namespace {

std::vector<std::string> stage_one_columns(const data::CovariateTable& cov, CovariateSet set) {
  std::vector<std::string> cols;
  if (set != CovariateSet::InterceptOnly) cols = cov.global_names;
  if (set == CovariateSet::GlobalRural) cols.insert(cols.end(), cov.rural_names.begin(), cov.rural_names.end());
  return cols;
}

Eigen::MatrixXd design_rows(const data::Dataset& ds, const std::vector<const data::Station*>& stations,
                            std::size_t global_count, std::size_t rural_count, bool zero_rural) {
  const auto& cov = ds.covariates;
  const auto p = static_cast<Eigen::Index>(1 + global_count + rural_count);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(stations.size()), p);
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(cov.row_of(stations[i]->id));
    const auto row = static_cast<Eigen::Index>(i);
    X(row, 0) = 1.0;
    for (std::size_t g = 0; g < global_count; ++g) {
      X(row, static_cast<Eigen::Index>(1 + g)) = cov.values(r, cov.global_offset() + static_cast<Eigen::Index>(g));
    }
    for (std::size_t k = 0; k < rural_count; ++k) {
      X(row, static_cast<Eigen::Index>(1 + global_count + k)) =
          zero_rural ? 0.0 : cov.values(r, cov.rural_offset() + static_cast<Eigen::Index>(k));
    }
  }
  return X;
}

PredictionTarget make_target(const data::Dataset& ds, const std::vector<const data::Station*>& stations,
                             const StageOneSpec& spec, bool zero_rural) {
  PredictionTarget t;
  for (const auto* s : stations) {
    t.ids.push_back(s->id);
    t.points.push_back({s->x_km, s->y_km});
    t.observed_log.push_back(s->log_mean());
  }
  t.design = design_rows(ds, stations, spec.global_count, spec.rural_count, zero_rural);
  return t;
}

}  // namespace

StageOneSpec build_stage_one(const data::Dataset& dataset, CovariateSet covariates) {
  const auto rural = dataset.select(data::SiteClass::Rural, data::Role::Training);
  if (rural.empty()) throw Error(ErrorCode::InsufficientData, "no rural training stations");

  StageOneSpec spec;
  spec.covariates = covariates;
  const auto& cov = dataset.covariates;
  spec.global_count = covariates == CovariateSet::InterceptOnly ? 0 : cov.global_names.size();
  spec.rural_count = covariates == CovariateSet::GlobalRural ? cov.rural_names.size() : 0;
  spec.coef_names.push_back("intercept");
  for (const auto& n : stage_one_columns(cov, covariates)) spec.coef_names.push_back(n);

  const std::size_t p = spec.coef_names.size();
  if (rural.size() < 2 * p) {
    throw Error(ErrorCode::InsufficientData, "stage one needs at least " + std::to_string(2 * p) +
                                                 " rural training stations, found " + std::to_string(rural.size()));
  }
  spec.response.resize(static_cast<Eigen::Index>(rural.size()));
  for (std::size_t i = 0; i < rural.size(); ++i) {
    spec.station_ids.push_back(rural[i]->id);
    spec.sites.push_back({rural[i]->x_km, rural[i]->y_km});
    spec.response(static_cast<Eigen::Index>(i)) = rural[i]->log_mean();
  }
  spec.design = design_rows(dataset, rural, spec.global_count, spec.rural_count, false);
  check_design(spec.design, spec.coef_names);
  return spec;
}

StageOneFit fit_stage_one(const data::Dataset& dataset, CovariateSet covariates, const mcmc::PriorConfig& prior,
                          const mcmc::McmcConfig& config) {
  StageOneFit fit;
  fit.spec = build_stage_one(dataset, covariates);
  fit.prior = prior;
  fit.samples = mcmc::run_chains(fit.spec.as_mcmc_data(), prior, config);
  return fit;
}

PredictionTarget urban_targets(const data::Dataset& dataset, const StageOneSpec& spec) {
  return make_target(dataset, dataset.select(data::SiteClass::Urban, data::Role::Training), spec, true);
}

PredictionTarget validation_targets(const data::Dataset& dataset, const StageOneSpec& spec) {
  return make_target(dataset, dataset.select(data::SiteClass::Rural, data::Role::Validation), spec, false);
}

std::vector<PredictionResult> summarize_predictions(const PredictionDraws& draws) {
  std::vector<PredictionResult> out;
  out.reserve(draws.ids.size());
  std::vector<double> col(static_cast<std::size_t>(draws.values.rows()));
  for (std::size_t j = 0; j < draws.ids.size(); ++j) {
    for (Eigen::Index r = 0; r < draws.values.rows(); ++r) {
      col[static_cast<std::size_t>(r)] = draws.values(r, static_cast<Eigen::Index>(j));
    }
    PredictionResult p;
    p.id = draws.ids[j];
    p.log_mean = stats::mean(col);
    p.log_variance = stats::variance(col);
    const auto iv = stats::summarize95(col);
    p.log_median = iv.median;
    p.log_lo95 = iv.lo;
    p.log_hi95 = iv.hi;
    p.natural_median = std::exp(iv.median);
    p.natural_lo95 = std::exp(iv.lo);
    p.natural_hi95 = std::exp(iv.hi);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

// Fills rows [row0, row0 + draws) of `out` with predictive draws for one chain.
void predict_chain(const std::vector<mcmc::PosteriorDraw>& chain,
                   const Eigen::MatrixXd& site_dist, const Eigen::MatrixXd& cross_dist,
                   const Eigen::MatrixXd& design, const PredictionOptions& options, RngStream& rng,
                   Eigen::MatrixXd& out, Eigen::Index row0) {
  std::optional<spatial::KrigingWeights> weights;
  double cached_phi = -1.0;
  for (std::size_t d = 0; d < chain.size(); ++d) {
    const auto& draw = chain[d];
    if (!weights || draw.phi != cached_phi) {
      spatial::CorrelationStructure corr(site_dist, draw.phi);
      weights.emplace(corr, spatial::CrossCorrelation::from_distances(cross_dist, draw.phi));
      cached_phi = draw.phi;
    }
    const auto moments = weights->moments(draw.m, draw.sigma2_m);
    const Eigen::VectorXd fixed = design * draw.beta;
    const auto row = row0 + static_cast<Eigen::Index>(d);
    for (Eigen::Index j = 0; j < design.rows(); ++j) {
      const auto& mom = moments[static_cast<std::size_t>(j)];
      double value = fixed(j) + mom.mean + std::sqrt(mom.variance) * rng.normal();
      const double z_noise = rng.normal();
      if (options.include_noise) value += std::sqrt(draw.sigma2_nu) * z_noise;
      out(row, j) = value;
    }
  }
}

}  // namespace

PredictionDraws predict_draws(const StageOneFit& fit, const PredictionTarget& target,
                              const PredictionOptions& options, std::uint64_t seed, std::uint64_t stream_tag) {
  if (target.design.cols() != fit.spec.design.cols()) {
    throw Error(ErrorCode::Design, "prediction design has " + std::to_string(target.design.cols()) +
                                       " columns, stage one uses " + std::to_string(fit.spec.design.cols()));
  }
  const auto& samples = fit.samples;
  PredictionDraws out;
  out.ids = target.ids;
  out.chains = samples.chain_count();
  out.draws_per_chain = samples.draws_per_chain();
  out.values.resize(static_cast<Eigen::Index>(out.chains * out.draws_per_chain),
                    static_cast<Eigen::Index>(target.ids.size()));
  const Eigen::MatrixXd site_dist = spatial::distance_matrix(fit.spec.sites);
  const Eigen::MatrixXd cross = spatial::cross_distances(target.points, fit.spec.sites);
  for (std::size_t c = 0; c < out.chains; ++c) {
    RngStream rng(seed, {stream_tag, c});
    predict_chain(samples.chains[c], site_dist, cross, target.design, options, rng, out.values,
                  static_cast<Eigen::Index>(c * out.draws_per_chain));
  }
  return out;
}

BackgroundPrediction predict_background(const StageOneFit& fit, const PredictionTarget& targets,
                                        const PredictionOptions& options, std::uint64_t seed) {
  BackgroundPrediction out;
  out.draws = predict_draws(fit, targets, options, seed, kStreamPrediction);
  out.summaries = summarize_predictions(out.draws);
  return out;
}

StageThreeSpec build_stage_three(const data::Dataset& dataset, const PredictionTarget& urban) {
  StageThreeSpec spec;
  const auto& cov = dataset.covariates;
  spec.coef_names.push_back("intercept");
  for (const auto& n : cov.urban_names) spec.coef_names.push_back(n);
  const auto q = static_cast<Eigen::Index>(cov.urban_names.size());
  const auto n = static_cast<Eigen::Index>(urban.ids.size());
  spec.design.resize(n, 1 + q);
  spec.observed_log.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = urban.ids[static_cast<std::size_t>(i)];
    spec.station_ids.push_back(id);
    spec.observed_log(i) = dataset.station(id).log_mean();
    const auto r = static_cast<Eigen::Index>(cov.row_of(id));
    spec.design(i, 0) = 1.0;
    for (Eigen::Index k = 0; k < q; ++k) spec.design(i, 1 + k) = cov.values(r, cov.urban_offset() + k);
  }
  if (n < 1 + q) {
    throw Error(ErrorCode::InsufficientData, "stage three needs more urban stations than coefficients");
  }
  check_design(spec.design, spec.coef_names);
  return spec;
}

StageThreeFit fit_stage_three(const PredictionDraws& background, const StageThreeSpec& spec,
                              const mcmc::PriorConfig& prior, const StageThreeConfig& config, std::uint64_t seed) {
  if (background.ids != spec.station_ids) {
    throw Error(ErrorCode::Integrity, "background draws and stage-three stations differ");
  }
  if (config.sweeps_per_draw < 1) throw Error(ErrorCode::Config, "sweeps_per_draw must be at least 1");
  StageThreeFit fit;
  fit.coef_names = spec.coef_names;
  const auto& W = spec.design;
  for (std::size_t c = 0; c < background.chains; ++c) {
    RngStream rng(seed, {kStreamStageThree, c});
    const auto row0 = static_cast<Eigen::Index>(c * background.draws_per_chain);
    auto residual_of = [&](std::size_t d) -> Eigen::VectorXd {
      return spec.observed_log - background.values.row(row0 + static_cast<Eigen::Index>(d)).transpose();
    };

    Eigen::VectorXd r = residual_of(0);
    Eigen::VectorXd gamma = W.colPivHouseholderQr().solve(r);
    double sigma2 = std::max((r - W * gamma).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(r.size() - W.cols(), 1)), 1e-6);
    auto sweep = [&](const Eigen::VectorXd& resid) {
      gamma = mcmc::draw_regression_coefficients(resid, W, sigma2, prior, rng);
      const Eigen::VectorXd omega = resid - W * gamma;
      sigma2 = mcmc::draw_variance(omega.squaredNorm(), static_cast<std::size_t>(omega.size()), prior, rng);
    };
    for (std::size_t s = 0; s < config.warmup_sweeps; ++s) sweep(r);

    std::vector<Eigen::VectorXd> gammas;
    std::vector<double> sigmas;
    gammas.reserve(background.draws_per_chain);
    sigmas.reserve(background.draws_per_chain);
    for (std::size_t d = 0; d < background.draws_per_chain; ++d) {
      r = residual_of(d);
      for (std::size_t s = 0; s < config.sweeps_per_draw; ++s) sweep(r);
      gammas.push_back(gamma);
      sigmas.push_back(sigma2);
    }
    fit.gamma.push_back(std::move(gammas));
    fit.sigma2_omega.push_back(std::move(sigmas));
  }
  return fit;
}

void predict_grid(const StageOneFit& fit, const std::vector<GridCell>& cells, const PredictionOptions& options,
                  std::uint64_t seed, const std::function<void(std::size_t, const PredictionResult&)>& sink,
                  std::size_t block_size) {
  if (block_size == 0) block_size = 256;
  const auto& spec = fit.spec;
  const auto p = spec.design.cols();
  const Eigen::MatrixXd site_dist = spatial::distance_matrix(spec.sites);
  const auto& samples = fit.samples;
  const std::size_t per_chain = samples.draws_per_chain();

  for (std::size_t start = 0, block = 0; start < cells.size(); start += block_size, ++block) {
    const std::size_t stop = std::min(cells.size(), start + block_size);
    PredictionTarget target;
    target.design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(stop - start), p);
    for (std::size_t i = start; i < stop; ++i) {
      const auto& cell = cells[i];
      if (static_cast<std::size_t>(cell.global_covariates.size()) != spec.global_count) {
        throw Error(ErrorCode::Schema, "grid cell " + std::to_string(i) + " has " +
                                           std::to_string(cell.global_covariates.size()) +
                                           " global covariates, expected " + std::to_string(spec.global_count));
      }
      target.ids.push_back(std::to_string(i));
      target.points.push_back({cell.x_km, cell.y_km});
      const auto row = static_cast<Eigen::Index>(i - start);
      target.design(row, 0) = 1.0;
      for (std::size_t g = 0; g < spec.global_count; ++g) {
        target.design(row, static_cast<Eigen::Index>(1 + g)) = cell.global_covariates(static_cast<Eigen::Index>(g));
      }
    }
    const Eigen::MatrixXd cross = spatial::cross_distances(target.points, spec.sites);
    PredictionDraws draws;
    draws.ids = target.ids;
    draws.chains = samples.chain_count();
    draws.draws_per_chain = per_chain;
    draws.values.resize(static_cast<Eigen::Index>(draws.chains * per_chain), target.design.rows());
    for (std::size_t c = 0; c < draws.chains; ++c) {
      RngStream rng(seed, {kStreamGrid, c, block});
      predict_chain(samples.chains[c], site_dist, cross, target.design, options, rng, draws.values,
                    static_cast<Eigen::Index>(c * per_chain));
    }
    const auto results = summarize_predictions(draws);
    for (std::size_t i = 0; i < results.size(); ++i) sink(start + i, results[i]);
  }
}

std::vector<std::string> untransformed_columns(const std::vector<GridCell>& cells,
                                               const std::vector<std::string>& global_names,
                                               const std::vector<data::TransformSpec>& transforms) {
  std::vector<std::string> bad;
  for (std::size_t g = 0; g < global_names.size(); ++g) {
    auto it = std::find_if(transforms.begin(), transforms.end(),
                           [&](const data::TransformSpec& t) { return t.name == global_names[g]; });
    if (it == transforms.end() || it->kind != data::TransformKind::MinMaxSqrt) continue;
    for (const auto& cell : cells) {
      const double v = cell.global_covariates(static_cast<Eigen::Index>(g));
      if (v < 0.0 || v > 1.0) {
        bad.push_back(global_names[g]);
        break;
      }
    }
  }
  return bad;
}

}  // namespace hbgeo::hierarchy
