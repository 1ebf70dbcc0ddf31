#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbgeo/data_model.hpp"
#include "hbgeo/mcmc.hpp"
#include "hbgeo/spatial_kernel.hpp"

namespace hbgeo::hierarchy {

/// Stage-one covariate subsets: intercept only, global covariates, or
/// global plus rural covariates.
enum class CovariateSet { InterceptOnly, Global, GlobalRural };

std::string_view to_string(CovariateSet set) noexcept;
CovariateSet parse_covariate_set(std::string_view text);

struct StageOneSpec {
  std::vector<std::string> station_ids;  // rural training sites
  std::vector<spatial::Point> sites;
  Eigen::VectorXd response;              // log annual means
  Eigen::MatrixXd design;                // intercept | global | rural
  std::vector<std::string> coef_names;   // "intercept", then covariate names
  std::size_t global_count = 0;
  std::size_t rural_count = 0;
  CovariateSet covariates = CovariateSet::GlobalRural;

  mcmc::StageOneData as_mcmc_data() const;
};

/// Throws a design error for a constant non-intercept column or linearly
/// dependent columns (named in the message).
void check_design(const Eigen::Ref<const Eigen::MatrixXd>& design, const std::vector<std::string>& names);

StageOneSpec build_stage_one(const data::Dataset& dataset, CovariateSet covariates);

struct StageOneFit {
  StageOneSpec spec;
  mcmc::PriorConfig prior;
  mcmc::PosteriorSamples samples;
};

StageOneFit fit_stage_one(const data::Dataset& dataset, CovariateSet covariates, const mcmc::PriorConfig& prior,
                          const mcmc::McmcConfig& config);

/// Locations to predict at, with a design in the stage-one column layout.
struct PredictionTarget {
  std::vector<std::string> ids;
  std::vector<spatial::Point> points;
  Eigen::MatrixXd design;
  std::vector<double> observed_log;  // optional, parallel to ids
};

/// Urban training stations with the rural block structurally zeroed.
PredictionTarget urban_targets(const data::Dataset& dataset, const StageOneSpec& spec);
/// Rural validation stations with all stage-one covariates retained.
PredictionTarget validation_targets(const data::Dataset& dataset, const StageOneSpec& spec);

struct PredictionOptions {
  bool include_noise = false;  // add a N(0, sigma2_nu) term per draw
};

/// Log-scale predictive draws. Rows are pooled posterior draws (chain-major),
/// columns are targets.
struct PredictionDraws {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
  std::size_t chains = 0;
  std::size_t draws_per_chain = 0;
};

struct PredictionResult {
  std::string id;
  double log_mean = 0.0;
  double log_variance = 0.0;
  double log_median = 0.0;
  double log_lo95 = 0.0;
  double log_hi95 = 0.0;
  double natural_median = 0.0;
  double natural_lo95 = 0.0;
  double natural_hi95 = 0.0;
};

std::vector<PredictionResult> summarize_predictions(const PredictionDraws& draws);

/// Per draw: x' beta plus a draw of the spatial effect from its kriging
/// distribution at that draw's (m, sigma2_m, phi).
PredictionDraws predict_draws(const StageOneFit& fit, const PredictionTarget& target,
                              const PredictionOptions& options, std::uint64_t seed,
                              std::uint64_t stream_tag = kStreamPrediction);

struct BackgroundPrediction {
  PredictionDraws draws;
  std::vector<PredictionResult> summaries;
};

BackgroundPrediction predict_background(const StageOneFit& fit, const PredictionTarget& targets,
                                        const PredictionOptions& options, std::uint64_t seed);

struct StageThreeConfig {
  std::size_t warmup_sweeps = 200;  // on the first upstream draw
  std::size_t sweeps_per_draw = 2;
};

struct StageThreeSpec {
  std::vector<std::string> station_ids;
  Eigen::VectorXd observed_log;          // Z
  Eigen::MatrixXd design;                // intercept | urban covariates
  std::vector<std::string> coef_names;
};

StageThreeSpec build_stage_three(const data::Dataset& dataset, const PredictionTarget& urban);

struct StageThreeFit {
  std::vector<std::string> coef_names;
  std::vector<std::vector<Eigen::VectorXd>> gamma;   // per chain, per upstream draw
  std::vector<std::vector<double>> sigma2_omega;
};

/// Cut stage: consumes the upstream background draws chain by chain; stage-one
/// quantities are read only.
StageThreeFit fit_stage_three(const PredictionDraws& background, const StageThreeSpec& spec,
                              const mcmc::PriorConfig& prior, const StageThreeConfig& config, std::uint64_t seed);

struct GridCell {
  double x_km = 0.0;
  double y_km = 0.0;
  Eigen::VectorXd global_covariates;
};

/// Streams one PredictionResult per cell, processing cells in blocks of
/// `block_size`. Rural covariates are zero for every cell.
void predict_grid(const StageOneFit& fit, const std::vector<GridCell>& cells, const PredictionOptions& options,
                  std::uint64_t seed, const std::function<void(std::size_t, const PredictionResult&)>& sink,
                  std::size_t block_size = 256);

/// Global-covariate values outside [0, 1] for columns produced by the
/// min-max transform; returns the offending column names.
std::vector<std::string> untransformed_columns(const std::vector<GridCell>& cells,
                                               const std::vector<std::string>& global_names,
                                               const std::vector<data::TransformSpec>& transforms);

}  // namespace hbgeo::hierarchy
