#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbgeo/rng.hpp"
#include "hbgeo/spatial_kernel.hpp"

namespace hbgeo::mcmc {

/// Prior limits for phi from "correlation falls to rho at distance d":
/// phi = -ln(rho) / d.
struct PhiPriorSpec {
  double rho = 0.01;
  double d_near_km = 25.0;
  double d_far_km = 2000.0;

  double phi_lower() const;
  double phi_upper() const;
  void validate() const;
};

struct PriorConfig {
  double coef_mean = 0.0;
  double coef_variance = 1000.0;
  double precision_shape = 1.0;
  double precision_rate = 0.01;
  double phi_lower = 0.0;
  double phi_upper = 0.0;

  static PriorConfig with_phi_limits(const PhiPriorSpec& spec);
  void validate() const;
};

/// How beta is drawn inside run_chains: from its full conditional given m,
/// or with m integrated out (followed by a fresh draw of m).
enum class BetaUpdate { Conditional, Collapsed };
/// Metropolis step for phi: targets the MVN density of m (Conditional), the
/// density of y - X beta with m integrated out (Marginal), or that same
/// marginal jointly in (phi, sigma2_m, sigma2_nu) on the logit/log scale with
/// an adaptive proposal covariance (Joint; the variances then skip their
/// Gibbs draws).
enum class PhiUpdate { Conditional, Marginal, Joint };

struct McmcConfig {
  std::size_t chains = 2;
  std::size_t burn_in = 40000;
  std::size_t samples = 10000;
  std::size_t thin = 1;
  std::uint64_t seed = 20010101;
  double proposal_sd_init = 0.5;
  double adapt_target_accept = 0.35;
  BetaUpdate beta_update = BetaUpdate::Collapsed;
  PhiUpdate phi_update = PhiUpdate::Joint;
  bool parallel = true;

  void validate() const;
};

struct PosteriorDraw {
  Eigen::VectorXd beta;
  Eigen::VectorXd m;
  double sigma2_nu = 1.0;
  double sigma2_m = 1.0;
  double phi = 0.0;
  Eigen::VectorXd gamma;
  double sigma2_omega = 1.0;
};

struct PosteriorSamples {
  std::vector<std::vector<PosteriorDraw>> chains;  // chain-major
  std::vector<double> accept_rate_phi;             // post burn-in, per chain
  std::vector<double> final_proposal_sd;           // per chain
  std::vector<std::size_t> adaptation_steps;       // per chain
  McmcConfig config_echo;

  std::size_t chain_count() const { return chains.size(); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().size(); }
};

/// Stage-one inputs: log responses, design (intercept first) and the
/// pairwise distances of the sites.
struct StageOneData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd distances;
  std::vector<std::string> coef_names;
};

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Draw mean + chol(cov) z given the precision's Cholesky factor.
Eigen::VectorXd draw_from_precision(const Eigen::LLT<Eigen::MatrixXd>& precision_llt,
                                    const Eigen::VectorXd& mean, RngStream& rng);

/// Conjugate normal regression: y ~ N(X b, sigma2 I), b ~ N(coef_mean, coef_variance I).
GaussianMoments regression_full_conditional(const Eigen::Ref<const Eigen::VectorXd>& y,
                                            const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2,
                                            const PriorConfig& prior);
Eigen::VectorXd draw_regression_coefficients(const Eigen::Ref<const Eigen::VectorXd>& y,
                                             const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2,
                                             const PriorConfig& prior, RngStream& rng);

GaussianMoments beta_full_conditional(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X, const PriorConfig& prior);
/// beta | y - m, sigma2_nu.
Eigen::VectorXd gibbs_update_beta(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X, const PriorConfig& prior,
                                  RngStream& rng);

/// beta | y with m integrated out: y ~ N(X beta, sigma2_nu I + sigma2_m Sigma).
GaussianMoments beta_collapsed_conditional(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                           const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const spatial::CholeskyFactor& marginal_cov, const PriorConfig& prior);

GaussianMoments spatial_full_conditional(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const Eigen::Ref<const Eigen::MatrixXd>& sigma_inverse);
/// m | y - X beta, via the Cholesky factor of I / sigma2_nu + Sigma^{-1} / sigma2_m.
Eigen::VectorXd gibbs_update_spatial(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const spatial::CorrelationStructure& corr, RngStream& rng);
Eigen::VectorXd gibbs_update_spatial(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::MatrixXd>& sigma_inverse, RngStream& rng);

/// Precision ~ Ga(shape + count / 2, rate + sum_sq / 2); returns 1 / precision.
double draw_variance(double sum_sq, std::size_t count, const PriorConfig& prior, RngStream& rng);

/// Residual blocks feeding the precision updates; a null entry keeps the
/// corresponding variance unchanged.
struct PrecisionInputs {
  const Eigen::VectorXd* nu_residual = nullptr;
  const spatial::CorrelationStructure* spatial = nullptr;  // uses state.m
  const Eigen::VectorXd* omega_residual = nullptr;
};

struct VarianceDraws {
  double sigma2_nu = 1.0;
  double sigma2_m = 1.0;
  double sigma2_omega = 1.0;
};

VarianceDraws gibbs_update_precisions(const PosteriorDraw& state, const PrecisionInputs& inputs,
                                      const PriorConfig& prior, RngStream& rng);

/// Bounded-phi reparameterisation u = logit((phi - lower) / (upper - lower)).
double phi_to_logit(double phi, const PriorConfig& prior);
double logit_to_phi(double u, const PriorConfig& prior);
/// log |d phi / d u| up to an additive constant.
double logit_log_jacobian(double u);

double metropolis_acceptance_probability(double log_target_current, double log_target_proposed);

/// Log MVN(0, sigma2_m Sigma(phi)) density of m, up to terms constant in phi.
double phi_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& m, double sigma2_m,
                          const spatial::CorrelationStructure& corr);

struct PhiStep {
  double phi = 0.0;
  bool accepted = false;
  std::optional<spatial::CorrelationStructure> corr;  // set when accepted
};

/// Random-walk Metropolis on the logit scale targeting p(phi | m, sigma2_m)
/// under the uniform prior on (phi_lower, phi_upper).
PhiStep metropolis_update_phi(const PosteriorDraw& state, const spatial::CorrelationStructure& current,
                              const Eigen::MatrixXd& distances, const PriorConfig& prior, double proposal_sd,
                              RngStream& rng);

/// One logit random-walk step for an arbitrary log target in phi (the
/// Jacobian term is added here).
struct LogitStep {
  double phi = 0.0;
  bool accepted = false;
};
LogitStep logit_random_walk(double phi, const std::function<double(double)>& log_target, const PriorConfig& prior,
                            double proposal_sd, RngStream& rng);

PosteriorSamples run_chains(const StageOneData& data, const PriorConfig& prior, const McmcConfig& config);

/// Potential scale reduction factor, sqrt(((n-1)/n W + B/n) / W).
double gelman_rubin(const std::vector<std::vector<double>>& chains);
double gelman_rubin(const PosteriorSamples& samples, const std::function<double(const PosteriorDraw&)>& selector);

}  // namespace hbgeo::mcmc
