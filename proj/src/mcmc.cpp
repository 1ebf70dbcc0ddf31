#include "hbgeo/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "hbgeo/error.hpp"

namespace hbgeo::mcmc {

// --- configuration ----------------------------------------------------------

double PhiPriorSpec::phi_lower() const { return -std::log(rho) / d_far_km; }
double PhiPriorSpec::phi_upper() const { return -std::log(rho) / d_near_km; }

void PhiPriorSpec::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::Config, "phi prior rho must lie in (0, 1)");
  if (!(d_near_km > 0.0 && d_far_km > d_near_km)) {
    throw Error(ErrorCode::Config, "phi prior distances must satisfy 0 < d_near < d_far");
  }
}

PriorConfig PriorConfig::with_phi_limits(const PhiPriorSpec& spec) {
  spec.validate();
  PriorConfig p;
  p.phi_lower = spec.phi_lower();
  p.phi_upper = spec.phi_upper();
  return p;
}

void PriorConfig::validate() const {
  if (!(coef_variance > 0.0)) throw Error(ErrorCode::Config, "coef_variance must be positive");
  if (!(precision_shape > 0.0 && precision_rate > 0.0)) {
    throw Error(ErrorCode::Config, "precision prior shape and rate must be positive");
  }
  if (!(phi_lower > 0.0 && phi_upper > phi_lower)) {
    throw Error(ErrorCode::Config, "phi limits must satisfy 0 < lower < upper");
  }
}

void McmcConfig::validate() const {
  if (chains < 1) throw Error(ErrorCode::Config, "at least one chain is required");
  if (samples < 1) throw Error(ErrorCode::Config, "samples must be at least 1");
  if (thin < 1) throw Error(ErrorCode::Config, "thin must be at least 1");
  if (!(proposal_sd_init > 0.0)) throw Error(ErrorCode::Config, "proposal_sd_init must be positive");
  if (!(adapt_target_accept > 0.0 && adapt_target_accept < 1.0)) {
    throw Error(ErrorCode::Config, "adapt_target_accept must lie in (0, 1)");
  }
}

// --- conjugate blocks -------------------------------------------------------

Eigen::VectorXd draw_from_precision(const Eigen::LLT<Eigen::MatrixXd>& precision_llt, const Eigen::VectorXd& mean,
                                    RngStream& rng) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  // P = L L'  =>  L'^{-1} z ~ N(0, P^{-1})
  return mean + precision_llt.matrixU().solve(z);
}

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::Factorization, std::string(what) + ": posterior precision is not positive definite");
  }
  return llt;
}

GaussianMoments moments_from_precision(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& rhs) {
  const auto k = rhs.size();
  return GaussianMoments{llt.solve(rhs), llt.solve(Eigen::MatrixXd::Identity(k, k))};
}

struct PrecisionForm {
  Eigen::MatrixXd precision;
  Eigen::VectorXd rhs;
};

PrecisionForm regression_precision(const Eigen::Ref<const Eigen::VectorXd>& y,
                                   const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2,
                                   const PriorConfig& prior) {
  PrecisionForm f;
  f.precision = X.transpose() * X / sigma2;
  f.precision.diagonal().array() += 1.0 / prior.coef_variance;
  f.rhs = X.transpose() * y / sigma2;
  f.rhs.array() += prior.coef_mean / prior.coef_variance;
  return f;
}

}  // namespace

GaussianMoments regression_full_conditional(const Eigen::Ref<const Eigen::VectorXd>& y,
                                            const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2,
                                            const PriorConfig& prior) {
  auto f = regression_precision(y, X, sigma2, prior);
  return moments_from_precision(factor_or_throw(f.precision, "regression"), f.rhs);
}

Eigen::VectorXd draw_regression_coefficients(const Eigen::Ref<const Eigen::VectorXd>& y,
                                             const Eigen::Ref<const Eigen::MatrixXd>& X, double sigma2,
                                             const PriorConfig& prior, RngStream& rng) {
  auto f = regression_precision(y, X, sigma2, prior);
  auto llt = factor_or_throw(f.precision, "regression");
  return draw_from_precision(llt, llt.solve(f.rhs), rng);
}

GaussianMoments beta_full_conditional(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X, const PriorConfig& prior) {
  return regression_full_conditional(y - state.m, X, state.sigma2_nu, prior);
}

Eigen::VectorXd gibbs_update_beta(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X, const PriorConfig& prior,
                                  RngStream& rng) {
  return draw_regression_coefficients(y - state.m, X, state.sigma2_nu, prior, rng);
}

namespace {

PrecisionForm collapsed_precision(const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  const spatial::CholeskyFactor& marginal_cov, const PriorConfig& prior) {
  const auto& L = marginal_cov.llt.matrixL();
  Eigen::MatrixXd wx = L.solve(X);
  Eigen::VectorXd wy = L.solve(y);
  PrecisionForm f;
  f.precision = wx.transpose() * wx;
  f.precision.diagonal().array() += 1.0 / prior.coef_variance;
  f.rhs = wx.transpose() * wy;
  f.rhs.array() += prior.coef_mean / prior.coef_variance;
  return f;
}

}  // namespace

GaussianMoments beta_collapsed_conditional(const PosteriorDraw& /*state*/, const Eigen::Ref<const Eigen::VectorXd>& y,
                                           const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const spatial::CholeskyFactor& marginal_cov, const PriorConfig& prior) {
  auto f = collapsed_precision(y, X, marginal_cov, prior);
  return moments_from_precision(factor_or_throw(f.precision, "beta"), f.rhs);
}

namespace {

PrecisionForm spatial_precision(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::MatrixXd>& sigma_inverse) {
  PrecisionForm f;
  f.precision = sigma_inverse / state.sigma2_m;
  f.precision.diagonal().array() += 1.0 / state.sigma2_nu;
  f.rhs = (y - X * state.beta) / state.sigma2_nu;
  return f;
}

}  // namespace

GaussianMoments spatial_full_conditional(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const Eigen::Ref<const Eigen::MatrixXd>& sigma_inverse) {
  auto f = spatial_precision(state, y, X, sigma_inverse);
  return moments_from_precision(factor_or_throw(f.precision, "spatial effects"), f.rhs);
}

Eigen::VectorXd gibbs_update_spatial(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::MatrixXd>& sigma_inverse, RngStream& rng) {
  auto f = spatial_precision(state, y, X, sigma_inverse);
  auto llt = factor_or_throw(f.precision, "spatial effects");
  return draw_from_precision(llt, llt.solve(f.rhs), rng);
}

Eigen::VectorXd gibbs_update_spatial(const PosteriorDraw& state, const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const spatial::CorrelationStructure& corr, RngStream& rng) {
  return gibbs_update_spatial(state, y, X, corr.inverse(), rng);
}

double draw_variance(double sum_sq, std::size_t count, const PriorConfig& prior, RngStream& rng) {
  const double shape = prior.precision_shape + 0.5 * static_cast<double>(count);
  const double rate = prior.precision_rate + 0.5 * sum_sq;
  return 1.0 / rng.gamma(shape, rate);
}

VarianceDraws gibbs_update_precisions(const PosteriorDraw& state, const PrecisionInputs& inputs,
                                      const PriorConfig& prior, RngStream& rng) {
  VarianceDraws out{state.sigma2_nu, state.sigma2_m, state.sigma2_omega};
  if (inputs.nu_residual) {
    out.sigma2_nu = draw_variance(inputs.nu_residual->squaredNorm(),
                                  static_cast<std::size_t>(inputs.nu_residual->size()), prior, rng);
  }
  if (inputs.spatial) {
    const double q = inputs.spatial->cholesky().quadratic_form(state.m);
    out.sigma2_m = draw_variance(q, static_cast<std::size_t>(state.m.size()), prior, rng);
  }
  if (inputs.omega_residual) {
    out.sigma2_omega = draw_variance(inputs.omega_residual->squaredNorm(),
                                     static_cast<std::size_t>(inputs.omega_residual->size()), prior, rng);
  }
  return out;
}

// --- phi --------------------------------------------------------------------

double phi_to_logit(double phi, const PriorConfig& prior) {
  const double s = (phi - prior.phi_lower) / (prior.phi_upper - prior.phi_lower);
  return std::log(s) - std::log1p(-s);
}

double logit_to_phi(double u, const PriorConfig& prior) {
  const double s = 1.0 / (1.0 + std::exp(-u));
  // Keep strictly inside the open interval even when s rounds to 0 or 1.
  const double phi = prior.phi_lower + (prior.phi_upper - prior.phi_lower) * s;
  return std::clamp(phi, std::nextafter(prior.phi_lower, prior.phi_upper),
                    std::nextafter(prior.phi_upper, prior.phi_lower));
}

double logit_log_jacobian(double u) {
  // log s(u) + log(1 - s(u)) = -softplus(-u) - softplus(u)
  auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
  return -softplus(-u) - softplus(u);
}

double metropolis_acceptance_probability(double log_target_current, double log_target_proposed) {
  const double diff = log_target_proposed - log_target_current;
  if (std::isnan(diff)) return 0.0;
  return diff >= 0.0 ? 1.0 : std::exp(diff);
}

double phi_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& m, double sigma2_m,
                          const spatial::CorrelationStructure& corr) {
  const auto& f = corr.cholesky();
  return -0.5 * f.log_determinant() - 0.5 * f.quadratic_form(m) / sigma2_m;
}

LogitStep logit_random_walk(double phi, const std::function<double(double)>& log_target, const PriorConfig& prior,
                            double proposal_sd, RngStream& rng) {
  const double u = phi_to_logit(phi, prior);
  const double u_new = u + proposal_sd * rng.normal();
  const double phi_new = logit_to_phi(u_new, prior);
  const double cur = log_target(phi) + logit_log_jacobian(u);
  const double next = log_target(phi_new) + logit_log_jacobian(u_new);
  const double alpha = metropolis_acceptance_probability(cur, next);
  const double draw = rng.uniform();
  if (draw < alpha) return LogitStep{phi_new, true};
  return LogitStep{phi, false};
}

PhiStep metropolis_update_phi(const PosteriorDraw& state, const spatial::CorrelationStructure& current,
                              const Eigen::MatrixXd& distances, const PriorConfig& prior, double proposal_sd,
                              RngStream& rng) {
  std::optional<spatial::CorrelationStructure> proposed;
  auto target = [&](double phi) {
    if (phi == current.phi()) return phi_log_likelihood(state.m, state.sigma2_m, current);
    proposed.emplace(distances, phi);
    return phi_log_likelihood(state.m, state.sigma2_m, *proposed);
  };
  const auto step = logit_random_walk(state.phi, target, prior, proposal_sd, rng);
  PhiStep out{step.phi, step.accepted, std::nullopt};
  if (step.accepted) {
    if (proposed && proposed->phi() == step.phi) {
      out.corr = std::move(proposed);
    } else {
      out.corr.emplace(distances, step.phi);
    }
  }
  return out;
}

// --- chains -----------------------------------------------------------------

namespace {

spatial::CholeskyFactor marginal_factor(const spatial::CorrelationStructure& corr, double sigma2_nu,
                                        double sigma2_m) {
  Eigen::MatrixXd v = sigma2_m * corr.correlation();
  v.diagonal().array() += sigma2_nu;
  return spatial::factorize(v);
}

double marginal_log_likelihood(const Eigen::VectorXd& r, const spatial::CholeskyFactor& v) {
  return -0.5 * v.log_determinant() - 0.5 * v.quadratic_form(r);
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return X.colPivHouseholderQr().solve(y);
}

// Log prior of theta = (logit phi, log sigma2_m, log sigma2_nu): uniform phi
// with its logit Jacobian, Gamma priors on both precisions.
double joint_log_prior(const Eigen::Vector3d& theta, const PriorConfig& prior) {
  const double a = prior.precision_shape, b = prior.precision_rate;
  return logit_log_jacobian(theta(0)) - a * theta(1) - b * std::exp(-theta(1)) - a * theta(2) -
         b * std::exp(-theta(2));
}

// Burn-in adaptive proposal for the joint move: running covariance of theta
// (Welford) and a Robbins-Monro scale.
struct JointProposal {
  static constexpr std::size_t kCovarianceStart = 500;
  static constexpr std::size_t kRefresh = 50;

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  std::size_t count = 0;
  Eigen::Matrix3d chol = Eigen::Matrix3d::Identity();

  void observe(const Eigen::Vector3d& theta) {
    ++count;
    const Eigen::Vector3d delta = theta - mean;
    mean += delta / static_cast<double>(count);
    scatter += delta * (theta - mean).transpose();
  }

  // Returns true when the proposal shape switched to the sample covariance.
  bool refresh() {
    if (count < kCovarianceStart || count % kRefresh != 0) return false;
    Eigen::Matrix3d cov = scatter / static_cast<double>(count - 1);
    cov.diagonal().array() += 1e-6;
    Eigen::LLT<Eigen::Matrix3d> llt(cov);
    if (llt.info() != Eigen::Success) return false;
    const bool first = count == kCovarianceStart;
    chol = llt.matrixL();
    return first;
  }
};

struct ChainResult {
  std::vector<PosteriorDraw> draws;
  double accept_rate = 0.0;
  double proposal_sd = 0.0;
  std::size_t adaptation_steps = 0;
};

PosteriorDraw initial_state(const StageOneData& data, const PriorConfig& prior, std::size_t chain) {
  PosteriorDraw s;
  s.beta = least_squares(data.X, data.y);
  s.m = Eigen::VectorXd::Zero(data.y.size());
  s.sigma2_nu = 1.0;
  s.sigma2_m = 1.0;
  double u = phi_to_logit(std::sqrt(prior.phi_lower * prior.phi_upper), prior);
  if (chain > 0) {
    // Alternate direction; later chains push further out.
    const double sign = (chain % 2 == 1) ? 1.0 : -1.0;
    const double scale = 2.0 * static_cast<double>((chain + 1) / 2);
    s.beta.array() += sign * 2.0 * std::sqrt(prior.coef_variance) * static_cast<double>((chain + 1) / 2);
    s.sigma2_nu = std::exp(sign * scale);
    s.sigma2_m = std::exp(-sign * scale);
    u += sign * scale;
  }
  s.phi = logit_to_phi(u, prior);
  return s;
}

ChainResult run_one_chain(const StageOneData& data, const PriorConfig& prior, const McmcConfig& cfg,
                          std::size_t chain) {
  RngStream rng(cfg.seed, {kStreamStageOne, chain});
  PosteriorDraw s = initial_state(data, prior, chain);
  spatial::CorrelationStructure corr(data.distances, s.phi);
  Eigen::MatrixXd sigma_inv = corr.inverse();
  double log_sd = std::log(cfg.proposal_sd_init);
  JointProposal joint;
  std::optional<spatial::CholeskyFactor> v_joint;

  ChainResult result;
  result.draws.reserve(cfg.samples);
  std::size_t accepted_post = 0;
  const std::size_t total = cfg.burn_in + cfg.samples * cfg.thin;

  for (std::size_t iter = 0; iter < total; ++iter) {
    const bool burning = iter < cfg.burn_in;
    const double sd = std::exp(log_sd);
    bool accepted = false;

    std::optional<spatial::CholeskyFactor> v_current;
    if (cfg.phi_update == PhiUpdate::Joint) {
      const Eigen::VectorXd r = data.y - data.X * s.beta;
      if (!v_joint) v_joint = marginal_factor(corr, s.sigma2_nu, s.sigma2_m);
      const Eigen::Vector3d theta(phi_to_logit(s.phi, prior), std::log(s.sigma2_m), std::log(s.sigma2_nu));
      const Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
      const Eigen::Vector3d prop = theta + sd * (joint.chol * z);
      const double phi_p = logit_to_phi(prop(0), prior);
      spatial::CorrelationStructure corr_p(data.distances, phi_p);
      auto v_p = marginal_factor(corr_p, std::exp(prop(2)), std::exp(prop(1)));
      const double log_cur = marginal_log_likelihood(r, *v_joint) + joint_log_prior(theta, prior);
      const double log_prop = marginal_log_likelihood(r, v_p) + joint_log_prior(prop, prior);
      accepted = rng.uniform() < metropolis_acceptance_probability(log_cur, log_prop);
      if (accepted) {
        s.phi = phi_p;
        s.sigma2_m = std::exp(prop(1));
        s.sigma2_nu = std::exp(prop(2));
        corr = std::move(corr_p);
        v_joint = std::move(v_p);
        sigma_inv = corr.inverse();
      }
      v_current = v_joint;
      if (burning) {
        joint.observe(accepted ? prop : theta);
        if (joint.refresh()) log_sd = std::log(2.38 / std::sqrt(3.0));
      }
    } else if (cfg.phi_update == PhiUpdate::Marginal) {
      const Eigen::VectorXd r = data.y - data.X * s.beta;
      std::optional<spatial::CorrelationStructure> proposed_corr;
      std::optional<spatial::CholeskyFactor> proposed_v;
      v_current = marginal_factor(corr, s.sigma2_nu, s.sigma2_m);
      auto target = [&](double phi) {
        if (phi == corr.phi()) return marginal_log_likelihood(r, *v_current);
        proposed_corr.emplace(data.distances, phi);
        proposed_v = marginal_factor(*proposed_corr, s.sigma2_nu, s.sigma2_m);
        return marginal_log_likelihood(r, *proposed_v);
      };
      const auto step = logit_random_walk(s.phi, target, prior, sd, rng);
      accepted = step.accepted;
      if (accepted && step.phi != corr.phi()) {
        s.phi = step.phi;
        corr = std::move(*proposed_corr);
        v_current = std::move(proposed_v);
        sigma_inv = corr.inverse();
      }
    } else {
      auto step = metropolis_update_phi(s, corr, data.distances, prior, sd, rng);
      accepted = step.accepted;
      if (accepted) {
        s.phi = step.phi;
        corr = std::move(*step.corr);
        sigma_inv = corr.inverse();
      }
    }

    if (burning) {
      // Robbins-Monro on the log proposal scale, burn-in only.
      const double rate = std::pow(static_cast<double>(iter) + 1.0, -0.6);
      log_sd += rate * ((accepted ? 1.0 : 0.0) - cfg.adapt_target_accept);
      log_sd = std::clamp(log_sd, std::log(1e-4), std::log(50.0));
      ++result.adaptation_steps;
    } else if (accepted) {
      ++accepted_post;
    }

    if (cfg.beta_update == BetaUpdate::Collapsed) {
      if (!v_current) v_current = marginal_factor(corr, s.sigma2_nu, s.sigma2_m);
      auto f = collapsed_precision(data.y, data.X, *v_current, prior);
      auto llt = factor_or_throw(f.precision, "beta");
      s.beta = draw_from_precision(llt, llt.solve(f.rhs), rng);
    } else {
      s.beta = gibbs_update_beta(s, data.y, data.X, prior, rng);
    }
    s.m = gibbs_update_spatial(s, data.y, data.X, sigma_inv, rng);

    if (cfg.phi_update != PhiUpdate::Joint) {
      const Eigen::VectorXd nu = data.y - data.X * s.beta - s.m;
      const auto vars = gibbs_update_precisions(s, PrecisionInputs{&nu, &corr, nullptr}, prior, rng);
      s.sigma2_nu = vars.sigma2_nu;
      s.sigma2_m = vars.sigma2_m;
    }

    if (!burning && (iter - cfg.burn_in + 1) % cfg.thin == 0) result.draws.push_back(s);
  }
  const std::size_t post = total - cfg.burn_in;
  result.accept_rate = post > 0 ? static_cast<double>(accepted_post) / static_cast<double>(post) : 0.0;
  result.proposal_sd = std::exp(log_sd);
  return result;
}

}  // namespace

PosteriorSamples run_chains(const StageOneData& data, const PriorConfig& prior, const McmcConfig& config) {
  prior.validate();
  config.validate();
  const auto n = data.y.size();
  if (data.X.rows() != n || data.distances.rows() != n || data.distances.cols() != n) {
    throw Error(ErrorCode::Design, "stage-one inputs have inconsistent dimensions");
  }

  std::vector<ChainResult> results(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  auto work = [&](std::size_t c) {
    try {
      results[c] = run_one_chain(data, prior, config, c);
    } catch (const Error& e) {
      errors[c] = std::make_exception_ptr(Error(e.code(), "chain " + std::to_string(c) + ": " + e.what()));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.parallel && config.chains > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::jthread> threads;
    for (std::size_t c = 0; c < config.chains; ++c) threads.emplace_back(work, c);
  } else {
    for (std::size_t c = 0; c < config.chains; ++c) work(c);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorSamples out;
  out.config_echo = config;
  for (auto& r : results) {
    out.chains.push_back(std::move(r.draws));
    out.accept_rate_phi.push_back(r.accept_rate);
    out.final_proposal_sd.push_back(r.proposal_sd);
    out.adaptation_steps.push_back(r.adaptation_steps);
  }
  return out;
}

// --- diagnostics ------------------------------------------------------------

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw Error(ErrorCode::Diagnostics, "Gelman-Rubin needs at least 2 chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw Error(ErrorCode::Diagnostics, "chains have unequal lengths");
  }
  if (n < 10) throw Error(ErrorCode::Diagnostics, "Gelman-Rubin needs at least 10 draws per chain");

  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(chains.size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= nn;
    double ss = 0.0;
    for (double v : c) ss += (v - mean) * (v - mean);
    w += ss / (nn - 1.0);
    means.push_back(mean);
  }
  w /= mm;
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= mm;
  double b = 0.0;
  for (double m : means) b += (m - grand) * (m - grand);
  b *= nn / (mm - 1.0);

  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double v_hat = (nn - 1.0) / nn * w + b / nn;
  return std::sqrt(v_hat / w);
}

double gelman_rubin(const PosteriorSamples& samples, const std::function<double(const PosteriorDraw&)>& selector) {
  std::vector<std::vector<double>> chains;
  for (const auto& c : samples.chains) {
    std::vector<double> values;
    values.reserve(c.size());
    for (const auto& d : c) values.push_back(selector(d));
    chains.push_back(std::move(values));
  }
  return gelman_rubin(chains);
}

}  // namespace hbgeo::mcmc
