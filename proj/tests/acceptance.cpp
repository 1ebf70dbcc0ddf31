// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbgeo/cli.hpp"
#include "hbgeo/hierarchy.hpp"
#include "hbgeo/mcmc.hpp"
#include "hbgeo/spatial_kernel.hpp"
#include "hbgeo/stats.hpp"
#include "hbgeo/synthetic.hpp"
#include "hbgeo/validation.hpp"
#include "hbgeo/variogram.hpp"
#include "oracles.hpp"

using namespace hbgeo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

mcmc::PriorConfig default_prior() { return mcmc::PriorConfig::with_phi_limits(mcmc::PhiPriorSpec{}); }

// ---------------------------------------------------------------- 1

void correlation_arithmetic(Outcome& o) {
  const double c_high = spatial::exp_correlation(100.0, 0.0437);
  const double c_low = spatial::exp_correlation(100.0, 0.0075);
  o.detail << "exp(-4.37)=" << fmt(c_high, 6) << " exp(-0.75)=" << fmt(c_low, 6);
  o.require(c_high >= 0.012 && c_high <= 0.013, "high-phi correlation at 100 km");
  o.require(c_low >= 0.47 && c_low <= 0.48, "low-phi correlation at 100 km");
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> d(0.0, 3000.0), p(1e-4, 0.5);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double dk = d(gen), ph = p(gen);
    worst = std::max(worst, std::abs(spatial::exp_correlation(dk, ph) - std::exp(-ph * dk)));
  }
  std::vector<spatial::Point> pts = {{0, 0}, {100, 0}, {0, 250}};
  const spatial::CorrelationStructure corr(spatial::distance_matrix(pts), 0.0075);
  const Eigen::MatrixXd ref = oracle::exp_cov(oracle::pair_distances(pts, pts), 0.0075, 1.0);
  worst = std::max(worst, (corr.correlation() - ref).cwiseAbs().maxCoeff());
  o.detail << " max abs error=" << fmt(worst, 3);
  o.require(worst <= 1e-12, "function values");
}

// ---------------------------------------------------------------- 2

void phi_bounds(Outcome& o) {
  const mcmc::PhiPriorSpec spec{0.01, 25.0, 2000.0};
  const double lo = spec.phi_lower(), hi = spec.phi_upper();
  o.detail << "lower=" << fmt(lo, 8) << " upper=" << fmt(hi, 8);
  // against -ln(rho)/d to 1e-6, and against the quoted rounded values to half a unit in their last digit
  o.require(std::abs(lo - std::log(100.0) / 2000.0) < 1e-6 && std::abs(lo - 0.0023026) <= 5e-8, "lower bound");
  o.require(std::abs(hi - std::log(100.0) / 25.0) < 1e-6 && std::abs(hi - 0.18421) <= 5e-6, "upper bound");
  const auto prior = mcmc::PriorConfig::with_phi_limits(spec);
  o.require(prior.phi_lower == lo && prior.phi_upper == hi, "prior config carries the bounds");
}

// ---------------------------------------------------------------- 3

void kriging_oracle(Outcome& o) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> n_sites(2, 8), n_targets(1, 3);
  std::uniform_real_distribution<double> coord(0.0, 400.0), phi_d(0.002, 0.2), s2_d(0.05, 2.0);
  std::normal_distribution<double> z;
  double worst_mean = 0.0, worst_var = 0.0;
  for (int cfg = 0; cfg < 100; ++cfg) {
    std::vector<spatial::Point> sites(n_sites(gen)), targets(n_targets(gen));
    for (auto& p : sites) p = {coord(gen), coord(gen)};
    for (auto& p : targets) p = {coord(gen), coord(gen)};
    const double phi = phi_d(gen), s2 = s2_d(gen);
    Eigen::VectorXd m(static_cast<Eigen::Index>(sites.size()));
    for (auto& v : m) v = z(gen);
    const spatial::CorrelationStructure corr(spatial::distance_matrix(sites), phi);
    const auto cross = spatial::CrossCorrelation::from_distances(spatial::cross_distances(targets, sites), phi);
    const auto got = spatial::conditional_mvn(m, s2, corr, cross);
    const auto ref = oracle::condition_joint(sites, targets, m, s2, phi);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      worst_mean = std::max(worst_mean, std::abs(got[j].mean - ref.mean(jj)));
      worst_var = std::max(worst_var, std::abs(got[j].variance - ref.variance(jj)));
    }
  }
  o.detail << "100 configurations, max |mean diff|=" << fmt(worst_mean, 3) << " max |var diff|=" << fmt(worst_var, 3);
  o.require(worst_mean <= 1e-10 && worst_var <= 1e-10, "dense conditioning agreement");
}

// ---------------------------------------------------------------- 4

Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& a) { return Eigen::FullPivLU<Eigen::MatrixXd>(a).inverse(); }

// Worst standardised mean error and worst relative variance error of n draws.
std::pair<double, double> moment_errors(int n, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                        const std::function<Eigen::VectorXd()>& draw) {
  const auto dim = mean.size();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dim), ss = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = draw();
    s += x;
    ss += x.cwiseProduct(x);
  }
  double em = 0.0, ev = 0.0;
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double mu = s(k) / n;
    const double var = (ss(k) - n * mu * mu) / (n - 1);
    em = std::max(em, std::abs(mu - mean(k)) / std::sqrt(cov(k, k)));
    ev = std::max(ev, std::abs(var / cov(k, k) - 1.0));
  }
  return {em, ev};
}

double two_site_log_target(double phi, double d, const Eigen::Vector2d& m, double s2) {
  const double r = std::exp(-phi * d);
  const double det = 1 - r * r;
  const double q = (m(0) * m(0) - 2 * r * m(0) * m(1) + m(1) * m(1)) / det;
  return -0.5 * std::log(det) - 0.5 * q / s2;
}

void full_conditionals(Outcome& o) {
  constexpr int kDraws = 50000;
  const auto prior = default_prior();
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const Eigen::Index n = 6;
  std::vector<spatial::Point> pts(n);
  for (auto& p : pts) p = {300 * u(gen), 300 * u(gen)};
  const Eigen::MatrixXd dist = oracle::pair_distances(pts, pts);
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = u(gen);
    y(i) = 2.0 - X(i, 1) + 0.5 * z(gen);
  }
  mcmc::PosteriorDraw st;
  st.beta = Eigen::Vector2d(1.7, -0.6);
  st.m = Eigen::VectorXd::LinSpaced(n, -0.4, 0.5);
  st.sigma2_nu = 0.15;
  st.sigma2_m = 0.4;
  st.phi = 0.01;
  const spatial::CorrelationStructure corr(dist, st.phi);
  const Eigen::MatrixXd sigma_inv = dense_inverse(oracle::exp_cov(dist, st.phi, 1.0));
  double worst_mean = 0.0, worst_var = 0.0;
  auto record = [&](const char* name, std::pair<double, double> e) {
    worst_mean = std::max(worst_mean, e.first);
    worst_var = std::max(worst_var, e.second);
    o.require(e.first < 0.05 && e.second < 0.05, name);
  };

  {  // beta | m, sigma2_nu
    const Eigen::MatrixXd cov = dense_inverse(X.transpose() * X / st.sigma2_nu +
                                              Eigen::MatrixXd::Identity(2, 2) / prior.coef_variance);
    const Eigen::VectorXd mean = cov * (X.transpose() * (y - st.m) / st.sigma2_nu);
    RngStream rng(41);
    record("beta block", moment_errors(kDraws, mean, cov, [&] { return mcmc::gibbs_update_beta(st, y, X, prior, rng); }));
  }
  {  // m | beta, variances, phi
    const Eigen::MatrixXd cov =
        dense_inverse(Eigen::MatrixXd::Identity(n, n) / st.sigma2_nu + sigma_inv / st.sigma2_m);
    const Eigen::VectorXd mean = cov * (y - X * st.beta) / st.sigma2_nu;
    RngStream rng(42);
    record("spatial block", moment_errors(kDraws, mean, cov, [&] { return mcmc::gibbs_update_spatial(st, y, X, corr, rng); }));
  }
  {  // precisions of nu, m and omega
    const Eigen::VectorXd resid = y - X * st.beta - st.m;
    const Eigen::VectorXd omega = Eigen::Vector3d(0.2, -0.1, 0.35);
    const double q = st.m.dot(sigma_inv * st.m);
    auto ga = [&](double ss, double k) {
      const double a = prior.precision_shape + k / 2, b = prior.precision_rate + ss / 2;
      return std::pair{a / b, a / (b * b)};
    };
    const auto [m_nu, v_nu] = ga(resid.squaredNorm(), n);
    const auto [m_m, v_m] = ga(q, n);
    const auto [m_om, v_om] = ga(omega.squaredNorm(), 3);
    const Eigen::Vector3d mean(m_nu, m_m, m_om);
    const Eigen::Matrix3d cov = Eigen::Vector3d(v_nu, v_m, v_om).asDiagonal();
    RngStream rng(43);
    record("precision block", moment_errors(kDraws, mean, cov, [&] {
             const auto d = mcmc::gibbs_update_precisions(st, {&resid, &corr, &omega}, prior, rng);
             return Eigen::Vector3d(1 / d.sigma2_nu, 1 / d.sigma2_m, 1 / d.sigma2_omega);
           }));
  }
  {  // urban coefficients given the background
    const Eigen::VectorXd z_obs = y.array() + 1.0;
    const double s2 = 0.04;
    const Eigen::MatrixXd cov = dense_inverse(X.transpose() * X / s2 + Eigen::MatrixXd::Identity(2, 2) / prior.coef_variance);
    const Eigen::VectorXd mean = cov * (X.transpose() * z_obs / s2);
    RngStream rng(44);
    record("urban coefficient block", moment_errors(kDraws, mean, cov, [&] {
             return mcmc::draw_regression_coefficients(z_obs, X, s2, prior, rng);
           }));
  }
  o.detail << "Gibbs blocks at " << kDraws << " draws: max mean error " << fmt(100 * worst_mean, 3)
           << "% sd, max variance error " << fmt(100 * worst_var, 3) << "%";

  // phi on two sites against 1-D quadrature
  const double d = 30.0, s2 = 1.0;
  const Eigen::Vector2d m2(0.9, 0.4);
  Eigen::MatrixXd dist2(2, 2);
  dist2 << 0, d, d, 0;
  mcmc::PosteriorDraw s;
  s.m = m2;
  s.sigma2_m = s2;
  s.phi = 0.02;
  spatial::CorrelationStructure c2(dist2, s.phi);
  RngStream rng(45);
  std::vector<double> draws;
  for (int t = 0; t < 201000; ++t) {
    auto step = mcmc::metropolis_update_phi(s, c2, dist2, prior, 1.5, rng);
    if (step.accepted) {
      s.phi = step.phi;
      c2 = std::move(*step.corr);
    }
    if (t >= 1000) draws.push_back(s.phi);
  }
  const int bins = 25;
  const double lo = prior.phi_lower, w = (prior.phi_upper - lo) / bins;
  std::vector<double> exact(bins, 0.0), hist(bins, 0.0);
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    for (int k = 0; k < 400; ++k) exact[b] += std::exp(two_site_log_target(lo + (b + (k + 0.5) / 400) * w, d, m2, s2));
    total += exact[b];
  }
  for (double phi : draws) hist[std::min(bins - 1, static_cast<int>((phi - lo) / w))] += 1.0;
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(hist[b] / draws.size() - exact[b] / total);
  o.detail << "; two-site phi TV at 200000 draws=" << fmt(100 * tv, 3) << "%";
  o.require(tv < 0.05, "phi marginal total variation");
}

// ---------------------------------------------------------------- 5 and 8

synthetic::SimSpec recovery_spec(std::uint64_t seed, bool with_road) {
  synthetic::SimSpec spec;
  spec.n_rural = 200;
  spec.n_urban = 100;
  spec.sigma2_m = 0.25;
  spec.sigma2_nu = 0.09;
  spec.phi = 0.01;
  spec.seed = seed;
  spec.covariates.global_names = {"altitude"};
  spec.beta = Eigen::Vector2d(2.5, -1.0);
  if (with_road) {
    spec.covariates.urban_names = {"road"};
    spec.covariates.urban_upper = {20.0};
    spec.gamma = Eigen::Vector2d(3.294, 0.0623);
  } else {
    spec.gamma = Eigen::VectorXd::Constant(1, 3.294);
  }
  return spec;
}

mcmc::McmcConfig recovery_mcmc(std::uint64_t seed) {
  mcmc::McmcConfig cfg;
  cfg.chains = 2;
  cfg.burn_in = 5000;
  cfg.samples = 2000;
  cfg.seed = seed;
  return cfg;
}

struct CutFit {
  hierarchy::StageOneFit stage_one;
  hierarchy::StageThreeFit stage_three;
};

CutFit fit_cut_model(const data::Dataset& ds, std::uint64_t seed) {
  CutFit out;
  const auto prior = default_prior();
  out.stage_one = hierarchy::fit_stage_one(ds, hierarchy::CovariateSet::Global, prior, recovery_mcmc(seed));
  const auto urban = hierarchy::urban_targets(ds, out.stage_one.spec);
  const auto background = hierarchy::predict_background(out.stage_one, urban, {}, seed);
  out.stage_three = hierarchy::fit_stage_three(background.draws, hierarchy::build_stage_three(ds, urban), prior,
                                               hierarchy::StageThreeConfig{}, seed);
  return out;
}

using Chains = std::vector<std::vector<double>>;

Chains stage_one_chains(const mcmc::PosteriorSamples& s, const std::function<double(const mcmc::PosteriorDraw&)>& f) {
  Chains c(s.chains.size());
  for (std::size_t k = 0; k < s.chains.size(); ++k)
    for (const auto& d : s.chains[k]) c[k].push_back(f(d));
  return c;
}

Chains gamma_chains(const hierarchy::StageThreeFit& fit, Eigen::Index j) {
  Chains c(fit.gamma.size());
  for (std::size_t k = 0; k < fit.gamma.size(); ++k)
    for (const auto& g : fit.gamma[k]) c[k].push_back(g(j));
  return c;
}

stats::Interval pooled_interval(const Chains& c) {
  std::vector<double> all;
  for (const auto& v : c) all.insert(all.end(), v.begin(), v.end());
  return stats::summarize95(all);
}

void recovery(Outcome& o) {
  struct Monitor {
    std::string name;
    double truth;
    int covered = 0;
  };
  std::vector<Monitor> mon = {{"beta0", 2.5},       {"beta_altitude", -1.0}, {"gamma0", 3.294},
                              {"gamma_road", 0.0623}, {"sigma2_nu", 0.09},     {"sigma2_m", 0.25}};
  int phi_covered = 0;
  double worst_rhat = 0.0;
  std::string worst_rhat_name;
  constexpr int kReplicates = 20;
  for (int rep = 0; rep < kReplicates; ++rep) {
    const auto seed = static_cast<std::uint64_t>(5000 + rep);
    const auto ds = synthetic::simulate(recovery_spec(seed, true));
    const auto fit = fit_cut_model(ds, seed);
    const auto& s1 = fit.stage_one.samples;
    std::vector<std::pair<std::string, Chains>> chains = {
        {"beta0", stage_one_chains(s1, [](const auto& d) { return d.beta(0); })},
        {"beta_altitude", stage_one_chains(s1, [](const auto& d) { return d.beta(1); })},
        {"gamma0", gamma_chains(fit.stage_three, 0)},
        {"gamma_road", gamma_chains(fit.stage_three, 1)},
        {"sigma2_nu", stage_one_chains(s1, [](const auto& d) { return d.sigma2_nu; })},
        {"sigma2_m", stage_one_chains(s1, [](const auto& d) { return d.sigma2_m; })},
        {"phi", stage_one_chains(s1, [](const auto& d) { return d.phi; })},
        {"sigma2_omega", fit.stage_three.sigma2_omega},
    };
    std::string line = "  replicate " + std::to_string(rep + 1) + ":";
    double rep_rhat = 0.0;
    for (const auto& [name, c] : chains) {
      const double rhat = mcmc::gelman_rubin(c);
      rep_rhat = std::max(rep_rhat, rhat);
      if (rhat > worst_rhat) {
        worst_rhat = rhat;
        worst_rhat_name = name;
      }
      const auto iv = pooled_interval(c);
      for (auto& m : mon) {
        if (m.name != name) continue;
        const bool hit = iv.lo <= m.truth && m.truth <= iv.hi;
        m.covered += hit;
        line += " " + name + (hit ? "+" : "-");
      }
      if (name == "phi") {
        const bool hit = iv.lo <= 0.01 && 0.01 <= iv.hi;
        phi_covered += hit;
        line += " phi" + std::string(hit ? "+" : "-");
      }
    }
    std::cout << line << " max_rhat=" << fmt(rep_rhat, 4) << std::endl;
  }
  o.detail << "coverage over " << kReplicates << " replicates:";
  for (const auto& m : mon) {
    o.detail << " " << m.name << "=" << m.covered << "/" << kReplicates;
    o.require(m.covered >= 16, m.name + " coverage");
  }
  o.detail << "; max R-hat " << fmt(worst_rhat, 4) << " (" << worst_rhat_name << ")";
  o.detail << "; phi coverage (information only) " << phi_covered << "/" << kReplicates;
  o.require(worst_rhat < 1.1, "R-hat");
}

void back_transform(Outcome& o) {
  const std::uint64_t seed = 8008;
  const auto ds = synthetic::simulate(recovery_spec(seed, false));
  const auto fit = fit_cut_model(ds, seed);
  const auto iv = pooled_interval(gamma_chains(fit.stage_three, 0));
  const double nat_med = std::exp(iv.median), nat_lo = std::exp(iv.lo), nat_hi = std::exp(iv.hi);
  const double planted = std::exp(3.294);
  o.detail << "natural-scale increment " << fmt(nat_med) << " (95% CI " << fmt(nat_lo) << " - " << fmt(nat_hi)
           << "); exp(3.294)=" << fmt(planted);
  o.require(nat_lo <= 27.0 && 27.0 <= nat_hi, "CI contains 27.0");
  o.require(std::abs(planted - 26.95) < 0.005, "exp(3.294) is 26.95");
  o.require(fit.stage_three.coef_names.size() == 1, "intercept-only stage three");
}

// ---------------------------------------------------------------- 6 and 10

struct CliRun {
  int code;
  std::string err;
};

CliRun cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> data_flags(const fs::path& dir) {
  return {"--stations", (dir / "stations.csv").string(), "--covariates", (dir / "covariates.csv").string(),
          "--grouping", (dir / "grouping.csv").string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<std::string> kCliMcmc = {"--seed", "606", "--burn-in", "1000", "--samples", "500"};

fs::path cli_dataset() {
  static const fs::path dir = [] {
    auto d = oracle::scratch_dir("acceptance_data");
    const auto r = cli_run({"simulate", "--out", d.string(), "--seed", "606", "--set", "sim_n_validation=20"});
    if (r.code != 0) throw std::runtime_error("simulate failed: " + r.err);
    return d;
  }();
  return dir;
}

void cut_isolation(Outcome& o) {
  const auto data = cli_dataset();
  const auto full = oracle::scratch_dir("acceptance_pipeline_full");
  const auto cut = oracle::scratch_dir("acceptance_pipeline_cut");
  const auto a = cli_run(concat(concat({"pipeline", "--out", full.string()}, data_flags(data)), kCliMcmc));
  const auto b = cli_run(concat(concat({"pipeline", "--no-stage3", "--out", cut.string()}, data_flags(data)), kCliMcmc));
  o.require(a.code == 0 && b.code == 0, "pipeline runs");
  int identical = 0;
  for (const char* f : {"stage1_draws.csv", "stage1_summary.csv", "diagnostics.csv", "urban_background.csv",
                        "validation.csv", "validation_summary.csv"}) {
    const bool same = fs::exists(full / f) && fs::exists(cut / f) && slurp(full / f) == slurp(cut / f);
    identical += same;
    o.require(same, std::string(f) + " identical");
  }
  o.require(fs::exists(full / "stage3_draws.csv") && !fs::exists(cut / "stage3_draws.csv"), "stage three toggled");
  o.detail << identical << "/6 stage-1/2 files byte-identical with and without stage three";
}

void determinism(Outcome& o) {
  const auto data = cli_dataset();
  const auto work = oracle::scratch_dir("acceptance_determinism");
  {
    std::ofstream grid(work / "grid.csv");
    grid << "x_km,y_km,global_1\n";
    for (int i = 0; i < 40; ++i) grid << 25 * i << "," << 1000 - 20 * i << "," << (i % 10) / 10.0 << "\n";
  }
  const auto draws = (work / "fit" / "stage1_draws.csv").string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"simulate", {"--seed", "17", "--set", "sim_n_rural=30", "--set", "sim_n_urban=5"}},
      {"ingest", data_flags(data)},
      {"variogram", data_flags(data)},
      {"fit", concat(data_flags(data), kCliMcmc)},
      {"predict", concat(data_flags(data), {"--draws", draws})},
      {"validate", concat(data_flags(data), {"--draws", draws})},
      {"grid", concat(data_flags(data), {"--draws", draws, "--grid", (work / "grid.csv").string()})},
      {"diagnose", concat(data_flags(data), {"--draws", draws})},
      {"pipeline", concat(data_flags(data), kCliMcmc)},
  };
  std::size_t files_compared = 0;
  for (const auto& [name, flags] : commands) {
    const auto first = work / name;
    const auto second = work / (name + "_rerun");
    const auto r1 = cli_run(concat({name, "--out", first.string()}, flags));
    o.require(r1.code == 0, name + " runs");
    if (r1.code != 0) continue;
    const auto r2 = cli_run({name, "--config", (first / "manifest.txt").string(), "--out", second.string()});
    o.require(r2.code == 0, name + " reruns from manifest");
    for (const auto& entry : fs::directory_iterator(first)) {
      const auto fname = entry.path().filename();
      std::string a = slurp(entry.path()), b = slurp(second / fname);
      if (fname == "manifest.txt") {
        // the output directory line is the only permitted difference
        a.replace(a.find("out=" + first.string()), 4 + first.string().size(), "out=");
        b.replace(b.find("out=" + second.string()), 4 + second.string().size(), "out=");
      }
      ++files_compared;
      o.require(a == b, name + "/" + fname.string() + " identical");
    }
  }
  o.detail << files_compared << " files over " << commands.size() << " subcommands rerun from their manifests";
}

// ---------------------------------------------------------------- 7

void variogram_recovery(Outcome& o) {
  // 800 stations on a 6000 km square; range 500 km levels off by ~1500 km.
  // One realisation carries ~30% sampling error in the sill at this extent,
  // so bins are pooled over independent realisations on the same layout.
  constexpr int kStations = 800, kRealisations = 50, kBins = 30;
  constexpr double kNugget = 0.1, kPsill = 0.35, kRange = 500.0, kMaxD = 2500.0;
  RngStream rng(7007);
  std::vector<spatial::Point> pts(kStations);
  for (auto& p : pts) p = {6000.0 * rng.uniform(), 6000.0 * rng.uniform()};
  const spatial::CorrelationStructure corr(spatial::distance_matrix(pts), 1.0 / kRange);
  variogram::EmpiricalVariogram pooled;
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(kBins);
  for (int r = 0; r < kRealisations; ++r) {
    Eigen::VectorXd v = spatial::sample_mvn_zero_mean(kPsill, corr, rng);
    for (auto& x : v) x += std::sqrt(kNugget) * rng.normal();
    const auto emp = variogram::empirical_variogram(v, pts, {kBins, kMaxD});
    if (r == 0) {
      pooled = emp;
      pooled.pair_counts.setZero();
    }
    for (int k = 0; k < kBins; ++k) {
      if (emp.pair_counts(k) == 0) continue;
      sums(k) += emp.pair_counts(k) * emp.gamma_hat(k);
      pooled.pair_counts(k) += emp.pair_counts(k);
    }
  }
  for (int k = 0; k < kBins; ++k) pooled.gamma_hat(k) = sums(k) / pooled.pair_counts(k);
  const auto fit = variogram::fit_exponential_variogram(pooled);
  const double e_nug = std::abs(fit.nugget - kNugget) / kNugget;
  const double e_sill = std::abs(fit.total_sill() - (kNugget + kPsill)) / (kNugget + kPsill);
  o.detail << "fitted nugget " << fmt(fit.nugget) << " (" << fmt(100 * e_nug, 3) << "% off), total sill "
           << fmt(fit.total_sill()) << " (" << fmt(100 * e_sill, 3) << "% off), effective range "
           << fmt(fit.effective_range_05) << " km";
  o.require(e_nug <= 0.2, "nugget within 20%");
  o.require(e_sill <= 0.2, "total sill within 20%");

  // noiseless model bins
  variogram::EmpiricalVariogram exact;
  exact.bin_centers.resize(kBins);
  exact.gamma_hat.resize(kBins);
  exact.pair_counts.resize(kBins);
  for (int k = 0; k < kBins; ++k) {
    const double c = (k + 0.5) * kMaxD / kBins;
    exact.bin_centers(k) = c;
    exact.gamma_hat(k) = kNugget + kPsill * (1.0 - std::exp(-c / kRange));
    exact.pair_counts(k) = 50 + 13 * k;
  }
  const auto nf = variogram::fit_exponential_variogram(exact);
  const double worst = std::max({std::abs(nf.nugget - kNugget), std::abs(nf.partial_sill - kPsill),
                                 std::abs(nf.range_km - kRange) / kRange});
  o.detail << "; noiseless bins recovered to " << fmt(worst, 3);
  o.require(worst <= 1e-6, "noiseless recovery");
}

// ---------------------------------------------------------------- 9

void validation_machinery(Outcome& o) {
  synthetic::SimSpec spec;
  spec.n_rural = 150;
  spec.n_rural_validation = 20;
  spec.n_urban = 1;
  spec.sigma2_m = 0.25;
  spec.sigma2_nu = 0.09;
  spec.phi = 0.01;
  spec.seed = 9009;
  spec.covariates.global_names = {"altitude"};
  spec.beta = Eigen::Vector2d(2.5, -1.0);
  spec.gamma = Eigen::VectorXd::Constant(1, 1.0);
  const auto ds = synthetic::simulate(spec);
  auto cfg = recovery_mcmc(9009);
  cfg.burn_in = 3000;
  cfg.samples = 1500;
  const auto fit = hierarchy::fit_stage_one(ds, hierarchy::CovariateSet::Global, default_prior(), cfg);
  const auto report = validation::validate(fit, ds, 9009);
  const auto [lo, hi] = oracle::binomial_central_region(20, 0.95, 0.01);
  const auto covered = static_cast<int>(report.covered_count);
  o.detail << "coverage " << covered << "/" << report.total_count << " (region [" << lo << ", " << hi
           << "]), RMSE median " << fmt(report.rmse.median) << ", R2 median " << fmt(report.r2.median) << "%";
  o.require(report.total_count == 20, "20 held-out sites");
  o.require(lo <= covered && covered <= hi, "coverage inside the binomial region");

  // degenerate perfect prediction
  std::vector<std::string> ids = {"a", "b", "c", "d"};
  const Eigen::Vector4d log_pred = Eigen::Vector4d(12.0, 30.5, 7.25, 19.0).array().log();
  const Eigen::Vector4d obs = log_pred.unaryExpr([](double v) { return std::exp(v); });
  hierarchy::PredictionDraws pd;
  pd.ids = ids;
  pd.chains = 2;
  pd.draws_per_chain = 5;
  pd.values = log_pred.transpose().replicate(10, 1);
  const auto perfect = validation::build_report(ids, obs, pd.values, hierarchy::summarize_predictions(pd));
  o.detail << "; perfect case RMSE " << perfect.rmse.median << ", R2 " << perfect.r2.median << ", coverage "
           << perfect.covered_count << "/" << perfect.total_count;
  o.require(perfect.rmse.median == 0.0 && perfect.r2.median == 100.0 && perfect.covered_count == 4,
            "perfect prediction");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"correlation arithmetic", correlation_arithmetic},
      {"phi prior bounds", phi_bounds},
      {"kriging oracle equivalence", kriging_oracle},
      {"full-conditional correctness", full_conditionals},
      {"parameter recovery and calibration", recovery},
      {"cut-feedback isolation", cut_isolation},
      {"variogram recovery", variogram_recovery},
      {"back-transform reporting", back_transform},
      {"validation machinery", validation_machinery},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " - " << criteria[i].first << ": "
              << o.detail.str() << " (" << fmt(secs, 3) << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
