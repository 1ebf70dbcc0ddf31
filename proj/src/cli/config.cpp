#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hbgeo/cli.hpp"
#include "hbgeo/csv.hpp"

namespace hbgeo::cli {

namespace {

// Keys that only say where things go; they never change computed results.
bool location_key(const std::string& key) { return key == "out" || key == "no_stage3" || key == "config"; }

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Settings::Settings() {
  const char* env_out = std::getenv("HBGEO_OUT_DIR");
  values_ = {
      {"out", env_out ? env_out : "hbgeo_out"},
      {"stations", ""},
      {"covariates", ""},
      {"grouping", ""},
      {"draws", ""},
      {"grid", ""},
      {"seed", "20010101"},
      {"chains", "2"},
      {"burn_in", "40000"},
      {"samples", "10000"},
      {"thin", "1"},
      {"phi_rho", "0.01"},
      {"phi_d_near", "25"},
      {"phi_d_far", "2000"},
      {"coef_mean", "0"},
      {"coef_variance", "1000"},
      {"precision_shape", "1"},
      {"precision_rate", "0.01"},
      {"proposal_sd", "0.5"},
      {"adapt_target", "0.35"},
      {"beta_update", "collapsed"},
      {"phi_update", "joint"},
      {"covariate_set", "global_rural"},
      {"pca_components", "5"},
      {"include_noise", "false"},
      {"stage3_warmup", "200"},
      {"stage3_sweeps", "2"},
      {"no_stage3", "false"},
      {"bins", "30"},
      {"max_distance", "0"},
      {"direction", ""},
      {"tolerance", "22.5"},
      {"variogram_values", "log_mean"},
      {"grid_block", "256"},
      {"sim_n_rural", "200"},
      {"sim_n_validation", "0"},
      {"sim_n_urban", "100"},
      {"sim_region_km", "1000"},
      {"sim_sigma_m", "0.5"},
      {"sim_sigma_nu", "0.3"},
      {"sim_sigma_omega", "0.2"},
      {"sim_phi", "0.01"},
      {"sim_beta", "2.5,-1.0"},
      {"sim_beta_rural", ""},
      {"sim_gamma", "3.294,0.0623"},
      {"sim_global_names", ""},
      {"sim_rural_names", ""},
      {"sim_urban_names", ""},
      {"sim_urban_upper", "20"},
  };
}

void Settings::set(const std::string& key, std::string value) {
  if (!values_.count(key)) throw Error(ErrorCode::Config, "unknown setting '" + key + "'");
  values_[key] = std::move(value);
}

bool Settings::has(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

const std::string& Settings::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::Config, "unknown setting '" + key + "'");
  return it->second;
}

double Settings::real(const std::string& key) const {
  try {
    return csv::parse_real(get(key), key);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
}

std::uint64_t Settings::integer(const std::string& key) const {
  const auto& s = get(key);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::Config, "setting '" + key + "' must be a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool Settings::flag(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no" || s.empty()) return false;
  throw Error(ErrorCode::Config, "setting '" + key + "' must be true or false, got '" + s + "'");
}

std::vector<double> Settings::reals(const std::string& key) const {
  std::vector<double> out;
  if (!has(key)) return out;
  for (const auto& f : csv::split_line(get(key))) {
    try {
      out.push_back(csv::parse_real(f, key));
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, e.what());
    }
  }
  return out;
}

std::vector<std::string> Settings::names(const std::string& key) const {
  if (!has(key)) return {};
  return csv::split_line(get(key));
}

void Settings::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key == "command") continue;
    set(key, trim(line.substr(eq + 1)));
  }
}

std::string Settings::canonical(bool for_hash) const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (for_hash && location_key(k)) continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::string Settings::config_hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical(true)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

mcmc::PriorConfig Settings::prior() const {
  mcmc::PhiPriorSpec phi{real("phi_rho"), real("phi_d_near"), real("phi_d_far")};
  auto p = mcmc::PriorConfig::with_phi_limits(phi);
  p.coef_mean = real("coef_mean");
  p.coef_variance = real("coef_variance");
  p.precision_shape = real("precision_shape");
  p.precision_rate = real("precision_rate");
  p.validate();
  return p;
}

mcmc::McmcConfig Settings::mcmc() const {
  mcmc::McmcConfig c;
  c.chains = integer("chains");
  c.burn_in = integer("burn_in");
  c.samples = integer("samples");
  c.thin = integer("thin");
  c.seed = integer("seed");
  c.proposal_sd_init = real("proposal_sd");
  c.adapt_target_accept = real("adapt_target");
  const auto& beta = get("beta_update");
  if (beta == "collapsed") {
    c.beta_update = mcmc::BetaUpdate::Collapsed;
  } else if (beta == "conditional") {
    c.beta_update = mcmc::BetaUpdate::Conditional;
  } else {
    throw Error(ErrorCode::Config, "beta_update must be collapsed or conditional");
  }
  const auto& phi = get("phi_update");
  if (phi == "joint") {
    c.phi_update = mcmc::PhiUpdate::Joint;
  } else if (phi == "marginal") {
    c.phi_update = mcmc::PhiUpdate::Marginal;
  } else if (phi == "conditional") {
    c.phi_update = mcmc::PhiUpdate::Conditional;
  } else {
    throw Error(ErrorCode::Config, "phi_update must be joint, marginal or conditional");
  }
  c.validate();
  return c;
}

hierarchy::StageThreeConfig Settings::stage_three() const {
  return hierarchy::StageThreeConfig{integer("stage3_warmup"), integer("stage3_sweeps")};
}

synthetic::SimSpec Settings::sim_spec() const {
  synthetic::SimSpec s;
  s.n_rural = integer("sim_n_rural");
  s.n_rural_validation = integer("sim_n_validation");
  s.n_urban = integer("sim_n_urban");
  const double extent = real("sim_region_km");
  s.region = {0.0, extent, 0.0, extent};
  const double sm = real("sim_sigma_m");
  const double sn = real("sim_sigma_nu");
  const double so = real("sim_sigma_omega");
  s.sigma2_m = sm * sm;
  s.sigma2_nu = sn * sn;
  s.sigma2_omega = so * so;
  s.phi = real("sim_phi");
  s.seed = integer("seed");

  const auto beta = reals("sim_beta");
  const auto beta_rural = reals("sim_beta_rural");
  const auto gamma = reals("sim_gamma");
  if (beta.empty() || gamma.empty()) throw Error(ErrorCode::Config, "sim_beta and sim_gamma need an intercept");

  auto names_or_default = [&](const std::string& key, std::size_t count, const std::string& prefix) {
    auto names = this->names(key);
    if (names.empty()) {
      for (std::size_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
    }
    if (names.size() != count) throw Error(ErrorCode::Config, key + " must list " + std::to_string(count) + " names");
    return names;
  };
  s.covariates.global_names = names_or_default("sim_global_names", beta.size() - 1, "global_");
  s.covariates.rural_names = names_or_default("sim_rural_names", beta_rural.size(), "rural_");
  s.covariates.urban_names = names_or_default("sim_urban_names", gamma.size() - 1, "urban_");
  s.covariates.urban_upper = reals("sim_urban_upper");

  s.beta.resize(static_cast<Eigen::Index>(beta.size() + beta_rural.size()));
  for (std::size_t i = 0; i < beta.size(); ++i) s.beta(static_cast<Eigen::Index>(i)) = beta[i];
  for (std::size_t i = 0; i < beta_rural.size(); ++i) s.beta(static_cast<Eigen::Index>(beta.size() + i)) = beta_rural[i];
  s.gamma = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
  s.validate();
  return s;
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return 3;
    case ErrorCode::Schema:
    case ErrorCode::Value:
    case ErrorCode::Integrity:
    case ErrorCode::DegenerateTransform: return 4;
    case ErrorCode::Design:
    case ErrorCode::Rank: return 5;
    case ErrorCode::Factorization: return 6;
    case ErrorCode::InsufficientData: return 7;
    case ErrorCode::Diagnostics: return 8;
    case ErrorCode::Validation: return 9;
    case ErrorCode::Config: return 10;
  }
  return 1;
}

}  // namespace hbgeo::cli
