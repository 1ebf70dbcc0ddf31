#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hbgeo/cli.hpp"
#include "hbgeo/csv.hpp"
#include "hbgeo/stats.hpp"

namespace hbgeo::cli {

using csv::format_real;

OutputSet::OutputSet(std::filesystem::path dir, std::string header_line)
    : dir_(std::move(dir)), header_(std::move(header_line)) {}

void OutputSet::add(const std::string& name, const std::string& body) { files_.emplace_back(name, header_ + body); }

void OutputSet::add_raw(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

void OutputSet::commit() const {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  for (const auto& [name, content] : files_) {
    const auto path = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
      out << content;
      if (!out) throw Error(ErrorCode::Io, "failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string header_line(const Settings& settings) {
  return "# hbgeo " + std::string(kVersion) + " seed=" + settings.get("seed") +
         " config_hash=" + settings.config_hash() + "\n";
}

namespace {

using Selector = std::function<double(const mcmc::PosteriorDraw&)>;

std::vector<std::pair<std::string, Selector>> stage_one_scalars(const hierarchy::StageOneFit& fit) {
  std::vector<std::pair<std::string, Selector>> out;
  for (std::size_t j = 0; j < fit.spec.coef_names.size(); ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    out.emplace_back("beta[" + fit.spec.coef_names[j] + "]",
                     [idx](const mcmc::PosteriorDraw& d) { return d.beta(idx); });
  }
  out.emplace_back("phi", [](const mcmc::PosteriorDraw& d) { return d.phi; });
  out.emplace_back("sigma_m", [](const mcmc::PosteriorDraw& d) { return std::sqrt(d.sigma2_m); });
  out.emplace_back("sigma2_m", [](const mcmc::PosteriorDraw& d) { return d.sigma2_m; });
  out.emplace_back("sigma_nu", [](const mcmc::PosteriorDraw& d) { return std::sqrt(d.sigma2_nu); });
  out.emplace_back("sigma2_nu", [](const mcmc::PosteriorDraw& d) { return d.sigma2_nu; });
  return out;
}

std::string rhat_text(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2 || chains.front().size() < 10) return "NA";
  return format_real(mcmc::gelman_rubin(chains));
}

std::string summary_row(const std::string& name, const std::vector<std::vector<double>>& chains) {
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  const auto iv = stats::summarize95(pooled);
  return name + "," + format_real(iv.median) + "," + format_real(iv.lo) + "," + format_real(iv.hi) + "," +
         rhat_text(chains) + "\n";
}

std::vector<std::vector<double>> extract(const mcmc::PosteriorSamples& s, const Selector& sel) {
  std::vector<std::vector<double>> out;
  for (const auto& c : s.chains) {
    std::vector<double> v;
    v.reserve(c.size());
    for (const auto& d : c) v.push_back(sel(d));
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::string draws_table(const hierarchy::StageOneFit& fit) {
  std::ostringstream out;
  out << "chain,iter,param_name,value\n";
  const auto& spec = fit.spec;
  for (std::size_t c = 0; c < fit.samples.chains.size(); ++c) {
    const auto& chain = fit.samples.chains[c];
    for (std::size_t t = 0; t < chain.size(); ++t) {
      const auto& d = chain[t];
      const std::string prefix = std::to_string(c) + "," + std::to_string(t + 1) + ",";
      for (std::size_t j = 0; j < spec.coef_names.size(); ++j) {
        out << prefix << "beta[" << spec.coef_names[j] << "]," << format_real(d.beta(static_cast<Eigen::Index>(j))) << '\n';
      }
      out << prefix << "sigma2_nu," << format_real(d.sigma2_nu) << '\n';
      out << prefix << "sigma2_m," << format_real(d.sigma2_m) << '\n';
      out << prefix << "phi," << format_real(d.phi) << '\n';
      for (std::size_t i = 0; i < spec.station_ids.size(); ++i) {
        out << prefix << "m[" << spec.station_ids[i] << "]," << format_real(d.m(static_cast<Eigen::Index>(i))) << '\n';
      }
    }
  }
  return out.str();
}

std::string summary_table(const hierarchy::StageOneFit& fit) {
  std::string out = "param,median,q2.5,q97.5,rhat\n";
  for (const auto& [name, sel] : stage_one_scalars(fit)) out += summary_row(name, extract(fit.samples, sel));
  return out;
}

std::string diagnostics_table(const hierarchy::StageOneFit& fit) {
  std::string out = "metric,param,chain,value\n";
  for (const auto& [name, sel] : stage_one_scalars(fit)) {
    out += "rhat," + name + ",all," + rhat_text(extract(fit.samples, sel)) + "\n";
  }
  const auto& s = fit.samples;
  for (std::size_t c = 0; c < s.chains.size(); ++c) {
    const auto chain = std::to_string(c);
    out += "accept_rate,phi," + chain + "," + format_real(s.accept_rate_phi[c]) + "\n";
    out += "proposal_sd_final,phi," + chain + "," + format_real(s.final_proposal_sd[c]) + "\n";
    out += "adaptation_steps,phi," + chain + "," + std::to_string(s.adaptation_steps[c]) + "\n";
  }
  return out;
}

std::string predictions_table(const std::vector<hierarchy::PredictionResult>& results) {
  std::string out = "id,log_mean,log_var,log_lo95,log_hi95,nat_median,nat_lo95,nat_hi95\n";
  for (const auto& r : results) {
    out += r.id + "," + format_real(r.log_mean) + "," + format_real(r.log_variance) + "," + format_real(r.log_lo95) +
           "," + format_real(r.log_hi95) + "," + format_real(r.natural_median) + "," + format_real(r.natural_lo95) +
           "," + format_real(r.natural_hi95) + "\n";
  }
  return out;
}

namespace {

std::vector<std::vector<double>> gamma_chains(const hierarchy::StageThreeFit& fit, std::size_t k) {
  std::vector<std::vector<double>> out;
  for (const auto& chain : fit.gamma) {
    std::vector<double> v;
    for (const auto& g : chain) v.push_back(g(static_cast<Eigen::Index>(k)));
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::string stage_three_draws_table(const hierarchy::StageThreeFit& fit) {
  std::ostringstream out;
  out << "chain,iter,param_name,value\n";
  for (std::size_t c = 0; c < fit.gamma.size(); ++c) {
    for (std::size_t t = 0; t < fit.gamma[c].size(); ++t) {
      const std::string prefix = std::to_string(c) + "," + std::to_string(t + 1) + ",";
      for (std::size_t k = 0; k < fit.coef_names.size(); ++k) {
        out << prefix << "gamma[" << fit.coef_names[k] << "]," << format_real(fit.gamma[c][t](static_cast<Eigen::Index>(k))) << '\n';
      }
      out << prefix << "sigma2_omega," << format_real(fit.sigma2_omega[c][t]) << '\n';
    }
  }
  return out.str();
}

std::string stage_three_summary_table(const hierarchy::StageThreeFit& fit) {
  std::string out = "param,median,q2.5,q97.5,rhat\n";
  for (std::size_t k = 0; k < fit.coef_names.size(); ++k) {
    out += summary_row("gamma[" + fit.coef_names[k] + "]", gamma_chains(fit, k));
  }
  out += summary_row("sigma2_omega", fit.sigma2_omega);
  auto sd = fit.sigma2_omega;
  for (auto& c : sd) {
    for (auto& v : c) v = std::sqrt(v);
  }
  out += summary_row("sigma_omega", sd);
  return out;
}

std::string urban_increment_table(const hierarchy::StageThreeFit& fit) {
  std::string out = "quantity,log_median,log_lo95,log_hi95,nat_median,nat_lo95,nat_hi95\n";
  for (std::size_t k = 0; k < fit.coef_names.size(); ++k) {
    std::vector<double> pooled;
    for (const auto& c : gamma_chains(fit, k)) pooled.insert(pooled.end(), c.begin(), c.end());
    const auto iv = stats::summarize95(pooled);
    const std::string name = k == 0 ? "urban_increment" : "relative_effect[" + fit.coef_names[k] + "]";
    out += name + "," + format_real(iv.median) + "," + format_real(iv.lo) + "," + format_real(iv.hi) + "," +
           format_real(std::exp(iv.median)) + "," + format_real(std::exp(iv.lo)) + "," + format_real(std::exp(iv.hi)) +
           "\n";
  }
  return out;
}

std::string validation_table(const validation::ValidationReport& report) {
  std::string out = "id,observed,pred_median,pred_lo95,pred_hi95,covered\n";
  for (const auto& r : report.stations) {
    out += r.id + "," + format_real(r.observed) + "," + format_real(r.predicted_median) + "," + format_real(r.lo95) +
           "," + format_real(r.hi95) + "," + (r.covered ? "1" : "0") + "\n";
  }
  return out;
}

std::string validation_summary_table(const validation::ValidationReport& report) {
  std::string out = "quantity,median,q2.5,q97.5\n";
  out += "rmse," + format_real(report.rmse.median) + "," + format_real(report.rmse.lo) + "," + format_real(report.rmse.hi) + "\n";
  out += "r2_percent," + format_real(report.r2.median) + "," + format_real(report.r2.lo) + "," + format_real(report.r2.hi) + "\n";
  out += "coverage95_covered," + std::to_string(report.covered_count) + ",NA,NA\n";
  out += "coverage95_total," + std::to_string(report.total_count) + ",NA,NA\n";
  return out;
}

std::string variogram_table(const variogram::EmpiricalVariogram& emp) {
  std::string out = "bin_center_km,gamma_hat,pair_count\n";
  for (Eigen::Index b = 0; b < emp.bin_centers.size(); ++b) {
    out += format_real(emp.bin_centers(b)) + "," +
           (emp.pair_counts(b) > 0 ? format_real(emp.gamma_hat(b)) : std::string("NA")) + "," +
           std::to_string(emp.pair_counts(b)) + "\n";
  }
  return out;
}

std::string variogram_fit_table(const variogram::ExponentialVariogramFit& fit) {
  return "nugget,partial_sill,range_km,effective_range_05_km,total_sill,weighted_sse,degenerate\n" +
         format_real(fit.nugget) + "," + format_real(fit.partial_sill) + "," + format_real(fit.range_km) + "," +
         format_real(fit.effective_range_05) + "," + format_real(fit.total_sill()) + "," +
         format_real(fit.weighted_sse) + "," + (fit.degenerate ? "1" : "0") + "\n";
}

mcmc::PosteriorSamples read_draws(const std::filesystem::path& path, const hierarchy::StageOneSpec& spec) {
  const auto table = csv::read_file(path);
  const auto c_chain = table.column("chain");
  const auto c_iter = table.column("iter");
  const auto c_name = table.column("param_name");
  const auto c_value = table.column("value");

  std::map<std::string, Eigen::Index> beta_index;
  for (std::size_t j = 0; j < spec.coef_names.size(); ++j) {
    beta_index["beta[" + spec.coef_names[j] + "]"] = static_cast<Eigen::Index>(j);
  }
  std::map<std::string, Eigen::Index> m_index;
  for (std::size_t i = 0; i < spec.station_ids.size(); ++i) {
    m_index["m[" + spec.station_ids[i] + "]"] = static_cast<Eigen::Index>(i);
  }
  const auto p = static_cast<Eigen::Index>(spec.coef_names.size());
  const auto n = static_cast<Eigen::Index>(spec.station_ids.size());
  const std::size_t per_draw = static_cast<std::size_t>(p + n + 3);

  mcmc::PosteriorSamples samples;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> filled;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto ctx = path.string() + ":" + std::to_string(table.line_numbers[r]);
    const auto chain = static_cast<std::size_t>(csv::parse_real(row[c_chain], ctx));
    const auto iter = static_cast<std::size_t>(csv::parse_real(row[c_iter], ctx));
    if (iter < 1) throw Error(ErrorCode::Value, ctx + ": iter must start at 1");
    const double value = csv::parse_real(row[c_value], ctx);
    if (samples.chains.size() <= chain) samples.chains.resize(chain + 1);
    auto& draws = samples.chains[chain];
    if (draws.size() < iter) {
      mcmc::PosteriorDraw blank;
      blank.beta = Eigen::VectorXd::Zero(p);
      blank.m = Eigen::VectorXd::Zero(n);
      draws.resize(iter, blank);
    }
    auto& d = draws[iter - 1];
    const auto& name = row[c_name];
    if (auto it = beta_index.find(name); it != beta_index.end()) {
      d.beta(it->second) = value;
    } else if (auto mt = m_index.find(name); mt != m_index.end()) {
      d.m(mt->second) = value;
    } else if (name == "sigma2_nu") {
      d.sigma2_nu = value;
    } else if (name == "sigma2_m") {
      d.sigma2_m = value;
    } else if (name == "phi") {
      d.phi = value;
    } else {
      throw Error(ErrorCode::Integrity, ctx + ": parameter '" + name + "' does not match the stage-one layout");
    }
    ++filled[{chain, iter}];
  }
  if (samples.chains.empty()) throw Error(ErrorCode::Integrity, "draws file " + path.string() + " is empty");
  const auto per_chain = samples.chains.front().size();
  for (std::size_t c = 0; c < samples.chains.size(); ++c) {
    if (samples.chains[c].size() != per_chain) {
      throw Error(ErrorCode::Integrity, "draws file " + path.string() + " has chains of unequal length");
    }
    for (std::size_t t = 1; t <= per_chain; ++t) {
      if (filled[{c, t}] != per_draw) {
        throw Error(ErrorCode::Integrity, "draws file " + path.string() + ": chain " + std::to_string(c) +
                                              " iteration " + std::to_string(t) + " is incomplete");
      }
    }
  }
  samples.accept_rate_phi.assign(samples.chains.size(), 0.0);
  samples.final_proposal_sd.assign(samples.chains.size(), 0.0);
  samples.adaptation_steps.assign(samples.chains.size(), 0);
  return samples;
}

}  // namespace hbgeo::cli
