#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hbgeo/error.hpp"
#include "hbgeo/hierarchy.hpp"
#include "hbgeo/mcmc.hpp"
#include "hbgeo/synthetic.hpp"
#include "hbgeo/validation.hpp"
#include "hbgeo/variogram.hpp"

namespace hbgeo::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Key/value run settings: built-in defaults, then a config file, then
/// command-line flags.
class Settings {
 public:
  Settings();

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;

  std::string text(const std::string& key) const { return get(key); }
  double real(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::string> names(const std::string& key) const;

  /// Reads `key = value` lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);

  /// Canonical `key=value` lines, sorted by key.
  std::string canonical(bool for_hash = false) const;
  /// FNV-1a of the canonical text without output-location keys.
  std::string config_hash() const;

  const std::map<std::string, std::string>& values() const { return values_; }

  mcmc::PriorConfig prior() const;
  mcmc::McmcConfig mcmc() const;
  hierarchy::StageThreeConfig stage_three() const;
  synthetic::SimSpec sim_spec() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Exit status for each error category (0 is success, 2 is a usage error).
int exit_code(ErrorCode code) noexcept;

/// Files produced by a command, committed together once every result exists.
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, std::string header_line);

  /// Adds a file whose first line is the common header comment.
  void add(const std::string& name, const std::string& body);
  /// Adds a file verbatim (no header line).
  void add_raw(const std::string& name, std::string content);
  void commit() const;

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::string header_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string header_line(const Settings& settings);

// Table writers (bodies without the header comment).
std::string draws_table(const hierarchy::StageOneFit& fit);
std::string summary_table(const hierarchy::StageOneFit& fit);
std::string diagnostics_table(const hierarchy::StageOneFit& fit);
std::string predictions_table(const std::vector<hierarchy::PredictionResult>& results);
std::string stage_three_draws_table(const hierarchy::StageThreeFit& fit);
std::string stage_three_summary_table(const hierarchy::StageThreeFit& fit);
std::string urban_increment_table(const hierarchy::StageThreeFit& fit);
std::string validation_table(const validation::ValidationReport& report);
std::string validation_summary_table(const validation::ValidationReport& report);
std::string variogram_table(const variogram::EmpiricalVariogram& emp);
std::string variogram_fit_table(const variogram::ExponentialVariogramFit& fit);

/// Rebuilds stage-one samples from a long-format draws file, checking the
/// parameter layout against `spec`.
mcmc::PosteriorSamples read_draws(const std::filesystem::path& path, const hierarchy::StageOneSpec& spec);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hbgeo::cli
