#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hbgeo::data {

enum class SiteClass { Rural, Urban };
enum class Role { Training, Validation };

std::string_view to_string(SiteClass c) noexcept;
std::string_view to_string(Role r) noexcept;

struct Station {
  std::string id;
  double x_km = 0.0;
  double y_km = 0.0;
  SiteClass site_class = SiteClass::Rural;
  Role role = Role::Training;
  double annual_mean = 0.0;  // natural scale

  double log_mean() const;
};

enum class CovariateGroup { Global, Rural, Urban };

/// Per-station covariates. Columns are ordered global, then rural, then urban.
struct CovariateTable {
  std::vector<std::string> station_ids;
  std::vector<std::string> global_names;
  std::vector<std::string> rural_names;
  std::vector<std::string> urban_names;
  Eigen::MatrixXd values;

  std::size_t column_count() const {
    return global_names.size() + rural_names.size() + urban_names.size();
  }
  std::vector<std::string> column_names() const;

  /// Row index of a station; throws an integrity error when absent.
  std::size_t row_of(std::string_view station_id) const;

  Eigen::Index global_offset() const { return 0; }
  Eigen::Index rural_offset() const { return static_cast<Eigen::Index>(global_names.size()); }
  Eigen::Index urban_offset() const {
    return static_cast<Eigen::Index>(global_names.size() + rural_names.size());
  }
};

enum class TransformKind { Identity, MinMaxSqrt };

struct TransformSpec {
  std::string name;
  TransformKind kind = TransformKind::Identity;
  double fitted_min = 0.0;
  double fitted_max_shifted = 1.0;
};

/// sqrt((x - min) / (max - min)) fitted on `values`.
TransformSpec fit_minmax_sqrt(const Eigen::Ref<const Eigen::VectorXd>& values, std::string name = {});

/// Result is clamped to [0, 1] for MinMaxSqrt.
double apply_transform(const TransformSpec& spec, double value);

struct PcaModel {
  std::vector<std::string> variable_names;
  Eigen::VectorXd means;
  Eigen::VectorXd scales;
  Eigen::MatrixXd loadings;  // variables x k, orthonormal columns
  std::size_t k = 0;
  Eigen::VectorXd variance_explained;  // length k
};

/// Principal components of the correlation matrix of `climate` (rows are
/// stations). Each loading column is signed so its largest-magnitude entry
/// is positive.
PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& climate, std::size_t k,
                 std::vector<std::string> variable_names = {});

Eigen::VectorXd project_pca(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& row);

struct Dataset {
  std::vector<Station> stations;  // sorted by id
  CovariateTable covariates;      // model-ready (transformed) values
  std::vector<TransformSpec> transforms;
  std::optional<PcaModel> pca;

  const Station& station(std::string_view id) const;
  std::vector<const Station*> select(SiteClass c, Role r) const;
  std::vector<const Station*> select(SiteClass c) const;
};

struct LoadOptions {
  std::size_t pca_components = 5;
};

/// Reads the stations, covariates and grouping files, validates them and
/// fits the covariate transforms over all stations.
Dataset load_dataset(const std::filesystem::path& stations_path,
                     const std::filesystem::path& covariates_path,
                     const std::filesystem::path& grouping_path, const LoadOptions& options = {});

/// Validates station invariants: positive means, finite coordinates, unique
/// ids, no coincident locations.
void validate_stations(const std::vector<Station>& stations);

/// Raw (untransformed) covariate column as declared in a grouping file.
struct GroupingEntry {
  std::string covariate;
  CovariateGroup group = CovariateGroup::Global;
  std::string transform;  // identity | minmax_sqrt | pca_climate
};

std::vector<GroupingEntry> read_grouping(const std::filesystem::path& path);

/// Builds a dataset from in-memory raw columns (the same pipeline load_dataset
/// runs after parsing).
Dataset build_dataset(std::vector<Station> stations, const std::vector<std::string>& raw_ids,
                      const std::vector<std::string>& raw_names, const Eigen::MatrixXd& raw_values,
                      const std::vector<GroupingEntry>& grouping, const LoadOptions& options = {});

void write_stations(const std::filesystem::path& path, const std::vector<Station>& stations);
void write_covariates(const std::filesystem::path& path, const CovariateTable& table);
void write_grouping(const std::filesystem::path& path, const std::vector<GroupingEntry>& grouping);

std::string_view to_string(CovariateGroup g) noexcept;

}  // namespace hbgeo::data
