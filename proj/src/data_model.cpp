#include "hbgeo/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

#include "hbgeo/csv.hpp"
#include "hbgeo/error.hpp"

namespace hbgeo::data {

std::string_view to_string(SiteClass c) noexcept { return c == SiteClass::Rural ? "rural" : "urban"; }
std::string_view to_string(Role r) noexcept { return r == Role::Training ? "training" : "validation"; }

std::string_view to_string(CovariateGroup g) noexcept {
  switch (g) {
    case CovariateGroup::Global: return "global";
    case CovariateGroup::Rural: return "rural";
    case CovariateGroup::Urban: return "urban";
  }
  return "global";
}

double Station::log_mean() const { return std::log(annual_mean); }

std::vector<std::string> CovariateTable::column_names() const {
  std::vector<std::string> names = global_names;
  names.insert(names.end(), rural_names.begin(), rural_names.end());
  names.insert(names.end(), urban_names.begin(), urban_names.end());
  return names;
}

std::size_t CovariateTable::row_of(std::string_view station_id) const {
  auto it = std::lower_bound(station_ids.begin(), station_ids.end(), station_id);
  if (it != station_ids.end() && *it == station_id) {
    return static_cast<std::size_t>(it - station_ids.begin());
  }
  // station_ids is normally sorted; fall back to a scan for hand-built tables.
  auto lin = std::find(station_ids.begin(), station_ids.end(), station_id);
  if (lin == station_ids.end()) {
    throw Error(ErrorCode::Integrity, "no covariate row for station '" + std::string(station_id) + "'");
  }
  return static_cast<std::size_t>(lin - station_ids.begin());
}

// --- transforms -------------------------------------------------------------

TransformSpec fit_minmax_sqrt(const Eigen::Ref<const Eigen::VectorXd>& values, std::string name) {
  if (values.size() == 0) {
    throw Error(ErrorCode::DegenerateTransform, "cannot fit transform '" + name + "' to no values");
  }
  if (!values.allFinite()) {
    throw Error(ErrorCode::Value, "non-finite value in covariate '" + name + "'");
  }
  const double lo = values.minCoeff();
  const double span = values.maxCoeff() - lo;
  if (!(span > 0.0)) {
    throw Error(ErrorCode::DegenerateTransform, "covariate '" + name + "' is constant");
  }
  return TransformSpec{std::move(name), TransformKind::MinMaxSqrt, lo, span};
}

double apply_transform(const TransformSpec& spec, double value) {
  if (spec.kind == TransformKind::Identity) return value;
  const double shifted = (value - spec.fitted_min) / spec.fitted_max_shifted;
  return std::clamp(std::sqrt(std::max(shifted, 0.0)), 0.0, 1.0);
}

// --- PCA --------------------------------------------------------------------

PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& climate, std::size_t k,
                 std::vector<std::string> variable_names) {
  const auto rows = climate.rows();
  const auto p = climate.cols();
  if (rows < 10) {
    throw Error(ErrorCode::InsufficientData, "PCA needs at least 10 rows, got " + std::to_string(rows));
  }
  if (k == 0 || k > static_cast<std::size_t>(p)) {
    throw Error(ErrorCode::Rank, "requested " + std::to_string(k) + " components from " +
                                     std::to_string(p) + " variables");
  }
  if (variable_names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) variable_names.push_back("v" + std::to_string(j + 1));
  }

  PcaModel model;
  model.variable_names = std::move(variable_names);
  model.means = climate.colwise().mean().transpose();
  Eigen::MatrixXd centered = climate.rowwise() - model.means.transpose();
  model.scales = (centered.colwise().squaredNorm() / static_cast<double>(rows - 1)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(model.scales(j) > 0.0)) {
      throw Error(ErrorCode::Rank, "climate variable '" + model.variable_names[j] + "' is constant");
    }
  }
  Eigen::MatrixXd standardized = centered * model.scales.cwiseInverse().asDiagonal();
  Eigen::MatrixXd corr = (standardized.transpose() * standardized) / static_cast<double>(rows - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  // Eigen returns ascending eigenvalues.
  Eigen::VectorXd values = eig.eigenvalues().reverse();
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  const double total = values.sum();
  const double tol = 1e-10 * static_cast<double>(p);
  const auto rank = (values.array() > tol).count();
  if (static_cast<Eigen::Index>(k) > rank) {
    throw Error(ErrorCode::Rank, "requested " + std::to_string(k) + " components but climate data has rank " +
                                     std::to_string(rank));
  }

  model.k = k;
  const auto kk = static_cast<Eigen::Index>(k);
  model.loadings = vectors.leftCols(kk);
  for (Eigen::Index c = 0; c < kk; ++c) {
    Eigen::Index idx = 0;
    model.loadings.col(c).cwiseAbs().maxCoeff(&idx);
    if (model.loadings(idx, c) < 0.0) model.loadings.col(c) *= -1.0;
  }
  model.variance_explained = values.head(kk) / total;
  return model;
}

Eigen::VectorXd project_pca(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& row) {
  Eigen::VectorXd z = (row - model.means).cwiseQuotient(model.scales);
  return model.loadings.transpose() * z;
}

// --- dataset ----------------------------------------------------------------

const Station& Dataset::station(std::string_view id) const {
  auto it = std::lower_bound(stations.begin(), stations.end(), id,
                             [](const Station& s, std::string_view v) { return s.id < v; });
  if (it == stations.end() || it->id != id) {
    throw Error(ErrorCode::Integrity, "unknown station '" + std::string(id) + "'");
  }
  return *it;
}

std::vector<const Station*> Dataset::select(SiteClass c, Role r) const {
  std::vector<const Station*> out;
  for (const auto& s : stations) {
    if (s.site_class == c && s.role == r) out.push_back(&s);
  }
  return out;
}

std::vector<const Station*> Dataset::select(SiteClass c) const {
  std::vector<const Station*> out;
  for (const auto& s : stations) {
    if (s.site_class == c) out.push_back(&s);
  }
  return out;
}

void validate_stations(const std::vector<Station>& stations) {
  std::set<std::string> ids;
  for (const auto& s : stations) {
    if (!ids.insert(s.id).second) {
      throw Error(ErrorCode::Integrity, "duplicate station id '" + s.id + "'");
    }
    if (!std::isfinite(s.x_km) || !std::isfinite(s.y_km)) {
      throw Error(ErrorCode::Value, "non-finite coordinates for station '" + s.id + "'");
    }
    if (!(s.annual_mean > 0.0) || !std::isfinite(s.annual_mean)) {
      throw Error(ErrorCode::Value, "station '" + s.id + "' has non-positive annual_mean");
    }
  }
  std::map<std::pair<double, double>, std::string> seen;
  for (const auto& s : stations) {
    auto [it, inserted] = seen.emplace(std::make_pair(s.x_km, s.y_km), s.id);
    if (!inserted) {
      throw Error(ErrorCode::Integrity,
                  "stations '" + it->second + "' and '" + s.id + "' share the same coordinates");
    }
  }
}

namespace {

std::vector<Station> read_stations(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const auto c_id = table.column("id");
  const auto c_x = table.column("x_km");
  const auto c_y = table.column("y_km");
  const auto c_class = table.column("site_class");
  const auto c_role = table.column("role");
  const auto c_mean = table.column("annual_mean");

  std::vector<Station> stations;
  stations.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Station s;
    s.id = row[c_id];
    const std::string ctx = "station '" + s.id + "'";
    s.x_km = csv::parse_real(row[c_x], ctx);
    s.y_km = csv::parse_real(row[c_y], ctx);
    if (row[c_class] == "rural") {
      s.site_class = SiteClass::Rural;
    } else if (row[c_class] == "urban") {
      s.site_class = SiteClass::Urban;
    } else {
      throw Error(ErrorCode::Value, ctx + ": site_class must be rural or urban");
    }
    if (row[c_role] == "training") {
      s.role = Role::Training;
    } else if (row[c_role] == "validation") {
      s.role = Role::Validation;
    } else {
      throw Error(ErrorCode::Value, ctx + ": role must be training or validation");
    }
    s.annual_mean = csv::parse_real(row[c_mean], ctx);
    stations.push_back(std::move(s));
  }
  return stations;
}

}  // namespace

std::vector<GroupingEntry> read_grouping(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const auto c_cov = table.column("covariate");
  const auto c_group = table.column("group");
  const auto c_tr = table.column("transform");
  std::vector<GroupingEntry> out;
  std::set<std::string> names;
  for (const auto& row : table.rows) {
    GroupingEntry e;
    e.covariate = row[c_cov];
    if (!names.insert(e.covariate).second) {
      throw Error(ErrorCode::Integrity, "covariate '" + e.covariate + "' assigned to more than one group");
    }
    const auto& g = row[c_group];
    if (g == "global") {
      e.group = CovariateGroup::Global;
    } else if (g == "rural") {
      e.group = CovariateGroup::Rural;
    } else if (g == "urban") {
      e.group = CovariateGroup::Urban;
    } else {
      throw Error(ErrorCode::Value, "covariate '" + e.covariate + "': unknown group '" + g + "'");
    }
    e.transform = row[c_tr];
    if (e.transform != "identity" && e.transform != "minmax_sqrt" && e.transform != "pca_climate") {
      throw Error(ErrorCode::Value,
                  "covariate '" + e.covariate + "': unknown transform '" + e.transform + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

Dataset build_dataset(std::vector<Station> stations, const std::vector<std::string>& raw_ids,
                      const std::vector<std::string>& raw_names, const Eigen::MatrixXd& raw_values,
                      const std::vector<GroupingEntry>& grouping, const LoadOptions& options) {
  validate_stations(stations);
  std::sort(stations.begin(), stations.end(), [](const Station& a, const Station& b) { return a.id < b.id; });

  if (raw_ids.size() != stations.size()) {
    throw Error(ErrorCode::Integrity, "covariate rows (" + std::to_string(raw_ids.size()) +
                                          ") do not match station count (" + std::to_string(stations.size()) + ")");
  }
  std::map<std::string, Eigen::Index> raw_row;
  for (std::size_t i = 0; i < raw_ids.size(); ++i) {
    if (!raw_row.emplace(raw_ids[i], static_cast<Eigen::Index>(i)).second) {
      throw Error(ErrorCode::Integrity, "duplicate covariate row for station '" + raw_ids[i] + "'");
    }
  }
  std::map<std::string, Eigen::Index> raw_col;
  for (std::size_t j = 0; j < raw_names.size(); ++j) raw_col.emplace(raw_names[j], static_cast<Eigen::Index>(j));

  const auto n = static_cast<Eigen::Index>(stations.size());
  // Reorder raw rows to match the sorted station order.
  Eigen::MatrixXd ordered(n, raw_values.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = raw_row.find(stations[static_cast<std::size_t>(i)].id);
    if (it == raw_row.end()) {
      throw Error(ErrorCode::Integrity,
                  "station '" + stations[static_cast<std::size_t>(i)].id + "' has no covariate row");
    }
    ordered.row(i) = raw_values.row(it->second);
  }

  auto raw_column = [&](const std::string& name) -> Eigen::VectorXd {
    auto it = raw_col.find(name);
    if (it == raw_col.end()) {
      throw Error(ErrorCode::Schema, "missing column '" + name + "' in covariates file");
    }
    return ordered.col(it->second);
  };

  Dataset ds;
  std::map<CovariateGroup, std::vector<std::pair<std::string, Eigen::VectorXd>>> columns;
  std::vector<std::string> pca_names;
  std::optional<CovariateGroup> pca_group;
  for (const auto& e : grouping) {
    Eigen::VectorXd col = raw_column(e.covariate);
    if (e.transform == "pca_climate") {
      if (pca_group && *pca_group != e.group) {
        throw Error(ErrorCode::Integrity, "pca_climate covariates must all belong to one group");
      }
      pca_group = e.group;
      pca_names.push_back(e.covariate);
      continue;
    }
    TransformSpec spec{e.covariate, TransformKind::Identity, 0.0, 1.0};
    if (e.transform == "minmax_sqrt") spec = fit_minmax_sqrt(col, e.covariate);
    for (Eigen::Index i = 0; i < n; ++i) col(i) = apply_transform(spec, col(i));
    ds.transforms.push_back(spec);
    columns[e.group].emplace_back(e.covariate, std::move(col));
  }
  if (!pca_names.empty()) {
    Eigen::MatrixXd climate(n, static_cast<Eigen::Index>(pca_names.size()));
    for (std::size_t j = 0; j < pca_names.size(); ++j) climate.col(static_cast<Eigen::Index>(j)) = raw_column(pca_names[j]);
    const std::size_t k = std::min(options.pca_components, pca_names.size());
    ds.pca = fit_pca(climate, k, pca_names);
    for (std::size_t c = 0; c < k; ++c) {
      Eigen::VectorXd scores(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        scores(i) = project_pca(*ds.pca, climate.row(i).transpose())(static_cast<Eigen::Index>(c));
      }
      columns[*pca_group].emplace_back("climate_factor_" + std::to_string(c + 1), std::move(scores));
    }
  }

  auto& table = ds.covariates;
  for (const auto& s : stations) table.station_ids.push_back(s.id);
  std::vector<const Eigen::VectorXd*> ordered_cols;
  for (auto group : {CovariateGroup::Global, CovariateGroup::Rural, CovariateGroup::Urban}) {
    auto& names = group == CovariateGroup::Global  ? table.global_names
                  : group == CovariateGroup::Rural ? table.rural_names
                                                   : table.urban_names;
    for (const auto& [name, col] : columns[group]) {
      names.push_back(name);
      ordered_cols.push_back(&col);
    }
  }
  table.values.resize(n, static_cast<Eigen::Index>(ordered_cols.size()));
  for (std::size_t j = 0; j < ordered_cols.size(); ++j) table.values.col(static_cast<Eigen::Index>(j)) = *ordered_cols[j];
  ds.stations = std::move(stations);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& stations_path, const std::filesystem::path& covariates_path,
                     const std::filesystem::path& grouping_path, const LoadOptions& options) {
  auto stations = read_stations(stations_path);
  const auto grouping = read_grouping(grouping_path);
  const auto cov = csv::read_file(covariates_path);
  const auto c_id = cov.column("id");
  for (const auto& e : grouping) cov.column(e.covariate);

  std::vector<std::string> ids;
  std::vector<std::string> names;
  std::vector<std::size_t> cols;
  for (const auto& e : grouping) {
    names.push_back(e.covariate);
    cols.push_back(cov.column(e.covariate));
  }
  Eigen::MatrixXd values(static_cast<Eigen::Index>(cov.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cov.rows.size(); ++i) {
    const auto& row = cov.rows[i];
    ids.push_back(row[c_id]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_real(row[cols[j]], "station '" + row[c_id] + "', covariate '" + names[j] + "'");
    }
  }
  return build_dataset(std::move(stations), ids, names, values, grouping, options);
}

void write_stations(const std::filesystem::path& path, const std::vector<Station>& stations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "id,x_km,y_km,site_class,role,annual_mean\n";
  for (const auto& s : stations) {
    out << s.id << ',' << csv::format_real(s.x_km) << ',' << csv::format_real(s.y_km) << ','
        << to_string(s.site_class) << ',' << to_string(s.role) << ',' << csv::format_real(s.annual_mean) << '\n';
  }
}

void write_covariates(const std::filesystem::path& path, const CovariateTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "id";
  for (const auto& name : table.column_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < table.station_ids.size(); ++i) {
    out << table.station_ids[i];
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      out << ',' << csv::format_real(table.values(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

void write_grouping(const std::filesystem::path& path, const std::vector<GroupingEntry>& grouping) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "covariate,group,transform\n";
  for (const auto& e : grouping) out << e.covariate << ',' << to_string(e.group) << ',' << e.transform << '\n';
}

}  // namespace hbgeo::data
