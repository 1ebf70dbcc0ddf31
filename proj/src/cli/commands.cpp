#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hbgeo/cli.hpp"
#include "hbgeo/csv.hpp"
#include "hbgeo/data_model.hpp"

namespace hbgeo::cli {

using csv::format_real;

namespace {

struct Context {
  std::string command;
  Settings settings;
  std::ostream& out;
  std::ostream& err;
};

data::Dataset load(const Settings& s) {
  for (const char* key : {"stations", "covariates", "grouping"}) {
    if (!s.has(key)) throw Error(ErrorCode::Config, std::string("--") + key + " is required");
  }
  data::LoadOptions opts;
  opts.pca_components = s.integer("pca_components");
  return data::load_dataset(s.get("stations"), s.get("covariates"), s.get("grouping"), opts);
}

hierarchy::CovariateSet covariate_set(const Settings& s) { return hierarchy::parse_covariate_set(s.get("covariate_set")); }

std::string manifest(const Context& ctx) {
  return "command=" + ctx.command + "\n" + ctx.settings.canonical();
}

OutputSet outputs(const Context& ctx) { return OutputSet(ctx.settings.get("out"), header_line(ctx.settings)); }

hierarchy::StageOneFit fit_from_draws(const Context& ctx, const data::Dataset& ds) {
  if (!ctx.settings.has("draws")) throw Error(ErrorCode::Config, "--draws is required");
  hierarchy::StageOneFit fit;
  fit.spec = hierarchy::build_stage_one(ds, covariate_set(ctx.settings));
  fit.prior = ctx.settings.prior();
  fit.samples = read_draws(ctx.settings.get("draws"), fit.spec);
  return fit;
}

std::string stations_text(const std::vector<data::Station>& stations) {
  std::string out = "id,x_km,y_km,site_class,role,annual_mean\n";
  for (const auto& s : stations) {
    out += s.id + "," + format_real(s.x_km) + "," + format_real(s.y_km) + "," + std::string(data::to_string(s.site_class)) +
           "," + std::string(data::to_string(s.role)) + "," + format_real(s.annual_mean) + "\n";
  }
  return out;
}

std::string covariates_text(const data::CovariateTable& t) {
  std::string out = "id";
  for (const auto& n : t.column_names()) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < t.station_ids.size(); ++i) {
    out += t.station_ids[i];
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) out += "," + format_real(t.values(static_cast<Eigen::Index>(i), j));
    out += "\n";
  }
  return out;
}

std::string grouping_text(const std::vector<data::GroupingEntry>& g) {
  std::string out = "covariate,group,transform\n";
  for (const auto& e : g) out += e.covariate + "," + std::string(data::to_string(e.group)) + "," + e.transform + "\n";
  return out;
}

std::string transforms_text(const data::Dataset& ds) {
  std::string out = "name,kind,fitted_min,fitted_max_shifted\n";
  for (const auto& t : ds.transforms) {
    out += t.name + "," + (t.kind == data::TransformKind::MinMaxSqrt ? "minmax_sqrt" : "identity") + "," +
           format_real(t.fitted_min) + "," + format_real(t.fitted_max_shifted) + "\n";
  }
  return out;
}

std::string pca_text(const data::PcaModel& pca) {
  std::string out = "component,variance_explained";
  for (const auto& v : pca.variable_names) out += ",loading[" + v + "]";
  out += "\n";
  for (std::size_t c = 0; c < pca.k; ++c) {
    out += "climate_factor_" + std::to_string(c + 1) + "," + format_real(pca.variance_explained(static_cast<Eigen::Index>(c)));
    for (Eigen::Index v = 0; v < pca.loadings.rows(); ++v) out += "," + format_real(pca.loadings(v, static_cast<Eigen::Index>(c)));
    out += "\n";
  }
  out += "# means";
  for (Eigen::Index v = 0; v < pca.means.size(); ++v) out += "," + format_real(pca.means(v));
  out += "\n# scales";
  for (Eigen::Index v = 0; v < pca.scales.size(); ++v) out += "," + format_real(pca.scales(v));
  out += "\n";
  return out;
}

int cmd_ingest(Context& ctx) {
  const auto ds = load(ctx.settings);
  auto files = outputs(ctx);
  files.add("stations_normalized.csv", stations_text(ds.stations));
  files.add("covariates_transformed.csv", covariates_text(ds.covariates));
  files.add("transforms.csv", transforms_text(ds));
  if (ds.pca) files.add("pca.csv", pca_text(*ds.pca));
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (const auto& s : ds.stations) ++counts[static_cast<int>(s.site_class)][static_cast<int>(s.role)];
  ctx.out << "stations: " << ds.stations.size() << " (rural training " << counts[0][0] << ", rural validation "
          << counts[0][1] << ", urban training " << counts[1][0] << ", urban validation " << counts[1][1] << ")\n"
          << "covariates: global " << ds.covariates.global_names.size() << ", rural "
          << ds.covariates.rural_names.size() << ", urban " << ds.covariates.urban_names.size() << "\n";
  return 0;
}

int cmd_variogram(Context& ctx) {
  const auto& s = ctx.settings;
  const auto ds = load(s);
  const auto spec = hierarchy::build_stage_one(ds, covariate_set(s));
  Eigen::VectorXd values = spec.response;
  const auto& mode = s.get("variogram_values");
  if (mode == "residuals") {
    const Eigen::VectorXd coef = spec.design.colPivHouseholderQr().solve(spec.response);
    values = spec.response - spec.design * coef;
  } else if (mode != "log_mean") {
    throw Error(ErrorCode::Config, "variogram_values must be log_mean or residuals");
  }
  variogram::BinSpec bins{static_cast<int>(s.integer("bins")), s.real("max_distance")};
  std::optional<variogram::Direction> direction;
  if (s.has("direction")) direction = variogram::Direction{s.real("direction"), s.real("tolerance")};
  const auto emp = variogram::empirical_variogram(values, spec.sites, bins, direction);
  const auto fit = variogram::fit_exponential_variogram(emp);

  auto files = outputs(ctx);
  files.add("variogram.csv", variogram_table(emp));
  files.add("variogram_fit.csv", variogram_fit_table(fit));
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  ctx.out << "fit: nugget=" << format_real(fit.nugget) << " partial_sill=" << format_real(fit.partial_sill)
          << " range_km=" << format_real(fit.range_km) << " effective_range_05_km=" << format_real(fit.effective_range_05)
          << (fit.degenerate ? " (degenerate)" : "") << "\n";
  return 0;
}

hierarchy::StageOneFit run_stage_one(const Context& ctx, const data::Dataset& ds) {
  return hierarchy::fit_stage_one(ds, covariate_set(ctx.settings), ctx.settings.prior(), ctx.settings.mcmc());
}

void add_stage_one_files(OutputSet& files, const hierarchy::StageOneFit& fit) {
  files.add("stage1_draws.csv", draws_table(fit));
  files.add("stage1_summary.csv", summary_table(fit));
  files.add("diagnostics.csv", diagnostics_table(fit));
}

int cmd_fit(Context& ctx) {
  const auto ds = load(ctx.settings);
  const auto fit = run_stage_one(ctx, ds);
  auto files = outputs(ctx);
  add_stage_one_files(files, fit);
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  ctx.out << "stage one: " << fit.samples.chain_count() << " chains x " << fit.samples.draws_per_chain() << " draws\n";
  return 0;
}

hierarchy::PredictionOptions prediction_options(const Settings& s) { return {s.flag("include_noise")}; }

int cmd_predict(Context& ctx) {
  const auto ds = load(ctx.settings);
  const auto fit = fit_from_draws(ctx, ds);
  const auto targets = hierarchy::urban_targets(ds, fit.spec);
  if (targets.ids.empty()) throw Error(ErrorCode::InsufficientData, "no urban training stations to predict at");
  const auto bg = hierarchy::predict_background(fit, targets, prediction_options(ctx.settings), ctx.settings.integer("seed"));
  auto files = outputs(ctx);
  files.add("predictions.csv", predictions_table(bg.summaries));
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  return 0;
}

int cmd_validate(Context& ctx) {
  const auto ds = load(ctx.settings);
  const auto fit = fit_from_draws(ctx, ds);
  const auto report = validation::validate(fit, ds, ctx.settings.integer("seed"));
  auto files = outputs(ctx);
  files.add("validation.csv", validation_table(report));
  files.add("validation_summary.csv", validation_summary_table(report));
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  ctx.out << "validation: rmse median " << format_real(report.rmse.median) << ", R2 median "
          << format_real(report.r2.median) << "%, coverage " << report.covered_count << "/" << report.total_count << "\n";
  return 0;
}

int cmd_grid(Context& ctx) {
  const auto& s = ctx.settings;
  const auto ds = load(s);
  const auto fit = fit_from_draws(ctx, ds);
  if (!s.has("grid")) throw Error(ErrorCode::Config, "--grid is required");
  const auto table = csv::read_file(s.get("grid"));
  const auto cx = table.column("x_km");
  const auto cy = table.column("y_km");
  const auto global_names = fit.spec.global_count > 0 ? ds.covariates.global_names : std::vector<std::string>{};
  std::vector<std::size_t> gcols;
  for (const auto& g : global_names) gcols.push_back(table.column(g));
  std::vector<hierarchy::GridCell> cells;
  cells.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = s.get("grid") + ":" + std::to_string(table.line_numbers[r]);
    hierarchy::GridCell cell;
    cell.x_km = csv::parse_real(row[cx], where);
    cell.y_km = csv::parse_real(row[cy], where);
    cell.global_covariates.resize(static_cast<Eigen::Index>(gcols.size()));
    for (std::size_t g = 0; g < gcols.size(); ++g) cell.global_covariates(static_cast<Eigen::Index>(g)) = csv::parse_real(row[gcols[g]], where);
    cells.push_back(std::move(cell));
  }
  for (const auto& bad : hierarchy::untransformed_columns(cells, global_names, ds.transforms)) {
    ctx.err << "warning: grid column '" << bad << "' has values outside [0, 1]; was the transform applied?\n";
  }

  const std::filesystem::path dir = s.get("out");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + dir.string());
  const auto final_path = dir / "grid_predictions.csv";
  const auto tmp_path = dir / "grid_predictions.csv.tmp";
  try {
    std::ofstream out(tmp_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp_path.string());
    out << header_line(s) << "x_km,y_km";
    for (const auto& g : global_names) out << ',' << g;
    out << ",log_mean,log_var,log_lo95,log_hi95,nat_median,nat_lo95,nat_hi95\n";
    hierarchy::predict_grid(
        fit, cells, prediction_options(s), s.integer("seed"),
        [&](std::size_t i, const hierarchy::PredictionResult& r) {
          const auto& c = cells[i];
          out << format_real(c.x_km) << ',' << format_real(c.y_km);
          for (Eigen::Index g = 0; g < c.global_covariates.size(); ++g) out << ',' << format_real(c.global_covariates(g));
          out << ',' << format_real(r.log_mean) << ',' << format_real(r.log_variance) << ',' << format_real(r.log_lo95)
              << ',' << format_real(r.log_hi95) << ',' << format_real(r.natural_median) << ','
              << format_real(r.natural_lo95) << ',' << format_real(r.natural_hi95) << '\n';
        },
        s.integer("grid_block"));
    out.close();
    if (!out) throw Error(ErrorCode::Io, "failed writing " + tmp_path.string());
  } catch (...) {
    std::filesystem::remove(tmp_path, ec);
    throw;
  }
  OutputSet manifest_file(dir, header_line(s));
  manifest_file.add("manifest.txt", manifest(ctx));
  manifest_file.commit();
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move grid output into place: " + ec.message());
  return 0;
}

int cmd_pipeline(Context& ctx) {
  const auto& s = ctx.settings;
  const auto ds = load(s);
  const auto seed = s.integer("seed");
  const auto fit = run_stage_one(ctx, ds);
  auto files = outputs(ctx);
  add_stage_one_files(files, fit);

  const auto urban = hierarchy::urban_targets(ds, fit.spec);
  std::optional<hierarchy::BackgroundPrediction> background;
  if (urban.ids.empty()) {
    ctx.err << "notice: no urban stations; stages two and three skipped\n";
  } else {
    background = hierarchy::predict_background(fit, urban, prediction_options(s), seed);
    files.add("urban_background.csv", predictions_table(background->summaries));
  }
  if (!ds.select(data::SiteClass::Rural, data::Role::Validation).empty()) {
    const auto report = validation::validate(fit, ds, seed);
    files.add("validation.csv", validation_table(report));
    files.add("validation_summary.csv", validation_summary_table(report));
    ctx.out << "validation: rmse median " << format_real(report.rmse.median) << ", coverage " << report.covered_count
            << "/" << report.total_count << "\n";
  }
  if (s.flag("no_stage3")) {
    ctx.err << "notice: stage three disabled (--no-stage3)\n";
  } else if (background) {
    const auto spec3 = hierarchy::build_stage_three(ds, urban);
    const auto fit3 = hierarchy::fit_stage_three(background->draws, spec3, s.prior(), s.stage_three(), seed);
    files.add("stage3_draws.csv", stage_three_draws_table(fit3));
    files.add("stage3_summary.csv", stage_three_summary_table(fit3));
    files.add("urban_increment.csv", urban_increment_table(fit3));
  }
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  ctx.out << "pipeline complete: " << files.files().size() << " files in " << s.get("out") << "\n";
  return 0;
}

int cmd_simulate(Context& ctx) {
  const auto spec = ctx.settings.sim_spec();
  const auto ds = synthetic::simulate(spec);
  auto files = outputs(ctx);
  files.add("stations.csv", stations_text(ds.stations));
  files.add("covariates.csv", covariates_text(ds.covariates));
  files.add("grouping.csv", grouping_text(synthetic::grouping_of(spec)));
  std::string truth = "param,value\n";
  for (Eigen::Index j = 0; j < spec.beta.size(); ++j) truth += "beta[" + std::to_string(j) + "]," + format_real(spec.beta(j)) + "\n";
  for (Eigen::Index j = 0; j < spec.gamma.size(); ++j) truth += "gamma[" + std::to_string(j) + "]," + format_real(spec.gamma(j)) + "\n";
  truth += "sigma2_nu," + format_real(spec.sigma2_nu) + "\nsigma2_m," + format_real(spec.sigma2_m) +
           "\nsigma2_omega," + format_real(spec.sigma2_omega) + "\nphi," + format_real(spec.phi) + "\n";
  files.add("truth.csv", truth);
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  return 0;
}

int cmd_diagnose(Context& ctx) {
  const auto ds = load(ctx.settings);
  const auto fit = fit_from_draws(ctx, ds);
  if (fit.samples.chain_count() < 2) throw Error(ErrorCode::Diagnostics, "Gelman-Rubin needs at least 2 chains");
  auto files = outputs(ctx);
  files.add("diagnostics.csv", summary_table(fit));
  files.add("manifest.txt", manifest(ctx));
  files.commit();
  return 0;
}

// Flag name -> settings key for the options every subcommand accepts.
const std::vector<std::pair<std::string, std::string>>& common_flags() {
  static const std::vector<std::pair<std::string, std::string>> flags = {
      {"--seed", "seed"},
      {"--chains", "chains"},
      {"--burn-in", "burn_in"},
      {"--samples", "samples"},
      {"--thin", "thin"},
      {"--phi-rho", "phi_rho"},
      {"--phi-d-near", "phi_d_near"},
      {"--phi-d-far", "phi_d_far"},
      {"--out", "out"},
      {"--stations", "stations"},
      {"--covariates", "covariates"},
      {"--grouping", "grouping"},
      {"--draws", "draws"},
      {"--grid", "grid"},
      {"--covariate-set", "covariate_set"},
      {"--pca-components", "pca_components"},
      {"--proposal-sd", "proposal_sd"},
      {"--bins", "bins"},
      {"--max-distance", "max_distance"},
      {"--direction", "direction"},
      {"--tolerance", "tolerance"},
  };
  return flags;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian hierarchical geostatistical model for pollutant concentrations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const std::vector<Command> commands = {
      {"ingest", "load and transform a dataset", cmd_ingest},
      {"variogram", "empirical variogram and exponential fit", cmd_variogram},
      {"fit", "stage-one MCMC on rural training sites", cmd_fit},
      {"predict", "background predictions at urban sites", cmd_predict},
      {"grid", "background predictions on a grid", cmd_grid},
      {"validate", "predictive validation at rural validation sites", cmd_validate},
      {"pipeline", "stages one to three plus validation", cmd_pipeline},
      {"simulate", "draw a synthetic dataset from the model", cmd_simulate},
      {"diagnose", "Gelman-Rubin diagnostics from a draws file", cmd_diagnose},
  };

  std::vector<std::pair<std::string, std::string>> overrides;
  std::string config_path;
  std::vector<std::string> extra;
  bool no_stage3 = false;
  bool include_noise = false;
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "key = value config file (e.g. a manifest.txt)");
    for (const auto& [flag, key] : common_flags()) {
      sub->add_option_function<std::string>(
          flag, [&overrides, key = key](const std::string& v) { overrides.emplace_back(key, v); }, key);
    }
    sub->add_option("--set", extra, "extra key=value settings");
    sub->add_flag("--include-noise", include_noise, "add measurement noise to predictive draws");
    if (std::string(c.name) == "pipeline") sub->add_flag("--no-stage3", no_stage3, "stop after stages one and two");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  std::size_t chosen = 0;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) chosen = i;
  }
  Context ctx{commands[chosen].name, Settings{}, out, err};
  try {
    if (!config_path.empty()) ctx.settings.load_file(config_path);
    for (const auto& kv : extra) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::Config, "--set expects key=value, got '" + kv + "'");
      ctx.settings.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [k, v] : overrides) ctx.settings.set(k, v);
    if (include_noise) ctx.settings.set("include_noise", "true");
    if (no_stage3) ctx.settings.set("no_stage3", "true");
    return commands[chosen].fn(ctx);
  } catch (const Error& e) {
    err << "error code=" << to_string(e.code()) << " message=\"" << e.what() << "\"\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error code=INTERNAL message=\"" << e.what() << "\"\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("hbgeo");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hbgeo::cli
