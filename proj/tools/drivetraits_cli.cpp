#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "drivetraits/cohortgen.hpp"
#include "drivetraits/errors.hpp"
#include "drivetraits/evaluation.hpp"
#include "drivetraits/importance.hpp"
#include "drivetraits/scatter_svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw drivetraits::IoError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw drivetraits::ParseError("config " + path.string() + ": " + e.what());
  }
  return j;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const ordered_json& args) {
  ordered_json m;
  m["tool"] = "drivetraits";
  m["version"] = kToolVersion;
  m["subcommand"] = subcommand;
  m["args"] = args;
  std::ofstream out(out_dir / "manifest.json");
  if (!out) {
    throw drivetraits::IoError("cannot write manifest in " + out_dir.string());
  }
  out << m.dump(2) << "\n";
}

drivetraits::ChannelId parse_channel(const std::string& name) {
  const auto ch = drivetraits::channel_from_name(name);
  if (!ch) throw drivetraits::ConfigError("unknown channel '" + name + "'");
  return *ch;
}

drivetraits::CohortConfig parse_cohort_config(const json& j) {
  drivetraits::CohortConfig cfg;
  if (j.contains("n_drivers")) cfg.n_drivers = j["n_drivers"].get<int>();
  if (j.contains("two_session_drivers")) {
    cfg.two_session_drivers = j["two_session_drivers"].get<int>();
  }
  if (j.contains("sample_rate_hz")) cfg.sample_rate_hz = j["sample_rate_hz"].get<double>();
  if (j.contains("arterial_mean_s")) cfg.arterial_mean_s = j["arterial_mean_s"].get<double>();
  if (j.contains("arterial_sd_s")) cfg.arterial_sd_s = j["arterial_sd_s"].get<double>();
  if (j.contains("arterial_min_s")) cfg.arterial_min_s = j["arterial_min_s"].get<double>();
  if (j.contains("intersection_count")) {
    cfg.intersection_count = j["intersection_count"].get<int>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("couplings")) {
    cfg.use_default_couplings = false;
    for (const auto& cj : j["couplings"]) {
      drivetraits::Coupling c;
      c.target = cj.at("target").get<std::string>();
      c.channel = parse_channel(cj.at("channel").get<std::string>());
      const auto scope =
          drivetraits::road_scope_from_name(cj.at("road_scope").get<std::string>());
      if (!scope) throw drivetraits::ConfigError("bad coupling road_scope");
      c.road_scope = *scope;
      if (cj.contains("band_s")) {
        c.band_lo_s = cj["band_s"].at(0).get<double>();
        c.band_hi_s = cj["band_s"].at(1).get<double>();
      }
      c.effect = cj.at("effect").get<double>();
      cfg.couplings.push_back(c);
    }
  }
  return cfg;
}

drivetraits::ExperimentConfig parse_experiment_config(const json& j) {
  drivetraits::ExperimentConfig cfg;
  if (j.contains("target")) cfg.target = j["target"].get<std::string>();
  if (j.contains("variant")) {
    const auto v = drivetraits::variant_from_name(j["variant"].get<std::string>());
    if (!v) throw drivetraits::ConfigError("variant must be one of i, ii, iii");
    cfg.variant = *v;
  }
  if (j.contains("road")) {
    const auto r = drivetraits::road_scope_from_name(j["road"].get<std::string>());
    if (!r) throw drivetraits::ConfigError("road must be arterial, intersection or whole");
    cfg.road_scope = *r;
  }
  if (j.contains("models")) {
    for (const auto& mj : j["models"]) {
      const auto kind = drivetraits::model_kind_from_name(mj.get<std::string>());
      if (!kind) {
        throw drivetraits::ConfigError("unknown model '" + mj.get<std::string>() + "'");
      }
      cfg.models.push_back(*kind);
    }
  }
  if (j.contains("reg_grid")) cfg.reg_grid = j["reg_grid"].get<std::vector<double>>();
  if (j.contains("depth_grid")) cfg.depth_grid = j["depth_grid"].get<std::vector<int>>();
  if (j.contains("n_trees")) cfg.n_trees = j["n_trees"].get<int>();
  if (j.contains("corr_threshold")) cfg.corr_threshold = j["corr_threshold"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
  if (j.contains("duration_targets")) {
    cfg.duration_grid.targets.clear();
    for (const auto& t : j["duration_targets"]) {
      if (t.is_string() && t.get<std::string>() == "all") {
        cfg.duration_grid.targets.push_back(drivetraits::kWholeArterial);
      } else {
        cfg.duration_grid.targets.push_back(t.get<double>());
      }
    }
  }
  if (j.contains("cohort_mean_arterial_s")) {
    cfg.duration_grid.cohort_mean_arterial_s = j["cohort_mean_arterial_s"].get<double>();
  }
  if (j.contains("brake_epsilon_mpa")) {
    cfg.brake_epsilon_mpa = j["brake_epsilon_mpa"].get<double>();
  }
  if (j.contains("include_whole_pass")) {
    cfg.featurize.include_whole_pass = j["include_whole_pass"].get<bool>();
  }
  return cfg;
}

std::string scope_file_tag(drivetraits::RoadScope scope) {
  return std::string(drivetraits::road_scope_name(scope));
}

void write_eval_outputs(const drivetraits::EvalReport& report, const fs::path& out,
                        bool with_svg) {
  {
    std::ofstream f(out / ("eval_" + report.target + ".json"));
    if (!f) throw drivetraits::IoError("cannot write eval report JSON");
    f << report.to_json().dump(2) << "\n";
  }
  report.write_csv(out / ("eval_" + report.target + ".csv"));
  if (with_svg) {
    for (const auto& r : report.results) {
      drivetraits::write_scatter_svg(
          out / ("scatter_" + report.target + "_" +
                 std::string(drivetraits::model_kind_name(r.kind)) + ".svg"),
          r.truth, r.aggregated,
          report.target + " / " + std::string(drivetraits::model_kind_name(r.kind)));
    }
  }
}

// Most frequent per-fold hyperparameter; ties go to the smaller value.
double modal_reg(const drivetraits::ModelResult& result) {
  std::map<double, int> counts;
  for (const auto& f : result.folds) {
    if (!f.empty_filter) counts[f.chosen_reg]++;
  }
  if (counts.empty()) throw drivetraits::DegenerateError("no fitted folds");
  double best = counts.begin()->first;
  int best_count = counts.begin()->second;
  for (const auto& [v, c] : counts) {
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  }
  return best;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"driver-trait estimation pipeline"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, route_path, eval_path;
  std::string variant_flag, road_flag, target_flag;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  int jobs_flag = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    auto* seed_opt = cmd->add_option("--seed", seed_flag, "master random seed");
    seed_opt->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--jobs", jobs_flag, "worker threads (0 = hardware)");
    auto* out = cmd->add_option("--out", out_dir, "output directory");
    if (needs_out) out->required();
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic cohort");
  add_common(gen, true);

  CLI::App* featurize = app.add_subcommand("featurize", "build feature matrices");
  add_common(featurize, true);
  featurize->add_option("--data", data_dir, "cohort directory")->required();
  featurize->add_option("--route", route_path, "route map JSON override");
  featurize->add_option("--variant", variant_flag, "i, ii or iii");

  CLI::App* eval = app.add_subcommand("eval", "run one experiment");
  add_common(eval, true);
  eval->add_option("--data", data_dir, "cohort directory")->required();
  eval->add_option("--variant", variant_flag, "i, ii or iii");
  eval->add_option("--road", road_flag, "arterial, intersection or whole");
  eval->add_option("--target", target_flag, "prediction target");

  CLI::App* importance = app.add_subcommand("importance", "coefficient importance");
  add_common(importance, true);
  importance->add_option("--data", data_dir, "cohort directory")->required();
  importance->add_option("--eval", eval_path, "eval report JSON")->required();

  CLI::App* repro = app.add_subcommand("repro", "variant comparison over all targets");
  add_common(repro, true);
  repro->add_option("--data", data_dir, "cohort directory")->required();

  CLI11_PARSE(app, argc, argv);

  const json config = config_path.empty() ? json::object() : load_json_file(config_path);
  fs::create_directories(out_dir);

  ordered_json manifest_args;
  manifest_args["config"] = config_path;
  manifest_args["data"] = data_dir;
  manifest_args["out"] = out_dir;
  if (seed_set) manifest_args["seed"] = seed_flag;
  if (jobs_flag > 0) manifest_args["jobs"] = jobs_flag;

  auto apply_flags = [&](drivetraits::ExperimentConfig& cfg) {
    if (!variant_flag.empty()) {
      const auto v = drivetraits::variant_from_name(variant_flag);
      if (!v) throw drivetraits::ConfigError("variant must be one of i, ii, iii");
      cfg.variant = *v;
    }
    if (!road_flag.empty()) {
      const auto r = drivetraits::road_scope_from_name(road_flag);
      if (!r) {
        throw drivetraits::ConfigError("road must be arterial, intersection or whole");
      }
      cfg.road_scope = *r;
    }
    if (!target_flag.empty()) cfg.target = target_flag;
    if (seed_set) cfg.seed = seed_flag;
    if (jobs_flag > 0) cfg.jobs = jobs_flag;
  };

  if (*gen) {
    drivetraits::CohortConfig cfg = parse_cohort_config(config);
    if (seed_set) cfg.seed = seed_flag;
    const drivetraits::GeneratedCohort generated = drivetraits::gen_cohort(cfg);
    drivetraits::write_cohort(generated, out_dir);
    manifest_args["n_drivers"] = cfg.n_drivers;
    manifest_args["sessions"] = generated.cohort.sessions.size();
    manifest_args["cohort_seed"] = cfg.seed;
    write_manifest(out_dir, "gen", manifest_args);
    std::cout << "wrote cohort with " << generated.cohort.sessions.size()
              << " sessions to " << out_dir << "\n";
    return 0;
  }

  if (*featurize) {
    drivetraits::ExperimentConfig cfg = parse_experiment_config(config);
    apply_flags(cfg);
    drivetraits::Cohort cohort = drivetraits::load_cohort(data_dir);
    if (!route_path.empty()) cohort.route = drivetraits::load_route_map(route_path);

    std::vector<drivetraits::RoadScope> scopes;
    if (cfg.variant == drivetraits::Variant::NoSegmentation) {
      scopes = {drivetraits::RoadScope::Whole};
    } else {
      scopes = {drivetraits::RoadScope::Arterial, drivetraits::RoadScope::Intersection};
    }
    ordered_json counts;
    for (const auto scope : scopes) {
      drivetraits::ExperimentConfig scoped = cfg;
      scoped.road_scope = scope;
      const drivetraits::FeatureMatrix raw =
          drivetraits::featurize_cohort(cohort, scoped);
      const drivetraits::FeatureMatrix kept = drivetraits::drop_missing(raw);
      const std::string tag = scope_file_tag(scope);
      drivetraits::write_feature_csv(kept, fs::path(out_dir) /
                                               ("features_" + tag + ".csv"));
      counts[tag] = {{"columns_total", raw.cols()}, {"columns_kept", kept.cols()}};
    }
    manifest_args["variant"] = std::string(drivetraits::variant_name(cfg.variant));
    manifest_args["feature_counts"] = counts;
    write_manifest(out_dir, "featurize", manifest_args);
    std::cout << "wrote feature matrices to " << out_dir << "\n";
    return 0;
  }

  if (*eval) {
    drivetraits::ExperimentConfig cfg = parse_experiment_config(config);
    apply_flags(cfg);
    const drivetraits::Cohort cohort = drivetraits::load_cohort(data_dir);
    const drivetraits::EvalReport report = drivetraits::run_experiment(cfg, cohort);
    write_eval_outputs(report, out_dir, true);
    manifest_args["target"] = report.target;
    manifest_args["variant"] = std::string(drivetraits::variant_name(report.variant));
    manifest_args["road"] = std::string(drivetraits::road_scope_name(report.road_scope));
    write_manifest(out_dir, "eval", manifest_args);
    std::cout << "wrote eval report for " << report.target << " to " << out_dir << "\n";
    return 0;
  }

  if (*importance) {
    const json eval_json = load_json_file(eval_path);
    if (eval_json.at("task").get<std::string>() != "regression") {
      throw drivetraits::UnsupportedKindError(
          "importance reports use ridge/lasso regression targets");
    }
    drivetraits::ExperimentConfig cfg = parse_experiment_config(config);
    cfg.target = eval_json.at("target").get<std::string>();
    const auto v = drivetraits::variant_from_name(
        eval_json.at("variant").get<std::string>());
    const auto r = drivetraits::road_scope_from_name(
        eval_json.at("road_scope").get<std::string>());
    if (!v || !r) throw drivetraits::SchemaError("bad variant/road in eval report");
    cfg.variant = *v;
    cfg.road_scope = *r;
    if (eval_json.contains("config")) {
      const auto& echo = eval_json["config"];
      cfg.corr_threshold = echo.at("corr_threshold").get<double>();
      cfg.duration_grid.cohort_mean_arterial_s =
          echo.at("cohort_mean_arterial_s").get<double>();
      cfg.brake_epsilon_mpa = echo.at("brake_epsilon_mpa").get<double>();
      cfg.featurize.include_whole_pass = echo.at("include_whole_pass").get<bool>();
      cfg.duration_grid.targets.clear();
      for (const auto& t : echo.at("duration_targets")) {
        const std::string label = t.get<std::string>();
        cfg.duration_grid.targets.push_back(
            label == "all" ? drivetraits::kWholeArterial
                           : std::stod(label.substr(1)));
      }
    }
    apply_flags(cfg);

    const drivetraits::Cohort cohort = drivetraits::load_cohort(data_dir);
    const drivetraits::FeatureMatrix features =
        drivetraits::drop_missing(drivetraits::featurize_cohort(cohort, cfg));
    Eigen::VectorXd y(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      y[i] = cohort.traits.row(features.driver_ids[static_cast<std::size_t>(i)])
                 .value(cfg.target);
    }

    std::map<double, int> window_counts;
    if (cfg.variant == drivetraits::Variant::RoadAndDuration &&
        cfg.road_scope == drivetraits::RoadScope::Arterial) {
      window_counts = drivetraits::plan_arterial_windows(cfg.duration_grid);
    }

    ordered_json reports = json::array();
    for (const auto& rj : eval_json.at("results")) {
      const auto kind =
          drivetraits::model_kind_from_name(rj.at("model").get<std::string>());
      if (!kind || (*kind != drivetraits::ModelKind::ridge &&
                    *kind != drivetraits::ModelKind::lasso)) {
        continue;
      }
      std::map<double, int> counts;
      for (const auto& fj : rj.at("folds")) {
        if (!fj.at("empty_filter").get<bool>()) {
          counts[fj.at("chosen_reg").get<double>()]++;
        }
      }
      if (counts.empty()) continue;
      double reg = counts.begin()->first;
      int best = counts.begin()->second;
      for (const auto& [value, c] : counts) {
        if (c > best) {
          reg = value;
          best = c;
        }
      }

      drivetraits::ImportanceReport report = drivetraits::importance_for_target(
          features, y, cfg.target, *kind, reg, cfg.corr_threshold, window_counts);
      report.road_scope = std::string(drivetraits::road_scope_name(cfg.road_scope));
      report.variant = std::string(drivetraits::variant_name(cfg.variant));
      const std::string stem =
          cfg.target + "_" + std::string(drivetraits::model_kind_name(*kind));
      report.write_sensor_csv(fs::path(out_dir) / (stem + "_sensors.csv"));
      if (report.has_duration_shares) {
        report.write_duration_csv(fs::path(out_dir) / (stem + "_durations.csv"));
      }
      reports.push_back(report.to_json());
    }
    if (reports.empty()) {
      throw drivetraits::DegenerateError(
          "eval report contains no ridge/lasso results to analyze");
    }
    {
      std::ofstream f(fs::path(out_dir) / "importance.json");
      if (!f) throw drivetraits::IoError("cannot write importance.json");
      ordered_json j;
      j["target"] = cfg.target;
      j["reports"] = reports;
      f << j.dump(2) << "\n";
    }
    manifest_args["target"] = cfg.target;
    manifest_args["eval"] = eval_path;
    write_manifest(out_dir, "importance", manifest_args);
    std::cout << "wrote importance reports for " << cfg.target << " to " << out_dir
              << "\n";
    return 0;
  }

  if (*repro) {
    drivetraits::ExperimentConfig base = parse_experiment_config(config);
    apply_flags(base);
    std::vector<std::string> targets = drivetraits::all_targets();
    if (config.contains("targets")) {
      targets = config["targets"].get<std::vector<std::string>>();
    }
    const drivetraits::Cohort cohort = drivetraits::load_cohort(data_dir);

    struct RunSpec {
      drivetraits::Variant variant;
      drivetraits::RoadScope scope;
    };
    const std::vector<RunSpec> runs = {
        {drivetraits::Variant::RoadAndDuration, drivetraits::RoadScope::Arterial},
        {drivetraits::Variant::RoadAndDuration, drivetraits::RoadScope::Intersection},
        {drivetraits::Variant::RoadOnly, drivetraits::RoadScope::Arterial},
        {drivetraits::Variant::RoadOnly, drivetraits::RoadScope::Intersection},
        {drivetraits::Variant::NoSegmentation, drivetraits::RoadScope::Whole},
    };

    // Featurize each (variant, scope) once; targets share the matrices.
    std::map<std::string, drivetraits::FeatureMatrix> matrices;
    for (const auto& run : runs) {
      const std::string key = std::string(drivetraits::variant_name(run.variant)) +
                              "/" + std::string(drivetraits::road_scope_name(run.scope));
      if (matrices.count(key)) continue;
      drivetraits::ExperimentConfig cfg = base;
      cfg.variant = run.variant;
      cfg.road_scope = run.scope;
      cfg.target = targets.front();
      matrices.emplace(key, drivetraits::drop_missing(
                                drivetraits::featurize_cohort(cohort, cfg)));
    }

    ordered_json summary = json::array();
    for (const auto& target : targets) {
      for (const auto& run : runs) {
        drivetraits::ExperimentConfig cfg = base;
        cfg.target = target;
        cfg.variant = run.variant;
        cfg.road_scope = run.scope;
        cfg.models.clear();  // defaults for the target's task
        const std::string key =
            std::string(drivetraits::variant_name(run.variant)) + "/" +
            std::string(drivetraits::road_scope_name(run.scope));
        const drivetraits::EvalReport report = drivetraits::run_experiment_on_features(
            cfg, matrices.at(key), cohort.traits);
        summary.push_back(report.to_json());
      }
    }

    // Flat comparison grids in the table layout of the study: one row per
    // (variant, road, model), one column group per target.
    auto fmt = [](double v) -> std::string {
      if (std::isnan(v)) return "";
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.6g", v);
      return buf;
    };
    std::ofstream reg_csv(fs::path(out_dir) / "repro_regression.csv");
    std::ofstream clf_csv(fs::path(out_dir) / "repro_classification.csv");
    if (!reg_csv || !clf_csv) throw drivetraits::IoError("cannot write repro CSVs");

    std::vector<std::string> reg_targets, clf_targets;
    for (const auto& t : targets) {
      (drivetraits::is_regression_target(t) ? reg_targets : clf_targets).push_back(t);
    }
    reg_csv << "variant,road_scope,model";
    for (const auto& t : reg_targets) reg_csv << ',' << t << "_r," << t << "_rmse";
    reg_csv << "\n";
    clf_csv << "variant,road_scope,model";
    for (const auto& t : clf_targets) clf_csv << ',' << t << "_f1";
    clf_csv << "\n";

    auto find_metric = [&](const std::string& target, const RunSpec& run,
                           const std::string& model, const char* metric) {
      for (const auto& rep : summary) {
        if (rep.at("target") != target) continue;
        if (rep.at("variant") != std::string(drivetraits::variant_name(run.variant))) continue;
        if (rep.at("road_scope") !=
            std::string(drivetraits::road_scope_name(run.scope))) continue;
        for (const auto& res : rep.at("results")) {
          if (res.at("model") == model) {
            const auto& v = res.at("metrics").at(metric);
            return v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                               : v.get<double>();
          }
        }
      }
      return std::numeric_limits<double>::quiet_NaN();
    };

    for (const auto& run : runs) {
      const std::vector<std::string> reg_models = {"ridge", "lasso",
                                                   "random_forest_reg"};
      const std::vector<std::string> clf_models = {"logistic_l2", "linear_svm",
                                                   "random_forest_clf"};
      for (const auto& model : reg_models) {
        reg_csv << drivetraits::variant_name(run.variant) << ','
                << drivetraits::road_scope_name(run.scope) << ',' << model;
        for (const auto& t : reg_targets) {
          reg_csv << ',' << fmt(find_metric(t, run, model, "pearson_r")) << ','
                  << fmt(find_metric(t, run, model, "rmse"));
        }
        reg_csv << "\n";
      }
      for (const auto& model : clf_models) {
        clf_csv << drivetraits::variant_name(run.variant) << ','
                << drivetraits::road_scope_name(run.scope) << ',' << model;
        for (const auto& t : clf_targets) {
          clf_csv << ',' << fmt(find_metric(t, run, model, "macro_f1"));
        }
        clf_csv << "\n";
      }
    }
    reg_csv.close();
    clf_csv.close();

    {
      std::ofstream f(fs::path(out_dir) / "repro_summary.json");
      if (!f) throw drivetraits::IoError("cannot write repro_summary.json");
      ordered_json j;
      j["reports"] = summary;
      f << j.dump(2) << "\n";
    }
    manifest_args["targets"] = targets.size();
    write_manifest(out_dir, "repro", manifest_args);
    std::cout << "wrote repro grid for " << targets.size() << " targets to "
              << out_dir << "\n";
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const drivetraits::Error& e) {
    ordered_json err;
    err["error"] = {{"kind", e.kind()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    ordered_json err;
    err["error"] = {{"kind", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
