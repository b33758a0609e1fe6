// Command-line front end: simulate, fit, predict, evaluate, netbenefit,
// benchmark. Exit codes: 0 success, 2 usage, 3 validation, 4 runtime.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pitr/config.hpp"
#include "pitr/csv.hpp"
#include "pitr/dataset.hpp"
#include "pitr/itr.hpp"
#include "pitr/knn.hpp"
#include "pitr/metrics.hpp"
#include "pitr/rng.hpp"
#include "pitr/simulate.hpp"
#include "pitr/tuning.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct SimulateOpts {
  int scenario = 0;
  std::size_t n = 0;
  std::size_t eval = 10000;
  std::uint64_t seed = 0;
  std::string out;
  double delta = 3.0;
};

struct ForestFlags {
  std::size_t trees = 200;
  std::size_t mtry = 0;
  std::size_t min_leaf = 5;
  std::size_t max_depth = 0;
  bool no_bootstrap = false;

  pitr::ForestConfig to_config(std::uint64_t seed) const {
    pitr::ForestConfig config;
    config.n_trees = trees;
    config.mtry = mtry;
    config.min_leaf = min_leaf;
    config.max_depth = max_depth;
    config.bootstrap = !no_bootstrap;
    config.seed = seed;
    return config;
  }
};

struct FitOpts {
  std::string data;
  std::string config;
  std::string method = "forest";
  std::string out;
  std::string report;
  std::uint64_t seed = 0;
  ForestFlags forest;
  std::size_t bags = 50;
  double q = 0.0;
  std::size_t knn_c = 0;
  std::size_t knn_e = 0;
  std::string metric = "euclidean";
  int standardize = -1;  // -1 method default, 0 off, 1 on
  std::size_t pair_budget = pitr::kDefaultPairBudget;
  std::vector<std::string> cv_grid;
  std::size_t cv_folds = 5;
};

struct PredictOpts {
  std::string model;
  std::string data;
  std::string out;
};

struct EvaluateOpts {
  std::string pred;
  std::string score_col = "ipb";
  std::string oracle_col = "oracle_ipb";
  std::string out;
  std::string calibration_out;
  std::size_t bins = 20;
  bool crossfit = false;
  std::string data;
  std::string config;
  std::size_t folds = 3;
  std::size_t boot = 200;
  std::uint64_t seed = 0;
  FitOpts fit;  // method and hyperparameters for the crossfit models
};

struct NetBenefitOpts {
  std::string data;
  std::string config;
  std::size_t boot = 200;
  std::uint64_t seed = 0;
  std::string out;
};

struct BenchmarkOpts {
  int scenario = 0;
  std::vector<std::size_t> sizes{400, 2000};
  std::size_t iterations = 20;
  std::size_t eval = 10000;
  std::uint64_t seed = 0;
  std::string method = "forest";
  std::string out;
  ForestFlags forest;
  std::size_t bags = 50;
  double q = 0.0;
  std::size_t knn_c = 0;
  std::size_t knn_e = 0;
  std::size_t bins = 20;
  double delta = 3.0;
  std::size_t pair_budget = pitr::kDefaultPairBudget;
};

pitr::Scenario scenario_from_int(int value) {
  if (value == 1) return pitr::Scenario::one;
  if (value == 2) return pitr::Scenario::two;
  throw pitr::ValidationError("scenario must be 1 or 2");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pitr::ValidationError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw pitr::ValidationError("failed writing file: " + path);
}

void write_json_file(const std::string& path, const Json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

Json optional_to_json(const std::optional<double>& value) {
  if (!value) return nullptr;
  return *value;
}

std::string mean_sd_cell(const pitr::MetricSummary& s, double scale = 1.0) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", s.mean * scale, s.sd * scale);
  return buf;
}

pitr::RunConfig simulation_run_config(pitr::Scenario scenario, double delta) {
  pitr::RunConfig config;
  if (scenario == pitr::Scenario::one) {
    config.score.levels = {
        {pitr::OutcomeKind::binary, pitr::Direction::higher_is_better, 0.0},
        {pitr::OutcomeKind::binary, pitr::Direction::higher_is_better, 0.0}};
  } else {
    config.score.levels = {
        {pitr::OutcomeKind::binary, pitr::Direction::higher_is_better, 0.0},
        {pitr::OutcomeKind::continuous, pitr::Direction::higher_is_better, delta}};
  }
  config.schema.arm_column = "arm";
  config.schema.outcome_columns = {"y1", "y2"};
  config.schema.covariate_columns = {"x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"};
  config.schema.standardize = false;
  config.standardize_set = true;
  return config;
}

void write_population_csv(const std::string& path,
                          const std::vector<pitr::SimulatedSubject>& population) {
  pitr::CsvTable table;
  table.header = {"x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8",
                  "y1", "y2", "arm", "oracle_ipb"};
  const std::size_t half = population.size() / 2;
  table.rows.reserve(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    const pitr::SimulatedSubject& s = population[i];
    const bool experimental = i >= half;
    const std::array<double, 2>& observed = experimental ? s.y1 : s.y0;
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (double x : s.covariates) row.push_back(pitr::format_double(x));
    row.push_back(pitr::format_double(observed[0]));
    row.push_back(pitr::format_double(observed[1]));
    row.push_back(experimental ? "1" : "0");
    row.push_back(pitr::format_double(s.oracle_ipb));
    table.rows.push_back(std::move(row));
  }
  pitr::write_csv(path, table);
}

int cmd_simulate(const SimulateOpts& opts) {
  const pitr::Scenario scenario = scenario_from_int(opts.scenario);
  if (opts.n < 2) throw pitr::ValidationError("--n must be >= 2 (the sample is split into arms)");
  fs::create_directories(opts.out);

  const pitr::ScenarioParams params =
      pitr::make_params(scenario, pitr::derive_seed(opts.seed, "params"), opts.delta);
  const std::vector<pitr::SimulatedSubject> train =
      pitr::sample_population(params, opts.n, pitr::derive_seed(opts.seed, "train"));
  write_population_csv((fs::path(opts.out) / "train.csv").string(), train);
  if (opts.eval > 0) {
    const std::vector<pitr::SimulatedSubject> eval =
        pitr::sample_population(params, opts.eval, pitr::derive_seed(opts.seed, "eval"));
    write_population_csv((fs::path(opts.out) / "eval.csv").string(), eval);
  }
  write_text_file((fs::path(opts.out) / "config.json").string(),
                  pitr::serialize_config(simulation_run_config(scenario, opts.delta)));

  double mean_ipb = 0.0, positive = 0.0;
  for (const pitr::SimulatedSubject& s : train) {
    mean_ipb += s.oracle_ipb;
    if (s.oracle_ipb > 0.0) positive += 1.0;
  }
  mean_ipb /= static_cast<double>(train.size());
  positive /= static_cast<double>(train.size());
  std::cout << "scenario " << opts.scenario << ", seed " << opts.seed << ": wrote " << train.size()
            << " training rows";
  if (opts.eval > 0) std::cout << " and " << opts.eval << " evaluation rows";
  std::cout << " to " << opts.out << "\n";
  std::cout << "train oracle ipb: mean " << pitr::format_double(mean_ipb) << ", share positive "
            << pitr::format_double(positive) << "\n";
  return 0;
}

struct LoadedData {
  pitr::RunConfig config;
  pitr::TrialDataset data;
  pitr::IngestReport report;
};

LoadedData load_dataset(const std::string& data_path, const std::string& config_path,
                        int standardize_override, const std::string& method) {
  LoadedData loaded;
  loaded.config = pitr::parse_config_file(config_path);
  if (standardize_override >= 0) {
    loaded.config.schema.standardize = standardize_override == 1;
  } else if (!loaded.config.standardize_set) {
    // Distance-based fitting standardizes by default; trees are
    // scale-invariant and skip it.
    loaded.config.schema.standardize = method == "knn";
  }
  loaded.data = pitr::ingest_csv(data_path, loaded.config.schema, &loaded.report);
  if (!loaded.report.dropped_rows.empty()) {
    std::cerr << "warning: dropped " << loaded.report.dropped_rows.size()
              << " rows with missing values (rows";
    for (std::size_t i = 0; i < loaded.report.dropped_rows.size() && i < 10; ++i)
      std::cerr << ' ' << loaded.report.dropped_rows[i];
    if (loaded.report.dropped_rows.size() > 10) std::cerr << " ...";
    std::cerr << ")\n";
  }
  return loaded;
}

pitr::CvGrid parse_cv_grid(const std::vector<std::string>& tokens) {
  pitr::CvGrid grid;
  for (const std::string& token : tokens) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos)
      throw pitr::ValidationError("--cv-grid entries look like trees=100,200 or mtry=4,8");
    const std::string key = token.substr(0, eq);
    std::vector<std::size_t>* target = nullptr;
    if (key == "trees")
      target = &grid.n_trees;
    else if (key == "mtry")
      target = &grid.mtry;
    else
      throw pitr::ValidationError("--cv-grid key must be trees or mtry, got '" + key + "'");
    std::stringstream ss(token.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        target->push_back(std::stoull(item));
      } catch (const std::exception&) {
        throw pitr::ValidationError("--cv-grid: cannot parse '" + item + "' as an integer");
      }
    }
  }
  if (grid.n_trees.empty() || grid.mtry.empty())
    throw pitr::ValidationError("--cv-grid needs both trees=... and mtry=...");
  return grid;
}

pitr::ItrModel fit_model(const FitOpts& opts, const LoadedData& loaded, Json* report) {
  const pitr::TrialDataset& data = loaded.data;
  pitr::ItrModel model;
  if (opts.method == "knn") {
    pitr::KnnConfig config;
    auto [c_default, e_default] = pitr::default_neighbor_counts(data.m(), data.n());
    config.c = opts.knn_c == 0 ? c_default : opts.knn_c;
    config.e = opts.knn_e == 0 ? e_default : opts.knn_e;
    config.metric = pitr::metric_from_string(opts.metric);
    model = pitr::fit_knn(data, loaded.config.score, config);
    if (report) {
      (*report)["knn"] = {{"c", config.c}, {"e", config.e}, {"metric", opts.metric}};
    }
    return model;
  }

  pitr::ForestConfig forest = opts.forest.to_config(pitr::derive_seed(opts.seed, "fit/forest"));
  if (!opts.cv_grid.empty()) {
    const pitr::CvGrid grid = parse_cv_grid(opts.cv_grid);
    const pitr::PairMatrix pairs =
        pitr::build_pair_matrix(data, loaded.config.score, opts.pair_budget);
    const pitr::CvSelection selection = pitr::cv_select_forest(
        pairs, forest, grid, opts.cv_folds, pitr::derive_seed(opts.seed, "fit/cv"));
    forest.n_trees = selection.best.n_trees;
    forest.mtry = selection.best.mtry;
    std::cout << "cv selected trees=" << selection.best.n_trees
              << " mtry=" << selection.best.mtry << " (log-loss "
              << pitr::format_double(selection.best.log_loss) << ")\n";
    if (report) {
      Json cells = Json::array();
      for (const pitr::CvCell& cell : selection.cells)
        cells.push_back(
            {{"trees", cell.n_trees}, {"mtry", cell.mtry}, {"log_loss", cell.log_loss}});
      (*report)["cv"] = {{"selected",
                          {{"trees", selection.best.n_trees},
                           {"mtry", selection.best.mtry},
                           {"log_loss", selection.best.log_loss}}},
                         {"cells", cells}};
    }
  }

  if (opts.method == "forest") {
    model = pitr::fit_full_pairs(data, loaded.config.score, forest, opts.pair_budget);
  } else if (opts.method == "bagged") {
    pitr::BaggingConfig bag;
    bag.b = opts.bags;
    bag.q = opts.q;
    bag.seed = pitr::derive_seed(opts.seed, "fit/bag");
    model = pitr::fit_bagged(data, loaded.config.score, bag, forest);
  } else {
    throw pitr::ValidationError("unknown method '" + opts.method + "'");
  }
  if (report) {
    (*report)["forest"] = {{"trees", forest.n_trees},     {"mtry", forest.mtry},
                           {"min_leaf", forest.min_leaf}, {"max_depth", forest.max_depth},
                           {"bootstrap", forest.bootstrap}};
    if (opts.method == "bagged") (*report)["bags"] = opts.bags;
  }
  return model;
}

int cmd_fit(const FitOpts& opts) {
  const auto start = std::chrono::steady_clock::now();
  const LoadedData loaded = load_dataset(opts.data, opts.config, opts.standardize, opts.method);
  Json report;
  report["method"] = opts.method;
  report["data"] = opts.data;
  report["m"] = loaded.data.m();
  report["n"] = loaded.data.n();
  report["covariate_dim"] = loaded.data.covariate_dim();
  report["seed"] = opts.seed;
  report["dropped_rows"] = loaded.report.dropped_rows.size();

  const pitr::ItrModel model = fit_model(opts, loaded, &report);
  model.save(opts.out);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  report["model_file"] = opts.out;
  report["elapsed_ms"] = elapsed;
  if (!opts.report.empty()) write_json_file(opts.report, report);
  std::cout << "fit " << opts.method << " on m=" << loaded.data.m() << " n=" << loaded.data.n()
            << " (d=" << loaded.data.covariate_dim() << "), wrote " << opts.out << "\n";
  return 0;
}

int cmd_predict(const PredictOpts& opts) {
  const pitr::ItrModel model = pitr::ItrModel::load(opts.model);
  const pitr::CsvTable input = pitr::read_csv(opts.data);

  const std::vector<pitr::ColumnEncoding>& columns = model.encoding().columns;
  std::vector<std::size_t> column_idx;
  for (const pitr::ColumnEncoding& col : columns) {
    const auto idx = input.column_index(col.name);
    if (!idx)
      throw pitr::ValidationError(opts.data + ": missing covariate column '" + col.name + "'");
    column_idx.push_back(*idx);
  }

  pitr::CsvTable output;
  output.header = input.header;
  output.header.push_back("ipb");
  output.header.push_back("recommended");
  std::size_t unseen = 0;
  std::vector<std::string> failures;
  std::vector<std::string> cells(columns.size());
  for (std::size_t r = 0; r < input.rows.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) cells[c] = input.rows[r][column_idx[c]];
    double ipb = 0.0;
    try {
      ipb = model.ipb(cells, &unseen);
    } catch (const pitr::ValidationError& e) {
      if (failures.size() < 10)
        failures.push_back("row " + std::to_string(r + 1) + ": " + e.what());
      else if (failures.size() == 10)
        failures.push_back("...");
      continue;
    }
    std::vector<std::string> row = input.rows[r];
    row.push_back(pitr::format_double(ipb));
    row.push_back(ipb > 0.0 ? "1" : "0");
    output.rows.push_back(std::move(row));
  }
  if (!failures.empty()) {
    std::string message = "predict: " + std::to_string(failures.size()) + " rows failed to encode:";
    for (const std::string& f : failures) message += "\n  " + f;
    throw pitr::ValidationError(message);
  }
  pitr::write_csv(opts.out, output);
  if (unseen > 0)
    std::cerr << "warning: " << unseen
              << " unseen category values mapped to the reference encoding\n";
  std::cout << "wrote " << output.rows.size() << " predictions to " << opts.out << "\n";
  return 0;
}

int cmd_evaluate_oracle(const EvaluateOpts& opts) {
  const pitr::CsvTable table = pitr::read_csv(opts.pred);
  const auto score_idx = table.column_index(opts.score_col);
  if (!score_idx)
    throw pitr::ValidationError(opts.pred + ": missing column '" + opts.score_col + "'");
  const auto oracle_idx = table.column_index(opts.oracle_col);
  if (!oracle_idx)
    throw pitr::ValidationError(opts.pred + ": missing column '" + opts.oracle_col + "'");

  std::vector<double> pred, oracle;
  std::vector<int> pred_rule, oracle_rule;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bool ok1 = false, ok2 = false;
    const double p = pitr::parse_double(table.rows[r][*score_idx], ok1);
    const double o = pitr::parse_double(table.rows[r][*oracle_idx], ok2);
    if (!ok1 || !ok2)
      throw pitr::ValidationError(opts.pred + ": row " + std::to_string(r + 1) +
                                  ": unparseable value");
    pred.push_back(p);
    oracle.push_back(o);
    pred_rule.push_back(p > 0.0 ? 1 : 0);
    oracle_rule.push_back(o > 0.0 ? 1 : 0);
  }
  if (pred.empty()) throw pitr::ValidationError(opts.pred + ": no rows to evaluate");

  const pitr::ClassificationMetrics cm = pitr::classification_metrics(pred_rule, pred, oracle_rule);
  double est_aipb = 0.0, oracle_aipb = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred_rule[i] == 1) est_aipb += pred[i];
    if (oracle_rule[i] == 1) oracle_aipb += oracle[i];
  }
  est_aipb /= static_cast<double>(pred.size());
  oracle_aipb /= static_cast<double>(pred.size());

  Json report;
  report["rows"] = pred.size();
  report["rmse_ipb"] = pitr::rmse_ipb(pred, oracle);
  report["aipb_r0_ropt_estimated"] = est_aipb;
  report["aipb_r0_ropt_oracle"] = oracle_aipb;
  report["aipb_bias"] = est_aipb - oracle_aipb;
  report["auc"] = optional_to_json(cm.auc);
  report["mcc"] = optional_to_json(cm.mcc);
  report["sensitivity"] = optional_to_json(cm.sensitivity);
  report["specificity"] = optional_to_json(cm.specificity);
  report["confusion"] = {{"oracle0", {cm.confusion.p[0][0], cm.confusion.p[0][1]}},
                         {"oracle1", {cm.confusion.p[1][0], cm.confusion.p[1][1]}}};
  if (!cm.auc) report["note"] = "oracle rule is single-class; AUC/MCC undefined";

  if (!opts.calibration_out.empty()) {
    const std::vector<pitr::CalibrationBin> curve =
        pitr::calibration_curve(pred, oracle, opts.bins);
    pitr::CsvTable cal;
    cal.header = {"bin_center", "mean_predicted", "mean_oracle", "count"};
    for (const pitr::CalibrationBin& bin : curve)
      cal.rows.push_back({pitr::format_double(bin.center), pitr::format_double(bin.mean_predicted),
                          pitr::format_double(bin.mean_oracle), std::to_string(bin.count)});
    pitr::write_csv(opts.calibration_out, cal);
  }
  if (!opts.out.empty()) write_json_file(opts.out, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_evaluate_crossfit(const EvaluateOpts& opts) {
  FitOpts fit_opts = opts.fit;
  fit_opts.seed = opts.seed;
  const LoadedData loaded =
      load_dataset(opts.data, opts.config, fit_opts.standardize, fit_opts.method);
  const pitr::ScoreSpec& spec = loaded.config.score;

  const auto make_fit_fn = [&](std::uint64_t fit_seed) {
    return [&, fit_seed](const pitr::TrialDataset& train) {
      FitOpts local = fit_opts;
      local.seed = fit_seed;
      LoadedData view;
      view.config = loaded.config;
      view.data = train;
      return fit_model(local, view, nullptr);
    };
  };

  // AIPB(r0, r1) by G-computation with cross-fitting; SE bootstraps the
  // whole cross-fit.
  const pitr::RuleSpec r0 = pitr::RuleSpec::constant0();
  const pitr::RuleSpec r1 = pitr::RuleSpec::constant1();
  const auto crossfit_stat = [&](const pitr::TrialDataset& d) {
    return pitr::aipb_crossfit(d, spec, r0, r1, opts.folds, make_fit_fn(opts.seed),
                               pitr::derive_seed(opts.seed, "crossfit"));
  };
  const pitr::BootstrapResult aipb_r0_r1 =
      pitr::bootstrap_se(loaded.data, crossfit_stat, opts.boot, opts.seed);

  // Rule learned on the full dataset, evaluated (not refit) per replicate:
  // the reported SEs are conditional on the training set.
  const pitr::ItrModel full_model = fit_model(fit_opts, loaded, nullptr);
  const pitr::RuleSpec ropt = pitr::RuleSpec::from_model(full_model);
  const auto fixed_rule_stat = [&](const pitr::RuleSpec& r) {
    return [&, r](const pitr::TrialDataset& d) {
      std::vector<double> ipb(d.pooled_size());
      for (std::size_t i = 0; i < d.pooled_size(); ++i)
        ipb[i] = full_model.ipb_encoded(d.pooled(i).covariates);
      return pitr::aipb_hat(d, r, ropt, ipb);
    };
  };
  const pitr::BootstrapResult aipb_r1_ropt = pitr::bootstrap_se(
      loaded.data, fixed_rule_stat(r1), opts.boot, pitr::derive_seed(opts.seed, "r1"));
  const pitr::BootstrapResult aipb_r0_ropt = pitr::bootstrap_se(
      loaded.data, fixed_rule_stat(r0), opts.boot, pitr::derive_seed(opts.seed, "r0"));

  Json report;
  report["folds"] = opts.folds;
  report["bootstrap_iterations"] = opts.boot;
  report["aipb_r0_r1"] = {{"estimate", aipb_r0_r1.estimate}, {"se", aipb_r0_r1.se}};
  report["aipb_r1_ropt"] = {{"estimate", aipb_r1_ropt.estimate},
                            {"se", aipb_r1_ropt.se},
                            {"se_conditional_on_training", true}};
  report["aipb_r0_ropt"] = {{"estimate", aipb_r0_ropt.estimate},
                            {"se", aipb_r0_ropt.se},
                            {"se_conditional_on_training", true}};
  if (!opts.out.empty()) write_json_file(opts.out, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_netbenefit(const NetBenefitOpts& opts) {
  const LoadedData loaded = load_dataset(opts.data, opts.config, -1, "netbenefit");
  const pitr::ScoreSpec& spec = loaded.config.score;
  const auto stat = [&](const pitr::TrialDataset& d) { return pitr::net_benefit(d, spec); };
  Json report;
  if (opts.boot >= 2) {
    const pitr::BootstrapResult res = pitr::bootstrap_se(loaded.data, stat, opts.boot, opts.seed);
    report["net_benefit"] = res.estimate;
    report["se"] = res.se;
    report["bootstrap_iterations"] = opts.boot;
    std::cout << "net benefit: " << pitr::format_double(res.estimate) << " (se "
              << pitr::format_double(res.se) << ", " << opts.boot << " bootstrap iterations)\n";
  } else {
    const double theta = stat(loaded.data);
    report["net_benefit"] = theta;
    std::cout << "net benefit: " << pitr::format_double(theta) << "\n";
  }
  if (!opts.out.empty()) write_json_file(opts.out, report);
  return 0;
}

Json summary_json(const pitr::MetricSummary& s) {
  return Json{{"mean", s.mean}, {"sd", s.sd}};
}

int cmd_benchmark(const BenchmarkOpts& opts) {
  pitr::BenchmarkConfig config;
  config.scenario = scenario_from_int(opts.scenario);
  config.train_sizes = opts.sizes;
  config.iterations = opts.iterations;
  config.eval_size = opts.eval;
  config.seed = opts.seed;
  config.delta = opts.delta;
  config.calibration_bins = opts.bins;
  config.pair_budget = opts.pair_budget;
  if (opts.method == "forest")
    config.method = pitr::BenchmarkMethod::full_pairs;
  else if (opts.method == "bagged")
    config.method = pitr::BenchmarkMethod::bagged;
  else if (opts.method == "knn")
    config.method = pitr::BenchmarkMethod::knn;
  else
    throw pitr::ValidationError("unknown method '" + opts.method + "'");
  config.forest = opts.forest.to_config(0);
  config.bag.b = opts.bags;
  config.bag.q = opts.q;
  config.knn.c = opts.knn_c;
  config.knn.e = opts.knn_e;

  const pitr::BenchmarkReport report = pitr::run_benchmark(config);

  fs::create_directories(opts.out);
  Json json;
  json["scenario"] = opts.scenario;
  json["method"] = opts.method;
  json["iterations"] = opts.iterations;
  json["eval_size"] = opts.eval;
  json["seed"] = opts.seed;
  json["oracle_aipb_r0_ropt"] = report.oracle_aipb;
  Json cells = Json::array();
  for (const pitr::BenchmarkCell& cell : report.cells) {
    Json c;
    c["train_size"] = cell.train_size;
    c["rmse_ipb"] = summary_json(cell.rmse);
    c["aipb_bias"] = summary_json(cell.aipb_bias);
    c["auc"] = summary_json(cell.auc);
    c["mcc"] = summary_json(cell.mcc);
    c["sensitivity"] = summary_json(cell.sensitivity);
    c["specificity"] = summary_json(cell.specificity);
    pitr::MetricSummary agreement;
    for (double v : cell.per_iteration_sign_agreement) agreement.mean += v;
    agreement.mean /= static_cast<double>(cell.per_iteration_sign_agreement.size());
    for (double v : cell.per_iteration_sign_agreement)
      agreement.sd += (v - agreement.mean) * (v - agreement.mean);
    agreement.sd = cell.per_iteration_sign_agreement.size() > 1
                       ? std::sqrt(agreement.sd /
                                   static_cast<double>(cell.per_iteration_sign_agreement.size() - 1))
                       : 0.0;
    c["sign_agreement"] = summary_json(agreement);
    Json confusion;
    confusion["oracle0"] = {summary_json(cell.confusion[0][0]), summary_json(cell.confusion[0][1])};
    confusion["oracle1"] = {summary_json(cell.confusion[1][0]), summary_json(cell.confusion[1][1])};
    c["confusion"] = confusion;
    cells.push_back(c);

    pitr::CsvTable cal;
    cal.header = {"bin_center", "mean_predicted", "mean_oracle", "count"};
    for (const pitr::CalibrationBin& bin : cell.calibration)
      cal.rows.push_back({pitr::format_double(bin.center), pitr::format_double(bin.mean_predicted),
                          pitr::format_double(bin.mean_oracle), std::to_string(bin.count)});
    pitr::write_csv(
        (fs::path(opts.out) / ("calibration_" + std::to_string(cell.train_size) + ".csv")).string(),
        cal);
  }
  json["cells"] = cells;
  write_json_file((fs::path(opts.out) / "report.json").string(), json);

  pitr::CsvTable table;
  table.header = {"metric"};
  for (const pitr::BenchmarkCell& cell : report.cells)
    table.header.push_back("size_" + std::to_string(cell.train_size));
  const auto add_row = [&](const std::string& name,
                           const std::function<std::string(const pitr::BenchmarkCell&)>& fmt) {
    std::vector<std::string> row{name};
    for (const pitr::BenchmarkCell& cell : report.cells) row.push_back(fmt(cell));
    table.rows.push_back(std::move(row));
  };
  add_row("rmse_ipb", [](const auto& c) { return mean_sd_cell(c.rmse); });
  add_row("aipb_bias", [](const auto& c) { return mean_sd_cell(c.aipb_bias); });
  add_row("auc", [](const auto& c) { return mean_sd_cell(c.auc); });
  add_row("mcc", [](const auto& c) { return mean_sd_cell(c.mcc); });
  add_row("sensitivity", [](const auto& c) { return mean_sd_cell(c.sensitivity); });
  add_row("specificity", [](const auto& c) { return mean_sd_cell(c.specificity); });
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      add_row("confusion_oracle" + std::to_string(a) + "_recommended" + std::to_string(b),
              [a, b](const auto& c) { return mean_sd_cell(c.confusion[a][b], 100.0) + "%"; });
  pitr::write_csv((fs::path(opts.out) / "report.csv").string(), table);

  std::cout << "oracle AIPB(r0, r_opt) on evaluation set: "
            << pitr::format_double(report.oracle_aipb) << "\n";
  std::cout << "metric";
  for (const pitr::BenchmarkCell& cell : report.cells) std::cout << "\tN=" << cell.train_size;
  std::cout << "\n";
  for (const std::vector<std::string>& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "\t" : "") << row[i];
    std::cout << "\n";
  }
  return 0;
}

void add_forest_flags(CLI::App* cmd, ForestFlags& flags) {
  cmd->add_option("--trees", flags.trees, "Number of trees");
  cmd->add_option("--mtry", flags.mtry, "Features sampled per split (0 = sqrt of feature count)");
  cmd->add_option("--min-leaf", flags.min_leaf, "Minimum samples per leaf");
  cmd->add_option("--max-depth", flags.max_depth, "Maximum tree depth (0 = unlimited)");
  cmd->add_flag("--no-bootstrap", flags.no_bootstrap, "Disable bootstrap resampling");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Individualized treatment rules for prioritized outcomes via pairwise comparisons"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic trial with oracles");
  simulate->add_option("--scenario", sim.scenario, "Scenario (1 or 2)")->required();
  simulate->add_option("--n", sim.n, "Training rows (split half/half into arms)")->required();
  simulate->add_option("--eval", sim.eval, "Evaluation rows (0 to skip)");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--delta", sim.delta, "Scenario-2 score threshold");

  FitOpts fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit an ITR model");
  fit_cmd->add_option("--data", fit.data, "Training CSV")->required();
  fit_cmd->add_option("--config", fit.config, "JSON config with score + schema")->required();
  fit_cmd->add_option("--method", fit.method, "knn | forest | bagged")
      ->check(CLI::IsMember({"knn", "forest", "bagged"}));
  fit_cmd->add_option("--out", fit.out, "Model file to write")->required();
  fit_cmd->add_option("--report", fit.report, "Fit report JSON path");
  fit_cmd->add_option("--seed", fit.seed, "Master seed");
  add_forest_flags(fit_cmd, fit.forest);
  fit_cmd->add_option("--bags", fit.bags, "Bag count for --method bagged");
  fit_cmd->add_option("--q", fit.q, "Subsampling probability (0 = min(m,n)^(-1/4))");
  fit_cmd->add_option("--knn-c", fit.knn_c, "Control-arm neighbor count (0 = default)");
  fit_cmd->add_option("--knn-e", fit.knn_e, "Experimental-arm neighbor count (0 = default)");
  fit_cmd->add_option("--metric", fit.metric, "knn metric: euclidean | max");
  fit_cmd->add_flag(
      "--standardize{1},--no-standardize{0}", fit.standardize,
      "Override covariate standardization (default: on for knn, off for trees)");
  fit_cmd->add_option("--pair-budget", fit.pair_budget, "Maximum m*n pair records");
  fit_cmd->add_option("--cv-grid", fit.cv_grid,
                      "Cross-validated grid, e.g. --cv-grid trees=100,200 mtry=4,8");
  fit_cmd->add_option("--cv-folds", fit.cv_folds, "Folds for --cv-grid");

  PredictOpts pred;
  CLI::App* predict = app.add_subcommand("predict", "Predict ipb and recommended treatment");
  predict->add_option("--model", pred.model, "Model file")->required();
  predict->add_option("--data", pred.data, "Covariate CSV")->required();
  predict->add_option("--out", pred.out, "Output CSV")->required();

  EvaluateOpts eval;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate predictions or run cross-fitting");
  evaluate->add_option("--pred", eval.pred, "Prediction CSV (oracle mode)");
  evaluate->add_option("--score-col", eval.score_col, "Predicted ipb column");
  evaluate->add_option("--oracle-col", eval.oracle_col, "Oracle ipb column");
  evaluate->add_option("--out", eval.out, "Report JSON path");
  evaluate->add_option("--calibration-out", eval.calibration_out, "Calibration CSV path");
  evaluate->add_option("--bins", eval.bins, "Calibration bins");
  evaluate->add_flag("--crossfit", eval.crossfit, "Cross-fitted AIPB mode (real data)");
  evaluate->add_option("--data", eval.data, "Trial CSV (crossfit mode)");
  evaluate->add_option("--config", eval.config, "JSON config (crossfit mode)");
  evaluate->add_option("--folds", eval.folds, "Cross-fitting folds");
  evaluate->add_option("--boot", eval.boot, "Bootstrap iterations");
  evaluate->add_option("--seed", eval.seed, "Master seed");
  evaluate->add_option("--method", eval.fit.method, "Model for crossfit: knn | forest | bagged")
      ->check(CLI::IsMember({"knn", "forest", "bagged"}));
  add_forest_flags(evaluate, eval.fit.forest);
  evaluate->add_option("--bags", eval.fit.bags, "Bag count");
  evaluate->add_option("--q", eval.fit.q, "Subsampling probability");

  NetBenefitOpts nb;
  CLI::App* netbenefit = app.add_subcommand("netbenefit", "Estimate the net benefit");
  netbenefit->add_option("--data", nb.data, "Trial CSV")->required();
  netbenefit->add_option("--config", nb.config, "JSON config")->required();
  netbenefit->add_option("--boot", nb.boot, "Bootstrap iterations (0/1 = point estimate only)");
  netbenefit->add_option("--seed", nb.seed, "Master seed");
  netbenefit->add_option("--out", nb.out, "Report JSON path");

  BenchmarkOpts bench;
  CLI::App* benchmark = app.add_subcommand("benchmark", "Monte Carlo simulation campaign");
  benchmark->add_option("--scenario", bench.scenario, "Scenario (1 or 2)")->required();
  benchmark->add_option("--sizes", bench.sizes, "Training sizes")->delimiter(',');
  benchmark->add_option("--iterations", bench.iterations, "Monte Carlo iterations per size");
  benchmark->add_option("--eval", bench.eval, "Evaluation population size");
  benchmark->add_option("--seed", bench.seed, "Master seed");
  benchmark->add_option("--method", bench.method, "forest | bagged | knn")
      ->check(CLI::IsMember({"forest", "bagged", "knn"}));
  benchmark->add_option("--out", bench.out, "Output directory")->required();
  add_forest_flags(benchmark, bench.forest);
  benchmark->add_option("--bags", bench.bags, "Bag count for --method bagged");
  benchmark->add_option("--q", bench.q, "Subsampling probability");
  benchmark->add_option("--knn-c", bench.knn_c, "knn neighbor count (control)");
  benchmark->add_option("--knn-e", bench.knn_e, "knn neighbor count (experimental)");
  benchmark->add_option("--bins", bench.bins, "Calibration bins");
  benchmark->add_option("--delta", bench.delta, "Scenario-2 score threshold");
  benchmark->add_option("--pair-budget", bench.pair_budget, "Maximum m*n pair records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (predict->parsed()) return cmd_predict(pred);
    if (evaluate->parsed()) {
      if (eval.crossfit) {
        if (eval.data.empty() || eval.config.empty())
          throw pitr::ValidationError("--crossfit needs --data and --config");
        return cmd_evaluate_crossfit(eval);
      }
      if (eval.pred.empty())
        throw pitr::ValidationError("evaluate needs --pred (oracle mode) or --crossfit");
      return cmd_evaluate_oracle(eval);
    }
    if (netbenefit->parsed()) return cmd_netbenefit(nb);
    if (benchmark->parsed()) return cmd_benchmark(bench);
  } catch (const pitr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pitr::ResourceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
