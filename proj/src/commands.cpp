#include "aunn/commands.hpp"

#include <filesystem>
#include <sstream>

namespace fs = std::filesystem;

namespace aunn::cli {

namespace {

std::string out_file(const ExperimentConfig& cfg, const char* name) {
  if (cfg.out_path.empty()) throw ConfigError("no output directory: set paths.out or --out");
  return (fs::path(cfg.out_path) / name).string();
}

void require_data(const ExperimentConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("no input data: set paths.data or --data");
}

void check_architecture(const ExperimentConfig& cfg, int n_classes) {
  if (cfg.architecture.back().n_units != n_classes) {
    throw ConfigError("last layer has " + std::to_string(cfg.architecture.back().n_units) +
                      " units but the data has " + std::to_string(n_classes) + " classes");
  }
}

std::string metrics_header() {
  std::string h;
  for (const char* n : eval::MetricsReport::names) h += std::string(",") + n;
  return h;
}

std::string metrics_row(const eval::MetricsReport& r) {
  std::string s;
  for (double v : r.values()) s += "," + io::format17(v);
  return s;
}

std::string stats_header() {
  std::string h;
  for (const char* n : eval::MetricsReport::names) {
    h += std::string(",") + n + "_mean," + n + "_std";
  }
  return h;
}

std::string stats_row(const eval::MetricStats& s) {
  std::string out;
  for (std::size_t m = 0; m < 6; ++m) {
    out += "," + io::format17(s.mean[m]) + "," + io::format17(s.std[m]);
  }
  return out;
}

}  // namespace

CommandOutput run_features(const ExperimentConfig& cfg) {
  require_data(cfg);
  const std::string target = out_file(cfg, kFeaturesFile);
  const auto trials = io::read_trial_directory(cfg.data_path);
  const auto table = io::build_feature_table(trials, cfg.window_s, cfg.step_s, cfg.features);
  std::ostringstream csv;
  io::write_feature_table(csv, table);
  io::atomic_write(target, csv.str());
  return {"wrote " + std::to_string(table.size()) + " segments x " +
              std::to_string(table.features.cols()) + " features from " +
              std::to_string(trials.size()) + " trials",
          {target}};
}

CommandOutput run_train(const ExperimentConfig& cfg) {
  require_data(cfg);
  const std::string model_path = out_file(cfg, kModelFile);
  const std::string history_path = out_file(cfg, kHistoryFile);
  const auto table = io::read_feature_table(cfg.data_path);
  const int n_classes = io::contiguous_class_count(table.labels);
  check_architecture(cfg, n_classes);

  const auto samples = io::as_samples(table);
  const auto spec = cfg.network_spec();
  auto net = init_network<double>(samples.dim(), spec.layers, spec.init, &samples.features);
  const auto tc = cfg.train_config();
  const auto history = train(net, samples, tc);
  const double final_acc = accuracy(net, samples);

  std::ostringstream model;
  io::write_model(model, net);
  std::ostringstream hist;
  hist << "epoch,learning_rate,loss,train_accuracy\n";
  std::size_t e = 0;
  for (const auto& stage : tc.schedule) {
    for (Index i = 0; i < stage.epochs; ++i, ++e) {
      hist << e << "," << io::format17(stage.learning_rate) << ","
           << io::format17(history[e].loss) << "," << io::format17(history[e].train_accuracy)
           << "\n";
    }
  }
  io::atomic_write(model_path, model.str());
  io::atomic_write(history_path, hist.str());
  return {"final train accuracy " + io::format17(final_acc), {model_path, history_path}};
}

CommandOutput run_word_experiment(const ExperimentConfig& cfg) {
  require_data(cfg);
  const std::string target = out_file(cfg, kWordFoldsFile);
  const auto table = io::read_feature_table(cfg.data_path);
  const int n_classes = io::contiguous_class_count(table.labels);
  check_architecture(cfg, n_classes);
  const auto instances = io::group_instances(table);
  const auto results =
      eval::word_experiment(instances, cfg.network_spec(), cfg.train_config(), cfg.folds, cfg.seed);

  std::vector<double> accs;
  std::size_t n_test = 0;
  std::ostringstream csv;
  csv << "fold,n_train,n_test,accuracy,accuracy_std\n";
  for (std::size_t f = 0; f < results.size(); ++f) {
    csv << f << "," << results[f].n_train << "," << results[f].n_test << ","
        << io::format17(results[f].accuracy) << ",0\n";
    accs.push_back(results[f].accuracy);
    n_test += results[f].n_test;
  }
  const auto [mean, sd] = eval::mean_std(accs);
  csv << "mean,," << n_test << "," << io::format17(mean) << "," << io::format17(sd) << "\n";
  io::atomic_write(target, csv.str());
  return {"mean majority-vote accuracy " + io::format17(mean) + " (std " + io::format17(sd) +
              ") over " + std::to_string(results.size()) + " folds",
          {target}};
}

CommandOutput run_incremental_experiment(const ExperimentConfig& cfg) {
  require_data(cfg);
  const std::string runs_path = out_file(cfg, kIncrementalRunsFile);
  const std::string summary_path = out_file(cfg, kIncrementalSummaryFile);
  const std::string ref_runs_path = out_file(cfg, kReferenceRunsFile);
  const std::string ref_summary_path = out_file(cfg, kReferenceSummaryFile);

  const auto table = io::read_feature_table(cfg.data_path);
  const int n_classes = io::contiguous_class_count(table.labels);
  check_architecture(cfg, n_classes);
  if (cfg.positive_class < 0 || cfg.positive_class >= n_classes) {
    throw ConfigError("positive_class outside the label range");
  }
  const auto sessions = io::group_sessions(table);
  const auto icfg = cfg.incremental_config();

  std::vector<eval::MetricsReport> reference;
  const auto summary = eval::repeat_experiment(
      [&](std::uint64_t seed) {
        const auto split = eval::session_split(sessions, seed);
        auto spec = cfg.network_spec();
        spec.init.seed = seed;
        reference.push_back(eval::full_dataset_reference(spec, split, icfg));
        return eval::incremental_train_eval(spec, split, icfg);
      },
      cfg.repeats, cfg.seed);

  std::ostringstream runs, sum, ref_runs, ref_sum;
  runs << "repeat,seed,session" << metrics_header() << "\n";
  for (std::size_t r = 0; r < summary.runs.size(); ++r) {
    for (std::size_t s = 0; s < summary.runs[r].size(); ++s) {
      runs << r << "," << (cfg.seed + r) << "," << sessions[s].session_id
           << metrics_row(summary.runs[r][s]) << "\n";
    }
  }
  sum << "session,n_repeats" << stats_header() << "\n";
  for (std::size_t s = 0; s < summary.sessions.size(); ++s) {
    sum << sessions[s].session_id << "," << summary.n_repeats << stats_row(summary.sessions[s])
        << "\n";
  }
  ref_runs << "repeat,seed" << metrics_header() << "\n";
  for (std::size_t r = 0; r < reference.size(); ++r) {
    ref_runs << r << "," << (cfg.seed + r) << metrics_row(reference[r]) << "\n";
  }
  const auto ref_summary = eval::repeat_experiment(
      [&](std::uint64_t seed) {
        return std::vector<eval::MetricsReport>{reference[seed - cfg.seed]};
      },
      reference.size(), cfg.seed);
  ref_sum << "session,n_repeats" << stats_header() << "\n"
          << "all," << ref_summary.n_repeats << stats_row(ref_summary.sessions.front()) << "\n";

  io::atomic_write(runs_path, runs.str());
  io::atomic_write(summary_path, sum.str());
  io::atomic_write(ref_runs_path, ref_runs.str());
  io::atomic_write(ref_summary_path, ref_sum.str());

  const auto& last = summary.sessions.back();
  return {std::to_string(sessions.size()) + " sessions x " + std::to_string(cfg.repeats) +
              " repeats; final-session test accuracy " + io::format17(last.mean[1]) +
              " (std " + io::format17(last.std[1]) + ")",
          {runs_path, summary_path, ref_runs_path, ref_summary_path}};
}

AuNetwork<double> gradcheck_network(std::uint64_t seed, Dataset<double>& batch) {
  Rng rng(seed);
  const Index n_inputs = 1 + static_cast<Index>(rng.below(3));
  const std::size_t n_layers = 1 + rng.below(2);
  const Index n_classes = 2 + static_cast<Index>(rng.below(2));
  std::vector<LayerSpec> specs;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Index units = l + 1 == n_layers ? n_classes : 1 + static_cast<Index>(rng.below(3));
    specs.push_back({units, 1 + static_cast<Index>(rng.below(3))});
  }
  InitConfig init;
  init.seed = seed;
  init.mf_span = MfSpan::fixed_unit_interval;
  init.consequent_scale = 1.0;
  auto net = init_network<double>(n_inputs, specs, init);

  // jitter MFs and biases so no batch point sits on a symmetric layout
  auto params = net.parameters();
  for (auto& layer : params) {
    for (auto& unit : layer) {
      for (Index j = 0; j < unit.n_rules(); ++j) {
        for (Index i = 0; i < unit.n_inputs(); ++i) {
          const double width = unit.hi(i, j) - unit.lo(i, j);
          unit.lo(i, j) += 0.1 * width * rng.uniform(-1.0, 1.0);
          unit.peak(i, j) += 0.1 * width * rng.uniform(-1.0, 1.0);
          unit.hi(i, j) += 0.1 * width * rng.uniform(-1.0, 1.0);
        }
        unit.bias(j) = rng.uniform(-0.5, 0.5);
      }
      unit.sort_triples();
    }
  }
  net.set_parameters(std::move(params));

  const Index n_batch = 1 + static_cast<Index>(rng.below(8));
  batch.features.resize(n_batch, n_inputs);
  batch.labels.resize(static_cast<std::size_t>(n_batch));
  for (Index s = 0; s < n_batch; ++s) {
    for (Index i = 0; i < n_inputs; ++i) batch.features(s, i) = rng.uniform();
    batch.labels[static_cast<std::size_t>(s)] = static_cast<int>(rng.below(n_classes));
  }
  return net;
}

GradcheckReport gradcheck(const ExperimentConfig& cfg, bool corrupt) {
  GradcheckReport report;
  GradientTamper<double> tamper;
  if (corrupt) {
    tamper = [](GradientSet<double>& g) {
      for (auto& layer : g)
        for (auto& unit : layer) unit.bias.array() += 0.01;
    };
  }
  for (std::size_t n = 0; n < cfg.gradcheck_networks; ++n) {
    Dataset<double> batch;
    const auto net = gradcheck_network(cfg.seed + n, batch);
    Index checked = 0;
    const double err =
        finite_diff_check(net, batch.features, batch.labels, cfg.gradcheck_step, tamper, &checked);
    report.errors.push_back(err);
    report.checked.push_back(checked);
    report.max_error = std::max(report.max_error, err);
  }
  report.passed = report.max_error < cfg.gradcheck_tolerance;
  return report;
}

CommandOutput run_gradcheck(const ExperimentConfig& cfg, bool corrupt) {
  const auto report = gradcheck(cfg, corrupt);
  std::ostringstream msg;
  msg << (report.passed ? "PASS" : "FAIL") << " max relative error " << io::format17(report.max_error)
      << " over " << report.errors.size() << " networks (tolerance "
      << io::format17(cfg.gradcheck_tolerance) << ")";
  return {msg.str(), {}, report.passed ? ExitCode::ok : ExitCode::acceptance_failure};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return ExitCode::usage_error;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return ExitCode::data_error;
  if (dynamic_cast<const ShapeError*>(&e) != nullptr) return ExitCode::data_error;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return ExitCode::data_error;
  return ExitCode::usage_error;
}

}  // namespace aunn::cli
