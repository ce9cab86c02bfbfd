#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aunn/eval.hpp"
#include "aunn/signal.hpp"

namespace aunn {

enum class Task { word_classification, incremental_iws_iss };

/// Everything a command needs. One top-level seed drives network init,
/// minibatch shuffling, fold assignment and repeat seeds.
struct ExperimentConfig {
  Task task = Task::word_classification;
  std::uint64_t seed = 0;

  // network
  std::vector<LayerSpec> architecture{{5, 70}};
  MfSpan mf_span = MfSpan::data_range;
  ConsequentOrder consequent_order = ConsequentOrder::first;
  double consequent_scale = 0.1;

  // training
  std::vector<ScheduleStage> schedule{{0.03, 500}, {0.01, 500}, {0.003, 500}};
  Index minibatch_size = 0;
  AdamConfig adam;

  // signal
  double window_s = 0.5;
  double step_s = 0.1;
  signal::FeatureOptions features;

  // word experiment
  int folds = 5;

  // incremental experiment
  double session_learning_rate = 0.001;
  Index epochs_per_session = 300;
  Index reference_epochs = 1200;
  std::size_t repeats = 10;
  eval::Replay replay = eval::Replay::none;
  int positive_class = 1;

  // gradcheck
  std::size_t gradcheck_networks = 20;
  double gradcheck_step = 1e-5;
  double gradcheck_tolerance = 1e-4;

  // paths
  std::string data_path;
  std::string out_path;

  /// Word-classification preset: 1 layer of 5 units, 70 MFs,
  /// schedule 0.03 / 0.01 / 0.003 with 500 epochs each.
  static ExperimentConfig word_preset();
  /// IWS vs ISS preset: 10 hidden units then 2 output units, 3 MFs,
  /// lr 0.001, 300 epochs per session, 1200 for the pooled reference.
  static ExperimentConfig incremental_preset();

  eval::NetworkSpec network_spec() const;
  TrainConfig train_config() const;
  eval::IncrementalConfig incremental_config() const;

  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses `[section]` headers and `key = value` lines; `#` starts a comment.
/// Keys missing from the text keep the preset of the configured task.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

std::string to_string(Task task);
std::string format_double(double v);

}  // namespace aunn
