#pragma once

#include <string>
#include <vector>

#include "aunn/config.hpp"
#include "aunn/io.hpp"

namespace aunn::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, acceptance_failure = 3 };

/// What a command wrote and what it prints.
struct CommandOutput {
  std::string message;
  std::vector<std::string> files;
  int exit_code = ExitCode::ok;
};

// Output file names inside the --out directory.
inline constexpr const char* kFeaturesFile = "features.csv";
inline constexpr const char* kModelFile = "model.txt";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kWordFoldsFile = "word_folds.csv";
inline constexpr const char* kIncrementalRunsFile = "incremental_runs.csv";
inline constexpr const char* kIncrementalSummaryFile = "incremental_summary.csv";
inline constexpr const char* kReferenceRunsFile = "reference_runs.csv";
inline constexpr const char* kReferenceSummaryFile = "reference_summary.csv";

/// Raw trial directory (data_path) -> features.csv.
CommandOutput run_features(const ExperimentConfig& cfg);
/// features.csv -> model.txt + history.csv.
CommandOutput run_train(const ExperimentConfig& cfg);
/// features.csv grouped by instance -> word_folds.csv.
CommandOutput run_word_experiment(const ExperimentConfig& cfg);
/// Session-tagged features.csv -> per-session trajectories and summaries for
/// the incremental model and the pooled reference.
CommandOutput run_incremental_experiment(const ExperimentConfig& cfg);

struct GradcheckReport {
  std::vector<double> errors;  // one per network
  std::vector<Index> checked;  // coordinates compared per network
  double max_error = 0.0;
  bool passed = false;
};

/// Random network for gradient checking: 1-3 inputs, 1-2 layers, 1-3 MFs,
/// 2-3 classes, batch of 1-8 samples in [0, 1]^d.
AuNetwork<double> gradcheck_network(std::uint64_t seed, Dataset<double>& batch);

/// `corrupt` adds 0.01 to every bias gradient before comparison.
GradcheckReport gradcheck(const ExperimentConfig& cfg, bool corrupt = false);
CommandOutput run_gradcheck(const ExperimentConfig& cfg, bool corrupt = false);

/// Maps an exception from a command to its process exit code.
int exit_code_for(const std::exception& e);

}  // namespace aunn::cli
