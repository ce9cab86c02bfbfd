#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aunn/commands.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config, "experiment configuration file");
  sub->add_option("--seed", flags.seed, "override experiment.seed");
  sub->add_option("--out", flags.out, "override paths.out (output directory)");
  sub->add_option("--data", flags.data, "override paths.data");
}

aunn::ExperimentConfig resolve(const CommonFlags& flags) {
  aunn::ExperimentConfig cfg =
      flags.config.empty() ? aunn::ExperimentConfig{} : aunn::load_config(flags.config);
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.out.empty()) cfg.out_path = flags.out;
  if (!flags.data.empty()) cfg.data_path = flags.data;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ANFIS unit network: feature extraction, training and experiments"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool corrupt = false;
  auto* features = app.add_subcommand("features", "raw trial directory -> features.csv");
  auto* train = app.add_subcommand("train", "features.csv -> model.txt and history.csv");
  auto* word = app.add_subcommand("word-experiment", "k-fold majority-vote word classification");
  auto* incremental =
      app.add_subcommand("incremental-experiment", "session-wise incremental training");
  auto* gradcheck = app.add_subcommand("gradcheck", "compare backprop with finite differences");
  for (auto* sub : {features, train, word, incremental, gradcheck}) add_common(sub, flags);
  gradcheck->add_flag("--corrupt-gradient", corrupt, "perturb analytic gradients (self test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return aunn::cli::ExitCode::usage_error;
  }

  try {
    const auto cfg = resolve(flags);
    aunn::cli::CommandOutput result;
    if (features->parsed()) {
      result = aunn::cli::run_features(cfg);
    } else if (train->parsed()) {
      result = aunn::cli::run_train(cfg);
    } else if (word->parsed()) {
      result = aunn::cli::run_word_experiment(cfg);
    } else if (incremental->parsed()) {
      result = aunn::cli::run_incremental_experiment(cfg);
    } else {
      result = aunn::cli::run_gradcheck(cfg, corrupt);
    }
    std::cout << result.message << "\n";
    for (const auto& f : result.files) std::cout << "  " << f << "\n";
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return aunn::cli::exit_code_for(e);
  }
}
