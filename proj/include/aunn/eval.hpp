#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aunn/training.hpp"

namespace aunn::eval {

using Network = AuNetwork<double>;
using Samples = Dataset<double>;

/// A word (or trial) decomposed into overlapped segments; one feature row per segment.
struct SegmentSetInstance {
  std::string instance_id;
  int label = 0;
  Eigen::MatrixXd features;
};

/// Modal class of the predictions; ties go to the lowest class index.
int majority_vote(std::span<const int> predictions);

int majority_vote_predict(const Network& net, const SegmentSetInstance& instance);

struct ConfusionCounts {
  Index tp = 0;
  Index fn = 0;
  Index tn = 0;
  Index fp = 0;

  Index total() const { return tp + fn + tn + fp; }
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual,
                          int positive_class);

/// One-vs-rest scores around `positive_class`. Any 0/0 ratio is 0.
struct BinaryMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double balanced = 0.0;
};

BinaryMetrics metrics_from_counts(const ConfusionCounts& c);
BinaryMetrics compute_metrics(std::span<const int> predicted, std::span<const int> actual,
                              int positive_class);

/// The six quantities tracked after every evaluation.
struct MetricsReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double f1 = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double balanced = 0.0;

  static constexpr std::array<const char*, 6> names{
      "train_accuracy", "test_accuracy", "f1", "sensitivity", "specificity", "balanced"};

  std::array<double, 6> values() const {
    return {train_accuracy, test_accuracy, f1, sensitivity, specificity, balanced};
  }
  bool operator==(const MetricsReport&) const = default;
};

std::vector<int> predict_all(const Network& net, const Eigen::MatrixXd& features);

MetricsReport evaluate(const Network& net, const Samples& train, const Samples& test,
                       int positive_class);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffles instance indices with `seed` and cuts them into k near-equal test
/// folds; the first n % k folds get one extra instance.
std::vector<Fold> kfold_split(std::size_t n_instances, int k, std::uint64_t seed);

/// Stacks rows and labels of several sample sets, in order.
Samples concat(std::span<const Samples* const> parts);
Samples flatten(std::span<const SegmentSetInstance> instances);

struct Trial {
  std::string trial_id;
  Samples samples;
};

struct Session {
  std::string session_id;
  std::vector<Trial> trials;
};

struct TrainSession {
  std::string session_id;
  std::vector<std::string> trial_ids;
  Samples samples;
};

struct SessionDataset {
  std::vector<TrainSession> sessions;
  std::vector<std::string> test_trial_ids;
  Samples test_set;

  Samples pooled_train() const;
};

/// Per session, floor(n/2) shuffled trials stay in that session's training
/// set; the rest are pooled into one test set shared by all sessions.
SessionDataset session_split(const std::vector<Session>& sessions, std::uint64_t seed);

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  InitConfig init;
};

/// Which samples a session trains on: only its own, or everything seen so far.
enum class Replay { none, cumulative };

struct IncrementalConfig {
  double learning_rate = 0.001;
  Index epochs_per_session = 300;
  Index reference_epochs = 1200;
  Replay replay = Replay::none;
  int positive_class = 1;
  Index minibatch_size = 0;
  AdamConfig adam;
};

/// One network trained session by session on the same parameters and Adam
/// state. After each session: test metrics on the shared test set, train
/// accuracy on the union of sessions seen so far.
std::vector<MetricsReport> incremental_train_eval(const NetworkSpec& spec,
                                                  const SessionDataset& data,
                                                  const IncrementalConfig& cfg);

/// Fresh network trained on all sessions at once for cfg.reference_epochs.
MetricsReport full_dataset_reference(const NetworkSpec& spec, const SessionDataset& data,
                                     const IncrementalConfig& cfg);

struct MetricStats {
  std::array<double, 6> mean{};
  std::array<double, 6> std{};
};

/// Mean and population standard deviation per session and metric.
struct RunSummary {
  std::size_t n_repeats = 0;
  std::vector<std::vector<MetricsReport>> runs;
  std::vector<MetricStats> sessions;
};

using Experiment = std::function<std::vector<MetricsReport>(std::uint64_t seed)>;

/// Runs the experiment with seeds base_seed .. base_seed + n - 1.
RunSummary repeat_experiment(const Experiment& experiment, std::size_t n_repeats,
                             std::uint64_t base_seed);

/// Population mean and standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

struct FoldResult {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
};

/// k-fold majority-vote classification over segment-set instances. Each fold
/// trains a fresh network (init seed = spec seed + fold).
std::vector<FoldResult> word_experiment(std::span<const SegmentSetInstance> instances,
                                        const NetworkSpec& spec, const TrainConfig& train_cfg,
                                        int k, std::uint64_t seed);

}  // namespace aunn::eval
