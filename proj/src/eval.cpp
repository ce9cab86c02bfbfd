#include "aunn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aunn::eval {

int majority_vote(std::span<const int> predictions) {
  if (predictions.empty()) throw DataError("majority vote over an empty prediction set");
  const int top = *std::max_element(predictions.begin(), predictions.end());
  if (*std::min_element(predictions.begin(), predictions.end()) < 0) {
    throw DataError("negative class index in predictions");
  }
  std::vector<std::size_t> votes(static_cast<std::size_t>(top) + 1, 0);
  for (int p : predictions) ++votes[static_cast<std::size_t>(p)];
  // max_element returns the first maximum, i.e. the lowest tied class
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<int> predict_all(const Network& net, const Eigen::MatrixXd& features) {
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Index r = 0; r < features.rows(); ++r) {
    out[static_cast<std::size_t>(r)] =
        static_cast<int>(predict_class(net, features.row(r).transpose()));
  }
  return out;
}

int majority_vote_predict(const Network& net, const SegmentSetInstance& instance) {
  if (instance.features.rows() == 0) {
    throw DataError("instance " + instance.instance_id + " has no segments");
  }
  return majority_vote(predict_all(net, instance.features));
}

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual,
                          int positive_class) {
  if (predicted.size() != actual.size()) {
    throw DataError("predicted and actual label counts differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool pred_pos = predicted[i] == positive_class;
    const bool real_pos = actual[i] == positive_class;
    if (real_pos) {
      pred_pos ? ++c.tp : ++c.fn;
    } else {
      pred_pos ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

BinaryMetrics metrics_from_counts(const ConfusionCounts& c) {
  BinaryMetrics m;
  const auto tp = static_cast<double>(c.tp), fn = static_cast<double>(c.fn);
  const auto tn = static_cast<double>(c.tn), fp = static_cast<double>(c.fp);
  m.accuracy = ratio(tp + tn, static_cast<double>(c.total()));
  m.precision = ratio(tp, tp + fp);
  m.sensitivity = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  m.f1 = ratio(2.0 * m.precision * m.sensitivity, m.precision + m.sensitivity);
  m.balanced = (m.sensitivity + m.specificity) / 2.0;
  return m;
}

BinaryMetrics compute_metrics(std::span<const int> predicted, std::span<const int> actual,
                              int positive_class) {
  if (predicted.empty()) throw DataError("metrics over an empty label set");
  return metrics_from_counts(confusion(predicted, actual, positive_class));
}

MetricsReport evaluate(const Network& net, const Samples& train, const Samples& test,
                       int positive_class) {
  MetricsReport r;
  r.train_accuracy = accuracy(net, train);
  const auto predicted = predict_all(net, test.features);
  const auto m = compute_metrics(predicted, test.labels, positive_class);
  r.test_accuracy = m.accuracy;
  r.f1 = m.f1;
  r.sensitivity = m.sensitivity;
  r.specificity = m.specificity;
  r.balanced = m.balanced;
  return r;
}

std::vector<Fold> kfold_split(std::size_t n_instances, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold split needs k >= 2");
  if (n_instances < static_cast<std::size_t>(k)) {
    throw DataError(std::to_string(n_instances) + " instances cannot fill " + std::to_string(k) +
                    " folds");
  }
  std::vector<std::size_t> order(n_instances);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t base = n_instances / kk;
  const std::size_t extra = n_instances % kk;
  std::vector<Fold> folds(kk);
  std::size_t start = 0;
  for (std::size_t f = 0; f < kk; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < n_instances; ++i) {
      (i >= start && i < start + len ? folds[f].test : folds[f].train).push_back(order[i]);
    }
    start += len;
  }
  return folds;
}

Samples concat(std::span<const Samples* const> parts) {
  Index rows = 0;
  Index cols = -1;
  for (const Samples* p : parts) {
    if (p->size() == 0) continue;
    if (cols >= 0 && p->dim() != cols) throw ShapeError("sample sets differ in feature count");
    cols = p->dim();
    rows += p->size();
  }
  Samples out;
  out.features.resize(rows, std::max<Index>(cols, 0));
  Index at = 0;
  for (const Samples* p : parts) {
    if (p->size() == 0) continue;
    out.features.middleRows(at, p->size()) = p->features;
    out.labels.insert(out.labels.end(), p->labels.begin(), p->labels.end());
    at += p->size();
  }
  return out;
}

Samples flatten(std::span<const SegmentSetInstance> instances) {
  std::vector<Samples> parts;
  parts.reserve(instances.size());
  for (const auto& inst : instances) {
    parts.push_back({inst.features,
                     std::vector<int>(static_cast<std::size_t>(inst.features.rows()), inst.label)});
  }
  std::vector<const Samples*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  return concat(ptrs);
}

Samples SessionDataset::pooled_train() const {
  std::vector<const Samples*> ptrs;
  for (const auto& s : sessions) ptrs.push_back(&s.samples);
  return concat(ptrs);
}

SessionDataset session_split(const std::vector<Session>& sessions, std::uint64_t seed) {
  if (sessions.empty()) throw DataError("no sessions to split");
  Rng rng(seed);
  SessionDataset out;
  std::vector<const Samples*> test_parts;
  for (const auto& session : sessions) {
    if (session.trials.size() < 2) {
      throw DataError("session " + session.session_id + " has fewer than 2 trials");
    }
    std::vector<std::size_t> order(session.trials.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const std::size_t n_train = session.trials.size() / 2;

    // restore recording order within each side
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    TrainSession ts;
    ts.session_id = session.session_id;
    std::vector<const Samples*> parts;
    for (std::size_t i : train_idx) {
      ts.trial_ids.push_back(session.trials[i].trial_id);
      parts.push_back(&session.trials[i].samples);
    }
    ts.samples = concat(parts);
    out.sessions.push_back(std::move(ts));
    for (std::size_t i : test_idx) {
      out.test_trial_ids.push_back(session.trials[i].trial_id);
      test_parts.push_back(&session.trials[i].samples);
    }
  }
  out.test_set = concat(test_parts);
  return out;
}

namespace {

TrainConfig single_stage(const IncrementalConfig& cfg, Index epochs, std::uint64_t seed) {
  TrainConfig tc;
  tc.schedule = {{cfg.learning_rate, epochs}};
  tc.minibatch_size = cfg.minibatch_size;
  tc.adam = cfg.adam;
  tc.seed = seed;
  return tc;
}

}  // namespace

std::vector<MetricsReport> incremental_train_eval(const NetworkSpec& spec,
                                                  const SessionDataset& data,
                                                  const IncrementalConfig& cfg) {
  if (data.sessions.empty()) throw DataError("incremental run needs at least one session");
  for (const auto& s : data.sessions) {
    if (s.samples.size() == 0) throw DataError("session " + s.session_id + " is empty");
  }
  if (data.test_set.size() == 0) throw DataError("test set is empty");

  // MF spans come from the first session's data.
  const auto& first = data.sessions.front().samples;
  Network net = init_network<double>(first.dim(), spec.layers, spec.init, &first.features);
  Trainer<double> trainer(single_stage(cfg, cfg.epochs_per_session, spec.init.seed));

  std::vector<MetricsReport> reports;
  std::vector<const Samples*> seen;
  for (const auto& session : data.sessions) {
    seen.push_back(&session.samples);
    const Samples seen_so_far = concat(seen);
    const Samples& fit_on = cfg.replay == Replay::cumulative ? seen_so_far : session.samples;
    trainer.run_stage(net, fit_on, cfg.learning_rate, cfg.epochs_per_session);
    reports.push_back(evaluate(net, seen_so_far, data.test_set, cfg.positive_class));
  }
  return reports;
}

MetricsReport full_dataset_reference(const NetworkSpec& spec, const SessionDataset& data,
                                     const IncrementalConfig& cfg) {
  const Samples pooled = data.pooled_train();
  if (pooled.size() == 0) throw DataError("training set is empty");
  if (data.test_set.size() == 0) throw DataError("test set is empty");
  Network net = init_network<double>(pooled.dim(), spec.layers, spec.init, &pooled.features);
  Trainer<double> trainer(single_stage(cfg, cfg.reference_epochs, spec.init.seed));
  trainer.run_stage(net, pooled, cfg.learning_rate, cfg.reference_epochs);
  return evaluate(net, pooled, data.test_set, cfg.positive_class);
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

RunSummary repeat_experiment(const Experiment& experiment, std::size_t n_repeats,
                             std::uint64_t base_seed) {
  if (n_repeats == 0) throw ConfigError("repeat count must be at least 1");
  RunSummary summary;
  summary.n_repeats = n_repeats;
  for (std::size_t r = 0; r < n_repeats; ++r) {
    summary.runs.push_back(experiment(base_seed + r));
    if (summary.runs.back().size() != summary.runs.front().size()) {
      throw DataError("repeats produced different session counts");
    }
  }
  const std::size_t n_sessions = summary.runs.front().size();
  summary.sessions.resize(n_sessions);
  for (std::size_t s = 0; s < n_sessions; ++s) {
    for (std::size_t m = 0; m < 6; ++m) {
      std::vector<double> column;
      for (const auto& run : summary.runs) column.push_back(run[s].values()[m]);
      const auto [mean, sd] = mean_std(column);
      summary.sessions[s].mean[m] = mean;
      summary.sessions[s].std[m] = sd;
    }
  }
  return summary;
}

std::vector<FoldResult> word_experiment(std::span<const SegmentSetInstance> instances,
                                        const NetworkSpec& spec, const TrainConfig& train_cfg,
                                        int k, std::uint64_t seed) {
  for (const auto& inst : instances) {
    if (inst.features.rows() == 0) throw DataError("instance " + inst.instance_id + " is empty");
  }
  const auto folds = kfold_split(instances.size(), k, seed);
  std::vector<FoldResult> results;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<SegmentSetInstance> train_set;
    for (std::size_t i : folds[f].train) train_set.push_back(instances[i]);
    const Samples train = flatten(train_set);

    InitConfig init = spec.init;
    init.seed = spec.init.seed + f;
    Network net = init_network<double>(train.dim(), spec.layers, init, &train.features);
    TrainConfig tc = train_cfg;
    tc.seed = train_cfg.seed + f;
    aunn::train(net, train, tc);

    std::size_t hits = 0;
    for (std::size_t i : folds[f].test) {
      if (majority_vote_predict(net, instances[i]) == instances[i].label) ++hits;
    }
    results.push_back({folds[f].train.size(), folds[f].test.size(),
                       static_cast<double>(hits) / static_cast<double>(folds[f].test.size())});
  }
  return results;
}

}  // namespace aunn::eval
