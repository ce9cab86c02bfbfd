#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <algorithm>
#include <vector>

#include "aunn/network.hpp"

namespace aunn {

/// Labelled samples, one per row of `features`.
template <typename Scalar>
struct Dataset {
  MatrixX<Scalar> features;
  std::vector<int> labels;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct ScheduleStage {
  double learning_rate = 0.001;
  Index epochs = 1;

  bool operator==(const ScheduleStage&) const = default;
};

struct TrainConfig {
  std::vector<ScheduleStage> schedule;
  /// 0 trains full batch; otherwise seeded shuffled minibatches of this size.
  Index minibatch_size = 0;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const {
    for (const auto& s : schedule) {
      if (!(s.learning_rate > 0.0) || !std::isfinite(s.learning_rate)) {
        throw ConfigError("learning rates must be positive");
      }
      if (s.epochs < 0) throw ConfigError("epoch counts must be non-negative");
    }
    if (minibatch_size < 0) throw ConfigError("minibatch size must be non-negative");
    if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0) || !(adam.beta2 > 0.0 && adam.beta2 < 1.0)) {
      throw ConfigError("Adam betas must lie in (0, 1)");
    }
    if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  }

  Index total_epochs() const {
    Index n = 0;
    for (const auto& s : schedule) n += s.epochs;
    return n;
  }

  bool operator==(const TrainConfig&) const = default;
};

template <typename Scalar>
struct AdamState {
  GradientSet<Scalar> first_moment;
  GradientSet<Scalar> second_moment;
  std::uint64_t step_count = 0;

  static AdamState for_params(const ParamSet<Scalar>& params) {
    return {zeros_like(params), zeros_like(params), 0};
  }
};

struct EpochRecord {
  double loss = 0.0;
  double train_accuracy = 0.0;
};

namespace detail {

template <typename Scalar>
void check_batch(const AuNetwork<Scalar>& net, const MatrixX<Scalar>& features,
                 const std::vector<int>& labels) {
  if (features.rows() == 0) throw DataError("batch is empty");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DataError("feature rows and labels differ in count");
  }
  if (features.cols() != net.input_dim()) {
    throw ShapeError("batch has " + std::to_string(features.cols()) +
                     " features, network expects " + std::to_string(net.input_dim()));
  }
  for (int y : labels) {
    if (y < 0 || y >= net.output_dim()) {
      throw DataError("label " + std::to_string(y) + " outside [0, " +
                      std::to_string(net.output_dim()) + ")");
    }
  }
}

/// Softmax cross-entropy of one output vector, computed with the log-sum-exp shift.
template <typename Scalar>
Scalar cross_entropy(const VectorX<Scalar>& z, int label) {
  const Scalar m = z.maxCoeff();
  const Scalar lse = m + std::log((z.array() - m).exp().sum());
  return lse - z(label);
}

template <typename Scalar>
VectorX<Scalar> softmax(const VectorX<Scalar>& z) {
  VectorX<Scalar> e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

/// Accumulates d(output)/d(params) * dy into `grad` and d(output)/dx * dy into `dx`.
template <typename Scalar>
void unit_backward(const AnfisUnit<Scalar>& unit, const VectorX<Scalar>& x, Scalar dy,
                   UnitParams<Scalar>& grad, VectorX<Scalar>& dx) {
  const auto& p = unit.params();
  const Index n = unit.n_inputs();
  const Index r = unit.n_rules();

  const MatrixX<Scalar> mu = membership_degrees(unit, x);
  const VectorX<Scalar> w = mu.colwise().prod().transpose();
  const Scalar total = w.sum();
  const VectorX<Scalar> nbar = normalize_firings(w);
  const VectorX<Scalar> f = p.weights * x + p.bias;
  const Scalar y = nbar.dot(f);

  grad.bias += dy * nbar;
  if (unit.order() == ConsequentOrder::first) {
    grad.weights += dy * nbar * x.transpose();
    dx += dy * (p.weights.transpose() * nbar);
  }

  // The uniform fallback for an all-zero firing vector is constant, so no
  // gradient reaches the MFs through it.
  if (!(total > Scalar(0))) return;

  const VectorX<Scalar> dw = dy * (f.array() - y).matrix() / total;
  VectorX<Scalar> prefix(n + 1), suffix(n + 1);
  for (Index j = 0; j < r; ++j) {
    if (dw(j) == Scalar(0)) continue;
    prefix(0) = Scalar(1);
    for (Index i = 0; i < n; ++i) prefix(i + 1) = prefix(i) * mu(i, j);
    suffix(n) = Scalar(1);
    for (Index i = n; i > 0; --i) suffix(i - 1) = suffix(i) * mu(i - 1, j);
    for (Index i = 0; i < n; ++i) {
      const Scalar others = prefix(i) * suffix(i + 1);
      if (others == Scalar(0)) continue;
      const Scalar dmu = dw(j) * others;
      const auto d = mf_partials(unit.mf(i, j), x(i));
      grad.lo(i, j) += dmu * d.d_a;
      grad.peak(i, j) += dmu * d.d_b;
      grad.hi(i, j) += dmu * d.d_c;
      dx(i) += dmu * d.d_x;
    }
  }
}

}  // namespace detail

/// Mean softmax cross-entropy of the last-layer outputs over the batch.
template <typename Scalar>
Scalar loss(const AuNetwork<Scalar>& net, const MatrixX<Scalar>& features,
            const std::vector<int>& labels) {
  detail::check_batch(net, features, labels);
  Scalar total(0);
  for (Index s = 0; s < features.rows(); ++s) {
    total += detail::cross_entropy<Scalar>(network_forward(net, features.row(s).transpose()),
                                           labels[static_cast<std::size_t>(s)]);
  }
  return total / Scalar(features.rows());
}

template <typename Scalar>
struct LossAndGradients {
  Scalar loss{0};
  Index correct = 0;  // argmax hits, for train accuracy
  GradientSet<Scalar> gradients;
};

/// Reverse-mode pass over the batch. Samples are reduced in row order.
template <typename Scalar>
LossAndGradients<Scalar> loss_and_gradients(const AuNetwork<Scalar>& net,
                                            const MatrixX<Scalar>& features,
                                            const std::vector<int>& labels) {
  detail::check_batch(net, features, labels);
  LossAndGradients<Scalar> out;
  out.gradients = zeros_like(net.parameters());
  const Scalar inv_n = Scalar(1) / Scalar(features.rows());

  for (Index s = 0; s < features.rows(); ++s) {
    const int label = labels[static_cast<std::size_t>(s)];
    const auto trace = forward_trace(net, features.row(s).transpose());
    const VectorX<Scalar>& z = trace.back();
    out.loss += detail::cross_entropy<Scalar>(z, label);
    if (argmax(z) == label) ++out.correct;

    VectorX<Scalar> upstream = detail::softmax<Scalar>(z);
    upstream(label) -= Scalar(1);
    upstream *= inv_n;
    for (std::size_t l = net.n_layers(); l-- > 0;) {
      const auto& layer = net.layer(l);
      VectorX<Scalar> dx = VectorX<Scalar>::Zero(trace[l].size());
      for (std::size_t k = 0; k < layer.size(); ++k) {
        detail::unit_backward(layer[k], trace[l], upstream(static_cast<Index>(k)),
                              out.gradients[l][k], dx);
      }
      upstream = std::move(dx);
    }
  }
  out.loss *= inv_n;
  return out;
}

template <typename Scalar>
GradientSet<Scalar> gradients(const AuNetwork<Scalar>& net, const MatrixX<Scalar>& features,
                              const std::vector<int>& labels) {
  return loss_and_gradients(net, features, labels).gradients;
}

/// Bias-corrected Adam update followed by re-sorting every MF triple.
template <typename Scalar>
void adam_step(ParamSet<Scalar>& params, const GradientSet<Scalar>& grads,
               AdamState<Scalar>& state, Scalar lr, const AdamConfig& cfg = {}) {
  auto congruent = [](const ParamSet<Scalar>& a, const ParamSet<Scalar>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t l = 0; l < a.size(); ++l) {
      if (a[l].size() != b[l].size()) return false;
      for (std::size_t k = 0; k < a[l].size(); ++k) {
        if (!a[l][k].same_shape(b[l][k])) return false;
      }
    }
    return true;
  };
  if (!congruent(params, grads) || !congruent(params, state.first_moment) ||
      !congruent(params, state.second_moment)) {
    throw ShapeError("Adam step on non-congruent parameter, gradient or moment sets");
  }

  ++state.step_count;
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  const Scalar t = static_cast<Scalar>(state.step_count);
  const Scalar c1 = Scalar(1) - std::pow(b1, t);
  const Scalar c2 = Scalar(1) - std::pow(b2, t);

  for (std::size_t l = 0; l < params.size(); ++l) {
    for (std::size_t k = 0; k < params[l].size(); ++k) {
      auto& p = params[l][k];
      auto& m = state.first_moment[l][k];
      auto& v = state.second_moment[l][k];
      const auto& g = grads[l][k];
      auto update = [&](auto& pb, const auto& gb, auto& mb, auto& vb) {
        mb = b1 * mb + (Scalar(1) - b1) * gb;
        vb = b2 * vb + (Scalar(1) - b2) * gb.cwiseProduct(gb);
        pb.array() -= lr * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
      };
      update(p.lo, g.lo, m.lo, v.lo);
      update(p.peak, g.peak, m.peak, v.peak);
      update(p.hi, g.hi, m.hi, v.hi);
      update(p.weights, g.weights, m.weights, v.weights);
      update(p.bias, g.bias, m.bias, v.bias);
      p.sort_triples();
    }
  }
}

/// Runs schedule stages against one persistent Adam state. Reusing a trainer
/// across calls continues the moment estimates.
template <typename Scalar>
class Trainer {
 public:
  explicit Trainer(TrainConfig config) : config_(std::move(config)), rng_(config_.seed) {
    config_.validate();
  }

  const TrainConfig& config() const { return config_; }
  const std::optional<AdamState<Scalar>>& state() const { return state_; }

  /// Every schedule stage in order.
  std::vector<EpochRecord> fit(AuNetwork<Scalar>& net, const Dataset<Scalar>& data) {
    std::vector<EpochRecord> history;
    history.reserve(static_cast<std::size_t>(config_.total_epochs()));
    for (const auto& stage : config_.schedule) {
      auto part = run_stage(net, data, stage.learning_rate, stage.epochs);
      history.insert(history.end(), part.begin(), part.end());
    }
    return history;
  }

  std::vector<EpochRecord> run_stage(AuNetwork<Scalar>& net, const Dataset<Scalar>& data,
                                     double learning_rate, Index epochs) {
    if (data.size() == 0) throw DataError("training set is empty");
    detail::check_batch(net, data.features, data.labels);
    std::vector<EpochRecord> history;
    if (epochs <= 0) return history;
    ParamSet<Scalar> params = net.parameters();
    if (!state_) state_ = AdamState<Scalar>::for_params(params);
    const Scalar lr = static_cast<Scalar>(learning_rate);

    for (Index e = 0; e < epochs; ++e) {
      if (config_.minibatch_size == 0 || config_.minibatch_size >= data.size()) {
        auto lg = loss_and_gradients(net, data.features, data.labels);
        adam_step(params, lg.gradients, *state_, lr, config_.adam);
        net.set_parameters(params);
        history.push_back({static_cast<double>(lg.loss),
                           static_cast<double>(lg.correct) / static_cast<double>(data.size())});
        continue;
      }
      std::vector<Index> order(static_cast<std::size_t>(data.size()));
      std::iota(order.begin(), order.end(), Index(0));
      rng_.shuffle(order);
      double loss_sum = 0.0;
      Index correct = 0;
      for (Index start = 0; start < data.size(); start += config_.minibatch_size) {
        const Index count = std::min(config_.minibatch_size, data.size() - start);
        MatrixX<Scalar> xb(count, data.dim());
        std::vector<int> yb(static_cast<std::size_t>(count));
        for (Index r = 0; r < count; ++r) {
          const Index src = order[static_cast<std::size_t>(start + r)];
          xb.row(r) = data.features.row(src);
          yb[static_cast<std::size_t>(r)] = data.labels[static_cast<std::size_t>(src)];
        }
        auto lg = loss_and_gradients(net, xb, yb);
        loss_sum += static_cast<double>(lg.loss) * static_cast<double>(count);
        correct += lg.correct;
        adam_step(params, lg.gradients, *state_, lr, config_.adam);
        net.set_parameters(params);
      }
      history.push_back({loss_sum / static_cast<double>(data.size()),
                         static_cast<double>(correct) / static_cast<double>(data.size())});
    }
    return history;
  }

 private:
  TrainConfig config_;
  Rng rng_;
  std::optional<AdamState<Scalar>> state_;
};

/// Trains in place through every schedule stage; Adam moments carry over
/// between stages. Returns one record per epoch, measured before that
/// epoch's update.
template <typename Scalar>
std::vector<EpochRecord> train(AuNetwork<Scalar>& net, const Dataset<Scalar>& data,
                               const TrainConfig& config) {
  if (data.size() == 0) throw DataError("training set is empty");
  Trainer<Scalar> trainer(config);
  return trainer.fit(net, data);
}

template <typename Scalar>
double accuracy(const AuNetwork<Scalar>& net, const Dataset<Scalar>& data) {
  if (data.size() == 0) return 0.0;
  Index hits = 0;
  for (Index s = 0; s < data.size(); ++s) {
    if (predict_class(net, data.features.row(s).transpose()) ==
        data.labels[static_cast<std::size_t>(s)]) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace detail {

/// Position of every layer input relative to its MFs, for every sample.
/// Two parameter settings with the same signature lie on the same smooth
/// piece of the loss.
template <typename Scalar>
std::vector<signed char> kink_signature(const AuNetwork<Scalar>& net,
                                        const MatrixX<Scalar>& features) {
  auto cmp = [](Scalar u, Scalar v) -> signed char { return u < v ? -1 : (u > v ? 1 : 0); };
  std::vector<signed char> sig;
  for (Index s = 0; s < features.rows(); ++s) {
    const auto trace = forward_trace(net, features.row(s).transpose());
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
      for (const auto& unit : net.layer(l)) {
        for (Index j = 0; j < unit.n_rules(); ++j) {
          for (Index i = 0; i < unit.n_inputs(); ++i) {
            const auto mf = unit.mf(i, j);
            const Scalar x = trace[l](i);
            sig.push_back(cmp(x, mf.a));
            sig.push_back(cmp(x, mf.b));
            sig.push_back(cmp(x, mf.c));
            sig.push_back(cmp(mf.a, mf.b));
            sig.push_back(cmp(mf.b, mf.c));
          }
        }
      }
    }
  }
  return sig;
}

/// Calls f(unit_params, block, flat_index) for every scalar parameter, in a fixed order.
template <typename Scalar, typename F>
void for_each_coefficient(ParamSet<Scalar>& params, F&& f) {
  for (auto& layer : params) {
    for (auto& unit : layer) {
      unit.for_each_block([&](auto& block) {
        for (Index c = 0; c < block.size(); ++c) f(block.data()[c]);
      });
    }
  }
}

}  // namespace detail

/// Optional mutation applied to analytic gradients before comparison; used
/// to confirm the checker actually rejects wrong gradients.
template <typename Scalar>
using GradientTamper = std::function<void(GradientSet<Scalar>&)>;

/// Relative difference between analytic and central-difference gradient for
/// every parameter, in parameter order. Coordinates within 2*step of an MF
/// kink are reported as -1. Denominator: max(|analytic|, |numeric|, 1e-8).
template <typename Scalar>
std::vector<Scalar> finite_diff_errors(const AuNetwork<Scalar>& net,
                                       const MatrixX<Scalar>& features,
                                       const std::vector<int>& labels, Scalar step,
                                       const GradientTamper<Scalar>& tamper = {}) {
  if (!(step > Scalar(0))) throw ConfigError("finite difference step must be positive");
  GradientSet<Scalar> analytic = gradients(net, features, labels);
  if (tamper) tamper(analytic);

  std::vector<Scalar> flat_grad;
  detail::for_each_coefficient<Scalar>(analytic, [&](Scalar& g) { flat_grad.push_back(g); });

  const ParamSet<Scalar> base = net.parameters();
  AuNetwork<Scalar> probe = net;
  const auto base_sig = detail::kink_signature(net, features);

  // Shifts that unsort a triple or touch a zero-order weight leave the
  // parameter domain and are skipped like kinks.
  auto eval_at = [&](std::size_t index, Scalar delta,
                     std::vector<signed char>* sig) -> std::optional<Scalar> {
    ParamSet<Scalar> shifted = base;
    std::size_t cursor = 0;
    detail::for_each_coefficient<Scalar>(shifted, [&](Scalar& v) {
      if (cursor++ == index) v += delta;
    });
    for (std::size_t l = 0; l < shifted.size(); ++l) {
      for (std::size_t k = 0; k < shifted[l].size(); ++k) {
        const auto& unit = shifted[l][k];
        if (!unit.triples_ordered()) return std::nullopt;
        if (net.layer(l)[k].order() == ConsequentOrder::zero && !unit.weights.isZero(0)) {
          return std::nullopt;
        }
      }
    }
    probe.set_parameters(shifted);
    if (sig != nullptr) *sig = detail::kink_signature(probe, features);
    return loss(probe, features, labels);
  };

  std::vector<Scalar> errors(flat_grad.size(), Scalar(-1));
  for (std::size_t idx = 0; idx < flat_grad.size(); ++idx) {
    std::vector<signed char> sig_lo, sig_hi;
    if (!eval_at(idx, -Scalar(2) * step, &sig_lo) || !eval_at(idx, Scalar(2) * step, &sig_hi)) {
      continue;
    }
    if (sig_lo != base_sig || sig_hi != base_sig) continue;
    const Scalar numeric =
        (*eval_at(idx, step, nullptr) - *eval_at(idx, -step, nullptr)) / (Scalar(2) * step);
    const Scalar a = flat_grad[idx];
    const Scalar denom = std::max({std::abs(a), std::abs(numeric), static_cast<Scalar>(1e-8)});
    errors[idx] = std::abs(a - numeric) / denom;
  }
  return errors;
}

/// Largest entry of finite_diff_errors; `checked` receives the number of
/// coordinates actually compared.
template <typename Scalar>
Scalar finite_diff_check(const AuNetwork<Scalar>& net, const MatrixX<Scalar>& features,
                         const std::vector<int>& labels, Scalar step,
                         const GradientTamper<Scalar>& tamper = {},
                         Index* checked = nullptr) {
  const auto errors = finite_diff_errors(net, features, labels, step, tamper);
  Scalar worst(0);
  Index n = 0;
  for (Scalar e : errors) {
    if (e < Scalar(0)) continue;
    worst = std::max(worst, e);
    ++n;
  }
  if (checked != nullptr) *checked = n;
  return worst;
}

}  // namespace aunn
