#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aunn/fuzzy.hpp"
#include "aunn/random.hpp"

namespace aunn {

struct LayerSpec {
  Index n_units = 1;
  Index n_mfs = 1;

  bool operator==(const LayerSpec&) const = default;
};

/// Where layer-0 MF peaks are spread: the observed per-feature range of the
/// training data, or the fixed interval [0, 1].
enum class MfSpan { data_range, fixed_unit_interval };

struct InitConfig {
  std::uint64_t seed = 0;
  MfSpan mf_span = MfSpan::data_range;
  double consequent_scale = 0.1;
  ConsequentOrder order = ConsequentOrder::first;

  bool operator==(const InitConfig&) const = default;
};

/// Parameters of a whole network, [layer][unit]. Gradients and Adam moments
/// share this layout.
template <typename Scalar>
using ParamSet = std::vector<std::vector<UnitParams<Scalar>>>;
template <typename Scalar>
using GradientSet = ParamSet<Scalar>;

/// Fully connected stack of ANFIS units. Each layer's outputs feed every unit
/// of the next layer unchanged.
template <typename Scalar>
class AuNetwork {
 public:
  using Layer = std::vector<AnfisUnit<Scalar>>;

  AuNetwork(Index input_dim, std::vector<Layer> layers)
      : input_dim_(input_dim), layers_(std::move(layers)) {
    if (input_dim_ <= 0) throw ConfigError("network input dimension must be positive");
    if (layers_.empty()) throw ConfigError("network needs at least one layer");
    Index width = input_dim_;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].empty()) throw ConfigError("layer " + std::to_string(l) + " has no units");
      for (const auto& unit : layers_[l]) {
        if (unit.n_inputs() != width) {
          throw ShapeError("layer " + std::to_string(l) + " unit expects " +
                           std::to_string(unit.n_inputs()) + " inputs but receives " +
                           std::to_string(width));
        }
      }
      width = static_cast<Index>(layers_[l].size());
    }
  }

  Index input_dim() const { return input_dim_; }
  Index output_dim() const { return static_cast<Index>(layers_.back().size()); }
  std::size_t n_layers() const { return layers_.size(); }
  const Layer& layer(std::size_t l) const { return layers_.at(l); }
  const std::vector<Layer>& layers() const { return layers_; }

  std::vector<LayerSpec> specs() const {
    std::vector<LayerSpec> out;
    for (const auto& layer : layers_) {
      out.push_back({static_cast<Index>(layer.size()), layer.front().n_rules()});
    }
    return out;
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& layer : layers_)
      for (const auto& unit : layer) n += unit.params().size();
    return n;
  }

  ParamSet<Scalar> parameters() const {
    ParamSet<Scalar> out(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      for (const auto& unit : layers_[l]) out[l].push_back(unit.params());
    }
    return out;
  }

  void set_parameters(ParamSet<Scalar> params) {
    if (params.size() != layers_.size()) throw ShapeError("parameter set layer count mismatch");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (params[l].size() != layers_[l].size()) {
        throw ShapeError("parameter set unit count mismatch in layer " + std::to_string(l));
      }
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      for (std::size_t k = 0; k < layers_[l].size(); ++k) {
        layers_[l][k].set_params(std::move(params[l][k]));
      }
    }
  }

 private:
  Index input_dim_;
  std::vector<Layer> layers_;
};

template <typename Scalar>
ParamSet<Scalar> zeros_like(const ParamSet<Scalar>& p) {
  ParamSet<Scalar> out(p.size());
  for (std::size_t l = 0; l < p.size(); ++l) {
    for (const auto& u : p[l]) out[l].push_back(UnitParams<Scalar>::zeros(u.n_inputs(), u.n_rules()));
  }
  return out;
}

namespace detail {

/// MF bank for one input: peaks evenly spaced over [lo, hi], feet at the
/// neighbouring peaks, outermost feet one spacing beyond the end peaks.
template <typename Scalar>
std::vector<TriangularMF<Scalar>> spread_mfs(Scalar lo, Scalar hi, Index n) {
  if (!(hi > lo)) {
    lo -= Scalar(0.5);
    hi += Scalar(0.5);
  }
  std::vector<TriangularMF<Scalar>> out(static_cast<std::size_t>(n));
  if (n == 1) {
    const Scalar mid = (lo + hi) / Scalar(2);
    const Scalar span = hi - lo;
    out[0] = {mid - span, mid, mid + span};
    return out;
  }
  const Scalar spacing = (hi - lo) / Scalar(n - 1);
  std::vector<Scalar> peaks(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) peaks[j] = (j == n - 1) ? hi : lo + spacing * Scalar(j);
  for (Index j = 0; j < n; ++j) {
    const Scalar a = j == 0 ? peaks[0] - spacing : peaks[j - 1];
    const Scalar c = j == n - 1 ? peaks[j] + spacing : peaks[j + 1];
    out[j] = {a, peaks[j], c};
  }
  return out;
}

}  // namespace detail

/// Builds a network with evenly spread MFs and random consequents.
///
/// `training_data` holds one sample per row and is required when the layer-0
/// span comes from the data. Hidden layers always use [-1, 1].
template <typename Scalar>
AuNetwork<Scalar> init_network(Index input_dim, const std::vector<LayerSpec>& specs,
                               const InitConfig& init,
                               const MatrixX<Scalar>* training_data = nullptr) {
  if (specs.empty()) throw ConfigError("layer specification list is empty");
  for (const auto& s : specs) {
    if (s.n_units <= 0 || s.n_mfs <= 0) {
      throw ConfigError("layer specs need positive unit and MF counts");
    }
  }
  if (input_dim <= 0) throw ConfigError("network input dimension must be positive");
  if (!(init.consequent_scale >= 0.0) || !std::isfinite(init.consequent_scale)) {
    throw ConfigError("consequent scale must be finite and non-negative");
  }

  VectorX<Scalar> lo = VectorX<Scalar>::Zero(input_dim);
  VectorX<Scalar> hi = VectorX<Scalar>::Ones(input_dim);
  if (init.mf_span == MfSpan::data_range) {
    if (training_data == nullptr || training_data->rows() == 0) {
      throw ConfigError("data-range MF initialization needs training data");
    }
    if (training_data->cols() != input_dim) {
      throw ShapeError("training data has " + std::to_string(training_data->cols()) +
                       " columns, expected " + std::to_string(input_dim));
    }
    lo = training_data->colwise().minCoeff().transpose();
    hi = training_data->colwise().maxCoeff().transpose();
  }

  Rng rng(init.seed);
  const Scalar scale = static_cast<Scalar>(init.consequent_scale);
  std::vector<typename AuNetwork<Scalar>::Layer> layers;
  Index width = input_dim;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const LayerSpec& spec = specs[l];
    UnitParams<Scalar> base = UnitParams<Scalar>::zeros(width, spec.n_mfs);
    for (Index i = 0; i < width; ++i) {
      const Scalar in_lo = l == 0 ? lo(i) : Scalar(-1);
      const Scalar in_hi = l == 0 ? hi(i) : Scalar(1);
      const auto bank = detail::spread_mfs(in_lo, in_hi, spec.n_mfs);
      for (Index j = 0; j < spec.n_mfs; ++j) {
        base.lo(i, j) = bank[j].a;
        base.peak(i, j) = bank[j].b;
        base.hi(i, j) = bank[j].c;
      }
    }
    typename AuNetwork<Scalar>::Layer layer;
    for (Index k = 0; k < spec.n_units; ++k) {
      UnitParams<Scalar> p = base;
      if (init.order == ConsequentOrder::first) {
        for (Index j = 0; j < p.weights.rows(); ++j) {
          for (Index i = 0; i < p.weights.cols(); ++i) {
            p.weights(j, i) = scale * static_cast<Scalar>(rng.uniform(-1.0, 1.0));
          }
        }
      }
      layer.emplace_back(std::move(p), init.order);
    }
    layers.push_back(std::move(layer));
    width = spec.n_units;
  }
  return AuNetwork<Scalar>(input_dim, std::move(layers));
}

/// Input of every layer followed by the final output: trace[0] = x,
/// trace[l + 1] = output of layer l.
template <typename Scalar, typename Derived>
std::vector<VectorX<Scalar>> forward_trace(const AuNetwork<Scalar>& net,
                                           const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != net.input_dim()) {
    throw ShapeError("network expects " + std::to_string(net.input_dim()) + " inputs, got " +
                     std::to_string(x.size()));
  }
  std::vector<VectorX<Scalar>> trace;
  trace.reserve(net.n_layers() + 1);
  trace.push_back(x.template cast<Scalar>());
  for (const auto& layer : net.layers()) {
    VectorX<Scalar> out(static_cast<Index>(layer.size()));
    for (std::size_t k = 0; k < layer.size(); ++k) out(k) = anfis_forward(layer[k], trace.back());
    trace.push_back(std::move(out));
  }
  return trace;
}

template <typename Scalar, typename Derived>
VectorX<Scalar> network_forward(const AuNetwork<Scalar>& net,
                                const Eigen::MatrixBase<Derived>& x) {
  return std::move(forward_trace(net, x).back());
}

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return best;
}

template <typename Scalar, typename Derived>
Index predict_class(const AuNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  return argmax(network_forward(net, x));
}

}  // namespace aunn
