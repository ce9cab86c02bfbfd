#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "aunn/errors.hpp"

namespace aunn {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Triangular membership function with feet a, c and peak b, a <= b <= c.
template <typename Scalar>
struct TriangularMF {
  Scalar a{0};
  Scalar b{0};
  Scalar c{0};

  bool ordered() const { return a <= b && b <= c; }
  bool operator==(const TriangularMF&) const = default;
};

/// Degree of membership in [0, 1].
///
/// A zero-width ramp acts as an indicator: with a == b the degree jumps to 1
/// at x == b, with b == c it drops to 0 right after b.
template <typename Scalar>
Scalar mf_eval(const TriangularMF<Scalar>& mf, Scalar x) {
  if (x < mf.a || x > mf.c) return Scalar(0);
  if (x == mf.b) return Scalar(1);
  if (x < mf.b) return (x - mf.a) / (mf.b - mf.a);  // a <= x < b, so b > a
  return (mf.c - x) / (mf.c - mf.b);                 // b < x <= c, so c > b
}

/// Partial derivatives of mf_eval with respect to (x, a, b, c).
///
/// Kink convention: right-hand derivative at a, zero at b, left-hand
/// derivative at c. Zero-width ramps contribute nothing.
template <typename Scalar>
struct MfPartials {
  Scalar d_x{0};
  Scalar d_a{0};
  Scalar d_b{0};
  Scalar d_c{0};
};

template <typename Scalar>
MfPartials<Scalar> mf_partials(const TriangularMF<Scalar>& mf, Scalar x) {
  MfPartials<Scalar> p;
  if (x < mf.a || x > mf.c || x == mf.b) return p;
  if (x < mf.b) {
    const Scalar w = mf.b - mf.a;
    p.d_x = Scalar(1) / w;
    p.d_a = (x - mf.b) / (w * w);
    p.d_b = -(x - mf.a) / (w * w);
  } else {
    const Scalar w = mf.c - mf.b;
    p.d_x = Scalar(-1) / w;
    p.d_b = (mf.c - x) / (w * w);
    p.d_c = (x - mf.b) / (w * w);
  }
  return p;
}

enum class ConsequentOrder { zero, first };

/// Trainable parameters of one ANFIS unit.
///
/// The MF bank is split into three n_inputs x n_rules matrices holding the
/// a, b and c parameter of MF (i, j). Rule j uses column j of every input.
/// Gradients reuse this layout.
template <typename Scalar>
struct UnitParams {
  MatrixX<Scalar> lo;       // a
  MatrixX<Scalar> peak;     // b
  MatrixX<Scalar> hi;       // c
  MatrixX<Scalar> weights;  // n_rules x n_inputs
  VectorX<Scalar> bias;     // n_rules

  static UnitParams zeros(Index n_inputs, Index n_rules) {
    UnitParams p;
    p.lo = MatrixX<Scalar>::Zero(n_inputs, n_rules);
    p.peak = MatrixX<Scalar>::Zero(n_inputs, n_rules);
    p.hi = MatrixX<Scalar>::Zero(n_inputs, n_rules);
    p.weights = MatrixX<Scalar>::Zero(n_rules, n_inputs);
    p.bias = VectorX<Scalar>::Zero(n_rules);
    return p;
  }

  Index n_inputs() const { return lo.rows(); }
  Index n_rules() const { return lo.cols(); }

  bool same_shape(const UnitParams& o) const {
    return lo.rows() == o.lo.rows() && lo.cols() == o.lo.cols() && consistent() && o.consistent();
  }

  bool consistent() const {
    const Index n = lo.rows(), r = lo.cols();
    return peak.rows() == n && peak.cols() == r && hi.rows() == n && hi.cols() == r &&
           weights.rows() == r && weights.cols() == n && bias.size() == r;
  }

  /// Visits matching coefficient blocks of two congruent parameter sets.
  template <typename Other, typename F>
  void zip(Other& other, F&& f) {
    f(lo, other.lo);
    f(peak, other.peak);
    f(hi, other.hi);
    f(weights, other.weights);
    f(bias, other.bias);
  }

  template <typename F>
  void for_each_block(F&& f) {
    f(lo);
    f(peak);
    f(hi);
    f(weights);
    f(bias);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    f(lo);
    f(peak);
    f(hi);
    f(weights);
    f(bias);
  }

  Index size() const { return 3 * lo.size() + weights.size() + bias.size(); }

  /// Sorts every (a, b, c) triple so the MF ordering invariant holds.
  void sort_triples() {
    for (Index j = 0; j < lo.cols(); ++j) {
      for (Index i = 0; i < lo.rows(); ++i) {
        Scalar t[3] = {lo(i, j), peak(i, j), hi(i, j)};
        std::sort(t, t + 3);
        lo(i, j) = t[0];
        peak(i, j) = t[1];
        hi(i, j) = t[2];
      }
    }
  }

  bool triples_ordered() const {
    return (lo.array() <= peak.array()).all() && (peak.array() <= hi.array()).all();
  }
};

/// One neuron: an independent first-order (or zero-order) Takagi-Sugeno unit.
template <typename Scalar>
class AnfisUnit {
 public:
  AnfisUnit(Index n_inputs, Index n_rules, ConsequentOrder order = ConsequentOrder::first)
      : order_(order) {
    if (n_inputs <= 0 || n_rules <= 0) {
      throw ConfigError("ANFIS unit needs positive input and rule counts");
    }
    params_ = UnitParams<Scalar>::zeros(n_inputs, n_rules);
  }

  AnfisUnit(UnitParams<Scalar> params, ConsequentOrder order = ConsequentOrder::first)
      : order_(order) {
    if (params.n_inputs() <= 0 || params.n_rules() <= 0) {
      throw ConfigError("ANFIS unit needs positive input and rule counts");
    }
    set_params(std::move(params));
  }

  Index n_inputs() const { return params_.n_inputs(); }
  Index n_rules() const { return params_.n_rules(); }
  ConsequentOrder order() const { return order_; }

  TriangularMF<Scalar> mf(Index input, Index rule) const {
    return {params_.lo(input, rule), params_.peak(input, rule), params_.hi(input, rule)};
  }

  void set_mf(Index input, Index rule, const TriangularMF<Scalar>& mf) {
    if (!mf.ordered()) throw ConfigError("membership function requires a <= b <= c");
    params_.lo(input, rule) = mf.a;
    params_.peak(input, rule) = mf.b;
    params_.hi(input, rule) = mf.c;
  }

  const UnitParams<Scalar>& params() const { return params_; }

  /// Replaces all parameters. Shapes must match and every triple be ordered.
  void set_params(UnitParams<Scalar> params) {
    if (!params.consistent() ||
        (params_.lo.size() != 0 && !params.same_shape(params_))) {
      throw ShapeError("unit parameter shapes do not match");
    }
    if (!params.triples_ordered()) {
      throw ConfigError("membership function requires a <= b <= c");
    }
    if (order_ == ConsequentOrder::zero && !params.weights.isZero(0)) {
      throw ConfigError("zero-order unit cannot carry consequent weights");
    }
    params_ = std::move(params);
  }

  void set_consequents(const MatrixX<Scalar>& weights, const VectorX<Scalar>& bias) {
    UnitParams<Scalar> p = params_;
    p.weights = weights;
    p.bias = bias;
    set_params(std::move(p));
  }

 private:
  UnitParams<Scalar> params_;
  ConsequentOrder order_;
};

namespace detail {

template <typename Scalar, typename Derived>
void check_input(const AnfisUnit<Scalar>& unit, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != unit.n_inputs()) {
    throw ShapeError("unit expects " + std::to_string(unit.n_inputs()) + " inputs, got " +
                     std::to_string(x.size()));
  }
}

}  // namespace detail

/// Degrees of every MF of the bank, n_inputs x n_rules.
template <typename Scalar, typename Derived>
MatrixX<Scalar> membership_degrees(const AnfisUnit<Scalar>& unit,
                                   const Eigen::MatrixBase<Derived>& x) {
  detail::check_input(unit, x);
  MatrixX<Scalar> mu(unit.n_inputs(), unit.n_rules());
  for (Index j = 0; j < unit.n_rules(); ++j) {
    for (Index i = 0; i < unit.n_inputs(); ++i) mu(i, j) = mf_eval(unit.mf(i, j), Scalar(x(i)));
  }
  return mu;
}

/// Raw rule firing strengths: product over inputs of the rule's MF degrees.
template <typename Scalar, typename Derived>
VectorX<Scalar> firing_strengths(const AnfisUnit<Scalar>& unit,
                                 const Eigen::MatrixBase<Derived>& x) {
  return membership_degrees(unit, x).colwise().prod().transpose();
}

/// Firing strengths scaled to sum to one; all-zero input gives the uniform vector.
template <typename Derived>
VectorX<typename Derived::Scalar> normalize_firings(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  const Scalar total = w.sum();
  if (!(total > Scalar(0))) {
    return VectorX<Scalar>::Constant(w.size(), Scalar(1) / Scalar(w.size()));
  }
  return w / total;
}

/// Per-rule affine consequents W x + bias.
template <typename Scalar, typename Derived>
VectorX<Scalar> consequent_outputs(const AnfisUnit<Scalar>& unit,
                                   const Eigen::MatrixBase<Derived>& x) {
  detail::check_input(unit, x);
  return unit.params().weights * x.template cast<Scalar>() + unit.params().bias;
}

template <typename Scalar, typename Derived>
Scalar anfis_forward(const AnfisUnit<Scalar>& unit, const Eigen::MatrixBase<Derived>& x) {
  return normalize_firings(firing_strengths(unit, x)).dot(consequent_outputs(unit, x));
}

}  // namespace aunn
