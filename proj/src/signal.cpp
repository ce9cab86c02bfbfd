#include "aunn/signal.hpp"

#include <cmath>

#include "aunn/errors.hpp"

namespace aunn::signal {

Index seconds_to_samples(double seconds, double sample_rate) {
  return static_cast<Index>(std::floor(seconds * sample_rate + 0.5));
}

Index segment_count(Index n_samples, Index window_samples, Index step_samples) {
  if (n_samples < window_samples) return 0;
  return (n_samples - window_samples) / step_samples + 1;
}

std::vector<Segment> segment_trial(const RawTrial& trial, double window_s, double step_s) {
  if (!(trial.sample_rate > 0.0)) throw DataError("sample rate must be positive");
  if (!(window_s > 0.0) || !(step_s > 0.0)) throw ConfigError("window and step must be positive");
  const Index window = seconds_to_samples(window_s, trial.sample_rate);
  const Index step = seconds_to_samples(step_s, trial.sample_rate);
  if (window < 1 || step < 1) throw ConfigError("window or step rounds to zero samples");
  if (trial.n_samples() < window) {
    throw DataError("trial " + trial.trial_id + " has " + std::to_string(trial.n_samples()) +
                    " samples, shorter than the " + std::to_string(window) + "-sample window");
  }

  const Index count = segment_count(trial.n_samples(), window, step);
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index s = 0; s < count; ++s) {
    const Index start = s * step;
    out.push_back({trial.samples.middleCols(start, window),
                   static_cast<double>(start) / trial.sample_rate, s});
  }
  return out;
}

const FilterBank& bior22() {
  // sqrt(2) * [0, -1/8, 1/4, 3/4, 1/4, -1/8] and sqrt(2) * [0, 1/4, -1/2, 1/4, 0, 0]
  static const FilterBank bank{
      {0.0, -0.17677669529663688, 0.35355339059327376, 1.0606601717798212, 0.35355339059327376,
       -0.17677669529663688},
      {0.0, 0.35355339059327376, -0.70710678118654752, 0.35355339059327376, 0.0, 0.0}};
  return bank;
}

Index symmetric_index(Index k, Index n) {
  const Index period = 2 * n;
  Index m = k % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

Index min_signal_length(int levels) {
  constexpr Index filter_length = 6;
  Index n = filter_length;
  // invert n_out = (n_in + 5) / 2 for the smallest n_in reaching n_out
  for (int l = 1; l < levels; ++l) n = std::max<Index>(2 * n - 5, filter_length);
  return n;
}

void dwt_step(const VectorXd& x, const FilterBank& bank, VectorXd& approximation,
              VectorXd& detail) {
  const Index n = x.size();
  const Index taps = static_cast<Index>(bank.lowpass.size());
  const Index out_len = (n + taps - 1) / 2;
  approximation.resize(out_len);
  detail.resize(out_len);
  for (Index o = 0; o < out_len; ++o) {
    double lo = 0.0;
    double hi = 0.0;
    const Index centre = 2 * o + 1;
    for (Index j = 0; j < taps; ++j) {
      const double v = x(symmetric_index(centre - j, n));
      lo += bank.lowpass[static_cast<std::size_t>(j)] * v;
      hi += bank.highpass[static_cast<std::size_t>(j)] * v;
    }
    approximation(o) = lo;
    detail(o) = hi;
  }
}

WaveletBands dwt_bior22(const VectorXd& x, int levels) {
  if (levels < 1) throw ConfigError("wavelet decomposition needs at least one level");
  if (x.size() < min_signal_length(levels)) {
    throw DataError("signal of length " + std::to_string(x.size()) + " too short for " +
                    std::to_string(levels) + "-level decomposition (needs " +
                    std::to_string(min_signal_length(levels)) + ")");
  }
  WaveletBands bands;
  VectorXd current = x;
  for (int l = 0; l < levels; ++l) {
    VectorXd approx, detail;
    dwt_step(current, bior22(), approx, detail);
    bands.details.push_back(std::move(detail));
    current = std::move(approx);
  }
  bands.approximation = std::move(current);
  return bands;
}

VectorXd instant_wavelet_energy(const WaveletBands& bands) {
  VectorXd energy(bands.levels() + 1);
  for (int l = 0; l < bands.levels(); ++l) energy(l) = bands.details[l].squaredNorm();
  energy(bands.levels()) = bands.approximation.squaredNorm();
  return energy;
}

FeatureVector extract_features(const Segment& segment, const FeatureOptions& options,
                               const std::string& trial_id) {
  const Index per_channel = options.levels + 1;
  FeatureVector fv;
  fv.values.resize(segment.samples.rows() * per_channel);
  fv.trial_id = trial_id;
  fv.segment_index = segment.index;
  for (Index ch = 0; ch < segment.samples.rows(); ++ch) {
    const VectorXd row = segment.samples.row(ch).transpose();
    VectorXd energy = instant_wavelet_energy(dwt_bior22(row, options.levels));
    if (options.log_energy) energy = (energy.array() + 1e-12).log10().matrix();
    fv.values.segment(ch * per_channel, per_channel) = energy;
  }
  return fv;
}

MatrixXd trial_features(const RawTrial& trial, double window_s, double step_s,
                        const FeatureOptions& options) {
  const auto segments = segment_trial(trial, window_s, step_s);
  MatrixXd out(static_cast<Index>(segments.size()), trial.n_channels() * (options.levels + 1));
  for (std::size_t s = 0; s < segments.size(); ++s) {
    out.row(static_cast<Index>(s)) =
        extract_features(segments[s], options, trial.trial_id).values.transpose();
  }
  return out;
}

}  // namespace aunn::signal
