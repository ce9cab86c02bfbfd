#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aunn::signal {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One recorded trial: channels in rows, samples in columns.
struct RawTrial {
  MatrixXd samples;
  double sample_rate = 0.0;
  std::string subject_id;
  std::string session_id;
  std::string trial_id;
  int label = 0;

  Index n_channels() const { return samples.rows(); }
  Index n_samples() const { return samples.cols(); }
  double duration() const { return static_cast<double>(n_samples()) / sample_rate; }
};

struct Segment {
  MatrixXd samples;  // n_channels x window_samples
  double start_time = 0.0;
  Index index = 0;
};

/// Seconds to samples, rounding half up.
Index seconds_to_samples(double seconds, double sample_rate);

/// Number of full windows that fit: floor((n - window) / step) + 1, or 0.
Index segment_count(Index n_samples, Index window_samples, Index step_samples);

/// Overlapped windows starting at 0, step, 2 step, ... that lie fully inside the trial.
std::vector<Segment> segment_trial(const RawTrial& trial, double window_s = 0.5,
                                   double step_s = 0.1);

/// Analysis filter pair of a two-channel filter bank, pywt tap ordering.
struct FilterBank {
  std::array<double, 6> lowpass;
  std::array<double, 6> highpass;
};

/// Biorthogonal spline 2.2 decomposition filters.
const FilterBank& bior22();

/// Detail bands d1 (finest) .. dL and the level-L approximation.
struct WaveletBands {
  std::vector<VectorXd> details;
  VectorXd approximation;

  int levels() const { return static_cast<int>(details.size()); }
};

/// Half-sample symmetric index into [0, n) for any integer k.
Index symmetric_index(Index k, Index n);

/// Smallest input length that keeps every level at least one filter long.
Index min_signal_length(int levels);

/// One analysis step: symmetric padding, filtering, keeping odd-phase samples.
/// Output length is (n + 5) / 2 for both bands.
void dwt_step(const VectorXd& x, const FilterBank& bank, VectorXd& approximation,
              VectorXd& detail);

/// Multi-level pyramidal decomposition with the bior2.2 filters.
WaveletBands dwt_bior22(const VectorXd& x, int levels = 4);

/// Sum of squared coefficients per band, ordered d1, ..., dL, aL.
VectorXd instant_wavelet_energy(const WaveletBands& bands);

struct FeatureOptions {
  int levels = 4;
  /// Replaces each energy E by log10(E + 1e-12).
  bool log_energy = false;

  bool operator==(const FeatureOptions&) const = default;
};

struct FeatureVector {
  VectorXd values;
  std::string trial_id;
  Index segment_index = 0;
};

/// Channel-major energies: channel 0 bands d1..aL, then channel 1, ...
FeatureVector extract_features(const Segment& segment, const FeatureOptions& options = {},
                               const std::string& trial_id = {});

/// Segments a trial and extracts one feature vector per segment, as matrix rows.
MatrixXd trial_features(const RawTrial& trial, double window_s, double step_s,
                        const FeatureOptions& options = {});

}  // namespace aunn::signal
