#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aunn/eval.hpp"
#include "aunn/signal.hpp"

namespace aunn::io {

/// One trial file: a `# rate=<Hz> subject=<id> session=<id> trial=<id> label=<int>`
/// header, then one row per sample with one column per channel. Columns may be
/// separated by commas, semicolons, tabs or spaces.
signal::RawTrial read_raw_trial(const std::string& path);
void write_raw_trial(std::ostream& out, const signal::RawTrial& trial);

/// Every regular file in `dir`, ordered by (subject, session, trial) with
/// numeric ids compared as numbers. All trials must share a channel count.
std::vector<signal::RawTrial> read_trial_directory(const std::string& dir);

/// One row per segment.
struct FeatureTable {
  std::vector<std::string> instance_ids;
  std::vector<std::string> session_ids;
  std::vector<std::string> trial_ids;
  std::vector<int> labels;
  Eigen::MatrixXd features;

  std::size_t size() const { return labels.size(); }
};

FeatureTable build_feature_table(const std::vector<signal::RawTrial>& trials, double window_s,
                                 double step_s, const signal::FeatureOptions& options);

/// CSV with header `instance_id,session_id,trial_id,label,f1,...,fN`.
void write_feature_table(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table(const std::string& path);

/// Number of classes; throws DataError unless labels cover 0..max without gaps.
int contiguous_class_count(const std::vector<int>& labels);

/// Rows grouped by instance_id, in order of first appearance.
std::vector<eval::SegmentSetInstance> group_instances(const FeatureTable& table);

/// Rows grouped into sessions then trials, in order of first appearance.
std::vector<eval::Session> group_sessions(const FeatureTable& table);

eval::Samples as_samples(const FeatureTable& table);

/// Text model format, every parameter with 17 significant digits.
void write_model(std::ostream& out, const AuNetwork<double>& net);
AuNetwork<double> read_model(std::istream& in, const std::string& source = "<model>");
AuNetwork<double> read_model_file(const std::string& path);

/// Writes through a temporary file in the same directory and renames it into place.
void atomic_write(const std::string& path, const std::string& content);

std::string format17(double v);

}  // namespace aunn::io
