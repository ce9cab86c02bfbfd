#include "aunn/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "aunn/errors.hpp"

namespace fs = std::filesystem;

namespace aunn::io {

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_token = false;
  const bool has_hard = line.find_first_of(",;") != std::string::npos;
  for (char ch : line) {
    const bool hard = ch == ',' || ch == ';';
    const bool soft = ch == ' ' || ch == '\t' || ch == '\r';
    if (hard) {
      out.push_back(cur);
      cur.clear();
      in_token = false;
    } else if (soft) {
      if (!has_hard && in_token) {
        out.push_back(cur);
        cur.clear();
        in_token = false;
      }
    } else {
      cur.push_back(ch);
      in_token = true;
    }
  }
  if (has_hard || in_token) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, "not a number: '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, "not an integer: '" + s + "'");
  }
}

/// Numbers compare numerically and before non-numbers; the rest lexically.
bool natural_less(const std::string& a, const std::string& b) {
  auto numeric = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  const bool na = numeric(a), nb = numeric(b);
  if (na && nb) {
    const auto sa = a.substr(std::min(a.find_first_not_of('0'), a.size() - 1));
    const auto sb = b.substr(std::min(b.find_first_not_of('0'), b.size() - 1));
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;
  }
  if (na != nb) return na;
  return a < b;
}

}  // namespace

signal::RawTrial read_raw_trial(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  if (line.empty() || line[0] != '#') throw ParseError(path, 1, "missing '# rate=...' header");

  std::map<std::string, std::string> header;
  std::istringstream hs(line.substr(1));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError(path, 1, "header token without '=': " + tok);
    header[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"rate", "subject", "session", "trial", "label"}) {
    if (!header.count(key)) throw ParseError(path, 1, std::string("header lacks ") + key);
  }

  signal::RawTrial trial;
  trial.sample_rate = parse_double(header["rate"], path, 1);
  if (!(trial.sample_rate > 0.0)) throw ParseError(path, 1, "rate must be positive");
  trial.subject_id = header["subject"];
  trial.session_id = header["session"];
  trial.trial_id = header["trial"];
  trial.label = parse_int(header["label"], path, 1);

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    for (const auto& f : fields) row.push_back(parse_double(f, path, lineno));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path, lineno,
                       "expected " + std::to_string(rows.front().size()) + " channels, got " +
                           std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path, lineno, "no samples");

  trial.samples.resize(static_cast<Eigen::Index>(rows.front().size()),
                       static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t ch = 0; ch < rows[t].size(); ++ch) {
      trial.samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(t)) = rows[t][ch];
    }
  }
  return trial;
}

void write_raw_trial(std::ostream& out, const signal::RawTrial& trial) {
  out << "# rate=" << format17(trial.sample_rate) << " subject=" << trial.subject_id
      << " session=" << trial.session_id << " trial=" << trial.trial_id
      << " label=" << trial.label << "\n";
  for (Eigen::Index t = 0; t < trial.n_samples(); ++t) {
    for (Eigen::Index ch = 0; ch < trial.n_channels(); ++ch) {
      out << (ch ? "," : "") << format17(trial.samples(ch, t));
    }
    out << "\n";
  }
}

std::vector<signal::RawTrial> read_trial_directory(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("trial directory not found: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  }
  if (files.empty()) throw DataError("trial directory is empty: " + dir);
  std::sort(files.begin(), files.end());

  std::vector<signal::RawTrial> trials;
  for (const auto& f : files) trials.push_back(read_raw_trial(f));
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].n_channels() != trials.front().n_channels()) {
      throw DataError("trial file " + files[i] + " has " +
                      std::to_string(trials[i].n_channels()) + " channels, expected " +
                      std::to_string(trials.front().n_channels()));
    }
  }
  std::stable_sort(trials.begin(), trials.end(), [](const auto& a, const auto& b) {
    if (a.subject_id != b.subject_id) return natural_less(a.subject_id, b.subject_id);
    if (a.session_id != b.session_id) return natural_less(a.session_id, b.session_id);
    return natural_less(a.trial_id, b.trial_id);
  });
  return trials;
}

FeatureTable build_feature_table(const std::vector<signal::RawTrial>& trials, double window_s,
                                 double step_s, const signal::FeatureOptions& options) {
  std::vector<Eigen::MatrixXd> blocks;
  FeatureTable table;
  Eigen::Index rows = 0;
  for (const auto& trial : trials) {
    blocks.push_back(signal::trial_features(trial, window_s, step_s, options));
    const std::string instance = trial.subject_id + "-" + trial.session_id + "-" + trial.trial_id;
    for (Eigen::Index r = 0; r < blocks.back().rows(); ++r) {
      table.instance_ids.push_back(instance);
      table.session_ids.push_back(trial.session_id);
      table.trial_ids.push_back(trial.trial_id);
      table.labels.push_back(trial.label);
    }
    rows += blocks.back().rows();
  }
  const Eigen::Index cols = blocks.empty() ? 0 : blocks.front().cols();
  table.features.resize(rows, cols);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    table.features.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return table;
}

void write_feature_table(std::ostream& out, const FeatureTable& table) {
  out << "instance_id,session_id,trial_id,label";
  for (Eigen::Index c = 0; c < table.features.cols(); ++c) out << ",f" << (c + 1);
  out << "\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    out << table.instance_ids[r] << "," << table.session_ids[r] << "," << table.trial_ids[r]
        << "," << table.labels[r];
    for (Eigen::Index c = 0; c < table.features.cols(); ++c) {
      out << "," << format17(table.features(static_cast<Eigen::Index>(r), c));
    }
    out << "\n";
  }
}

FeatureTable read_feature_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty feature file");
  const auto header = split_fields(line);
  if (header.size() < 5 || header[0] != "instance_id" || header[1] != "session_id" ||
      header[2] != "trial_id" || header[3] != "label") {
    throw ParseError(path, 1,
                     "expected header instance_id,session_id,trial_id,label,f1,...");
  }
  const std::size_t n_features = header.size() - 4;

  FeatureTable table;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(path, lineno,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    table.instance_ids.push_back(fields[0]);
    table.session_ids.push_back(fields[1]);
    table.trial_ids.push_back(fields[2]);
    table.labels.push_back(parse_int(fields[3], path, lineno));
    for (std::size_t c = 0; c < n_features; ++c) {
      values.push_back(parse_double(fields[4 + c], path, lineno));
    }
  }
  if (table.size() == 0) throw DataError("feature file has no rows: " + path);
  table.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(table.size()),
      static_cast<Eigen::Index>(n_features));
  return table;
}

int contiguous_class_count(const std::vector<int>& labels) {
  if (labels.empty()) throw DataError("no labels");
  const int top = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw DataError("negative label");
  std::vector<bool> seen(static_cast<std::size_t>(top) + 1, false);
  for (int y : labels) seen[static_cast<std::size_t>(y)] = true;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) throw DataError("labels are not contiguous: class " + std::to_string(c) + " missing");
  }
  return top + 1;
}

std::vector<eval::SegmentSetInstance> group_instances(const FeatureTable& table) {
  std::vector<eval::SegmentSetInstance> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<Eigen::Index>> rows;
  for (std::size_t r = 0; r < table.size(); ++r) {
    auto [it, fresh] = index.try_emplace(table.instance_ids[r], out.size());
    if (fresh) {
      out.push_back({table.instance_ids[r], table.labels[r], {}});
      rows.emplace_back();
    } else if (out[it->second].label != table.labels[r]) {
      throw DataError("instance " + table.instance_ids[r] + " mixes labels");
    }
    rows[it->second].push_back(static_cast<Eigen::Index>(r));
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].features = table.features(rows[i], Eigen::all);
  return out;
}

std::vector<eval::Session> group_sessions(const FeatureTable& table) {
  std::vector<eval::Session> sessions;
  std::map<std::string, std::size_t> session_index;
  std::vector<std::map<std::string, std::size_t>> trial_index;
  std::vector<std::vector<std::vector<Eigen::Index>>> rows;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (table.session_ids[r].empty()) throw DataError("feature row without session id");
    auto [sit, s_fresh] = session_index.try_emplace(table.session_ids[r], sessions.size());
    if (s_fresh) {
      sessions.push_back({table.session_ids[r], {}});
      trial_index.emplace_back();
      rows.emplace_back();
    }
    const std::size_t s = sit->second;
    // instance ids are unique per trial, trial ids may repeat across sessions
    auto [tit, t_fresh] = trial_index[s].try_emplace(table.instance_ids[r], sessions[s].trials.size());
    if (t_fresh) {
      sessions[s].trials.push_back({table.instance_ids[r], {}});
      rows[s].emplace_back();
    }
    rows[s][tit->second].push_back(static_cast<Eigen::Index>(r));
  }
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (std::size_t t = 0; t < sessions[s].trials.size(); ++t) {
      auto& samples = sessions[s].trials[t].samples;
      samples.features = table.features(rows[s][t], Eigen::all);
      for (auto r : rows[s][t]) samples.labels.push_back(table.labels[static_cast<std::size_t>(r)]);
    }
  }
  return sessions;
}

eval::Samples as_samples(const FeatureTable& table) { return {table.features, table.labels}; }

void write_model(std::ostream& out, const AuNetwork<double>& net) {
  const auto order = net.layer(0).front().order();
  out << "aunn-model 1\n";
  out << "input_dim " << net.input_dim() << "\n";
  out << "order " << (order == ConsequentOrder::first ? "first" : "zero") << "\n";
  out << "layers " << net.n_layers() << "\n";
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const auto& layer = net.layer(l);
    out << "layer " << l << " units " << layer.size() << " mfs " << layer.front().n_rules() << "\n";
    for (std::size_t k = 0; k < layer.size(); ++k) {
      const auto& p = layer[k].params();
      out << "unit " << l << " " << k << "\n";
      for (Eigen::Index i = 0; i < p.n_inputs(); ++i) {
        for (Eigen::Index j = 0; j < p.n_rules(); ++j) {
          out << "mf " << format17(p.lo(i, j)) << " " << format17(p.peak(i, j)) << " "
              << format17(p.hi(i, j)) << "\n";
        }
      }
      for (Eigen::Index j = 0; j < p.n_rules(); ++j) {
        out << "rule";
        for (Eigen::Index i = 0; i < p.n_inputs(); ++i) out << " " << format17(p.weights(j, i));
        out << " " << format17(p.bias(j)) << "\n";
      }
    }
  }
}

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::istringstream next(const std::string& keyword) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.find_first_not_of(" \t\r") != std::string::npos) break;
      line.clear();
    }
    if (line.empty()) throw ParseError(source_, line_, "unexpected end of model, wanted " + keyword);
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw != keyword) throw ParseError(source_, line_, "expected '" + keyword + "', got '" + kw + "'");
    return ss;
  }

  template <typename T>
  T take(std::istringstream& ss, const char* what) {
    std::string tok;
    if (!(ss >> tok)) throw ParseError(source_, line_, std::string("missing ") + what);
    if constexpr (std::is_same_v<T, double>) {
      return parse_double(tok, source_, line_);
    } else {
      const int v = parse_int(tok, source_, line_);
      return static_cast<T>(v);
    }
  }

  void expect_word(std::istringstream& ss, const std::string& word) {
    std::string tok;
    if (!(ss >> tok) || tok != word) throw ParseError(source_, line_, "expected '" + word + "'");
  }

  [[noreturn]] void fail(const std::string& what) { throw ParseError(source_, line_, what); }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace

AuNetwork<double> read_model(std::istream& in, const std::string& source) {
  LineReader lr(in, source);
  auto head = lr.next("aunn-model");
  if (lr.take<int>(head, "format version") != 1) lr.fail("unsupported model format version");
  auto dim_line = lr.next("input_dim");
  const auto input_dim = lr.take<Eigen::Index>(dim_line, "input dimension");
  auto order_line = lr.next("order");
  std::string order_word;
  order_line >> order_word;
  if (order_word != "first" && order_word != "zero") lr.fail("order must be first or zero");
  const auto order = order_word == "first" ? ConsequentOrder::first : ConsequentOrder::zero;
  auto layers_line = lr.next("layers");
  const auto n_layers = lr.take<std::size_t>(layers_line, "layer count");
  if (input_dim <= 0 || n_layers == 0) lr.fail("model needs a positive input_dim and layers");

  std::vector<AuNetwork<double>::Layer> layers;
  Eigen::Index width = input_dim;
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto ll = lr.next("layer");
    if (lr.take<std::size_t>(ll, "layer index") != l) lr.fail("layers out of order");
    lr.expect_word(ll, "units");
    const auto n_units = lr.take<std::size_t>(ll, "unit count");
    lr.expect_word(ll, "mfs");
    const auto n_mfs = lr.take<Eigen::Index>(ll, "MF count");
    if (n_units == 0 || n_mfs <= 0) lr.fail("layer sizes must be positive");
    AuNetwork<double>::Layer layer;
    for (std::size_t k = 0; k < n_units; ++k) {
      auto ul = lr.next("unit");
      if (lr.take<std::size_t>(ul, "layer index") != l || lr.take<std::size_t>(ul, "unit index") != k) {
        lr.fail("units out of order");
      }
      auto p = UnitParams<double>::zeros(width, n_mfs);
      for (Eigen::Index i = 0; i < width; ++i) {
        for (Eigen::Index j = 0; j < n_mfs; ++j) {
          auto ml = lr.next("mf");
          p.lo(i, j) = lr.take<double>(ml, "a");
          p.peak(i, j) = lr.take<double>(ml, "b");
          p.hi(i, j) = lr.take<double>(ml, "c");
        }
      }
      for (Eigen::Index j = 0; j < n_mfs; ++j) {
        auto rl = lr.next("rule");
        for (Eigen::Index i = 0; i < width; ++i) p.weights(j, i) = lr.take<double>(rl, "weight");
        p.bias(j) = lr.take<double>(rl, "bias");
      }
      try {
        layer.emplace_back(std::move(p), order);
      } catch (const std::exception& e) {
        lr.fail(e.what());
      }
    }
    layers.push_back(std::move(layer));
    width = static_cast<Eigen::Index>(n_units);
  }
  return AuNetwork<double>(input_dim, std::move(layers));
}

AuNetwork<double> read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  return read_model(in, path);
}

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

}  // namespace aunn::io
