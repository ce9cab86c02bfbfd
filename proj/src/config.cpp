#include "aunn/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace aunn {

ExperimentConfig ExperimentConfig::word_preset() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::incremental_preset() {
  ExperimentConfig c;
  c.task = Task::incremental_iws_iss;
  c.architecture = {{10, 3}, {2, 3}};
  c.schedule = {{0.001, 300}};
  return c;
}

eval::NetworkSpec ExperimentConfig::network_spec() const {
  eval::NetworkSpec spec;
  spec.layers = architecture;
  spec.init.seed = seed;
  spec.init.mf_span = mf_span;
  spec.init.consequent_scale = consequent_scale;
  spec.init.order = consequent_order;
  return spec;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig tc;
  tc.schedule = schedule;
  tc.minibatch_size = minibatch_size;
  tc.adam = adam;
  tc.seed = seed;
  return tc;
}

eval::IncrementalConfig ExperimentConfig::incremental_config() const {
  eval::IncrementalConfig ic;
  ic.learning_rate = session_learning_rate;
  ic.epochs_per_session = epochs_per_session;
  ic.reference_epochs = reference_epochs;
  ic.replay = replay;
  ic.positive_class = positive_class;
  ic.minibatch_size = minibatch_size;
  ic.adam = adam;
  return ic;
}

void ExperimentConfig::validate() const {
  if (architecture.empty()) throw ConfigError("architecture needs at least one layer");
  for (const auto& l : architecture) {
    if (l.n_units <= 0 || l.n_mfs <= 0) throw ConfigError("layer sizes must be positive");
  }
  train_config().validate();
  if (!(consequent_scale >= 0.0)) throw ConfigError("consequent_scale must be >= 0");
  if (!(window_s > 0.0) || !(step_s > 0.0)) throw ConfigError("window_s and step_s must be > 0");
  if (features.levels < 1) throw ConfigError("wavelet levels must be >= 1");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (!(session_learning_rate > 0.0)) throw ConfigError("session learning rate must be > 0");
  if (epochs_per_session < 0 || reference_epochs < 0) throw ConfigError("epochs must be >= 0");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (gradcheck_networks < 1) throw ConfigError("gradcheck networks must be >= 1");
  if (!(gradcheck_step > 0.0)) throw ConfigError("gradcheck step must be > 0");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_string(Task task) {
  return task == Task::word_classification ? "word_classification" : "incremental_iws_iss";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string value;
  std::size_t line;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string raw(const std::string& key) {
    used_.push_back(key);
    return entries_.at(key).value;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(source_ + ":" + std::to_string(entries_.at(key).line) + ": " + key + ": " +
                      what);
  }

  template <typename T>
  void number(const std::string& key, T& target) {
    if (!has(key)) return;
    target = parse_number<T>(key, raw(key));
  }

  template <typename T>
  T parse_number(const std::string& key, const std::string& text) const {
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
      fail(key, "not a valid number: '" + text + "'");
    }
    return v;
  }

  void flag(const std::string& key, bool& target) {
    if (!has(key)) return;
    const auto v = raw(key);
    if (v == "true" || v == "on" || v == "1") {
      target = true;
    } else if (v == "false" || v == "off" || v == "0") {
      target = false;
    } else {
      fail(key, "expected true or false");
    }
  }

  void text(const std::string& key, std::string& target) {
    if (has(key)) target = raw(key);
  }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) out.push_back(k);
    }
    return out;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::string source_;
  std::vector<std::string> used_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    if (entries.count(key)) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key " + key);
    }
    entries[key] = {trim(line.substr(eq + 1)), lineno};
  }

  Reader r(std::move(entries), source);
  ExperimentConfig cfg;
  if (r.has("experiment.task")) {
    const auto t = r.raw("experiment.task");
    if (t == "word_classification") {
      cfg = ExperimentConfig::word_preset();
    } else if (t == "incremental_iws_iss") {
      cfg = ExperimentConfig::incremental_preset();
    } else {
      r.fail("experiment.task", "unknown task '" + t + "'");
    }
  }
  r.number("experiment.seed", cfg.seed);

  if (r.has("network.units") || r.has("network.n_mfs")) {
    std::vector<Index> units, mfs;
    if (r.has("network.units")) {
      for (const auto& s : split_list(r.raw("network.units"))) {
        units.push_back(r.parse_number<Index>("network.units", s));
      }
    } else {
      for (const auto& l : cfg.architecture) units.push_back(l.n_units);
    }
    if (r.has("network.n_mfs")) {
      for (const auto& s : split_list(r.raw("network.n_mfs"))) {
        mfs.push_back(r.parse_number<Index>("network.n_mfs", s));
      }
    } else {
      for (const auto& l : cfg.architecture) mfs.push_back(l.n_mfs);
    }
    if (mfs.size() == 1) mfs.resize(units.size(), mfs.front());
    if (mfs.size() != units.size() || units.empty()) {
      throw ConfigError(source + ": network.n_mfs must give one value or one per layer");
    }
    cfg.architecture.clear();
    for (std::size_t l = 0; l < units.size(); ++l) cfg.architecture.push_back({units[l], mfs[l]});
  }
  if (r.has("network.mf_span")) {
    const auto v = r.raw("network.mf_span");
    if (v == "data_range") {
      cfg.mf_span = MfSpan::data_range;
    } else if (v == "fixed_unit_interval") {
      cfg.mf_span = MfSpan::fixed_unit_interval;
    } else {
      r.fail("network.mf_span", "expected data_range or fixed_unit_interval");
    }
  }
  if (r.has("network.consequent_order")) {
    const auto v = r.raw("network.consequent_order");
    if (v == "first") {
      cfg.consequent_order = ConsequentOrder::first;
    } else if (v == "zero") {
      cfg.consequent_order = ConsequentOrder::zero;
    } else {
      r.fail("network.consequent_order", "expected first or zero");
    }
  }
  r.number("network.consequent_scale", cfg.consequent_scale);

  if (r.has("training.schedule")) {
    cfg.schedule.clear();
    for (const auto& item : split_list(r.raw("training.schedule"))) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        r.fail("training.schedule", "stages are written learning_rate:epochs");
      }
      cfg.schedule.push_back(
          {r.parse_number<double>("training.schedule", trim(item.substr(0, colon))),
           r.parse_number<Index>("training.schedule", trim(item.substr(colon + 1)))});
    }
  }
  r.number("training.minibatch_size", cfg.minibatch_size);
  r.number("training.adam_beta1", cfg.adam.beta1);
  r.number("training.adam_beta2", cfg.adam.beta2);
  r.number("training.adam_epsilon", cfg.adam.epsilon);

  r.number("signal.window_s", cfg.window_s);
  r.number("signal.step_s", cfg.step_s);
  r.number("signal.levels", cfg.features.levels);
  r.flag("signal.log_energy", cfg.features.log_energy);

  r.number("word.folds", cfg.folds);

  r.number("incremental.learning_rate", cfg.session_learning_rate);
  r.number("incremental.epochs_per_session", cfg.epochs_per_session);
  r.number("incremental.reference_epochs", cfg.reference_epochs);
  r.number("incremental.repeats", cfg.repeats);
  if (r.has("incremental.replay")) {
    const auto v = r.raw("incremental.replay");
    if (v == "none") {
      cfg.replay = eval::Replay::none;
    } else if (v == "cumulative") {
      cfg.replay = eval::Replay::cumulative;
    } else {
      r.fail("incremental.replay", "expected none or cumulative");
    }
  }
  r.number("incremental.positive_class", cfg.positive_class);

  r.number("gradcheck.networks", cfg.gradcheck_networks);
  r.number("gradcheck.step", cfg.gradcheck_step);
  r.number("gradcheck.tolerance", cfg.gradcheck_tolerance);

  r.text("paths.data", cfg.data_path);
  r.text("paths.out", cfg.out_path);

  const auto unused = r.unused();
  if (!unused.empty()) r.fail(unused.front(), "unknown key");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  auto join = [](const auto& items, auto&& fmt) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + fmt(items[i]);
    return s;
  };
  o << "[experiment]\n"
    << "task = " << to_string(cfg.task) << "\n"
    << "seed = " << cfg.seed << "\n\n";
  o << "[network]\n"
    << "units = " << join(cfg.architecture, [](const LayerSpec& l) { return std::to_string(l.n_units); }) << "\n"
    << "n_mfs = " << join(cfg.architecture, [](const LayerSpec& l) { return std::to_string(l.n_mfs); }) << "\n"
    << "mf_span = " << (cfg.mf_span == MfSpan::data_range ? "data_range" : "fixed_unit_interval") << "\n"
    << "consequent_order = " << (cfg.consequent_order == ConsequentOrder::first ? "first" : "zero") << "\n"
    << "consequent_scale = " << format_double(cfg.consequent_scale) << "\n\n";
  o << "[training]\n"
    << "schedule = " << join(cfg.schedule, [](const ScheduleStage& s) {
         return format_double(s.learning_rate) + ":" + std::to_string(s.epochs);
       }) << "\n"
    << "minibatch_size = " << cfg.minibatch_size << "\n"
    << "adam_beta1 = " << format_double(cfg.adam.beta1) << "\n"
    << "adam_beta2 = " << format_double(cfg.adam.beta2) << "\n"
    << "adam_epsilon = " << format_double(cfg.adam.epsilon) << "\n\n";
  o << "[signal]\n"
    << "window_s = " << format_double(cfg.window_s) << "\n"
    << "step_s = " << format_double(cfg.step_s) << "\n"
    << "levels = " << cfg.features.levels << "\n"
    << "log_energy = " << (cfg.features.log_energy ? "true" : "false") << "\n\n";
  o << "[word]\n"
    << "folds = " << cfg.folds << "\n\n";
  o << "[incremental]\n"
    << "learning_rate = " << format_double(cfg.session_learning_rate) << "\n"
    << "epochs_per_session = " << cfg.epochs_per_session << "\n"
    << "reference_epochs = " << cfg.reference_epochs << "\n"
    << "repeats = " << cfg.repeats << "\n"
    << "replay = " << (cfg.replay == eval::Replay::none ? "none" : "cumulative") << "\n"
    << "positive_class = " << cfg.positive_class << "\n\n";
  o << "[gradcheck]\n"
    << "networks = " << cfg.gradcheck_networks << "\n"
    << "step = " << format_double(cfg.gradcheck_step) << "\n"
    << "tolerance = " << format_double(cfg.gradcheck_tolerance) << "\n\n";
  o << "[paths]\n"
    << "data = " << cfg.data_path << "\n"
    << "out = " << cfg.out_path << "\n";
  return o.str();
}

}  // namespace aunn
