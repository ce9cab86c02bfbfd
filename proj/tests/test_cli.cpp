#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "aunn/commands.hpp"
#include "synthetic.hpp"

using namespace aunn;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("aunn_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void write_trial(const fs::path& dir, const std::string& name, Index channels, double seconds,
                 double rate, int label, const std::string& session, std::uint64_t seed) {
  Rng rng(seed);
  signal::RawTrial t;
  t.sample_rate = rate;
  t.subject_id = "1";
  t.session_id = session;
  t.trial_id = name;
  t.label = label;
  t.samples = Eigen::MatrixXd::NullaryExpr(channels, signal::seconds_to_samples(seconds, rate),
                                           [&] { return rng.normal() + label; });
  std::ofstream out(dir / (name + ".csv"));
  io::write_raw_trial(out, t);
}

io::FeatureTable words_table(const std::vector<eval::SegmentSetInstance>& words) {
  io::FeatureTable table;
  std::vector<Eigen::MatrixXd> blocks;
  Index rows = 0;
  for (const auto& w : words) {
    for (Index r = 0; r < w.features.rows(); ++r) {
      table.instance_ids.push_back(w.instance_id);
      table.session_ids.push_back("1");
      table.trial_ids.push_back(w.instance_id);
      table.labels.push_back(w.label);
    }
    rows += w.features.rows();
  }
  table.features.resize(rows, words.front().features.cols());
  Index r0 = 0;
  for (const auto& w : words) {
    table.features.middleRows(r0, w.features.rows()) = w.features;
    r0 += w.features.rows();
  }
  return table;
}

io::FeatureTable sessions_table(const std::vector<eval::Session>& sessions) {
  io::FeatureTable table;
  std::vector<Eigen::RowVectorXd> rows;
  for (const auto& s : sessions) {
    for (const auto& t : s.trials) {
      for (Index r = 0; r < t.samples.size(); ++r) {
        table.instance_ids.push_back(t.trial_id);
        table.session_ids.push_back(s.session_id);
        table.trial_ids.push_back(t.trial_id);
        table.labels.push_back(t.samples.labels[r]);
        rows.push_back(t.samples.features.row(r));
      }
    }
  }
  table.features.resize(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) table.features.row(static_cast<Index>(r)) = rows[r];
  return table;
}

void save_table(const fs::path& p, const io::FeatureTable& table) {
  std::ostringstream csv;
  io::write_feature_table(csv, table);
  write_text(p, csv.str());
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Config, DefaultsAreTheWordPreset) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg, ExperimentConfig::word_preset());
  EXPECT_EQ(cfg.architecture, (std::vector<LayerSpec>{{5, 70}}));
  EXPECT_EQ(cfg.train_config().total_epochs(), 1500);
  const auto inc = ExperimentConfig::incremental_preset();
  EXPECT_EQ(inc.architecture, (std::vector<LayerSpec>{{10, 3}, {2, 3}}));
  EXPECT_EQ(inc.incremental_config().epochs_per_session, 300);
  EXPECT_EQ(inc.incremental_config().reference_epochs, 1200);
  EXPECT_EQ(inc.incremental_config().learning_rate, 0.001);
}

TEST(Config, SerializeRoundTrip) {
  auto cfg = ExperimentConfig::incremental_preset();
  cfg.seed = 42;
  cfg.schedule = {{0.3, 2}, {1e-7, 9}};
  cfg.features.log_energy = true;
  cfg.replay = eval::Replay::cumulative;
  cfg.consequent_scale = 0.1 + 0.2;
  cfg.data_path = "in/features.csv";
  cfg.out_path = "results";
  EXPECT_EQ(parse_config(serialize_config(cfg)), cfg);
  EXPECT_EQ(parse_config(serialize_config(ExperimentConfig{})), ExperimentConfig{});
}

TEST(Config, TaskSelectsPresetBeforeOverrides) {
  const auto cfg = parse_config("[experiment]\ntask = incremental_iws_iss\n[network]\nn_mfs = 4\n");
  EXPECT_EQ(cfg.architecture, (std::vector<LayerSpec>{{10, 4}, {2, 4}}));
}

TEST(Config, ErrorsNameFileAndLine) {
  auto message_of = [](const std::string& text) {
    try {
      parse_config(text, "exp.cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message_of("[network]\nunits = 5\nbogus = 1\n").find("exp.cfg:3"), std::string::npos);
  EXPECT_NE(message_of("[word]\nfolds = 5\nfolds = 4\n").find("exp.cfg:3"), std::string::npos);
  EXPECT_NE(message_of("\n[training]\nschedule = 0.1\n").find("exp.cfg:3"), std::string::npos);
  EXPECT_NE(message_of("[word]\nfolds = five\n").find("exp.cfg:2"), std::string::npos);
  EXPECT_NE(message_of("[signal\n").find("exp.cfg:1"), std::string::npos);
  EXPECT_THROW(parse_config("[word]\nfolds = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[training]\nschedule = -0.1:5\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/cfg"), ConfigError);
}

TEST(RawTrial, ReadsEveryDelimiter) {
  TempDir dir;
  const std::string body = "# rate=100 subject=3 session=2 trial=7 label=1\n";
  for (const char* sep : {",", ";", "\t", " "}) {
    write_text(dir / "t.txt", body + "1" + sep + "2\n3" + sep + "4\n5" + sep + "6\n");
    const auto t = io::read_raw_trial((dir / "t.txt").string());
    EXPECT_EQ(t.n_channels(), 2);
    EXPECT_EQ(t.n_samples(), 3);
    EXPECT_EQ(t.samples(1, 2), 6.0);
    EXPECT_EQ(t.label, 1);
    EXPECT_EQ(t.session_id, "2");
    EXPECT_EQ(t.sample_rate, 100.0);
  }
}

TEST(RawTrial, ParseErrorsCarryFileAndLine) {
  TempDir dir;
  const std::string path = (dir / "bad.csv").string();
  write_text(path, "# rate=100 subject=1 session=1 trial=1 label=0\n1,2\n3,x\n");
  try {
    io::read_raw_trial(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find(path + ":3"), std::string::npos);
  }
  write_text(path, "# rate=100 subject=1 session=1 trial=1 label=0\n1,2\n3\n");
  EXPECT_THROW(io::read_raw_trial(path), ParseError);
  write_text(path, "1,2\n");
  EXPECT_THROW(io::read_raw_trial(path), ParseError);
  write_text(path, "# rate=0 subject=1 session=1 trial=1 label=0\n1,2\n");
  EXPECT_THROW(io::read_raw_trial(path), ParseError);
}

TEST(FeaturesCommand, FourPointOneSecondTrial) {
  TempDir dir;
  fs::create_directories(dir / "raw");
  write_trial(dir / "raw", "1", 3, 4.1, 100, 0, "1", 1);
  ExperimentConfig cfg;
  cfg.data_path = (dir / "raw").string();
  cfg.out_path = (dir / "out").string();
  const auto result = cli::run_features(cfg);
  const auto lines = lines_of(slurp(dir / "out" / cli::kFeaturesFile));
  ASSERT_EQ(lines.size(), 38u);
  EXPECT_EQ(lines[0].rfind("instance_id,session_id,trial_id,label,f1,", 0), 0u);
  EXPECT_NE(lines[0].find(",f15"), std::string::npos);
  EXPECT_EQ(lines[0].find(",f16"), std::string::npos);
}

TEST(FeaturesCommand, EmptyDirectoryIsADataError) {
  TempDir dir;
  fs::create_directories(dir / "raw");
  ExperimentConfig cfg;
  cfg.data_path = (dir / "raw").string();
  cfg.out_path = (dir / "out").string();
  try {
    cli::run_features(cfg);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_EQ(cli::exit_code_for(e), cli::ExitCode::data_error);
  }
  EXPECT_FALSE(fs::exists(dir / "out" / cli::kFeaturesFile));
}

TEST(FeaturesCommand, RerunIsByteIdentical) {
  TempDir dir;
  fs::create_directories(dir / "raw");
  for (int t = 0; t < 3; ++t) write_trial(dir / "raw", std::to_string(t + 1), 2, 1.2, 128, t % 2, "1", t);
  ExperimentConfig cfg;
  cfg.data_path = (dir / "raw").string();
  cfg.out_path = (dir / "a").string();
  cli::run_features(cfg);
  cfg.out_path = (dir / "b").string();
  cli::run_features(cfg);
  EXPECT_EQ(slurp(dir / "a" / cli::kFeaturesFile), slurp(dir / "b" / cli::kFeaturesFile));
  const auto table = io::read_feature_table((dir / "a" / cli::kFeaturesFile).string());
  EXPECT_EQ(table.features.cols(), 10);
  EXPECT_EQ(table.instance_ids.front(), "1-1-1");
}

TEST(TrainCommand, BothPresetArchitectures) {
  TempDir dir;
  const auto words5 = synthetic::blob_words(1, 5, 2, 70, 3);
  save_table(dir / "words5.csv", words_table(words5));
  const auto words2 = synthetic::blob_words(2, 2, 3, 70, 3);
  save_table(dir / "words2.csv", words_table(words2));

  auto word = ExperimentConfig::word_preset();
  word.schedule = {{0.03, 2}};
  word.data_path = (dir / "words5.csv").string();
  word.out_path = (dir / "w").string();
  cli::run_train(word);
  EXPECT_EQ(lines_of(slurp(dir / "w" / cli::kHistoryFile)).size(), 3u);

  auto inc = ExperimentConfig::incremental_preset();
  inc.schedule = {{0.001, 1}};
  inc.data_path = (dir / "words2.csv").string();
  inc.out_path = (dir / "i").string();
  cli::run_train(inc);
  const auto model = io::read_model_file((dir / "i" / cli::kModelFile).string());
  EXPECT_EQ(model.specs(), inc.architecture);
  EXPECT_EQ(model.input_dim(), 70);

  inc.data_path = word.data_path;
  EXPECT_THROW(cli::run_train(inc), ConfigError);
}

TEST(TrainCommand, ModelRoundTripIsExact) {
  TempDir dir;
  save_table(dir / "f.csv", words_table(synthetic::blob_words(3, 2, 4, 3, 3)));
  ExperimentConfig cfg;
  cfg.architecture = {{3, 2}, {2, 3}};
  cfg.schedule = {{0.05, 5}};
  cfg.data_path = (dir / "f.csv").string();
  cfg.out_path = (dir / "out").string();
  cli::run_train(cfg);
  const std::string text = slurp(dir / "out" / cli::kModelFile);
  const auto net = io::read_model_file((dir / "out" / cli::kModelFile).string());
  std::ostringstream again;
  io::write_model(again, net);
  EXPECT_EQ(again.str(), text);

  auto p = init_network<double>(2, {{2, 3}}, InitConfig{9, MfSpan::fixed_unit_interval, 1.0});
  std::ostringstream a;
  io::write_model(a, p);
  std::istringstream in(a.str());
  const auto q = io::read_model(in);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(q.layer(0)[k].params().weights, p.layer(0)[k].params().weights);
    EXPECT_EQ(q.layer(0)[k].params().lo, p.layer(0)[k].params().lo);
  }
}

TEST(WordCommand, FoldRowsAndSummary) {
  TempDir dir;
  save_table(dir / "f.csv", words_table(synthetic::blob_words(4, 5, 5, 5, 5)));
  ExperimentConfig cfg;
  cfg.architecture = {{5, 3}};
  cfg.schedule = {{0.03, 150}, {0.01, 50}};
  cfg.data_path = (dir / "f.csv").string();
  cfg.out_path = (dir / "out").string();
  cli::run_word_experiment(cfg);
  const auto lines = lines_of(slurp(dir / "out" / cli::kWordFoldsFile));
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], "fold,n_train,n_test,accuracy,accuracy_std");
  EXPECT_EQ(lines[1].rfind("0,20,5,", 0), 0u);
  EXPECT_EQ(lines[6].rfind("mean,,25,", 0), 0u);
  const double mean = std::stod(lines[6].substr(9));
  EXPECT_GE(mean, 0.95);
}

TEST(IncrementalCommand, OutputSchema) {
  TempDir dir;
  save_table(dir / "f.csv", sessions_table(synthetic::stationary_sessions(5, 3, 6, 2, 3)));
  auto cfg = ExperimentConfig::incremental_preset();
  cfg.architecture = {{3, 2}, {2, 2}};
  cfg.epochs_per_session = 5;
  cfg.reference_epochs = 10;
  cfg.repeats = 2;
  cfg.data_path = (dir / "f.csv").string();
  cfg.out_path = (dir / "out").string();
  cli::run_incremental_experiment(cfg);
  const auto runs = lines_of(slurp(dir / "out" / cli::kIncrementalRunsFile));
  ASSERT_EQ(runs.size(), 7u);
  EXPECT_EQ(runs[0],
            "repeat,seed,session,train_accuracy,test_accuracy,f1,sensitivity,specificity,balanced");
  const auto summary = lines_of(slurp(dir / "out" / cli::kIncrementalSummaryFile));
  ASSERT_EQ(summary.size(), 4u);
  EXPECT_EQ(summary[1].rfind("s0,2,", 0), 0u);
  const auto ref = lines_of(slurp(dir / "out" / cli::kReferenceSummaryFile));
  ASSERT_EQ(ref.size(), 2u);
  EXPECT_EQ(ref[1].rfind("all,2,", 0), 0u);
  EXPECT_EQ(lines_of(slurp(dir / "out" / cli::kReferenceRunsFile)).size(), 3u);
}

TEST(IncrementalCommand, SingleRepeatHasZeroStd) {
  TempDir dir;
  save_table(dir / "f.csv", sessions_table(synthetic::stationary_sessions(6, 2, 4, 2, 2)));
  auto cfg = ExperimentConfig::incremental_preset();
  cfg.architecture = {{2, 2}, {2, 2}};
  cfg.epochs_per_session = 3;
  cfg.reference_epochs = 3;
  cfg.repeats = 1;
  cfg.data_path = (dir / "f.csv").string();
  cfg.out_path = (dir / "out").string();
  cli::run_incremental_experiment(cfg);
  const auto summary = lines_of(slurp(dir / "out" / cli::kIncrementalSummaryFile));
  for (std::size_t l = 1; l < summary.size(); ++l) {
    std::istringstream row(summary[l]);
    std::vector<std::string> cells;
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 14u);
    for (std::size_t c = 3; c < cells.size(); c += 2) EXPECT_EQ(cells[c], "0");
  }
}

TEST(Gradcheck, PassesAndDetectsCorruption) {
  ExperimentConfig cfg;
  cfg.gradcheck_networks = 5;
  const auto ok = cli::gradcheck(cfg);
  EXPECT_TRUE(ok.passed);
  EXPECT_LT(ok.max_error, 1e-4);
  EXPECT_EQ(ok.errors.size(), 5u);
  for (Index n : ok.checked) EXPECT_GT(n, 0);
  const auto bad = cli::gradcheck(cfg, true);
  EXPECT_FALSE(bad.passed);
  EXPECT_EQ(cli::run_gradcheck(cfg, true).exit_code, cli::ExitCode::acceptance_failure);
}

TEST(ExitCodes, MapExceptionTypes) {
  EXPECT_EQ(cli::exit_code_for(ConfigError("x")), cli::ExitCode::usage_error);
  EXPECT_EQ(cli::exit_code_for(DataError("x")), cli::ExitCode::data_error);
  EXPECT_EQ(cli::exit_code_for(ParseError("f", 1, "x")), cli::ExitCode::data_error);
}
