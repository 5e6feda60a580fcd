#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "xsl/config.hpp"
#include "xsl/error.hpp"
#include "xsl/experiment.hpp"

using namespace xsl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kSmall = R"(
[corpus]
source = synthetic
[train]
dim = 12
epochs = 4
[run]
runs = 2
)";

}  // namespace

TEST(Config, ParsesSectionsCommentsAndTypes) {
  const auto c = Config::parse(R"(
# leading comment
top = 1
[train]
learning_rate = 0.05   # trailing comment
negatives=7
inverse_frequency = off
; another comment
[eval]
strategies = similarity , bayes
)");
  EXPECT_EQ(c.get_int("top", 0), 1);
  EXPECT_DOUBLE_EQ(c.get_double("train.learning_rate", 0), 0.05);
  EXPECT_EQ(c.get_size("train.negatives", 0), 7u);
  EXPECT_FALSE(c.get_bool("train.inverse_frequency", true));
  EXPECT_EQ(c.get_list("eval.strategies", {}), (std::vector<std::string>{"similarity", "bayes"}));
  EXPECT_EQ(c.get("missing.key", "dflt"), "dflt");
  EXPECT_THROW(c.require("missing.key"), ConfigError);
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("[a\n"), ConfigError);
  EXPECT_THROW(Config::parse("just words\n"), ConfigError);
  EXPECT_THROW(Config::parse("= 3\n"), ConfigError);
  const auto c = Config::parse("n = abc\nb = maybe\nneg = -2\n");
  EXPECT_THROW(c.get_int("n", 0), ConfigError);
  EXPECT_THROW(c.get_bool("b", false), ConfigError);
  EXPECT_THROW(c.get_size("neg", 0), ConfigError);
  try {
    Config::parse("[a]\nx = 1\n\nx = 2\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos);
  }
  EXPECT_THROW(Config::load("/nonexistent.ini"), ConfigError);
}

TEST(Config, HashIsCanonical) {
  const auto a = Config::parse("[x]\na = 1\nb = 2\n");
  const auto b = Config::parse("# same content, different layout\n[x]\nb=2\n\na   =   1\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  auto c = a;
  c.set("x.a", "3");
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(ExperimentConfig, DefaultsAndValidation) {
  const auto e = ExperimentConfig::from_config(Config{});
  EXPECT_EQ(e.source, CorpusSource::Synthetic);
  EXPECT_EQ(e.runs, 25u);
  EXPECT_EQ(e.losses.size(), 3u);
  EXPECT_EQ(e.strategies.size(), 2u);
  EXPECT_TRUE(e.train.inverse_frequency);

  const auto v = ExperimentConfig::from_config(Config::parse("[corpus]\nsource = visual_synthetic\n"));
  EXPECT_EQ(v.runs, 30u);
  EXPECT_FALSE(v.train.inverse_frequency);

  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("[run]\nruns = 0\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("[corpus]\nsource = tape\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("[corpus]\nsource = symbolic\n")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("[corpus]\nsource = symbolic\npath = /nope.txt\n")),
               DataError);
  EXPECT_THROW(ExperimentConfig::from_config(Config::parse("[train]\nlosses = words, both\n")), ConfigError);
}

TEST(Experiment, SymbolicSweepRowsAndDeterminism) {
  auto cfg = Config::parse(kSmall);
  const auto e = ExperimentConfig::from_config(cfg);
  const auto data = prepare_data(e);
  EXPECT_EQ(novel_words(data.train).size(), 5u);
  const auto sweep = run_sweep(e, data);
  EXPECT_EQ(sweep.failures, 0u);
  EXPECT_EQ(sweep.runs.size(), 6u);
  std::size_t novel_rows = 0, bestf_rows = 0;
  for (const auto& r : sweep.rows) {
    novel_rows += r.metric == "novel_accuracy";
    bestf_rows += r.metric == "best_f";
  }
  EXPECT_EQ(novel_rows, 3u * 2u * 2u);
  EXPECT_EQ(bestf_rows, 3u * 2u);

  cfg.set("run.workers", "3");
  const auto par = run_sweep(ExperimentConfig::from_config(cfg), data);
  EXPECT_EQ(par.rows, sweep.rows);
}

TEST(Experiment, ReplayIsByteIdentical) {
  TempDir a("xsl_exp_a"), b("xsl_exp_b");
  const auto e = ExperimentConfig::from_config(Config::parse(kSmall));
  write_sweep(run_sweep(e, prepare_data(e)), e, a.path);
  write_sweep(run_sweep(e, prepare_data(e)), e, b.path);
  for (auto f : {"results.csv", "aggregate.csv", "seeds.csv"}) EXPECT_EQ(slurp(a.path / f), slurp(b.path / f)) << f;
}

TEST(Experiment, SingleConditionReproducesItsRows) {
  const auto e = ExperimentConfig::from_config(Config::parse(kSmall));
  const auto data = prepare_data(e);
  const auto sweep = run_sweep(e, data);
  const auto one = run_one(e, data, LossKind::OverObjects, 1);
  ASSERT_TRUE(one.ok);
  EXPECT_EQ(one.seed, e.base_seed + 1);
  const auto& stored = sweep.runs[1 * e.runs + 1];  // objects is the second loss
  EXPECT_EQ(stored.loss, LossKind::OverObjects);
  EXPECT_EQ(one.rows, stored.rows);
}

TEST(Experiment, VisualSurrogateSweep) {
  auto cfg = Config::parse(R"(
[corpus]
source = visual_synthetic
[visual_synthetic]
images = 150
feature_dim = 8
[train]
dim = 8
epochs = 3
[run]
runs = 1
)");
  const auto e = ExperimentConfig::from_config(cfg);
  const auto data = prepare_data(e);
  EXPECT_TRUE(data.visual);
  EXPECT_FALSE(data.novel_scenes.empty());
  EXPECT_FALSE(data.familiar_scenes.empty());
  for (const auto& s : data.train.scenes)
    for (auto o : s.objects) ASSERT_FALSE(data.train.inventory.label(o) == "dog");
  const auto sweep = run_sweep(e, data);
  EXPECT_EQ(sweep.failures, 0u);
  for (const auto& r : sweep.rows) EXPECT_NE(r.metric, "best_f");
}

TEST(Experiment, FailedRunIsRecordedAndSweepContinues) {
  auto e = ExperimentConfig::from_config(Config::parse(kSmall));
  auto data = prepare_data(e);
  e.novel_words = 50;  // more than the corpus holds: evaluation throws
  const auto sweep = run_sweep(e, data);
  EXPECT_EQ(sweep.failures, sweep.runs.size());
  EXPECT_FALSE(sweep.runs[0].error.empty());
}

TEST(Report, TableAndConsistency) {
  TempDir dir("xsl_report");
  const auto e = ExperimentConfig::from_config(Config::parse(kSmall));
  write_sweep(run_sweep(e, prepare_data(e)), e, dir.path);
  const auto rep = build_report(dir.path);
  std::size_t novel_conditions = 0;
  for (const auto& p : rep.plot)
    if (p.metric == "novel_accuracy") {
      ++novel_conditions;
      EXPECT_NEAR(p.baseline, 1.0 / 3.0, 1e-12);
    }
  EXPECT_EQ(novel_conditions, 6u);
  EXPECT_NE(rep.table.find("objects/bayes"), std::string::npos);
  std::ostringstream plot;
  write_plot_csv(rep.plot, plot);
  EXPECT_EQ(plot.str().substr(0, 33), "condition,metric,mean,sd,baseline");

  // Tampering with the stored aggregates is detected.
  auto agg = slurp(dir.path / "aggregate.csv");
  const auto pos = agg.find('\n', agg.find('\n') + 1);
  agg.insert(pos, "1");
  std::ofstream(dir.path / "aggregate.csv", std::ios::binary) << agg;
  EXPECT_THROW(build_report(dir.path), DataError);
}

TEST(Report, SingleRunFlagsSd) {
  TempDir dir("xsl_report_single");
  auto cfg = Config::parse(kSmall);
  cfg.set("run.runs", "1");
  const auto e = ExperimentConfig::from_config(cfg);
  write_sweep(run_sweep(e, prepare_data(e)), e, dir.path);
  EXPECT_NE(build_report(dir.path).table.find("SD undefined"), std::string::npos);
}

TEST(Report, MissingInputs) {
  TempDir dir("xsl_report_empty");
  EXPECT_THROW(build_report(dir.path), DataError);
  EXPECT_THROW(build_report(dir.path / "nope"), DataError);
  std::ofstream(dir.path / "results.csv") << "garbage\n";
  EXPECT_THROW(build_report(dir.path), DataError);
}
