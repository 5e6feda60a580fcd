// xsl: train and evaluate cross-situational word learners.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 run failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "xsl/config.hpp"
#include "xsl/error.hpp"
#include "xsl/experiment.hpp"

namespace {

using namespace xsl;

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kRunFailure = 3;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string loss;
  std::string strategy;
  std::optional<std::size_t> runs;
  std::optional<int> workers;
  std::string model;
  std::string results_dir;
};

Config load_config(const Flags& f) {
  Config c = f.config.empty() ? Config{} : Config::load(f.config);
  if (f.runs) c.set("run.runs", std::to_string(*f.runs));
  if (f.workers) c.set("run.workers", std::to_string(*f.workers));
  if (!f.loss.empty()) c.set("train.losses", f.loss);
  if (f.strategy == "both")
    c.set("eval.strategies", "similarity,bayes");
  else if (!f.strategy.empty())
    c.set("eval.strategies", f.strategy);
  return c;
}

std::filesystem::path out_dir(const Flags& f, const ExperimentConfig& e) {
  return f.out.empty() ? e.out_dir : std::filesystem::path(f.out);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

int cmd_synth(const Flags& f) {
  auto c = load_config(f);
  if (f.seed) c.set("corpus.seed", std::to_string(*f.seed));
  const auto e = ExperimentConfig::from_config(c);
  const auto dir = out_dir(f, e);
  ensure_dir(dir);
  if (e.source == CorpusSource::Synthetic) {
    const auto corpus = generate_synthetic(e.synth, e.data_seed);
    save_symbolic(corpus, dir / "corpus.txt");
    const auto st = corpus.stats();
    std::printf("wrote %s: %zu scenes, %zu word types, %zu object types, %.2f words/scene, %.2f objects/scene\n",
                (dir / "corpus.txt").c_str(), st.scenes, st.word_types, st.object_types, st.mean_words,
                st.mean_objects);
  } else if (e.source == CorpusSource::VisualSynthetic) {
    const auto ds = generate_visual_surrogate(e.surrogate, e.data_seed);
    {
      auto out = open_out(dir / "scenes.jsonl");
      write_visual_records(ds.records, out);
    }
    {
      auto out = open_out(dir / "features.txt");
      write_features(ds.features, out);
    }
    std::printf("wrote %s and %s: %zu records, %zu instances\n", (dir / "scenes.jsonl").c_str(),
                (dir / "features.txt").c_str(), ds.records.size(), ds.features.instances.size());
  } else {
    throw ConfigError("synth needs corpus.source = synthetic or visual_synthetic");
  }
  return 0;
}

int cmd_train(const Flags& f) {
  const auto e = ExperimentConfig::from_config(load_config(f));
  const auto data = prepare_data(e);
  const auto dir = out_dir(f, e);
  ensure_dir(dir);
  const auto loss = e.losses.size() == 1 ? e.losses.front() : LossKind::Joint;
  const std::uint64_t seed = f.seed.value_or(e.base_seed);

  ExperimentConfig tuned = e;
  if (e.search_budget > 0) {
    TrainConfig base = e.train;
    base.loss = loss;
    const auto sr = random_search(data.train, base, e.search, e.search_budget, seed, e.workers);
    auto out = open_out(dir / "search.csv");
    write_search_log(sr, out);
    tuned.train = sr.best;
    std::printf("search: %zu trials, best lr=%.6g init_range=%.6g dim=%zu\n", sr.trials.size(),
                sr.best.learning_rate, sr.best.init_range, sr.best.dim);
  }
  const auto result = train_one(tuned, data, loss, seed);
  result.best.save(dir / "model.bin");
  {
    auto out = open_out(dir / "trajectory.csv");
    write_trajectory(result, out);
  }
  std::printf("trained %s loss, seed %llu: best epoch %zu, loss %.6g -> %s\n", std::string(to_string(loss)).c_str(),
              static_cast<unsigned long long>(seed), result.best_epoch, result.best_loss(),
              (dir / "model.bin").c_str());
  return 0;
}

int cmd_eval(const Flags& f) {
  const auto e = ExperimentConfig::from_config(load_config(f));
  if (f.model.empty()) throw ConfigError("eval needs --model");
  const auto data = prepare_data(e);
  const auto model = Model::load(std::filesystem::path(f.model));
  if (model.num_words() != data.train.vocab.size() || model.num_objects() != data.train.inventory.size())
    throw DataError("model does not match the configured corpus");
  const auto loss = e.losses.size() == 1 ? e.losses.front() : LossKind::Joint;
  const auto rows = evaluate_model(e, data, model, loss, f.seed.value_or(model.seed()));
  if (!f.out.empty()) {
    ensure_dir(f.out);
    auto out = open_out(std::filesystem::path(f.out) / "results.csv");
    write_results_csv(rows, out);
  }
  write_results_csv(rows, std::cout);
  return 0;
}

int cmd_run(const Flags& f) {
  auto c = load_config(f);
  if (f.seed) c.set("run.seed", std::to_string(*f.seed));
  const auto e = ExperimentConfig::from_config(c);
  const auto data = prepare_data(e);
  const auto dir = out_dir(f, e);
  const auto sweep = run_sweep(e, data);
  write_sweep(sweep, e, dir);
  {
    auto out = open_out(dir / "config.txt");
    out << "# hash " << e.config_hash << "\n" << c.canonical();
  }
  for (const auto& r : sweep.runs)
    if (!r.ok)
      std::fprintf(stderr, "run failed: loss=%s run=%zu seed=%llu: %s\n", std::string(to_string(r.loss)).c_str(),
                   r.run_index, static_cast<unsigned long long>(r.seed), r.error.c_str());
  if (!sweep.rows.empty()) std::cout << build_report(dir).table;
  std::printf("%zu runs, %zu failed; results in %s\n", sweep.runs.size(), sweep.failures, dir.c_str());
  return sweep.failures ? kRunFailure : 0;
}

int cmd_report(const Flags& f) {
  const std::filesystem::path dir = !f.results_dir.empty() ? f.results_dir : f.out;
  if (dir.empty()) throw ConfigError("report needs a results directory");
  const auto rep = build_report(dir);
  {
    auto out = open_out(dir / "plot.csv");
    write_plot_csv(rep.plot, out);
  }
  {
    auto out = open_out(dir / "report.txt");
    out << rep.table;
  }
  std::cout << rep.table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-situational word learning experiments"};
  app.require_subcommand(1);
  Flags f;

  const auto shared = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "Experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "Seed (corpus seed for synth, base seed otherwise)");
    sub->add_option("--out", f.out, "Output directory");
    sub->add_option("--loss", f.loss, "Loss kind")->check(CLI::IsMember({"objects", "words", "joint"}));
    sub->add_option("--strategy", f.strategy, "Selection strategy")
        ->check(CLI::IsMember({"similarity", "bayes", "both"}));
    sub->add_option("--runs", f.runs, "Runs per loss kind")->check(CLI::PositiveNumber);
    sub->add_option("--workers", f.workers, "Parallel workers")->check(CLI::PositiveNumber);
  };

  auto* synth = app.add_subcommand("synth", "Write a generated corpus");
  auto* train = app.add_subcommand("train", "Train one model (random search when search.budget > 0)");
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model");
  auto* run = app.add_subcommand("run", "Full sweep over loss kinds and runs");
  auto* report = app.add_subcommand("report", "Summarise a results directory");
  for (auto* s : {synth, train, eval, run, report}) shared(s);
  eval->add_option("--model", f.model, "Model file written by train")->check(CLI::ExistingFile);
  report->add_option("dir", f.results_dir, "Results directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*synth) return cmd_synth(f);
    if (*train) return cmd_train(f);
    if (*eval) return cmd_eval(f);
    if (*run) return cmd_run(f);
    if (*report) return cmd_report(f);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kRunFailure;
  }
  return kUsage;
}
