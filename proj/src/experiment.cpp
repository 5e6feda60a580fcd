#include "xsl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "xsl/error.hpp"

namespace xsl {

std::string_view to_string(CorpusSource s) {
  switch (s) {
    case CorpusSource::Symbolic: return "symbolic";
    case CorpusSource::Synthetic: return "synthetic";
    case CorpusSource::Visual: return "visual";
    case CorpusSource::VisualSynthetic: return "visual_synthetic";
  }
  return "?";
}

CorpusSource parse_corpus_source(std::string_view name) {
  if (name == "symbolic") return CorpusSource::Symbolic;
  if (name == "synthetic") return CorpusSource::Synthetic;
  if (name == "visual") return CorpusSource::Visual;
  if (name == "visual_synthetic") return CorpusSource::VisualSynthetic;
  throw ConfigError("unknown corpus source '" + std::string(name) +
                    "' (expected symbolic|synthetic|visual|visual_synthetic)");
}

namespace {

std::filesystem::path existing_path(const Config& c, std::string_view key) {
  std::filesystem::path p = c.require(key);
  if (!std::filesystem::exists(p)) throw DataError(std::string(key) + ": no such file " + p.string());
  return p;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

FrequencyDistribution parse_distribution(const std::string& s) {
  if (s == "zipf") return FrequencyDistribution::Zipf;
  if (s == "uniform") return FrequencyDistribution::Uniform;
  throw ConfigError("unknown distribution '" + s + "' (expected zipf|uniform)");
}

EncoderMode parse_encoder(const std::string& s) {
  if (s == "projection") return EncoderMode::Projection;
  if (s == "frozen") return EncoderMode::Frozen;
  throw ConfigError("unknown encoder '" + s + "' (expected projection|frozen)");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  ExperimentConfig e;
  e.source = parse_corpus_source(c.get("corpus.source", "synthetic"));
  e.data_seed = c.get_u64("corpus.seed", e.data_seed);
  switch (e.source) {
    case CorpusSource::Symbolic: e.corpus_path = existing_path(c, "corpus.path"); break;
    case CorpusSource::Visual:
      e.scenes_path = existing_path(c, "corpus.scenes");
      e.features_path = existing_path(c, "corpus.features");
      break;
    default: break;
  }

  auto& s = e.synth;
  s.n_words = c.get_size("synthetic.words", s.n_words);
  s.n_objects = c.get_size("synthetic.objects", s.n_objects);
  s.n_function_words = c.get_size("synthetic.function_words", s.n_function_words);
  s.n_scenes = c.get_size("synthetic.scenes", s.n_scenes);
  s.words_per_scene = c.get_double("synthetic.words_per_scene", s.words_per_scene);
  s.objects_per_scene = c.get_double("synthetic.objects_per_scene", s.objects_per_scene);
  s.referential_noise = c.get_double("synthetic.noise", s.referential_noise);
  s.distribution = parse_distribution(c.get("synthetic.distribution", "zipf"));
  s.zipf_exponent = c.get_double("synthetic.zipf_exponent", s.zipf_exponent);

  auto& v = e.surrogate;
  v.n_categories = c.get_size("visual_synthetic.categories", v.n_categories);
  v.feature_dim = c.get_size("visual_synthetic.feature_dim", v.feature_dim);
  v.n_images = c.get_size("visual_synthetic.images", v.n_images);
  v.objects_per_image = c.get_double("visual_synthetic.objects_per_image", v.objects_per_image);
  v.max_objects_per_image = c.get_size("visual_synthetic.max_objects_per_image", v.max_objects_per_image);
  v.max_captions = c.get_size("visual_synthetic.max_captions", v.max_captions);
  v.mention_prob = c.get_double("visual_synthetic.mention_prob", v.mention_prob);
  v.zipf_exponent = c.get_double("visual_synthetic.zipf_exponent", v.zipf_exponent);
  v.shared_scale = c.get_double("visual_synthetic.shared_scale", v.shared_scale);
  v.category_scale = c.get_double("visual_synthetic.category_scale", v.category_scale);
  v.instance_noise = c.get_double("visual_synthetic.instance_noise", v.instance_noise);
  v.rectify = c.get_bool("visual_synthetic.rectify", v.rectify);
  v.heldout_rank = c.get_size("visual_synthetic.heldout_rank", v.heldout_rank);
  v.heldout_words = c.get_list("visual_synthetic.heldout_words", v.heldout_words);

  e.novel_words = c.get_size("novel.words", e.novel_words);
  e.novel_objects = c.get_size("novel.objects", e.novel_objects);
  e.scenes_per_word = c.get_size("novel.scenes_per_word", e.scenes_per_word);
  e.familiar_per_scene = c.get_size("novel.familiar_per_scene", e.familiar_per_scene);

  e.holdout_words = as_set(c.get_list("holdout.words", {"dog", "puppy"}));
  e.holdout_labels = as_set(c.get_list("holdout.labels", {"dog", "puppy"}));
  e.prompts = c.get_list("holdout.prompts", e.prompts);
  e.exclude_multi = c.get_bool("holdout.exclude_multi", e.exclude_multi);
  e.encoder = parse_encoder(c.get("train.encoder", "projection"));

  auto& t = e.train;
  t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
  t.negatives = c.get_size("train.negatives", t.negatives);
  t.max_epochs = c.get_size("train.epochs", t.max_epochs);
  t.margin = c.get_double("train.margin", t.margin);
  t.init_range = c.get_double("train.init_range", t.init_range);
  t.dim = c.get_size("train.dim", t.dim);
  // Inverse-frequency weighting defaults on for symbolic data, off for visual.
  t.inverse_frequency = c.get_bool("train.inverse_frequency", !e.visual());
  t.exclude_scene_items = c.get_bool("train.exclude_scene_items", t.exclude_scene_items);
  t.resample_negatives = c.get_bool("train.resample_negatives", t.resample_negatives);
  t.validate();

  if (auto losses = c.get_list("train.losses", {}); !losses.empty()) {
    e.losses.clear();
    for (const auto& l : losses) e.losses.push_back(parse_loss_kind(l));
  }
  if (auto strategies = c.get_list("eval.strategies", {}); !strategies.empty()) {
    e.strategies.clear();
    for (const auto& st : strategies) e.strategies.push_back(parse_strategy(st));
  }
  e.normalization = parse_normalization(c.get("eval.normalization", "shift"));

  e.search_budget = c.get_size("search.budget", 0);
  e.search.lr_min = c.get_double("search.lr_min", e.search.lr_min);
  e.search.lr_max = c.get_double("search.lr_max", e.search.lr_max);
  e.search.init_min = c.get_double("search.init_min", e.search.init_min);
  e.search.init_max = c.get_double("search.init_max", e.search.init_max);
  if (auto dims = c.get_list("search.dims", {}); !dims.empty()) {
    e.search.dims.clear();
    for (const auto& d : dims) {
      Config one;
      one.set("d", d);
      e.search.dims.push_back(one.get_size("d", 0));
    }
  }

  e.runs = c.get_size("run.runs", e.visual() ? 30 : 25);
  e.base_seed = c.get_u64("run.seed", 0);
  e.workers = static_cast<int>(c.get_int("run.workers", 1));
  e.out_dir = c.get("run.out", "results");

  if (e.runs < 1) throw ConfigError("runs must be >= 1");
  if (e.workers < 1) throw ConfigError("workers must be >= 1");
  if (e.losses.empty()) throw ConfigError("no loss kinds configured");
  if (e.strategies.empty()) throw ConfigError("no selection strategies configured");
  if (e.visual() && e.prompts.empty()) throw ConfigError("holdout.prompts must not be empty");
  // Worker count and output location do not change results, so they stay out of the hash.
  Config identity;
  for (const auto& [k, v] : c.entries())
    if (k != "run.workers" && k != "run.out") identity.set(k, v);
  e.config_hash = identity.hash();
  return e;
}

Corpus load_source_corpus(const ExperimentConfig& cfg) {
  switch (cfg.source) {
    case CorpusSource::Symbolic: return load_symbolic(cfg.corpus_path);
    case CorpusSource::Synthetic: return generate_synthetic(cfg.synth, cfg.data_seed);
    case CorpusSource::Visual: return load_visual(cfg.scenes_path, cfg.features_path);
    case CorpusSource::VisualSynthetic: {
      const auto ds = generate_visual_surrogate(cfg.surrogate, cfg.data_seed);
      return build_visual_corpus(ds.records, ds.features);
    }
  }
  throw ConfigError("unknown corpus source");
}

PreparedData prepare_data(const ExperimentConfig& cfg) { return prepare_data(cfg, load_source_corpus(cfg)); }

PreparedData prepare_data(const ExperimentConfig& cfg, Corpus source) {
  PreparedData d;
  d.visual = source.inventory.has_features();
  if (!d.visual) {
    d.train = inject_novel_items(std::move(source), cfg.novel_words, cfg.novel_objects);
    if (d.train.gold) d.familiar_scenes = gold_test_scenes(d.train);
    return d;
  }
  auto split = holdout_category(source, cfg.holdout_words, cfg.holdout_labels);
  if (split.train.scenes.empty()) throw DataError("holdout left no training scenes");
  auto novel = novel_visual_test_scenes(split.train, split.eval_scenes, cfg.holdout_labels, cfg.prompts,
                                        cfg.exclude_multi);
  if (novel.scenes.empty()) throw DataError("holdout produced no novel test scenes");
  d.novel_scenes = std::move(novel.scenes);
  d.excluded_multi = novel.excluded_multi;
  d.familiar_scenes = familiar_visual_test_scenes(split.train, split.train.scenes);
  d.train = std::move(split.train);
  return d;
}

std::vector<TestScene> novel_scenes_for(const ExperimentConfig& cfg, const PreparedData& data,
                                        std::uint64_t seed) {
  if (data.visual) return data.novel_scenes;
  return build_novel_test_scenes(data.train, cfg.novel_words, cfg.scenes_per_word, cfg.familiar_per_scene,
                                 seed);
}

TrainResult train_one(const ExperimentConfig& cfg, const PreparedData& data, LossKind loss,
                      std::uint64_t seed) {
  TrainConfig tc = cfg.train;
  tc.loss = loss;
  tc.seed = seed;
  return train(init_model(data.train, tc.dim, tc.init_range, seed, cfg.encoder), data.train, tc);
}

std::vector<ResultRow> evaluate_model(const ExperimentConfig& cfg, const PreparedData& data,
                                      const Model& model, LossKind loss, std::uint64_t seed,
                                      const TrainResult* trained) {
  const std::string lname(to_string(loss));
  std::vector<ResultRow> rows;
  const auto plain = [&](const std::string& metric, double value) {
    rows.push_back({lname, lname, "none", seed, metric, value});
  };
  if (data.train.gold && data.train.gold->size() > 0) plain("best_f", best_f(model, data.train));

  const auto novel = novel_scenes_for(cfg, data, seed);
  plain("novel_chance", chance_level(novel));
  if (!data.familiar_scenes.empty()) plain("familiar_chance", chance_level(data.familiar_scenes));
  for (auto s : cfg.strategies) {
    const std::string sname(to_string(s));
    const auto cond = lname + "/" + sname;
    const auto a = accuracy(model, novel, s, cfg.normalization);
    rows.push_back({cond, lname, sname, seed, "novel_accuracy", a.accuracy()});
    rows.push_back({cond, lname, sname, seed, "novel_tie_rate", a.tie_rate()});
    if (!data.familiar_scenes.empty()) {
      const auto f = accuracy(model, data.familiar_scenes, s, cfg.normalization);
      rows.push_back({cond, lname, sname, seed, "familiar_accuracy", f.accuracy()});
      rows.push_back({cond, lname, sname, seed, "familiar_tie_rate", f.tie_rate()});
    }
  }
  if (trained) {
    plain("snapshot_loss", trained->best_loss());
    plain("best_epoch", static_cast<double>(trained->best_epoch));
  }
  return rows;
}

RunOutcome run_one(const ExperimentConfig& cfg, const PreparedData& data, LossKind loss,
                   std::size_t run_index) {
  RunOutcome r;
  r.loss = loss;
  r.run_index = run_index;
  r.seed = run_seed(cfg, run_index);
  try {
    const auto trained = train_one(cfg, data, loss, r.seed);
    r.rows = evaluate_model(cfg, data, trained.best, loss, r.seed, &trained);
    r.ok = true;
  } catch (const std::exception& ex) {
    r.error = ex.what();
  }
  return r;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const PreparedData& data) {
  SweepResult sweep;
  const std::size_t n = cfg.losses.size() * cfg.runs;
  sweep.runs.resize(n);
  const auto total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    const auto k = static_cast<std::size_t>(i);
    sweep.runs[k] = run_one(cfg, data, cfg.losses[k / cfg.runs], k % cfg.runs);
  }
  for (const auto& r : sweep.runs) {
    if (!r.ok) {
      ++sweep.failures;
      continue;
    }
    sweep.rows.insert(sweep.rows.end(), r.rows.begin(), r.rows.end());
  }
  sweep.aggregates = aggregate_runs(sweep.rows);
  return sweep;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

}  // namespace

void write_sweep(const SweepResult& sweep, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  {
    auto out = open_out(dir / "results.csv");
    write_results_csv(sweep.rows, out);
  }
  {
    auto out = open_out(dir / "aggregate.csv");
    write_aggregate_csv(sweep.aggregates, out);
  }
  {
    auto out = open_out(dir / "seeds.csv");
    out << "loss,run,seed,config_hash,status,error\n";
    for (const auto& r : sweep.runs) {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out << to_string(r.loss) << ',' << r.run_index << ',' << r.seed << ',' << cfg.config_hash << ','
          << (r.ok ? "ok" : "failed") << ',' << err << '\n';
    }
  }
}

// ---- report ----

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

Report build_report(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a results directory: " + dir.string());
  const auto results_path = dir / "results.csv";
  std::ifstream in(results_path);
  if (!in) throw DataError("missing " + results_path.string());
  const auto rows = read_results_csv(in);
  if (rows.empty()) throw DataError(results_path.string() + " has no rows");
  const auto aggs = aggregate_runs(rows);

  if (std::ifstream stored_in(dir / "aggregate.csv"); stored_in) {
    const auto stored = read_aggregate_csv(stored_in);
    if (stored.size() != aggs.size()) throw DataError("aggregate.csv does not match results.csv");
    for (std::size_t i = 0; i < aggs.size(); ++i) {
      const auto& a = aggs[i];
      const auto& b = stored[i];
      if (a.condition != b.condition || a.metric != b.metric || a.n != b.n ||
          std::abs(a.mean - b.mean) > 1e-12 || std::abs(a.sd - b.sd) > 1e-12)
        throw DataError("aggregate.csv disagrees with results.csv at " + a.condition + "/" + a.metric);
    }
  }

  // Chance baselines are stored per loss as strategy-independent rows.
  std::map<std::pair<std::string, std::string>, double> chance;
  std::map<std::string, std::string> loss_of;
  for (const auto& r : rows) loss_of[r.condition] = r.loss;
  for (const auto& a : aggs) {
    if (a.metric == "novel_chance") chance[{a.condition, "novel_accuracy"}] = a.mean;
    if (a.metric == "familiar_chance") chance[{a.condition, "familiar_accuracy"}] = a.mean;
  }

  Report rep;
  std::ostringstream t;
  for (const std::string metric : {"novel_accuracy", "familiar_accuracy", "best_f"}) {
    std::vector<const Aggregate*> sel;
    for (const auto& a : aggs)
      if (a.metric == metric) sel.push_back(&a);
    if (sel.empty()) continue;
    t << metric << "\n";
    char head[128];
    std::snprintf(head, sizeof head, "  %-24s %8s %8s %5s %8s\n", "condition", "mean", "sd", "n", "chance");
    t << head;
    for (const auto* a : sel) {
      auto it = chance.find({loss_of[a->condition], metric});
      const double base = it == chance.end() ? 0.0 : it->second;
      char line[160];
      std::snprintf(line, sizeof line, "  %-24s %8s %8s %5zu %8s\n", a->condition.c_str(), fmt3(a->mean).c_str(),
                    a->sd_defined ? fmt3(a->sd).c_str() : "0*", a->n,
                    it == chance.end() ? "-" : fmt3(base).c_str());
      t << line;
      rep.plot.push_back({a->condition, metric, a->mean, a->sd, base});
    }
    t << "\n";
  }
  if (std::any_of(aggs.begin(), aggs.end(), [](const Aggregate& a) { return !a.sd_defined; }))
    t << "* single run: SD undefined, reported as 0\n";
  rep.table = t.str();
  return rep;
}

void write_plot_csv(std::span<const PlotRow> rows, std::ostream& out) {
  out << "condition,metric,mean,sd,baseline\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g\n", r.condition.c_str(), r.metric.c_str(), r.mean,
                  r.sd, r.baseline);
    out << buf;
  }
}

}  // namespace xsl
