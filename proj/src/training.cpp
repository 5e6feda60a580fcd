#include "xsl/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "xsl/error.hpp"

namespace xsl {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::OverObjects: return "objects";
    case LossKind::OverWords: return "words";
    case LossKind::Joint: return "joint";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "objects") return LossKind::OverObjects;
  if (name == "words") return LossKind::OverWords;
  if (name == "joint") return LossKind::Joint;
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected objects|words|joint)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be finite and >= 0");
  if (negatives < 1) throw ConfigError("negatives per positive must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  if (!(init_range > 0.0)) throw ConfigError("init_range must be positive");
  if (dim < 1) throw ConfigError("dim must be >= 1");
}

// ---- losses ----

namespace {

void add_to(Vec& acc, std::span<const double> g, double sign) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sign * g[i];
}

}  // namespace

PairGradient loss_and_gradient(const Model& model, LossKind kind, WordId w, ObjectId o,
                               std::span<const ObjectId> obj_negs,
                               std::span<const WordId> word_negs, double margin) {
  const bool use_objects = kind != LossKind::OverWords;
  const bool use_words = kind != LossKind::OverObjects;
  if (use_objects && obj_negs.empty()) throw ConfigError("object negatives must not be empty");
  if (use_words && word_negs.empty()) throw ConfigError("word negatives must not be empty");
  if (use_objects && std::find(obj_negs.begin(), obj_negs.end(), o) != obj_negs.end())
    throw ConfigError("positive object drawn as its own negative");
  if (use_words && std::find(word_negs.begin(), word_negs.end(), w) != word_negs.end())
    throw ConfigError("positive word drawn as its own negative");

  const auto wv = model.word(w);
  const auto ov = model.encode_object(o);
  const double pos = cosine(wv, ov);
  const auto dpos = cosine_grad(wv, ov);
  const auto dim = model.dim();

  PairGradient g;
  Vec dw(dim, 0.0), dobj(dim, 0.0);
  if (use_objects) {
    for (auto neg : obj_negs) {
      const auto nv = model.encode_object(neg);
      const double term = margin - pos + cosine(wv, nv);
      if (term <= 0.0) continue;
      g.loss += term;
      const auto dn = cosine_grad(wv, nv);
      add_to(dw, dpos.du, -1.0);
      add_to(dw, dn.du, 1.0);
      add_to(dobj, dpos.dv, -1.0);
      g.objects.emplace_back(neg, dn.dv);
    }
  }
  if (use_words) {
    for (auto neg : word_negs) {
      const auto nv = model.word(neg);
      const double term = margin - pos + cosine(nv, ov);
      if (term <= 0.0) continue;
      g.loss += term;
      const auto dn = cosine_grad(nv, ov);
      add_to(dw, dpos.du, -1.0);
      add_to(dobj, dpos.dv, -1.0);
      add_to(dobj, dn.dv, 1.0);
      g.words.emplace_back(neg, dn.du);
    }
  }
  g.words.emplace(g.words.begin(), w, std::move(dw));
  g.objects.emplace(g.objects.begin(), o, std::move(dobj));
  return g;
}

double loss_over_objects(const Model& model, WordId w, ObjectId o, std::span<const ObjectId> negs,
                         double margin) {
  return loss_and_gradient(model, LossKind::OverObjects, w, o, negs, {}, margin).loss;
}

double loss_over_words(const Model& model, WordId w, ObjectId o, std::span<const WordId> negs,
                       double margin) {
  return loss_and_gradient(model, LossKind::OverWords, w, o, {}, negs, margin).loss;
}

double loss_joint(const Model& model, WordId w, ObjectId o, std::span<const ObjectId> obj_negs,
                  std::span<const WordId> word_negs, double margin) {
  return loss_over_words(model, w, o, word_negs, margin) +
         loss_over_objects(model, w, o, obj_negs, margin);
}

std::vector<double> dense_gradient(const Model& model, const PairGradient& g, double scale) {
  std::vector<double> out(model.parameters().size(), 0.0);
  const auto dim = model.dim();
  for (const auto& [w, v] : g.words) {
    double* dst = out.data() + w.index() * dim;
    for (std::size_t k = 0; k < dim; ++k) dst[k] += scale * v[k];
  }
  for (const auto& [o, v] : g.objects) model.accumulate_object_grad(o, v, scale, out);
  return out;
}

void apply_gradient(Model& model, const PairGradient& g, double lr) {
  for (const auto& [w, v] : g.words) sgd_update(model.word(w), v, lr);
  for (const auto& [o, v] : g.objects) model.apply_object_grad(o, v, lr);
}

// ---- negative sampling ----

std::vector<std::uint32_t> sample_negatives(std::size_t population, std::size_t k,
                                            std::span<const std::uint32_t> exclude, Rng& rng) {
  std::vector<std::uint32_t> allowed;
  allowed.reserve(population);
  for (std::uint32_t i = 0; i < population; ++i)
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) allowed.push_back(i);
  if (allowed.empty())
    throw ConfigError("negative sampling population of " + std::to_string(population) +
                      " has nothing left after exclusions");
  std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
  std::vector<std::uint32_t> out(k);
  for (auto& v : out) v = allowed[pick(rng)];
  return out;
}

// Fast path for the common single exclusion: draw from population-1 slots
// and shift past the excluded index.
namespace {

std::vector<std::uint32_t> sample_excluding_one(std::size_t population, std::size_t k,
                                                std::uint32_t exclude, Rng& rng) {
  if (population < 2 || exclude >= population) {
    const std::uint32_t ex[1] = {exclude};
    return sample_negatives(population, k, ex, rng);
  }
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(population - 2));
  std::vector<std::uint32_t> out(k);
  for (auto& v : out) {
    v = pick(rng);
    if (v >= exclude) ++v;
  }
  return out;
}

}  // namespace

std::vector<ObjectId> sample_negative_objects(std::size_t population, std::size_t k,
                                              ObjectId exclude, Rng& rng) {
  std::vector<ObjectId> out;
  for (auto v : sample_excluding_one(population, k, exclude.value, rng)) out.push_back(ObjectId{v});
  return out;
}

std::vector<WordId> sample_negative_words(std::size_t population, std::size_t k, WordId exclude,
                                          Rng& rng) {
  std::vector<WordId> out;
  for (auto v : sample_excluding_one(population, k, exclude.value, rng)) out.push_back(WordId{v});
  return out;
}

// ---- training loop ----

namespace {

struct Positive {
  WordId word;
  ObjectId object;
  std::uint32_t scene;
};

struct Negatives {
  std::vector<ObjectId> objects;
  std::vector<WordId> words;
};

Negatives draw_negatives(const Model& model, const Corpus& corpus, const TrainConfig& cfg,
                         const Positive& p, Rng& rng) {
  Negatives n;
  const bool objs = cfg.loss != LossKind::OverWords;
  const bool words = cfg.loss != LossKind::OverObjects;
  if (!cfg.exclude_scene_items) {
    if (objs) n.objects = sample_negative_objects(model.num_objects(), cfg.negatives, p.object, rng);
    if (words) n.words = sample_negative_words(model.num_words(), cfg.negatives, p.word, rng);
    return n;
  }
  const auto& scene = corpus.scenes[p.scene];
  if (objs) {
    std::vector<std::uint32_t> ex;
    for (auto o : scene.objects) ex.push_back(o.value);
    for (auto v : sample_negatives(model.num_objects(), cfg.negatives, ex, rng))
      n.objects.push_back(ObjectId{v});
  }
  if (words) {
    std::vector<std::uint32_t> ex;
    for (auto w : scene.words) ex.push_back(w.value);
    for (auto v : sample_negatives(model.num_words(), cfg.negatives, ex, rng))
      n.words.push_back(WordId{v});
  }
  return n;
}

// Re-draws a row that collapsed to zero norm so cosine stays defined.
bool rejitter_if_degenerate(std::span<double> row, Rng& rng) {
  if (norm(row) > std::numeric_limits<double>::min()) return false;
  std::uniform_real_distribution<double> u(-1e-6, 1e-6);
  for (auto& v : row) v = u(rng);
  return true;
}

}  // namespace

TrainResult train(Model model, const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (model.num_words() != corpus.vocab.size() || model.num_objects() != corpus.inventory.size())
    throw ConfigError("model and corpus disagree on vocabulary or inventory size");

  std::vector<Positive> pairs;
  for (std::size_t s = 0; s < corpus.scenes.size(); ++s)
    for (auto [w, o] : pair_expand(corpus.scenes[s]))
      pairs.push_back({w, o, static_cast<std::uint32_t>(s)});
  if (pairs.empty()) throw ConfigError("corpus has no training pairs");

  std::vector<double> weight(pairs.size(), 1.0);
  if (cfg.inverse_frequency) {
    const auto tw = token_weights(corpus);
    for (std::size_t i = 0; i < pairs.size(); ++i) weight[i] = tw.at(pairs[i].word);
  }

  std::seed_seq seq{cfg.seed, std::uint64_t{0x7261696eULL}};
  Rng rng(seq);
  std::vector<Negatives> fixed;
  if (!cfg.resample_negatives) {
    fixed.reserve(pairs.size());
    for (const auto& p : pairs) fixed.push_back(draw_negatives(model, corpus, cfg, p, rng));
  }

  TrainResult result;
  result.config = cfg;
  result.best = model;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> pair_loss(pairs.size(), 0.0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto idx : order) {
      const auto& p = pairs[idx];
      Negatives drawn;
      const Negatives& negs =
          cfg.resample_negatives ? (drawn = draw_negatives(model, corpus, cfg, p, rng)) : fixed[idx];
      auto g = loss_and_gradient(model, cfg.loss, p.word, p.object, negs.objects, negs.words,
                                 cfg.margin);
      const double l = weight[idx] * g.loss;
      if (!std::isfinite(l))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on pair (" +
                           corpus.vocab.word(p.word) + ", " + corpus.inventory.name(p.object) +
                           "), lr=" + std::to_string(cfg.learning_rate));
      pair_loss[idx] = l;
      if (g.loss > 0.0 && cfg.learning_rate > 0.0) {
        apply_gradient(model, g, cfg.learning_rate * weight[idx]);
        for (const auto& [w, v] : g.words)
          if (rejitter_if_degenerate(model.word(w), rng)) ++result.rejitter_events;
        if (model.mode() == EncoderMode::Symbolic)
          for (const auto& [o, v] : g.objects)
            if (rejitter_if_degenerate(model.object_row(o), rng)) ++result.rejitter_events;
      }
    }
    // Canonical summation order keeps the epoch loss independent of the shuffle.
    double sum = 0.0;
    for (double l : pair_loss) sum += l;
    const double mean = sum / static_cast<double>(pairs.size());
    result.trajectory.push_back(mean);
    if (mean < best) {
      best = mean;
      result.best_epoch = epoch;
      result.best = model;
    }
  }
  if (result.rejitter_events > 0)
    std::cerr << "train: re-jittered " << result.rejitter_events << " zero-norm embedding rows\n";
  return result;
}

void write_trajectory(const TrainResult& result, std::ostream& out) {
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, result.trajectory[i]);
    out << buf;
  }
}

// ---- random search ----

SearchResult random_search(const Corpus& corpus, const TrainConfig& base, const SearchSpace& space,
                           std::size_t budget, std::uint64_t seed, int workers) {
  if (budget < 1) throw ConfigError("search budget must be >= 1");
  if (space.dims.empty() || !(space.lr_min > 0.0) || space.lr_max < space.lr_min ||
      !(space.init_min > 0.0) || space.init_max < space.init_min)
    throw ConfigError("invalid search space");

  Rng rng(seed);
  std::uniform_real_distribution<double> log_lr(std::log(space.lr_min), std::log(space.lr_max));
  std::uniform_real_distribution<double> init(space.init_min, space.init_max);
  std::uniform_int_distribution<std::size_t> dim(0, space.dims.size() - 1);

  SearchResult res;
  res.trials.resize(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    auto& c = res.trials[i].config;
    c = base;
    c.learning_rate = std::exp(log_lr(rng));
    c.init_range = init(rng);
    c.dim = space.dims[dim(rng)];
    c.seed = seed + i;
  }

  std::vector<std::string> errors(budget);
  const auto n = static_cast<std::ptrdiff_t>(budget);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& t = res.trials[static_cast<std::size_t>(i)];
    try {
      auto r = train(init_model(corpus, t.config.dim, t.config.init_range, t.config.seed), corpus,
                     t.config);
      t.snapshot_loss = r.best_loss();
      t.best_epoch = r.best_epoch;
    } catch (const NumericError& e) {
      t.snapshot_loss = std::numeric_limits<double>::infinity();
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (std::size_t i = 0; i < budget; ++i)
    if (!errors[i].empty()) std::cerr << "search trial " << i << " failed: " << errors[i] << '\n';

  const auto best = std::min_element(res.trials.begin(), res.trials.end(),
                                     [](const auto& a, const auto& b) { return a.snapshot_loss < b.snapshot_loss; });
  res.best = best->config;
  return res;
}

void write_search_log(const SearchResult& result, std::ostream& out) {
  out << "trial,lr,init_range,dim,loss,seed,snapshot_loss,best_epoch\n";
  char buf[256];
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    const auto& t = result.trials[i];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu,%s,%llu,%.17g,%zu\n", i, t.config.learning_rate,
                  t.config.init_range, t.config.dim, std::string(to_string(t.config.loss)).c_str(),
                  static_cast<unsigned long long>(t.config.seed), t.snapshot_loss, t.best_epoch);
    out << buf;
  }
}

}  // namespace xsl
