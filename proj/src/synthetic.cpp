#include "xsl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xsl/error.hpp"

namespace xsl {

namespace {

std::vector<double> rank_weights(std::size_t n, FrequencyDistribution dist, double exponent) {
  std::vector<double> w(n, 1.0);
  if (dist == FrequencyDistribution::Zipf)
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  return w;
}

// 1 + Poisson(mean - 1), clamped to [1, cap].
std::size_t draw_count(double mean, std::size_t cap, std::mt19937_64& rng) {
  std::size_t k = 1;
  if (mean > 1.0) k += std::poisson_distribution<std::size_t>(mean - 1.0)(rng);
  return std::min(k, cap);
}

// Weighted draws without replacement.
std::vector<std::size_t> draw_distinct(std::vector<double> weights, std::size_t k,
                                       std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) break;
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = 0;
    for (; pick + 1 < weights.size(); ++pick) {
      if (u < weights[pick]) break;
      u -= weights[pick];
    }
    while (weights[pick] <= 0.0) --pick;  // guards a rounding overrun past the last live entry
    out.push_back(pick);
    weights[pick] = 0.0;
  }
  return out;
}

}  // namespace

Corpus generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_scenes == 0) throw ConfigError("synthetic corpus needs at least one scene");
  if (cfg.n_objects == 0) throw ConfigError("synthetic corpus needs at least one object");
  if (cfg.n_words < cfg.n_objects)
    throw ConfigError("n_words must be >= n_objects so every object has a label");
  if (cfg.objects_per_scene < 1.0 || cfg.objects_per_scene > static_cast<double>(cfg.n_objects))
    throw ConfigError("objects_per_scene must lie in [1, n_objects]");
  if (cfg.words_per_scene < 1.0) throw ConfigError("words_per_scene must be >= 1");
  if (cfg.referential_noise < 0.0 || cfg.referential_noise >= 1.0)
    throw ConfigError("referential_noise must lie in [0, 1)");

  std::mt19937_64 rng(seed);
  Corpus c;
  std::vector<std::vector<WordId>> labels(cfg.n_objects);
  for (std::size_t o = 0; o < cfg.n_objects; ++o) c.inventory.add("O" + std::to_string(o));
  GoldLexicon gold;
  for (std::size_t w = 0; w < cfg.n_words; ++w) {
    const auto id = c.vocab.add("w" + std::to_string(w));
    const auto obj = object_id(w % cfg.n_objects);
    labels[obj.index()].push_back(id);
    gold.pairs.emplace_back(id, obj);
  }
  std::vector<WordId> function_words;
  for (std::size_t f = 0; f < cfg.n_function_words; ++f)
    function_words.push_back(c.vocab.add("f" + std::to_string(f)));

  const auto obj_weights = rank_weights(cfg.n_objects, cfg.distribution, cfg.zipf_exponent);
  const auto fn_weights = rank_weights(cfg.n_function_words, cfg.distribution, cfg.zipf_exponent);
  std::bernoulli_distribution named(1.0 - cfg.referential_noise);

  const auto label_of = [&](std::size_t obj) {
    const auto& ls = labels[obj];
    return ls[std::uniform_int_distribution<std::size_t>(0, ls.size() - 1)(rng)];
  };

  for (std::size_t i = 0; i < cfg.n_scenes; ++i) {
    Scene s;
    const auto k_obj = draw_count(cfg.objects_per_scene, cfg.n_objects, rng);
    const auto objs = draw_distinct(obj_weights, k_obj, rng);
    for (auto o : objs) s.objects.push_back(object_id(o));

    const auto add_word = [&](WordId w) {
      if (std::find(s.words.begin(), s.words.end(), w) == s.words.end()) s.words.push_back(w);
    };
    if (cfg.referential_noise == 0.0) {
      for (auto o : objs) add_word(label_of(o));
    } else {
      for (auto o : objs)
        if (named(rng)) add_word(label_of(o));
      const auto target = draw_count(cfg.words_per_scene, static_cast<std::size_t>(-1), rng);
      if (s.words.size() < target) {
        const auto need = target - s.words.size();
        if (!function_words.empty()) {
          for (auto f : draw_distinct(fn_weights, need, rng)) add_word(function_words[f]);
        } else {
          auto absent = obj_weights;
          for (auto o : objs) absent[o] = 0.0;
          for (auto o : draw_distinct(absent, need, rng)) add_word(label_of(o));
        }
      }
      if (s.words.empty()) add_word(label_of(objs.front()));
    }
    c.scenes.push_back(std::move(s));
  }
  c.gold = std::move(gold);
  c.recount();
  return c;
}

VisualDataset generate_visual_surrogate(const VisualSurrogateConfig& cfg, std::uint64_t seed) {
  if (cfg.n_categories < 2) throw ConfigError("surrogate needs at least two categories");
  if (cfg.heldout_rank >= cfg.n_categories) throw ConfigError("heldout_rank out of range");
  if (cfg.heldout_words.empty()) throw ConfigError("heldout_words must not be empty");
  if (cfg.feature_dim == 0 || cfg.n_images == 0) throw ConfigError("empty surrogate");
  if (cfg.max_captions == 0 || cfg.max_objects_per_image == 0)
    throw ConfigError("max_captions and max_objects_per_image must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = cfg.feature_dim;

  std::vector<double> shared(d);
  for (auto& v : shared) v = cfg.shared_scale * gauss(rng);
  std::vector<std::vector<double>> means(cfg.n_categories, std::vector<double>(d));
  for (auto& m : means)
    for (auto& v : m) v = cfg.category_scale * gauss(rng);

  std::vector<std::vector<std::string>> words(cfg.n_categories);
  for (std::size_t c = 0; c < cfg.n_categories; ++c) {
    if (c == cfg.heldout_rank)
      words[c] = cfg.heldout_words;
    else
      words[c] = {"w" + std::to_string(c)};
  }
  const auto weights = rank_weights(cfg.n_categories, FrequencyDistribution::Zipf, cfg.zipf_exponent);
  std::discrete_distribution<std::size_t> pick_category(weights.begin(), weights.end());
  std::bernoulli_distribution mention(cfg.mention_prob);

  VisualDataset out;
  out.features.dim = d;
  for (std::size_t img = 0; img < cfg.n_images; ++img) {
    const std::string image = "img" + std::to_string(img);
    const auto k = draw_count(cfg.objects_per_image, cfg.max_objects_per_image, rng);
    std::vector<VisualObject> objects;
    std::vector<std::size_t> cats;
    for (std::size_t j = 0; j < k; ++j) {
      const auto c = pick_category(rng);
      const auto& ws = words[c];
      const auto label = ws[std::uniform_int_distribution<std::size_t>(0, ws.size() - 1)(rng)];
      const std::string inst = image + "_o" + std::to_string(j);
      objects.push_back({inst, label});
      cats.push_back(c);
      out.features.instances.push_back(inst);
      for (std::size_t t = 0; t < d; ++t) {
        double v = shared[t] + means[c][t] + cfg.instance_noise * gauss(rng);
        if (cfg.rectify) v = std::max(v, 0.0);
        out.features.values.push_back(v);
      }
    }
    const auto n_caps = std::uniform_int_distribution<std::size_t>(1, cfg.max_captions)(rng);
    for (std::size_t cap = 0; cap < n_caps; ++cap) {
      VisualRecord r;
      r.image = image;
      r.caption_id = static_cast<int>(cap);
      r.objects = objects;
      std::vector<std::size_t> named;
      for (std::size_t j = 0; j < k; ++j)
        if (mention(rng)) named.push_back(j);
      if (named.empty())
        named.push_back(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
      for (auto j : named) {
        const auto& ws = words[cats[j]];
        const auto& w = ws[std::uniform_int_distribution<std::size_t>(0, ws.size() - 1)(rng)];
        if (std::find(r.words.begin(), r.words.end(), w) == r.words.end()) r.words.push_back(w);
      }
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace xsl
