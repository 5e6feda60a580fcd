#include "xsl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "xsl/error.hpp"

namespace xsl {

// ---- Best-F ----

double best_f(std::vector<ScoredPair> pairs, std::size_t gold_total) {
  if (gold_total == 0) throw ConfigError("best_f needs a non-empty gold lexicon");
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  const auto f1 = [&](std::size_t tp, std::size_t selected) {
    if (selected == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(selected + gold_total);
  };
  double best = 0.0;
  std::size_t tp = 0;
  std::size_t i = 0;
  // Before consuming each group of equal scores the selected set is exactly
  // the pairs strictly above that score.
  while (i < pairs.size()) {
    best = std::max(best, f1(tp, i));
    const double s = pairs[i].score;
    while (i < pairs.size() && pairs[i].score == s) {
      if (pairs[i].gold) ++tp;
      ++i;
    }
  }
  return std::max(best, f1(tp, pairs.size()));
}

double best_f(const SimilarityMatrix& sims, const GoldLexicon& gold) {
  std::vector<ScoredPair> pairs;
  pairs.reserve(sims.rows() * sims.cols());
  for (std::size_t w = 0; w < sims.rows(); ++w)
    for (std::size_t o = 0; o < sims.cols(); ++o)
      pairs.push_back({sims(w, o), gold.contains(word_id(w), object_id(o))});
  return best_f(std::move(pairs), gold.size());
}

double best_f(const Model& model, const Corpus& corpus) {
  if (!corpus.gold || corpus.gold->size() == 0) throw ConfigError("corpus has no gold lexicon");
  const auto sims = similarity_matrix(model);
  std::vector<std::vector<bool>> is_gold(sims.rows(), std::vector<bool>(sims.cols(), false));
  for (auto [w, o] : corpus.gold->pairs) is_gold[w.index()][o.index()] = true;
  std::vector<ScoredPair> pairs;
  std::size_t gold_total = 0;
  for (std::size_t w = 0; w < sims.rows(); ++w) {
    if (corpus.vocab.novel(word_id(w))) continue;
    for (std::size_t o = 0; o < sims.cols(); ++o) {
      if (corpus.inventory.novel(object_id(o))) continue;
      pairs.push_back({sims(w, o), is_gold[w][o]});
      gold_total += is_gold[w][o];
    }
  }
  if (gold_total == 0) throw ConfigError("no gold pair involves familiar items only");
  return best_f(std::move(pairs), gold_total);
}

// ---- test scenes ----

std::vector<TestScene> build_novel_test_scenes(const Corpus& corpus, std::size_t n_novel_words,
                                               std::size_t scenes_per_word, std::size_t familiar_per_scene,
                                               std::uint64_t seed) {
  const auto nw = novel_words(corpus);
  const auto no = novel_objects(corpus);
  std::vector<ObjectId> familiar;
  for (std::size_t o = 0; o < corpus.inventory.size(); ++o)
    if (!corpus.inventory.novel(object_id(o))) familiar.push_back(object_id(o));
  if (nw.size() < n_novel_words || no.size() < n_novel_words)
    throw ConfigError("corpus has fewer than " + std::to_string(n_novel_words) + " novel words/objects");
  if (familiar.size() < familiar_per_scene)
    throw ConfigError("corpus has fewer than " + std::to_string(familiar_per_scene) + " familiar objects");

  std::mt19937_64 rng(seed);
  std::vector<TestScene> out;
  out.reserve(n_novel_words * scenes_per_word);
  for (std::size_t i = 0; i < n_novel_words; ++i) {
    for (std::size_t j = 0; j < scenes_per_word; ++j) {
      TestScene t;
      t.prompt = nw[i];
      auto pool = familiar;
      for (std::size_t k = 0; k < familiar_per_scene; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
        std::swap(pool[k], pool[pick(rng)]);
        t.candidates.push_back(pool[k]);
      }
      t.candidates.push_back(no[i]);
      t.correct = {no[i]};
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<TestScene> gold_test_scenes(const Corpus& corpus) {
  std::vector<TestScene> out;
  if (!corpus.gold) return out;
  for (const auto& s : corpus.scenes) {
    if (s.objects.size() < 2) continue;
    for (auto w : s.words) {
      TestScene t{w, s.objects, {}};
      for (auto o : s.objects)
        if (corpus.gold->contains(w, o)) t.correct.push_back(o);
      if (!t.correct.empty()) out.push_back(std::move(t));
    }
  }
  return out;
}

namespace {

std::vector<ObjectId> sorted(std::vector<ObjectId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

std::vector<TestScene> familiar_visual_test_scenes(const Corpus& corpus, std::span<const Scene> scenes) {
  std::vector<TestScene> out;
  std::set<std::pair<std::uint32_t, std::vector<ObjectId>>> seen;
  for (const auto& s : scenes) {
    if (s.objects.size() < 2) continue;
    const auto key_objs = sorted(s.objects);
    for (auto o : s.objects) {
      const auto& label = corpus.inventory.label(o);
      if (corpus.inventory.novel(o)) continue;
      const auto w = corpus.vocab.find(label);
      if (!w || corpus.vocab.novel(*w)) continue;
      if (!seen.emplace(w->value, key_objs).second) continue;
      TestScene t{*w, s.objects, {}};
      for (auto c : s.objects)
        if (corpus.inventory.label(c) == label) t.correct.push_back(c);
      out.push_back(std::move(t));
    }
  }
  return out;
}

NovelVisualScenes novel_visual_test_scenes(const Corpus& corpus, std::span<const Scene> eval_scenes,
                                           const std::set<std::string>& heldout_labels,
                                           std::span<const std::string> prompts, bool exclude_multi) {
  std::vector<WordId> prompt_ids;
  for (const auto& p : prompts) {
    const auto w = corpus.vocab.find(p);
    if (!w) throw ConfigError("prompt word '" + p + "' is not in the vocabulary");
    prompt_ids.push_back(*w);
  }
  NovelVisualScenes out;
  for (const auto& s : eval_scenes) {
    std::vector<ObjectId> held;
    for (auto o : s.objects)
      if (heldout_labels.contains(corpus.inventory.label(o))) held.push_back(o);
    if (held.empty() || s.objects.size() < 2) continue;
    if (held.size() > 1 && exclude_multi) {
      ++out.excluded_multi;
      continue;
    }
    for (auto w : prompt_ids) out.scenes.push_back({w, s.objects, held});
  }
  return out;
}

// ---- accuracy ----

double chance_level(std::span<const TestScene> scenes) {
  if (scenes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : scenes)
    sum += static_cast<double>(t.correct.size()) / static_cast<double>(t.candidates.size());
  return sum / static_cast<double>(scenes.size());
}

AccuracyResult score_choices(std::span<const TestScene> scenes, std::span<const ObjectId> choices) {
  if (choices.size() != scenes.size()) throw ConfigError("one choice per scene required");
  AccuracyResult r;
  r.total = scenes.size();
  r.chance = chance_level(scenes);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& c = scenes[i].correct;
    if (std::find(c.begin(), c.end(), choices[i]) != c.end()) ++r.correct;
  }
  return r;
}

namespace {

// Similarity columns for every candidate object, with speaker normalizers.
struct ScoringTable {
  SimilarityMatrix sims;
  std::vector<double> normalizers;
  std::unordered_map<std::uint32_t, std::size_t> column;
};

ScoringTable scoring_table(const Model& model, std::span<const TestScene> scenes, SelectionStrategy strategy,
                           Normalization norm) {
  std::set<ObjectId> ids;
  for (const auto& t : scenes) {
    if (t.prompt.index() >= model.num_words())
      throw ConfigError("unknown word ID " + std::to_string(t.prompt.value));
    ids.insert(t.candidates.begin(), t.candidates.end());
  }
  const std::vector<ObjectId> cols(ids.begin(), ids.end());
  ScoringTable tab;
  tab.sims = similarity_columns(model, cols);
  if (strategy == SelectionStrategy::Bayes) tab.normalizers = speaker_normalizers(tab.sims, norm);
  for (std::size_t i = 0; i < cols.size(); ++i) tab.column.emplace(cols[i].value, i);
  return tab;
}

SelectionOutcome choose(const ScoringTable& tab, const TestScene& t, SelectionStrategy strategy,
                        Normalization norm) {
  std::vector<double> scores;
  scores.reserve(t.candidates.size());
  for (auto o : t.candidates) {
    const auto c = tab.column.at(o.value);
    const double cos = tab.sims(t.prompt.index(), c);
    if (strategy == SelectionStrategy::Similarity) {
      scores.push_back(cos);
    } else {
      if (!(tab.normalizers[c] > 0.0)) throw NumericError("speaker normalizer is zero");
      scores.push_back(speaker_score(cos, norm) / tab.normalizers[c]);
    }
  }
  return pick_max(t.candidates, std::move(scores));
}

bool is_correct(const TestScene& t, ObjectId o) {
  return std::find(t.correct.begin(), t.correct.end(), o) != t.correct.end();
}

}  // namespace

AccuracyResult accuracy(const Model& model, std::span<const TestScene> scenes, SelectionStrategy strategy,
                        Normalization norm) {
  AccuracyResult r;
  r.total = scenes.size();
  r.chance = chance_level(scenes);
  if (scenes.empty()) return r;
  const auto tab = scoring_table(model, scenes, strategy, norm);
  std::size_t correct = 0, ties = 0;
  const auto n = static_cast<std::ptrdiff_t>(scenes.size());
#pragma omp parallel for schedule(static) reduction(+ : correct, ties)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& t = scenes[static_cast<std::size_t>(i)];
    const auto out = choose(tab, t, strategy, norm);
    if (is_correct(t, out.chosen)) ++correct;
    if (out.tie) ++ties;
  }
  r.correct = correct;
  r.ties = ties;
  return r;
}

AccuracyResult accuracy_serial(const Model& model, std::span<const TestScene> scenes,
                               SelectionStrategy strategy, Normalization norm) {
  AccuracyResult r;
  r.total = scenes.size();
  r.chance = chance_level(scenes);
  for (const auto& t : scenes) {
    const auto out = select(model, strategy, t.prompt, t.candidates, norm);
    if (is_correct(t, out.chosen)) ++r.correct;
    if (out.tie) ++r.ties;
  }
  return r;
}

// ---- aggregation and CSV ----

std::vector<Aggregate> aggregate_runs(std::span<const ResultRow> rows) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.condition, r.metric}].push_back(r.value);
  std::vector<Aggregate> out;
  for (auto& [key, values] : groups) {
    std::sort(values.begin(), values.end());
    Aggregate a{key.first, key.second, 0.0, 0.0, values.size(), values.size() > 1};
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(a.n);
    if (a.sd_defined) {
      double ss = 0.0;
      for (double v : values) ss += (v - a.mean) * (v - a.mean);
      a.sd = std::sqrt(ss / static_cast<double>(a.n - 1));
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
}

}  // namespace

void write_results_csv(std::span<const ResultRow> rows, std::ostream& out) {
  out << "condition,loss,strategy,seed,metric,value\n";
  for (const auto& r : rows)
    out << r.condition << ',' << r.loss << ',' << r.strategy << ',' << r.seed << ',' << r.metric << ','
        << fmt_double(r.value) << '\n';
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "condition,loss,strategy,seed,metric,value")
    throw DataError("results CSV: missing or unexpected header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw DataError("results CSV line " + std::to_string(lineno) + ": expected 6 fields");
    ResultRow r{cells[0], cells[1], cells[2], 0, cells[4], parse_double(cells[5], lineno)};
    try {
      r.seed = std::stoull(cells[3]);
    } catch (const std::exception&) {
      throw DataError("results CSV line " + std::to_string(lineno) + ": bad seed");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_aggregate_csv(std::span<const Aggregate> aggs, std::ostream& out) {
  out << "condition,metric,mean,sd,n\n";
  for (const auto& a : aggs)
    out << a.condition << ',' << a.metric << ',' << fmt_double(a.mean) << ',' << fmt_double(a.sd) << ','
        << a.n << '\n';
}

std::vector<Aggregate> read_aggregate_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "condition,metric,mean,sd,n")
    throw DataError("aggregate CSV: missing or unexpected header");
  std::vector<Aggregate> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 5) throw DataError("aggregate CSV line " + std::to_string(lineno) + ": expected 5 fields");
    Aggregate a{c[0], c[1], parse_double(c[2], lineno), parse_double(c[3], lineno),
                static_cast<std::size_t>(parse_double(c[4], lineno)), false};
    a.sd_defined = a.n > 1;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace xsl
