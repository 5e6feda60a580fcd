#include "xsl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "xsl/error.hpp"

namespace xsl {

// ---- Vocabulary / ObjectInventory ----

WordId Vocabulary::add(std::string_view word) {
  if (auto id = find(word)) return *id;
  const auto id = word_id(words_.size());
  words_.emplace_back(word);
  freq_.push_back(0);
  index_.emplace(std::string(word), id.value);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return WordId{it->second};
}

void Vocabulary::set_frequencies(std::vector<std::size_t> freq) {
  if (freq.size() != words_.size()) throw DataError("frequency table size mismatch");
  freq_ = std::move(freq);
}

ObjectId ObjectInventory::add(std::string_view name, std::string_view label,
                              std::span<const double> features) {
  if (find(name)) throw DataError("duplicate object '" + std::string(name) + "'");
  if (!features.empty()) {
    if (feature_dim_ == 0 && names_.empty()) feature_dim_ = features.size();
    if (features.size() != feature_dim_)
      throw DataError("feature dimension mismatch for object '" + std::string(name) + "'");
    features_.insert(features_.end(), features.begin(), features.end());
  } else if (feature_dim_ > 0) {
    throw DataError("object '" + std::string(name) + "' has no feature vector");
  }
  const auto id = object_id(names_.size());
  names_.emplace_back(name);
  labels_.emplace_back(label);
  occ_.push_back(0);
  index_.emplace(std::string(name), id.value);
  return id;
}

std::optional<ObjectId> ObjectInventory::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return ObjectId{it->second};
}

std::span<const double> ObjectInventory::features(ObjectId id) const {
  if (feature_dim_ == 0) return {};
  return std::span<const double>(features_).subspan(id.index() * feature_dim_, feature_dim_);
}

void ObjectInventory::set_occurrences(std::vector<std::size_t> occ) {
  if (occ.size() != names_.size()) throw DataError("occurrence table size mismatch");
  occ_ = std::move(occ);
}

bool GoldLexicon::contains(WordId w, ObjectId o) const {
  return std::find(pairs.begin(), pairs.end(), std::pair{w, o}) != pairs.end();
}

// ---- Corpus ----

void Corpus::recount() {
  std::vector<std::size_t> freq(vocab.size(), 0);
  std::vector<std::size_t> occ(inventory.size(), 0);
  for (const auto& s : scenes) {
    for (auto w : s.words) ++freq.at(w.index());
    for (auto o : s.objects) ++occ.at(o.index());
  }
  vocab.set_frequencies(std::move(freq));
  inventory.set_occurrences(std::move(occ));
}

namespace {

template <class IdT>
bool has_duplicates(std::vector<IdT> ids) {
  std::sort(ids.begin(), ids.end());
  return std::adjacent_find(ids.begin(), ids.end()) != ids.end();
}

}  // namespace

void Corpus::validate() const {
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    const auto where = " in scene " + std::to_string(i);
    if (s.words.empty() || s.objects.empty()) throw DataError("empty word or object set" + where);
    for (auto w : s.words)
      if (w.index() >= vocab.size()) throw DataError("dangling word ID" + where);
    for (auto o : s.objects)
      if (o.index() >= inventory.size()) throw DataError("dangling object ID" + where);
    if (has_duplicates(s.words) || has_duplicates(s.objects))
      throw DataError("duplicate ID" + where);
  }
  if (gold) {
    for (auto [w, o] : gold->pairs)
      if (w.index() >= vocab.size() || o.index() >= inventory.size())
        throw DataError("dangling gold lexicon entry");
  }
}

CorpusStats Corpus::stats() const {
  CorpusStats st;
  st.scenes = scenes.size();
  std::size_t objs = 0;
  for (const auto& s : scenes) {
    st.tokens += s.words.size();
    objs += s.objects.size();
  }
  if (st.scenes > 0) {
    st.mean_words = static_cast<double>(st.tokens) / static_cast<double>(st.scenes);
    st.mean_objects = static_cast<double>(objs) / static_cast<double>(st.scenes);
  }
  for (std::size_t w = 0; w < vocab.size(); ++w)
    if (!vocab.novel(word_id(w))) ++st.word_types;
  for (std::size_t o = 0; o < inventory.size(); ++o)
    if (!inventory.novel(object_id(o))) ++st.object_types;
  return st;
}

std::vector<std::pair<WordId, ObjectId>> pair_expand(const Scene& scene) {
  std::vector<std::pair<WordId, ObjectId>> pairs;
  pairs.reserve(scene.words.size() * scene.objects.size());
  for (auto w : scene.words)
    for (auto o : scene.objects) pairs.emplace_back(w, o);
  return pairs;
}

// ---- symbolic format ----

namespace {

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class IdT>
void push_unique(std::vector<IdT>& v, IdT id) {
  if (std::find(v.begin(), v.end(), id) == v.end()) v.push_back(id);
}

}  // namespace

Corpus parse_symbolic(std::istream& in) {
  Corpus c;
  std::vector<std::pair<std::string, std::string>> gold_raw;
  std::vector<std::size_t> gold_lines;
  bool any_gold = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto err = [&](const std::string& msg) {
      return DataError("line " + std::to_string(lineno) + ": " + msg);
    };
    if (body.front() == '#') {
      const auto toks = split_ws(body.substr(1));
      if (toks.empty()) throw err("empty directive");
      if (toks[0] == "gold") {
        if (toks.size() != 2) throw err("expected '#gold word=OBJ'");
        const auto eq = toks[1].find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == toks[1].size())
          throw err("expected '#gold word=OBJ'");
        gold_raw.emplace_back(toks[1].substr(0, eq), toks[1].substr(eq + 1));
        gold_lines.push_back(lineno);
        any_gold = true;
      } else if (toks[0] == "vocab") {
        for (std::size_t i = 1; i < toks.size(); ++i) c.vocab.add(toks[i]);
      } else if (toks[0] == "objects") {
        for (std::size_t i = 1; i < toks.size(); ++i)
          if (!c.inventory.find(toks[i])) c.inventory.add(toks[i]);
      } else {
        throw err("unknown directive '#" + toks[0] + "'");
      }
      continue;
    }
    const auto bar = body.find('|');
    if (bar == std::string_view::npos || body.find('|', bar + 1) != std::string_view::npos)
      throw err("expected exactly one '|' separating words and objects");
    const auto words = split_ws(body.substr(0, bar));
    const auto objects = split_ws(body.substr(bar + 1));
    if (words.empty()) throw err("scene has no words");
    if (objects.empty()) throw err("scene has no objects");
    Scene s;
    for (const auto& w : words) push_unique(s.words, c.vocab.add(w));
    for (const auto& o : objects) {
      auto id = c.inventory.find(o);
      push_unique(s.objects, id ? *id : c.inventory.add(o));
    }
    c.scenes.push_back(std::move(s));
  }
  if (c.scenes.empty()) throw DataError("symbolic corpus contains no scenes");
  if (any_gold) {
    GoldLexicon gold;
    for (std::size_t i = 0; i < gold_raw.size(); ++i) {
      const auto w = c.vocab.find(gold_raw[i].first);
      const auto o = c.inventory.find(gold_raw[i].second);
      if (!w || !o)
        throw DataError("line " + std::to_string(gold_lines[i]) + ": dangling gold entry '" +
                        gold_raw[i].first + "=" + gold_raw[i].second + "'");
      if (!gold.contains(*w, *o)) gold.pairs.emplace_back(*w, *o);
    }
    c.gold = std::move(gold);
  }
  c.recount();
  return c;
}

Corpus load_symbolic(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_symbolic(in);
}

void write_symbolic(const Corpus& corpus, std::ostream& out) {
  if (corpus.inventory.has_features())
    throw DataError("visual corpora cannot be written in the symbolic format");
  out << "#vocab";
  for (std::size_t i = 0; i < corpus.vocab.size(); ++i) out << ' ' << corpus.vocab.word(word_id(i));
  out << "\n#objects";
  for (std::size_t i = 0; i < corpus.inventory.size(); ++i)
    out << ' ' << corpus.inventory.name(object_id(i));
  out << '\n';
  if (corpus.gold) {
    for (auto [w, o] : corpus.gold->pairs)
      out << "#gold " << corpus.vocab.word(w) << '=' << corpus.inventory.name(o) << '\n';
  }
  for (const auto& s : corpus.scenes) {
    for (std::size_t i = 0; i < s.words.size(); ++i)
      out << (i ? " " : "") << corpus.vocab.word(s.words[i]);
    out << " |";
    for (auto o : s.objects) out << ' ' << corpus.inventory.name(o);
    out << '\n';
  }
}

void save_symbolic(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  write_symbolic(corpus, out);
  if (!out) throw DataError("write failed for " + path.string());
}

// ---- novel items / weights ----

namespace {

std::string fresh_name(const std::string& stem, std::size_t i, auto&& taken) {
  std::string name = stem + std::to_string(i);
  while (taken(name)) name += "_";
  return name;
}

}  // namespace

Corpus inject_novel_items(Corpus corpus, std::size_t n_words, std::size_t n_objects) {
  const bool visual = corpus.inventory.has_features();
  if (visual && n_objects > 0)
    throw ConfigError("novel objects cannot be injected into a visual corpus");
  for (std::size_t i = 1; i <= n_words; ++i)
    corpus.vocab.add(fresh_name("dax", i, [&](const std::string& n) {
      return corpus.vocab.find(n).has_value();
    }));
  for (std::size_t i = 1; i <= n_objects; ++i)
    corpus.inventory.add(fresh_name("DAX", i, [&](const std::string& n) {
      return corpus.inventory.find(n).has_value();
    }));
  corpus.recount();
  return corpus;
}

std::vector<WordId> novel_words(const Corpus& corpus) {
  std::vector<WordId> out;
  for (std::size_t i = 0; i < corpus.vocab.size(); ++i)
    if (corpus.vocab.novel(word_id(i))) out.push_back(word_id(i));
  return out;
}

std::vector<ObjectId> novel_objects(const Corpus& corpus) {
  std::vector<ObjectId> out;
  for (std::size_t i = 0; i < corpus.inventory.size(); ++i)
    if (corpus.inventory.novel(object_id(i))) out.push_back(object_id(i));
  return out;
}

TokenWeights::TokenWeights(const Vocabulary& vocab) : weights_(vocab.size(), 0.0) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto f = vocab.frequency(word_id(i));
    if (f > 0) weights_[i] = 1.0 / static_cast<double>(f);
  }
}

double TokenWeights::at(WordId w) const {
  const double v = weights_.at(w.index());
  if (v <= 0.0)
    throw ConfigError("inverse-frequency weight undefined for zero-frequency word " +
                      std::to_string(w.value));
  return v;
}

TokenWeights token_weights(const Corpus& corpus) { return TokenWeights(corpus.vocab); }

// ---- visual format ----

VisualRecord parse_visual_record(std::string_view json_line) {
  using nlohmann::json;
  VisualRecord r;
  try {
    const auto j = json::parse(json_line);
    r.image = j.at("image").get<std::string>();
    r.caption_id = j.at("caption_id").get<int>();
    for (const auto& o : j.at("objects"))
      r.objects.push_back({o.at("instance").get<std::string>(), o.at("label").get<std::string>()});
    r.words = j.at("words").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed visual scene record: ") + e.what());
  }
  return r;
}

std::vector<VisualRecord> parse_visual_records(std::istream& in) {
  std::vector<VisualRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_visual_record(line));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_visual_records(std::span<const VisualRecord> records, std::ostream& out) {
  using nlohmann::json;
  for (const auto& r : records) {
    json objs = json::array();
    for (const auto& o : r.objects) objs.push_back({{"instance", o.instance}, {"label", o.label}});
    json j = {{"image", r.image}, {"caption_id", r.caption_id}, {"objects", objs}, {"words", r.words}};
    out << j.dump() << '\n';
  }
}

FeatureTable parse_features(std::istream& in) {
  FeatureTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature file is empty");
  {
    std::istringstream hs(line);
    std::string key;
    if (!(hs >> key >> t.dim) || key != "dim" || t.dim == 0)
      throw DataError("feature file header must be 'dim <D>'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string inst;
    ls >> inst;
    std::size_t n = 0;
    double v;
    while (ls >> v) {
      t.values.push_back(v);
      ++n;
    }
    if (!ls.eof()) throw DataError("line " + std::to_string(lineno) + ": unparsable value");
    if (n != t.dim)
      throw DataError("line " + std::to_string(lineno) + ": instance '" + inst + "' has " +
                      std::to_string(n) + " values, header declares " + std::to_string(t.dim));
    t.instances.push_back(std::move(inst));
  }
  return t;
}

void write_features(const FeatureTable& table, std::ostream& out) {
  out << "dim " << table.dim << '\n';
  char buf[32];
  for (std::size_t i = 0; i < table.instances.size(); ++i) {
    out << table.instances[i];
    for (std::size_t k = 0; k < table.dim; ++k) {
      std::snprintf(buf, sizeof buf, " %.17g", table.values[i * table.dim + k]);
      out << buf;
    }
    out << '\n';
  }
}

Corpus build_visual_corpus(std::span<const VisualRecord> records, const FeatureTable& features) {
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < features.instances.size(); ++i) row.emplace(features.instances[i], i);

  Corpus c;
  for (const auto& r : records) {
    Scene s;
    for (const auto& w : r.words) push_unique(s.words, c.vocab.add(w));
    for (const auto& o : r.objects) {
      auto id = c.inventory.find(o.instance);
      if (!id) {
        auto it = row.find(o.instance);
        if (it == row.end())
          throw DataError("missing feature vector for instance '" + o.instance + "'");
        const auto feat =
            std::span<const double>(features.values).subspan(it->second * features.dim, features.dim);
        id = c.inventory.add(o.instance, o.label, feat);
      } else if (c.inventory.label(*id) != o.label) {
        throw DataError("instance '" + o.instance + "' has conflicting labels");
      }
      push_unique(s.objects, *id);
    }
    if (s.words.empty() || s.objects.empty())
      throw DataError("image '" + r.image + "' caption " + std::to_string(r.caption_id) +
                      " has no words or no objects");
    c.scenes.push_back(std::move(s));
  }
  if (c.scenes.empty()) throw DataError("visual corpus contains no scenes");
  c.recount();
  return c;
}

Corpus load_visual(const std::filesystem::path& scenes_path,
                   const std::filesystem::path& features_path) {
  std::ifstream sin(scenes_path);
  if (!sin) throw DataError("cannot open scenes file " + scenes_path.string());
  std::ifstream fin(features_path);
  if (!fin) throw DataError("cannot open features file " + features_path.string());
  const auto records = parse_visual_records(sin);
  const auto features = parse_features(fin);
  return build_visual_corpus(records, features);
}

HoldoutSplit holdout_category(const Corpus& corpus, const std::set<std::string>& words,
                              const std::set<std::string>& labels) {
  std::vector<bool> drop_word(corpus.vocab.size(), false);
  std::vector<bool> drop_obj(corpus.inventory.size(), false);
  for (std::size_t i = 0; i < corpus.vocab.size(); ++i)
    drop_word[i] = words.contains(corpus.vocab.word(word_id(i)));
  for (std::size_t i = 0; i < corpus.inventory.size(); ++i)
    drop_obj[i] = labels.contains(corpus.inventory.label(object_id(i)));

  HoldoutSplit split;
  split.train.vocab = corpus.vocab;
  split.train.inventory = corpus.inventory;
  split.train.gold = corpus.gold;
  std::set<std::vector<ObjectId>> seen_eval;
  for (const auto& s : corpus.scenes) {
    const bool has_heldout =
        std::any_of(s.objects.begin(), s.objects.end(), [&](ObjectId o) { return drop_obj[o.index()]; });
    if (has_heldout && s.objects.size() >= 2) {
      auto key = s.objects;
      std::sort(key.begin(), key.end());
      if (seen_eval.insert(key).second) split.eval_scenes.push_back(s);
    }
    Scene t;
    for (auto w : s.words)
      if (!drop_word[w.index()]) t.words.push_back(w);
    for (auto o : s.objects)
      if (!drop_obj[o.index()]) t.objects.push_back(o);
    if (!t.words.empty() && !t.objects.empty()) split.train.scenes.push_back(std::move(t));
  }
  split.train.recount();
  return split;
}

}  // namespace xsl
