#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xsl {

// Strongly typed indices so word and object IDs cannot be mixed up.
template <class Tag>
struct Id {
  std::uint32_t value = 0;

  constexpr std::size_t index() const { return value; }
  constexpr auto operator<=>(const Id&) const = default;
};

using WordId = Id<struct WordTag>;
using ObjectId = Id<struct ObjectTag>;

inline constexpr WordId word_id(std::size_t i) { return WordId{static_cast<std::uint32_t>(i)}; }
inline constexpr ObjectId object_id(std::size_t i) { return ObjectId{static_cast<std::uint32_t>(i)}; }

// One exposure event: the words uttered and the objects present.
struct Scene {
  std::vector<WordId> words;
  std::vector<ObjectId> objects;

  bool operator==(const Scene&) const = default;
};

class Vocabulary {
 public:
  /// Returns the existing ID when the word is already known.
  WordId add(std::string_view word);
  std::optional<WordId> find(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id.index()); }
  std::size_t size() const { return words_.size(); }

  /// Number of training scenes containing the word.
  std::size_t frequency(WordId id) const { return freq_.at(id.index()); }
  bool novel(WordId id) const { return frequency(id) == 0; }
  void set_frequencies(std::vector<std::size_t> freq);

  bool operator==(const Vocabulary& o) const { return words_ == o.words_ && freq_ == o.freq_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::size_t> freq_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

class ObjectInventory {
 public:
  /// Registers an object. For visual corpora `name` is the instance ID and
  /// `label` its category; `features` must match the dimension of previously
  /// added feature vectors.
  ObjectId add(std::string_view name, std::string_view label = {},
               std::span<const double> features = {});
  std::optional<ObjectId> find(std::string_view name) const;
  const std::string& name(ObjectId id) const { return names_.at(id.index()); }
  const std::string& label(ObjectId id) const { return labels_.at(id.index()); }
  std::size_t size() const { return names_.size(); }

  bool has_features() const { return feature_dim_ > 0; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::span<const double> features(ObjectId id) const;

  std::size_t occurrences(ObjectId id) const { return occ_.at(id.index()); }
  bool novel(ObjectId id) const { return occurrences(id) == 0; }
  void set_occurrences(std::vector<std::size_t> occ);

  bool operator==(const ObjectInventory& o) const {
    return names_ == o.names_ && labels_ == o.labels_ && feature_dim_ == o.feature_dim_ &&
           features_ == o.features_ && occ_ == o.occ_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::string> labels_;
  std::size_t feature_dim_ = 0;
  std::vector<double> features_;
  std::vector<std::size_t> occ_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct GoldLexicon {
  std::vector<std::pair<WordId, ObjectId>> pairs;

  bool contains(WordId w, ObjectId o) const;
  std::size_t size() const { return pairs.size(); }
  bool operator==(const GoldLexicon&) const = default;
};

struct CorpusStats {
  std::size_t scenes = 0;
  std::size_t tokens = 0;
  double mean_words = 0.0;
  double mean_objects = 0.0;
  std::size_t word_types = 0;    // words with nonzero frequency
  std::size_t object_types = 0;  // objects seen in some scene
};

struct Corpus {
  std::vector<Scene> scenes;
  Vocabulary vocab;
  ObjectInventory inventory;
  std::optional<GoldLexicon> gold;

  /// Recomputes word frequencies and object occurrence counts (and with them
  /// the novelty flags) from `scenes`.
  void recount();
  /// Throws DataError on dangling IDs, empty scenes or duplicate IDs.
  void validate() const;
  CorpusStats stats() const;

  bool operator==(const Corpus&) const = default;
};

std::vector<std::pair<WordId, ObjectId>> pair_expand(const Scene& scene);

// Symbolic corpus text format:
//   #vocab w1 w2 ...        optional, fixes word IDs in listed order
//   #objects O1 O2 ...      optional, fixes object IDs in listed order
//   #gold word=OBJ          gold pair, may appear anywhere
//   word word word | OBJ OBJ
// Without declarations IDs follow first appearance in scene lines.
Corpus parse_symbolic(std::istream& in);
Corpus load_symbolic(const std::filesystem::path& path);
void write_symbolic(const Corpus& corpus, std::ostream& out);
void save_symbolic(const Corpus& corpus, const std::filesystem::path& path);

/// Appends `n_words` novel words (dax1, ...) and `n_objects` novel objects
/// (DAX1, ...) that occur in no scene.
Corpus inject_novel_items(Corpus corpus, std::size_t n_words, std::size_t n_objects);

/// Novel word / object IDs in ID order.
std::vector<WordId> novel_words(const Corpus& corpus);
std::vector<ObjectId> novel_objects(const Corpus& corpus);

class TokenWeights {
 public:
  explicit TokenWeights(const Vocabulary& vocab);
  /// 1 / frequency; throws ConfigError for zero-frequency words.
  double at(WordId w) const;
  bool defined(WordId w) const { return weights_.at(w.index()) > 0.0; }

 private:
  std::vector<double> weights_;
};

TokenWeights token_weights(const Corpus& corpus);

// ---- visual corpora ----

struct VisualObject {
  std::string instance;
  std::string label;
};

// One caption of one image; each caption is an independent data point.
struct VisualRecord {
  std::string image;
  int caption_id = 0;
  std::vector<VisualObject> objects;
  std::vector<std::string> words;
};

struct FeatureTable {
  std::size_t dim = 0;
  std::vector<std::string> instances;
  std::vector<double> values;  // row-major, instances.size() x dim
};

VisualRecord parse_visual_record(std::string_view json_line);
std::vector<VisualRecord> parse_visual_records(std::istream& in);
void write_visual_records(std::span<const VisualRecord> records, std::ostream& out);

// Feature table text format: first line `dim <D>`, then `<instance> v1 ... vD`.
FeatureTable parse_features(std::istream& in);
void write_features(const FeatureTable& table, std::ostream& out);

Corpus build_visual_corpus(std::span<const VisualRecord> records, const FeatureTable& features);
Corpus load_visual(const std::filesystem::path& scenes_path,
                   const std::filesystem::path& features_path);

struct HoldoutSplit {
  Corpus train;
  std::vector<Scene> eval_scenes;
};

/// Removes held-out words and instances whose label is in `labels` from every
/// scene. Held-out items stay in the vocabulary and inventory as novel items.
/// `eval_scenes` holds the original scenes with a held-out instance and at
/// least two objects, deduplicated by object set.
HoldoutSplit holdout_category(const Corpus& corpus, const std::set<std::string>& words,
                              const std::set<std::string>& labels);

}  // namespace xsl
