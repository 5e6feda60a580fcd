#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xsl/corpus.hpp"

namespace xsl {

enum class FrequencyDistribution { Uniform, Zipf };

// Symbolic corpus with a known gold lexicon.
//
// Referring words are assigned to objects round-robin (word i names object
// i mod n_objects), so n_words >= n_objects gives every object a label and
// the surplus words act as synonyms. Each scene draws its objects without
// replacement from the object frequency distribution. With zero referential
// noise the scene's words are exactly one gold label per object. Otherwise
// each object is named with probability 1 - noise and the utterance is padded
// with distractor tokens up to a Poisson-distributed length; distractors come
// from a pool of non-referring words (function words) or, when the pool is
// empty, from labels of absent objects.
struct SynthConfig {
  std::size_t n_words = 36;
  std::size_t n_objects = 22;
  std::size_t n_function_words = 0;
  std::size_t n_scenes = 620;
  double words_per_scene = 4.1;
  double objects_per_scene = 2.4;
  double referential_noise = 0.3;
  FrequencyDistribution distribution = FrequencyDistribution::Zipf;
  double zipf_exponent = 1.0;
};

/// Throws ConfigError for infeasible configurations.
Corpus generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

// Instance-based corpus emulating an image/caption dataset: every object is
// a fresh instance of a category whose feature vector is drawn from a
// per-category Gaussian around a shared offset, optionally rectified.
// Each image contributes 1..max_captions captions; a caption names each
// present instance with probability mention_prob (at least one is named).
struct VisualSurrogateConfig {
  std::size_t n_categories = 30;
  std::size_t feature_dim = 48;
  std::size_t n_images = 900;
  double objects_per_image = 2.22;
  std::size_t max_objects_per_image = 5;
  std::size_t max_captions = 3;
  double mention_prob = 0.7;
  double zipf_exponent = 1.0;
  double shared_scale = 1.0;
  double category_scale = 1.0;
  double instance_noise = 0.5;
  bool rectify = true;
  // The held-out category ("dog") sits at this frequency rank (0 = most frequent)
  // and is named by `heldout_words`; every other category c has the single word "w<c>".
  std::size_t heldout_rank = 2;
  std::vector<std::string> heldout_words = {"dog", "puppy"};
};

struct VisualDataset {
  std::vector<VisualRecord> records;
  FeatureTable features;
};

VisualDataset generate_visual_surrogate(const VisualSurrogateConfig& cfg, std::uint64_t seed);

}  // namespace xsl
