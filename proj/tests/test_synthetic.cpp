#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "xsl/error.hpp"
#include "xsl/synthetic.hpp"

using namespace xsl;

TEST(Synthetic, MatchesSymbolicCorpusStatistics) {
  const SynthConfig cfg{.n_words = 36, .n_objects = 22, .n_scenes = 620, .words_per_scene = 4.1,
                        .objects_per_scene = 2.4};
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto c = generate_synthetic(cfg, seed);
    const auto st = c.stats();
    EXPECT_EQ(st.scenes, 620u);
    EXPECT_NEAR(st.mean_words, 4.1, 0.05 * 4.1);
    EXPECT_NEAR(st.mean_objects, 2.4, 0.05 * 2.4);
    EXPECT_EQ(c.vocab.size(), 36u);
    EXPECT_EQ(c.inventory.size(), 22u);
    ASSERT_TRUE(c.gold);
    EXPECT_EQ(c.gold->size(), 36u);
    EXPECT_NO_THROW(c.validate());
  }
}

TEST(Synthetic, NoiselessScenesNameExactlyTheirObjects) {
  const SynthConfig cfg{.n_words = 10, .n_objects = 10, .n_scenes = 200, .referential_noise = 0.0};
  const auto c = generate_synthetic(cfg, 4);
  for (const auto& s : c.scenes) {
    ASSERT_EQ(s.words.size(), s.objects.size());
    for (std::size_t i = 0; i < s.words.size(); ++i) ASSERT_TRUE(c.gold->contains(s.words[i], s.objects[i]));
  }
}

TEST(Synthetic, Deterministic) {
  const SynthConfig cfg{.n_function_words = 10, .referential_noise = 0.5};
  EXPECT_EQ(generate_synthetic(cfg, 77), generate_synthetic(cfg, 77));
  EXPECT_NE(generate_synthetic(cfg, 77).scenes, generate_synthetic(cfg, 78).scenes);
}

TEST(Synthetic, SeedChangeKeepsStatistics) {
  const SynthConfig cfg;
  const auto a = generate_synthetic(cfg, 1).stats();
  const auto b = generate_synthetic(cfg, 2).stats();
  EXPECT_NEAR(a.mean_words, b.mean_words, 0.3);
  EXPECT_NEAR(a.mean_objects, b.mean_objects, 0.2);
}

TEST(Synthetic, FunctionWordsAreNotInGold) {
  const SynthConfig cfg{.n_function_words = 15, .referential_noise = 0.5};
  const auto c = generate_synthetic(cfg, 2);
  EXPECT_EQ(c.vocab.size(), 36u + 15u);
  EXPECT_EQ(c.gold->size(), 36u);
}

TEST(Synthetic, InfeasibleConfigs) {
  EXPECT_THROW(generate_synthetic({.n_objects = 22, .objects_per_scene = 30}, 0), ConfigError);
  EXPECT_THROW(generate_synthetic({.n_scenes = 0}, 0), ConfigError);
  EXPECT_THROW(generate_synthetic({.n_words = 5, .n_objects = 10}, 0), ConfigError);
  EXPECT_THROW(generate_synthetic({.referential_noise = 1.0}, 0), ConfigError);
}

TEST(Synthetic, ZipfMakesLowRanksFrequent) {
  const auto c = generate_synthetic({.n_scenes = 2000}, 3);
  EXPECT_GT(c.inventory.occurrences(object_id(0)), c.inventory.occurrences(object_id(21)));
}

TEST(Surrogate, StructureAndDeterminism) {
  VisualSurrogateConfig vc;
  vc.n_images = 200;
  const auto a = generate_visual_surrogate(vc, 5);
  const auto b = generate_visual_surrogate(vc, 5);
  EXPECT_EQ(a.features.values, b.features.values);
  ASSERT_EQ(a.records.size(), b.records.size());
  EXPECT_EQ(a.features.dim, vc.feature_dim);
  EXPECT_EQ(a.features.values.size(), a.features.instances.size() * vc.feature_dim);
  std::size_t objects = 0;
  std::map<std::string, std::size_t> captions;
  for (const auto& r : a.records) {
    ASSERT_FALSE(r.words.empty());
    ASSERT_LE(r.objects.size(), vc.max_objects_per_image);
    ++captions[r.image];
    objects += r.objects.size();
  }
  for (const auto& [img, n] : captions) ASSERT_LE(n, vc.max_captions);
  EXPECT_GT(static_cast<double>(objects) / static_cast<double>(a.records.size()), 1.5);
  for (double v : a.features.values) ASSERT_GE(v, 0.0);  // rectified
}

TEST(Surrogate, SameCategoryFeaturesCluster) {
  VisualSurrogateConfig vc;
  vc.n_images = 300;
  vc.shared_scale = 0.0;
  vc.rectify = false;
  const auto ds = generate_visual_surrogate(vc, 8);
  std::map<std::string, std::string> label;
  for (const auto& r : ds.records)
    for (const auto& o : r.objects) label[o.instance] = o.label;
  // Mean squared distance within a category is below the distance across.
  const auto d = vc.feature_dim;
  const auto& f = ds.features;
  double within = 0, across = 0;
  std::size_t nw = 0, na = 0;
  for (std::size_t i = 0; i < 200 && i < f.instances.size(); ++i)
    for (std::size_t j = i + 1; j < 200 && j < f.instances.size(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < d; ++k) s += std::pow(f.values[i * d + k] - f.values[j * d + k], 2);
      if (label[f.instances[i]] == label[f.instances[j]]) {
        within += s;
        ++nw;
      } else {
        across += s;
        ++na;
      }
    }
  ASSERT_GT(nw, 0u);
  EXPECT_LT(within / nw, across / na);
}
