#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "xsl/error.hpp"
#include "xsl/evaluation.hpp"
#include "xsl/synthetic.hpp"
#include "xsl/training.hpp"

using namespace xsl;

namespace {

// Two-dimensional model over a corpus with 3 words and 3 objects whose
// vectors the tests set directly.
Model planar() {
  static const auto c = test::symbolic("a b c | X Y Z\n");
  return init_model(c, 2, 0.1, 0);
}

void set(std::span<double> row, double x, double y) {
  row[0] = x;
  row[1] = y;
}

const std::vector<ObjectId> kObjNeg{object_id(1)};
const std::vector<WordId> kWordNeg{word_id(1)};

}  // namespace

TEST(Loss, OverObjectsExamples) {
  auto m = planar();
  set(m.word(word_id(0)), 1, 0);
  set(m.object_row(object_id(0)), 1, 0);
  set(m.object_row(object_id(1)), -1, 0);
  EXPECT_DOUBLE_EQ(loss_over_objects(m, word_id(0), object_id(0), kObjNeg), 0.0);

  set(m.object_row(object_id(0)), 0.5, std::sqrt(0.75));
  set(m.object_row(object_id(1)), 0.5, -std::sqrt(0.75));
  EXPECT_NEAR(loss_over_objects(m, word_id(0), object_id(0), kObjNeg), 1.0, 1e-12);

  set(m.object_row(object_id(0)), 1, 0);
  set(m.object_row(object_id(1)), 0.3, std::sqrt(0.91));
  set(m.object_row(object_id(2)), 0.3, -std::sqrt(0.91));
  const std::vector<ObjectId> two{object_id(1), object_id(2)};
  EXPECT_NEAR(loss_over_objects(m, word_id(0), object_id(0), two), 0.6, 1e-12);
}

TEST(Loss, OverWordsExamples) {
  auto m = planar();
  set(m.object_row(object_id(0)), 1, 0);
  set(m.word(word_id(0)), 1, 0);
  set(m.word(word_id(1)), -1, 0);
  EXPECT_DOUBLE_EQ(loss_over_words(m, word_id(0), object_id(0), kWordNeg), 0.0);

  set(m.word(word_id(0)), 0, 1);
  set(m.word(word_id(1)), 0, -1);
  EXPECT_NEAR(loss_over_words(m, word_id(0), object_id(0), kWordNeg), 1.0, 1e-12);

  set(m.word(word_id(1)), 0.2, 1);
  set(m.word(word_id(2)), -0.7, 0.3);
  const std::vector<WordId> fwd{word_id(1), word_id(2)}, rev{word_id(2), word_id(1)};
  EXPECT_NEAR(loss_over_words(m, word_id(0), object_id(0), fwd),
              loss_over_words(m, word_id(0), object_id(0), rev), 1e-15);
}

TEST(Loss, JointExamples) {
  auto m = planar();
  set(m.word(word_id(0)), 1, 0);
  set(m.object_row(object_id(0)), 1, 0);
  set(m.object_row(object_id(1)), -1, 0);
  set(m.word(word_id(1)), -1, 0);
  EXPECT_DOUBLE_EQ(loss_joint(m, word_id(0), object_id(0), kObjNeg, kWordNeg), 0.0);

  set(m.object_row(object_id(1)), 0.4, std::sqrt(1 - 0.16));  // L_o term 0.4
  set(m.word(word_id(1)), 0.6, std::sqrt(1 - 0.36));          // L_w term 0.6
  EXPECT_NEAR(loss_joint(m, word_id(0), object_id(0), kObjNeg, kWordNeg), 1.0, 1e-12);
}

TEST(Loss, JointIsSumOnRandomStates) {
  const auto c = inject_novel_items(generate_synthetic(SynthConfig{}, 1), 5, 5);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto m = init_model(c, 10, 0.5, static_cast<std::uint64_t>(t));
    const auto w = word_id(rng() % c.vocab.size());
    const auto o = object_id(rng() % c.inventory.size());
    const auto on = sample_negative_objects(c.inventory.size(), 5, o, rng);
    const auto wn = sample_negative_words(c.vocab.size(), 5, w, rng);
    const double lo = loss_over_objects(m, w, o, on), lw = loss_over_words(m, w, o, wn);
    EXPECT_GE(lo, 0.0);
    EXPECT_GE(lw, 0.0);
    EXPECT_NEAR(loss_joint(m, w, o, on, wn), lo + lw, 1e-12);
    EXPECT_NEAR(loss_and_gradient(m, LossKind::Joint, w, o, on, wn).loss, lo + lw, 1e-12);
  }
}

TEST(Loss, InvalidArguments) {
  const auto m = planar();
  const std::vector<ObjectId> none;
  const std::vector<ObjectId> self{object_id(0)};
  EXPECT_THROW(loss_over_objects(m, word_id(0), object_id(0), none), ConfigError);
  EXPECT_THROW(loss_over_objects(m, word_id(0), object_id(0), self), ConfigError);
  EXPECT_THROW(loss_over_objects(m, word_id(9), object_id(0), kObjNeg), ConfigError);
}

namespace {

// Random model state away from hinge kinks (where the loss is not
// differentiable and finite differences are meaningless).
struct State {
  Model model;
  WordId w;
  ObjectId o;
  std::vector<ObjectId> on;
  std::vector<WordId> wn;
};

bool near_kink(const State& s, double eps) {
  const double pos = similarity(s.model, s.w, s.o);
  for (auto n : s.on)
    if (std::abs(1.0 - pos + similarity(s.model, s.w, n)) < eps) return true;
  for (auto n : s.wn)
    if (std::abs(1.0 - pos + similarity(s.model, n, s.o)) < eps) return true;
  return false;
}

State random_state(const Corpus& c, std::mt19937_64& rng, std::uint64_t seed) {
  std::uniform_real_distribution<double> range(0.05, 1.0);
  for (;;) {
    State s{init_model(c, 8, range(rng), seed), word_id(rng() % c.vocab.size()),
            object_id(rng() % c.inventory.size()), {}, {}};
    s.on = sample_negative_objects(c.inventory.size(), 3, s.o, rng);
    s.wn = sample_negative_words(c.vocab.size(), 3, s.w, rng);
    if (!near_kink(s, 1e-3)) return s;
    ++seed;
  }
}

double loss_of(const State& s, LossKind k) {
  switch (k) {
    case LossKind::OverObjects: return loss_over_objects(s.model, s.w, s.o, s.on);
    case LossKind::OverWords: return loss_over_words(s.model, s.w, s.o, s.wn);
    case LossKind::Joint: return loss_joint(s.model, s.w, s.o, s.on, s.wn);
  }
  return 0.0;
}

void check_gradients(const Corpus& c, std::uint64_t seed, int states) {
  std::mt19937_64 rng(seed);
  for (auto kind : {LossKind::OverObjects, LossKind::OverWords, LossKind::Joint}) {
    for (int t = 0; t < states; ++t) {
      auto s = random_state(c, rng, seed * 1000 + static_cast<std::uint64_t>(t));
      const auto g = loss_and_gradient(s.model, kind, s.w, s.o, s.on, s.wn);
      const auto analytic = dense_gradient(s.model, g);
      const auto numeric = test::finite_diff(s.model.parameters(), [&] { return loss_of(s, kind); });
      ASSERT_LT(test::relative_error(analytic, numeric), 1e-4) << to_string(kind) << " state " << t;
    }
  }
}

}  // namespace

TEST(Gradient, SymbolicMatchesFiniteDifferences) {
  check_gradients(inject_novel_items(test::symbolic("a b c | X Y\nd | Z\n"), 1, 1), 1, 200);
}

TEST(Gradient, ProjectionMatchesFiniteDifferences) { check_gradients(test::small_visual(6, 3, 4, 2), 2, 200); }

TEST(Gradient, SmallStepDecreasesPositiveHinge) {
  const auto c = inject_novel_items(test::symbolic("a b c | X Y\nd | Z\n"), 1, 1);
  std::mt19937_64 rng(8);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    auto s = random_state(c, rng, 500 + static_cast<std::uint64_t>(t));
    s.on.resize(1);
    s.wn.resize(1);
    for (auto kind : {LossKind::OverObjects, LossKind::OverWords}) {
      auto m = s.model;
      State st = s;
      const double before = loss_of(st, kind);
      if (before <= 0.0) continue;
      apply_gradient(m, loss_and_gradient(m, kind, s.w, s.o, s.on, s.wn), 1e-3);
      st.model = m;
      EXPECT_LT(loss_of(st, kind), before);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Gradient, WeightScalesWithoutRotating) {
  const auto c = test::symbolic("a b c | X Y\nd | Z\n");
  std::mt19937_64 rng(4);
  auto s = random_state(c, rng, 1);
  const auto g = loss_and_gradient(s.model, LossKind::Joint, s.w, s.o, s.on, s.wn);
  const auto full = dense_gradient(s.model, g);
  const auto scaled = dense_gradient(s.model, g, 0.125);
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(scaled[i], 0.125 * full[i], 1e-15);
}

TEST(Sampling, ForcedDraw) {
  Rng rng(1);
  const std::uint32_t ex[1] = {0};
  EXPECT_EQ(sample_negatives(2, 3, ex, rng), (std::vector<std::uint32_t>{1, 1, 1}));
  EXPECT_EQ(sample_negative_objects(2, 3, object_id(0), rng),
            (std::vector<ObjectId>{object_id(1), object_id(1), object_id(1)}));
}

TEST(Sampling, SingletonPopulationThrows) {
  Rng rng(1);
  const std::uint32_t ex[1] = {0};
  EXPECT_THROW(sample_negatives(1, 3, ex, rng), ConfigError);
  EXPECT_THROW(sample_negative_words(1, 3, word_id(0), rng), ConfigError);
}

TEST(Sampling, UniformChiSquare) {
  constexpr std::size_t n = 100000;
  for (int path = 0; path < 2; ++path) {
    Rng rng(42 + static_cast<unsigned>(path));
    std::vector<std::uint32_t> draws;
    if (path == 0) {
      const std::uint32_t ex[1] = {3};
      draws = sample_negatives(10, n, ex, rng);
    } else {
      for (auto o : sample_negative_objects(10, n, object_id(3), rng)) draws.push_back(o.value);
    }
    std::vector<double> count(10, 0.0);
    for (auto d : draws) count[d] += 1;
    EXPECT_EQ(count[3], 0.0);
    const double expect = n / 9.0;
    const double sigma = std::sqrt(n * (1.0 / 9.0) * (8.0 / 9.0));
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      if (i == 3) continue;
      EXPECT_NEAR(count[i], expect, 3 * sigma);
      chi2 += (count[i] - expect) * (count[i] - expect) / expect;
    }
    EXPECT_LT(chi2, 26.12);  // chi-square, 8 dof, alpha = 0.001
  }
}

TEST(Sampling, NovelItemsAppearAsNegatives) {
  const auto c = inject_novel_items(generate_synthetic(SynthConfig{}, 1), 5, 5);
  Rng rng(3);
  std::size_t novel_obj = 0, novel_word = 0;
  for (int i = 0; i < 200; ++i) {
    for (auto o : sample_negative_objects(c.inventory.size(), 5, object_id(0), rng))
      novel_obj += c.inventory.novel(o);
    for (auto w : sample_negative_words(c.vocab.size(), 5, word_id(0), rng)) novel_word += c.vocab.novel(w);
  }
  EXPECT_GT(novel_obj, 0u);
  EXPECT_GT(novel_word, 0u);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.negatives = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_loss_kind("objects"), LossKind::OverObjects);
  EXPECT_EQ(parse_loss_kind("words"), LossKind::OverWords);
  EXPECT_EQ(parse_loss_kind("joint"), LossKind::Joint);
  EXPECT_THROW(parse_loss_kind("both"), ConfigError);
}

namespace {

Corpus noiseless(std::uint64_t seed) {
  return generate_synthetic(
      {.n_words = 10, .n_objects = 10, .n_scenes = 200, .referential_noise = 0.0,
       .distribution = FrequencyDistribution::Uniform},
      seed);
}

TrainConfig small_cfg(LossKind k, std::uint64_t seed) {
  TrainConfig tc;
  tc.loss = k;
  tc.dim = 20;
  tc.seed = seed;
  return tc;
}

}  // namespace

TEST(Train, ConvergesOnNoiselessCorpus) {
  for (auto k : {LossKind::OverObjects, LossKind::OverWords, LossKind::Joint}) {
    const auto c = noiseless(3);
    const auto r = train(init_model(c, 20, 0.1, 1), c, small_cfg(k, 1));
    EXPECT_GE(best_f(r.best, c), 0.95) << to_string(k);
    for (auto [w, o] : c.gold->pairs)
      for (std::size_t other = 0; other < c.inventory.size(); ++other)
        if (other != o.index()) {
          EXPECT_GT(similarity(r.best, w, o), similarity(r.best, w, object_id(other)));
        }
    EXPECT_LT(test::max_speaker_mass_error(r.best), 1e-9);
  }
}

TEST(Train, SnapshotIsMinimumEpoch) {
  const auto c = inject_novel_items(generate_synthetic(SynthConfig{}, 2), 5, 5);
  const auto r = train(init_model(c, 16, 0.1, 4), c, small_cfg(LossKind::Joint, 4));
  ASSERT_EQ(r.trajectory.size(), 20u);
  ASSERT_GE(r.best_epoch, 1u);
  EXPECT_EQ(r.best_loss(), *std::min_element(r.trajectory.begin(), r.trajectory.end()));
  EXPECT_EQ(r.config.loss, LossKind::Joint);
  EXPECT_LT(test::max_speaker_mass_error(r.best), 1e-9);
}

TEST(Train, Deterministic) {
  const auto c = inject_novel_items(generate_synthetic(SynthConfig{}, 2), 5, 5);
  const auto a = train(init_model(c, 16, 0.1, 4), c, small_cfg(LossKind::OverObjects, 4));
  const auto b = train(init_model(c, 16, 0.1, 4), c, small_cfg(LossKind::OverObjects, 4));
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Train, ZeroLearningRateIsFixedPoint) {
  const auto c = generate_synthetic(SynthConfig{}, 2);
  const auto init = init_model(c, 16, 0.1, 4);
  auto cfg = small_cfg(LossKind::Joint, 4);
  cfg.learning_rate = 0.0;
  const auto r = train(init, c, cfg);
  EXPECT_EQ(r.best, init);
  // With negatives fixed per pair the epoch loss cannot move either.
  cfg.resample_negatives = false;
  const auto fixed = train(init, c, cfg);
  EXPECT_EQ(fixed.best, init);
  for (double l : fixed.trajectory) EXPECT_EQ(l, fixed.trajectory.front());
}

TEST(Train, SceneExclusionVariantRuns) {
  const auto c = inject_novel_items(generate_synthetic(SynthConfig{}, 2), 5, 5);
  auto cfg = small_cfg(LossKind::Joint, 1);
  cfg.exclude_scene_items = true;
  cfg.max_epochs = 3;
  const auto r = train(init_model(c, 8, 0.1, 1), c, cfg);
  EXPECT_EQ(r.trajectory.size(), 3u);
}

TEST(Train, TrajectoryCsv) {
  const auto c = noiseless(1);
  auto cfg = small_cfg(LossKind::OverWords, 0);
  cfg.max_epochs = 3;
  const auto r = train(init_model(c, 8, 0.1, 0), c, cfg);
  std::ostringstream out;
  write_trajectory(r, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(RandomSearch, ContractAndDeterminism) {
  const auto c = noiseless(2);
  TrainConfig base = small_cfg(LossKind::Joint, 0);
  base.max_epochs = 3;
  SearchSpace space;
  space.dims = {8, 16};

  const auto one = random_search(c, base, space, 1, 9);
  ASSERT_EQ(one.trials.size(), 1u);
  EXPECT_EQ(one.best.learning_rate, one.trials[0].config.learning_rate);
  EXPECT_EQ(one.best.dim, one.trials[0].config.dim);

  const auto a = random_search(c, base, space, 5, 9, 2);
  const auto b = random_search(c, base, space, 5, 9, 1);
  ASSERT_EQ(a.trials.size(), 5u);
  double best = a.trials[0].snapshot_loss;
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.trials[i].config.learning_rate, b.trials[i].config.learning_rate);
    EXPECT_EQ(a.trials[i].snapshot_loss, b.trials[i].snapshot_loss);
    EXPECT_GE(a.trials[i].config.learning_rate, space.lr_min);
    EXPECT_LE(a.trials[i].config.learning_rate, space.lr_max);
    best = std::min(best, a.trials[i].snapshot_loss);
  }
  const auto it = std::find_if(a.trials.begin(), a.trials.end(), [&](const SearchTrial& t) {
    return t.config.learning_rate == a.best.learning_rate;
  });
  ASSERT_NE(it, a.trials.end());
  EXPECT_EQ(it->snapshot_loss, best);
}
