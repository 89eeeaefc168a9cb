#include <gtest/gtest.h>

#include <random>

#include "mmdmp/training.hpp"
#include "test_support.hpp"

namespace mmdmp {
namespace {

struct Fixture {
  SampleSet p, q;
  KernelParams omega;
};

Fixture make_fixture(int n, int d, double shift, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Fixture f;
  f.p = SampleSet(oracle::random_matrix(n, d, gen), "p");
  Matrix q = oracle::random_matrix(n, d, gen);
  q.col(0).array() += shift;
  f.q = SampleSet(q, "q");
  f.omega = make_kernel({0.1, 1.0, 2.0}, make_mlp({d, 6, d}, seed));
  return f;
}

TrainConfig small_config(Objective obj, int steps) {
  TrainConfig c;
  c.objective = obj;
  c.max_steps = steps;
  c.batch_size = 16;
  c.learning_rate = 1e-2;
  c.seed = 5;
  return c;
}

bool same_params(const KernelParams& a, const KernelParams& b) {
  if (a.epsilon_raw != b.epsilon_raw || a.log_sigma_phi != b.log_sigma_phi || a.log_sigma_q != b.log_sigma_q) {
    return false;
  }
  for (std::size_t i = 0; i < a.featurizer.layers.size(); ++i) {
    if (a.featurizer.layers[i].weight != b.featurizer.layers[i].weight) return false;
    if (a.featurizer.layers[i].bias != b.featurizer.layers[i].bias) return false;
  }
  return true;
}

TEST(Train, ZeroStepsLeavesParametersUnchanged) {
  const Fixture f = make_fixture(20, 3, 1.0, 1);
  const TrainTrace t = train(f.p, {f.q}, f.omega, small_config(Objective::mmd_mp, 0));
  EXPECT_TRUE(t.records.empty());
  EXPECT_TRUE(same_params(t.final_params, f.omega));
}

TEST(Train, SameSeedReproducesTraceExactly) {
  const Fixture f = make_fixture(40, 3, 1.0, 2);
  const TrainConfig c = small_config(Objective::mmd_mp, 15);
  const TrainTrace a = train(f.p, {f.q}, f.omega, c);
  const TrainTrace b = train(f.p, {f.q}, f.omega, c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].objective, b.records[i].objective);
    EXPECT_EQ(a.records[i].mmd_u, b.records[i].mmd_u);
  }
  EXPECT_TRUE(same_params(a.final_params, b.final_params));
}

TEST(Train, DifferentSeedsDiffer) {
  const Fixture f = make_fixture(40, 3, 1.0, 3);
  TrainConfig c = small_config(Objective::mmd_d, 5);
  const TrainTrace a = train(f.p, {f.q}, f.omega, c);
  c.seed = 6;
  const TrainTrace b = train(f.p, {f.q}, f.omega, c);
  EXPECT_NE(a.records[0].objective, b.records[0].objective);
}

TEST(Train, SeparableDataRaisesObjective) {
  const Fixture f = make_fixture(16, 2, 4.0, 4);
  for (Objective obj : {Objective::mmd_d, Objective::mmd_mp}) {
    const TrainTrace t = train(f.p, {f.q}, f.omega, small_config(obj, 60));
    // Full-batch training: every step sees the same data.
    EXPECT_GT(t.records.back().objective, t.records.front().objective) << to_string(obj);
  }
}

TEST(Train, ObserverSeesEveryStep) {
  const Fixture f = make_fixture(20, 2, 1.0, 5);
  std::vector<int> seen;
  train(f.p, {f.q}, f.omega, small_config(Objective::mmd_mp, 4), [&](int s, const KernelParams&) { seen.push_back(s); });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Train, NullDataStaysFinite) {
  const Fixture f = make_fixture(32, 3, 0.0, 6);
  const TrainTrace t = train(f.p, {f.q}, f.omega, small_config(Objective::mmd_mp, 20));
  for (const auto& r : t.records) EXPECT_TRUE(std::isfinite(r.objective));
  EXPECT_NO_THROW(t.final_params.validate());
}

TEST(Train, FrozenKernelRecordsButDoesNotMove) {
  Fixture f = make_fixture(20, 2, 1.0, 7);
  f.omega.trainable = {false, false, false, false};
  const TrainTrace t = train(f.p, {f.q}, f.omega, small_config(Objective::mmd_mp, 3));
  EXPECT_EQ(t.records.size(), 3u);
  EXPECT_TRUE(same_params(t.final_params, f.omega));
}

TEST(Train, BatchLargerThanPoolIsRejected) {
  const Fixture f = make_fixture(10, 2, 1.0, 8);
  EXPECT_THROW(train(f.p, {f.q}, f.omega, small_config(Objective::mmd_mp, 1)), InvalidInput);
}

TEST(Train, UnbalancedPoolsAreSubsampledOrRejected) {
  const Fixture f = make_fixture(40, 2, 1.0, 9);
  const SampleSet small_q = f.q.subset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
  TrainConfig c = small_config(Objective::mmd_mp, 3);
  EXPECT_NO_THROW(train(f.p, {small_q}, f.omega, c));
  c.subsample = SubsamplePolicy::reject;
  EXPECT_THROW(train(f.p, {small_q}, f.omega, c), InvalidInput);
  EXPECT_THROW(parse_subsample_policy("maybe"), InvalidInput);
}

TEST(Train, SeveralQPopulationsArePooled) {
  const Fixture f = make_fixture(20, 2, 1.0, 10);
  const Fixture g = make_fixture(20, 2, -1.0, 11);
  const TrainTrace t = train(f.p, {f.q, g.q}, f.omega, small_config(Objective::mmd_mp, 3));
  EXPECT_EQ(t.records.size(), 3u);
}

TEST(Train, RejectsBadConfigAndData) {
  const Fixture f = make_fixture(20, 2, 1.0, 12);
  TrainConfig c = small_config(Objective::mmd_mp, 1);
  c.lambda = 0.0;
  EXPECT_THROW(train(f.p, {f.q}, f.omega, c), InvalidInput);
  EXPECT_THROW(train(f.p, {}, f.omega, small_config(Objective::mmd_mp, 1)), InvalidInput);
  SampleSet bad = f.q;
  bad.data(3, 1) = std::nan("");
  EXPECT_THROW(train(f.p, {bad}, f.omega, small_config(Objective::mmd_mp, 1)), InvalidInput);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam adam({0.1, 0.9, 0.999, 1e-8}, 2);
  Vector theta = Vector::Zero(2);
  Vector g(2);
  g << 3.0, -0.5;
  adam.ascend(theta, g);
  EXPECT_NEAR(theta(0), 0.1, 1e-8);
  EXPECT_NEAR(theta(1), -0.1, 1e-7);
}

}  // namespace
}  // namespace mmdmp
