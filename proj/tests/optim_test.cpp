#include <gtest/gtest.h>

#include <numeric>

#include "sketchsgd/error.hpp"
#include "sketchsgd/optim.hpp"
#include "test_util.hpp"

namespace sketchsgd {
namespace {

using testing::gaussian;
using testing::max_abs_diff;

OptimizerConfig theory_config(std::size_t d, std::size_t k, std::size_t workers) {
  OptimizerConfig c;
  c.algorithm = Algorithm::kSketched;
  c.mode = OptimizerMode::kTheory;
  c.k = k;
  c.workers = workers;
  c.beta = 5.0;
  c.xi = theory_min_xi(d, k, c.beta) + 1.0;
  return c;
}

RoundContext ctx(std::size_t t, std::uint64_t seed = 1) { return RoundContext{t, seed, seed + 1, nullptr}; }

TEST(LrTheory, Values) {
  EXPECT_EQ(lr_theory(1, 3.0), 0.25);
  EXPECT_DOUBLE_EQ(lr_theory(97, 3.0), 0.01);
  for (std::size_t t = 1; t < 100; ++t) EXPECT_LT(lr_theory(t + 1, 3.0), lr_theory(t, 3.0));
}

TEST(LrSchedule, PiecewiseLinear) {
  const LrSchedule s({{0.0, 0.0}, {10.0, 1.0}, {20.0, 0.5}});
  EXPECT_EQ(s.at(0), 0.0);
  EXPECT_EQ(s.at(5), 0.5);
  EXPECT_EQ(s.at(10), 1.0);
  EXPECT_EQ(s.at(15), 0.75);
  EXPECT_EQ(s.at(1000), 0.5);
  EXPECT_EQ(LrSchedule::constant(0.3).at(7), 0.3);
  EXPECT_THROW(LrSchedule({{5.0, 0.1}, {5.0, 0.2}}), Error);
  EXPECT_THROW(LrSchedule(std::vector<LrSchedule::Knot>{}), Error);
}

TEST(OptimizerConfig, TheoryXiBound) {
  // rho(5) = 20 / 36; bound = 2 + 4 * 6 / (2 * (1 + 20/36)).
  EXPECT_DOUBLE_EQ(theory_rho(5.0), 20.0 / 36.0);
  EXPECT_DOUBLE_EQ(theory_min_xi(4, 2, 5.0), 2.0 + 24.0 / (2.0 * (56.0 / 36.0)));
  OptimizerConfig c = theory_config(4, 2, 1);
  EXPECT_NO_THROW(validate(c, 4));
  c.xi = theory_min_xi(4, 2, 5.0);
  EXPECT_THROW(validate(c, 4), Error);
  c.beta = 4.0;
  EXPECT_THROW(validate(c, 4), Error);
  // Empirical mode ignores xi and beta.
  c.mode = OptimizerMode::kEmpirical;
  c.p = 1;
  c.xi = 0.0;
  EXPECT_NO_THROW(validate(c, 4));
  c.momentum = 1.0;
  EXPECT_THROW(validate(c, 4), Error);
  c.momentum = 0.0;
  c.k = 5;
  EXPECT_THROW(validate(c, 4), Error);
}

TEST(OptimizerConfig, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::kSketched, Algorithm::kVanilla, Algorithm::kTrueTopK, Algorithm::kLocalTopK}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_EQ(parse_mode("theory"), OptimizerMode::kTheory);
  EXPECT_FALSE(parse_algorithm("sgd").has_value());
}

TEST(IterateAverage, ConstantIterates) {
  IterateAverage avg(3.0);
  const std::vector<double> w{1.0, -2.0, 0.5};
  for (std::size_t t = 1; t <= 5; ++t) avg.add(t, w);
  const auto got = finalize_average(avg);
  EXPECT_LE(max_abs_diff(got, w), 1e-15);
}

TEST(IterateAverage, TwoStepWeights) {
  IterateAverage avg(3.0);
  const std::vector<double> w1{1.0, 0.0}, w2{0.0, 2.0};
  avg.add(1, w1);
  avg.add(2, w2);
  EXPECT_EQ(avg.total_weight(), 41.0);
  const auto got = finalize_average(avg);
  EXPECT_DOUBLE_EQ(got[0], 16.0 / 41.0);
  EXPECT_DOUBLE_EQ(got[1], 50.0 / 41.0);
}

TEST(IterateAverage, EmptyFails) {
  try {
    (void)finalize_average(IterateAverage(3.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyAverage);
  }
}

TEST(TheoryRound, SmallClosedForm) {
  const std::size_t d = 4;
  const OptimizerConfig c = theory_config(d, 2, 2);
  auto states = make_workers(2, std::vector<double>(d, 0.0));
  const std::vector<std::vector<double>> grads{{3.0, 0.0, 0.0, -1.0}, {1.0, 0.0, 0.0, -3.0}};
  const RoundResult r = theory_round(states, grads, c, SketchDims{7, 256}, ctx(1));
  const double eta = lr_theory(1, c.xi);
  EXPECT_EQ(r.update, KSparseVector(d, {{0, 2.0 * eta}, {3, -2.0 * eta}}));
  for (const auto& s : states) {
    EXPECT_EQ(s.w, (std::vector<double>{-2.0 * eta, 0.0, 0.0, 2.0 * eta}));
  }
  EXPECT_EQ(states[0].a, (std::vector<double>{3.0 * eta - 2.0 * eta, 0.0, 0.0, -eta + 2.0 * eta}));
  EXPECT_EQ(states[1].a, (std::vector<double>{eta - 2.0 * eta, 0.0, 0.0, -3.0 * eta + 2.0 * eta}));
}

TEST(TheoryRound, ZeroGradientsLeaveStateUnchanged) {
  const std::size_t d = 8;
  const OptimizerConfig c = theory_config(d, 2, 3);
  const std::vector<double> w0{1, 2, 3, 4, 5, 6, 7, 8};
  auto states = make_workers(3, w0);
  const std::vector<std::vector<double>> grads(3, std::vector<double>(d, 0.0));
  const RoundResult r = theory_round(states, grads, c, SketchDims{3, 8}, ctx(1));
  EXPECT_EQ(r.update.nonzeros(), 0U);
  for (const auto& s : states) {
    EXPECT_EQ(s.w, w0);
    EXPECT_EQ(s.a, std::vector<double>(d, 0.0));
  }
}

TEST(TheoryRound, WorkerSplitMatchesSingleWorker) {
  const std::size_t d = 64, k = 8;
  const SketchDims dims{9, 64};
  OptimizerConfig one = theory_config(d, k, 1);
  OptimizerConfig two = one;
  two.workers = 2;
  auto s1 = make_workers(1, std::vector<double>(d, 0.0));
  auto s2 = make_workers(2, std::vector<double>(d, 0.0));
  for (std::size_t t = 1; t <= 30; ++t) {
    const auto g1 = gaussian(d, 2 * t);
    const auto g2 = gaussian(d, 2 * t + 1);
    std::vector<double> mean(d);
    for (std::size_t j = 0; j < d; ++j) mean[j] = 0.5 * (g1[j] + g2[j]);
    const std::vector<std::vector<double>> split{g1, g2};
    const std::vector<std::vector<double>> whole{mean};
    const RoundResult a = theory_round(s1, whole, one, dims, ctx(t, 100 + t));
    const RoundResult b = theory_round(s2, split, two, dims, ctx(t, 100 + t));
    ASSERT_EQ(a.update.indices(), b.update.indices()) << "round " << t;
    ASSERT_LE(max_abs_diff(a.update.to_dense(), b.update.to_dense()), 1e-10);
  }
  EXPECT_LE(max_abs_diff(s1[0].w, s2[0].w), 1e-10);
  EXPECT_EQ(s2[0].w, s2[1].w);
}

TEST(TheoryRound, ErrorFeedbackConservation) {
  const std::size_t d = 32;
  const OptimizerConfig c = theory_config(d, 4, 1);
  auto states = make_workers(1, std::vector<double>(d, 0.0));
  std::vector<double> scaled_sum(d, 0.0), applied(d, 0.0);
  for (std::size_t t = 1; t <= 100; ++t) {
    const auto g = std::vector<std::vector<double>>{gaussian(d, t)};
    const double eta = learning_rate(c, t);
    for (std::size_t j = 0; j < d; ++j) scaled_sum[j] += eta * g[0][j];
    const RoundResult r = theory_round(states, g, c, SketchDims{5, 24}, ctx(t, t));
    for (const auto& e : r.update.entries()) applied[e.index] += e.value;
    std::vector<double> lhs(d);
    for (std::size_t j = 0; j < d; ++j) lhs[j] = states[0].a[j] + applied[j];
    ASSERT_LE(max_abs_diff(lhs, scaled_sum), 1e-9) << "round " << t;
  }
}

TEST(TheoryRound, FullKMatchesVanilla) {
  const std::size_t d = 16;
  const OptimizerConfig c = theory_config(d, d, 1);
  auto sketched = make_workers(1, std::vector<double>(d, 0.5));
  auto vanilla = sketched;
  for (std::size_t t = 1; t <= 50; ++t) {
    const std::vector<std::vector<double>> g{gaussian(d, 7 * t)};
    theory_round(sketched, g, c, SketchDims{3, 4}, ctx(t, t));
    vanilla_step(vanilla, g, learning_rate(c, t));
    ASSERT_LE(max_abs_diff(sketched[0].w, vanilla[0].w), 1e-9);
  }
}

TEST(TheoryRound, DimensionMismatch) {
  const OptimizerConfig c = theory_config(4, 2, 1);
  auto states = make_workers(1, std::vector<double>(4, 0.0));
  const std::vector<std::vector<double>> bad{std::vector<double>(5, 1.0)};
  try {
    theory_round(states, bad, c, SketchDims{2, 4}, ctx(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  const std::vector<std::vector<double>> two(2, std::vector<double>(4, 1.0));
  EXPECT_THROW(theory_round(states, two, c, SketchDims{2, 4}, ctx(1)), Error);
}

OptimizerConfig empirical_config(std::size_t k, std::size_t p, double momentum, double lr) {
  OptimizerConfig c;
  c.mode = OptimizerMode::kEmpirical;
  c.k = k;
  c.p = p;
  c.momentum = momentum;
  c.lr = LrSchedule::constant(lr);
  return c;
}

TEST(EmpiricalRound, FullCandidatesMatchTrueTopK) {
  const std::size_t d = 64, k = 6;
  const OptimizerConfig c = empirical_config(k, 11, 0.0, 0.1);
  auto sketched = make_workers(3, std::vector<double>(d, 0.0));
  auto exact = sketched;
  for (std::size_t t = 1; t <= 20; ++t) {
    std::vector<std::vector<double>> g;
    for (std::size_t i = 0; i < 3; ++i) g.push_back(gaussian(d, 10 * t + i));
    const RoundResult a = empirical_round(sketched, g, c, SketchDims{3, 16}, ctx(t, t));
    const RoundResult b = true_topk_step(exact, g, 0.1, k);
    ASSERT_EQ(a.candidates, d);
    ASSERT_EQ(a.update.indices(), b.update.indices());
    ASSERT_LE(max_abs_diff(a.update.to_dense(), b.update.to_dense()), 1e-12);
  }
  EXPECT_LE(max_abs_diff(sketched[2].w, exact[2].w), 1e-12);
}

TEST(EmpiricalRound, MaskingZeroesSupport) {
  const std::size_t d = 200;
  const OptimizerConfig c = empirical_config(5, 3, 0.9, 0.05);
  auto states = make_workers(4, std::vector<double>(d, 0.0));
  for (std::size_t t = 1; t <= 10; ++t) {
    std::vector<std::vector<double>> g;
    for (std::size_t i = 0; i < 4; ++i) g.push_back(gaussian(d, 50 * t + i));
    const RoundResult r = empirical_round(states, g, c, SketchDims{5, 30}, ctx(t, t));
    ASSERT_LE(r.update.size(), 5U);
    ASSERT_LE(r.candidates, 15U);
    for (const auto& s : states) {
      for (std::size_t j : r.update.indices()) {
        ASSERT_EQ(s.u[j], 0.0);
        ASSERT_EQ(s.v[j], 0.0);
      }
      ASSERT_EQ(s.w, states[0].w);
    }
  }
}

TEST(EmpiricalRound, ErrorFeedbackHandTrace) {
  const OptimizerConfig c = empirical_config(1, 4, 0.0, 0.5);
  auto states = make_workers(1, std::vector<double>(4, 0.0));
  const SketchDims big{5, 64};
  const RoundResult r1 = empirical_round(states, std::vector<std::vector<double>>{{3.0, 1.0, 0.0, 0.0}}, c, big, ctx(1));
  EXPECT_EQ(r1.update, KSparseVector(4, {{0, 3.0}}));
  EXPECT_EQ(states[0].v, (std::vector<double>{0.0, 1.0, 0.0, 0.0}));
  EXPECT_EQ(states[0].w, (std::vector<double>{-1.5, 0.0, 0.0, 0.0}));
  // v = [0, 2, 0, 2]: the carried mass ties index 3 and wins on the lower index.
  const RoundResult r2 = empirical_round(states, std::vector<std::vector<double>>{{0.0, 1.0, 0.0, 2.0}}, c, big, ctx(2));
  EXPECT_EQ(r2.update, KSparseVector(4, {{1, 2.0}}));
  EXPECT_EQ(states[0].v, (std::vector<double>{0.0, 0.0, 0.0, 2.0}));
  EXPECT_EQ(states[0].w, (std::vector<double>{-1.5, -1.0, 0.0, 0.0}));
}

TEST(EmpiricalRound, UncompressedBiasBypassesSketch) {
  const std::size_t d = 50;
  OptimizerConfig c = empirical_config(3, 2, 0.0, 0.1);
  c.uncompressed_bias = true;
  c.bias_coords = {49};
  auto states = make_workers(2, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> g{gaussian(d, 1), gaussian(d, 2)};
  g[0][49] = 1e-6;  // tiny, never a top-k candidate on its own
  g[1][49] = 3e-6;
  const RoundResult r = empirical_round(states, g, c, SketchDims{3, 6}, ctx(1));
  const auto dense = r.update.to_dense();
  EXPECT_DOUBLE_EQ(dense[49], 2e-6);
  EXPECT_LE(r.update.size(), 4U);
  EXPECT_EQ(states[0].v[49], 0.0);
}

TEST(VanillaStep, Basics) {
  const std::vector<double> w0{1.0, -2.0, 4.0};
  auto states = make_workers(2, w0);
  const std::vector<std::vector<double>> g{{1.0, 1.0, 1.0}, {3.0, -1.0, 0.0}};
  vanilla_step(states, g, 0.0);
  EXPECT_EQ(states[0].w, w0);
  vanilla_step(states, g, 0.5);
  EXPECT_EQ(states[1].w, (std::vector<double>{0.0, -2.0, 3.75}));

  // g = w: geometric decay.
  auto one = make_workers(1, w0);
  for (int t = 0; t < 3; ++t) vanilla_step(one, std::vector<std::vector<double>>{one[0].w}, 0.25);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(one[0].w[j], w0[j] * 0.75 * 0.75 * 0.75);
}

TEST(TrueTopK, FullKMatchesVanillaAndSingleCoordinate) {
  const std::size_t d = 10;
  auto topk = make_workers(2, std::vector<double>(d, 1.0));
  auto vanilla = topk;
  for (std::size_t t = 1; t <= 10; ++t) {
    const std::vector<std::vector<double>> g{gaussian(d, t), gaussian(d, 100 + t)};
    true_topk_step(topk, g, 0.1, d);
    vanilla_step(vanilla, g, 0.1);
    for (const auto& s : topk) ASSERT_EQ(s.v, std::vector<double>(d, 0.0));
  }
  EXPECT_LE(max_abs_diff(topk[0].w, vanilla[0].w), 1e-12);

  auto s = make_workers(1, std::vector<double>(3, 0.0));
  const RoundResult r = true_topk_step(s, std::vector<std::vector<double>>{{1.0, -3.0, 2.0}}, 1.0, 1);
  EXPECT_EQ(r.update, KSparseVector(3, {{1, -3.0}}));
  EXPECT_EQ(s[0].w, (std::vector<double>{0.0, 3.0, 0.0}));
}

TEST(LocalTopK, SingleWorkerMatchesTrueTopK) {
  const std::size_t d = 40, k = 4;
  auto local = make_workers(1, std::vector<double>(d, 0.0));
  auto global = local;
  for (std::size_t t = 1; t <= 15; ++t) {
    const std::vector<std::vector<double>> g{gaussian(d, t)};
    const RoundResult a = local_topk_step(local, g, 0.2, k, 0.5);
    const RoundResult b = true_topk_step(global, g, 0.2, k, 0.5);
    ASSERT_EQ(a.union_size, k);
    ASSERT_EQ(a.update, b.update);
  }
  EXPECT_EQ(local[0].w, global[0].w);
}

TEST(LocalTopK, DisjointWorkersGiveKW) {
  const std::size_t d = 32, k = 3, workers = 4;
  std::vector<std::vector<double>> g(workers, std::vector<double>(d, 0.01));
  for (std::size_t i = 0; i < workers; ++i) {
    for (std::size_t j = 0; j < k; ++j) g[i][i * k + j] = 5.0;
  }
  auto states = make_workers(workers, std::vector<double>(d, 0.0));
  const RoundResult r = local_topk_step(states, g, 0.1, k);
  EXPECT_EQ(r.union_size, k * workers);
  EXPECT_DOUBLE_EQ(r.update.to_dense()[0], 5.0 / workers);
  // Worker 0 keeps the residual of what only others sent.
  EXPECT_EQ(states[0].v[0], 0.0);
  EXPECT_EQ(states[0].v[k], 0.01);
}

TEST(LocalTopK, UnionGrowsWithWorkers) {
  const std::size_t d = 1024, k = 32;
  double prev = 0.0;
  for (std::size_t workers : {1, 2, 4, 8, 16}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto states = make_workers(workers, std::vector<double>(d, 0.0));
      std::vector<std::vector<double>> g;
      for (std::size_t i = 0; i < workers; ++i) g.push_back(gaussian(d, 1000 * seed + i));
      const RoundResult r = local_topk_step(states, g, 0.1, k);
      EXPECT_LE(r.union_size, std::min(k * workers, d));
      total += static_cast<double>(r.union_size);
    }
    EXPECT_GE(total / 20.0, prev);
    prev = total / 20.0;
  }
}

TEST(Replicas, StayIdenticalAcrossAlgorithms) {
  const std::size_t d = 30, workers = 3;
  auto a = make_workers(workers, std::vector<double>(d, 0.0));
  auto b = a, c = a;
  const OptimizerConfig e = empirical_config(4, 2, 0.5, 0.1);
  for (std::size_t t = 1; t <= 5; ++t) {
    std::vector<std::vector<double>> g;
    for (std::size_t i = 0; i < workers; ++i) g.push_back(gaussian(d, 9 * t + i));
    empirical_round(a, g, e, SketchDims{3, 10}, ctx(t, t));
    local_topk_step(b, g, 0.1, 4, 0.5);
    true_topk_step(c, g, 0.1, 4, 0.5);
  }
  for (std::size_t i = 1; i < workers; ++i) {
    EXPECT_EQ(a[i].w, a[0].w);
    EXPECT_EQ(b[i].w, b[0].w);
    EXPECT_EQ(c[i].w, c[0].w);
  }
}

}  // namespace
}  // namespace sketchsgd
