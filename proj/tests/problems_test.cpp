#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "sketchsgd/cluster.hpp"
#include "sketchsgd/dataset.hpp"
#include "sketchsgd/error.hpp"
#include "sketchsgd/problems.hpp"
#include "test_util.hpp"

namespace sketchsgd {
namespace {

using testing::gaussian;
using testing::max_abs_diff;

std::vector<std::size_t> all_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected sketchsgd::Error";
  return ErrorCode::kCorruptMessage;
}

TEST(Quadratic, MinimizerHasZeroGradient) {
  const QuadraticSpec spec = make_quadratic(12, 0.1, 2.0, 0.0, 4);
  std::vector<double> w(12);
  for (std::size_t j = 0; j < 12; ++j) w[j] = spec.offset[j] / spec.curvature[j];
  EXPECT_LE(max_abs_diff(quadratic_gradient(w, 1, spec), std::vector<double>(12, 0.0)), 1e-15);
  EXPECT_EQ(spec.curvature.front(), 0.1);
  EXPECT_EQ(spec.curvature.back(), 2.0);
}

TEST(Quadratic, IdentityGradientIsW) {
  QuadraticSpec spec{std::vector<double>(5, 1.0), std::vector<double>(5, 0.0), 0.0};
  const auto w = gaussian(5, 3);
  EXPECT_EQ(quadratic_gradient(w, 9, spec), w);
}

TEST(Quadratic, NoiseAveragesOut) {
  const double sigma = 0.5;
  const QuadraticSpec spec = make_quadratic(8, 0.5, 1.0, sigma, 2);
  const auto w = gaussian(8, 1);
  std::vector<double> clean(8), mean(8, 0.0);
  for (std::size_t j = 0; j < 8; ++j) clean[j] = spec.curvature[j] * w[j] - spec.offset[j];
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const auto g = quadratic_gradient(w, static_cast<std::uint64_t>(s), spec);
    for (std::size_t j = 0; j < 8; ++j) mean[j] += g[j] / n;
  }
  EXPECT_LE(max_abs_diff(mean, clean), 3.0 * sigma / 100.0);
}

TEST(QuadraticProblem, PoolIsCentered) {
  const QuadraticProblem p(make_quadratic(6, 0.2, 1.0, 1.0, 5), 100, 5);
  const auto w = gaussian(6, 2);
  std::vector<double> full(6);
  p.full_gradient(w, full);
  std::vector<double> clean(6);
  for (std::size_t j = 0; j < 6; ++j) clean[j] = p.spec().curvature[j] * w[j] - p.spec().offset[j];
  EXPECT_LE(max_abs_diff(full, clean), 1e-12);
  EXPECT_EQ(p.test_metric(p.minimizer()), 0.0);
  EXPECT_EQ(p.strong_convexity(), 0.2);
  EXPECT_EQ(p.smoothness(), 1.0);
}

Dataset mirrored_pairs() {
  Dataset d;
  d.name = "pairs";
  d.dimension = 3;
  d.features = {1.0, 2.0, -1.0, 1.0, 2.0, -1.0, 0.5, 0.0, 3.0, 0.5, 0.0, 3.0};
  d.labels = {1.0, -1.0, 1.0, -1.0};
  d.checksum = compute_checksum(d);
  return d;
}

TEST(Logistic, MirroredPairsCancelAtZero) {
  const Dataset d = mirrored_pairs();
  EXPECT_EQ(logistic_gradient(std::vector<double>(3, 0.0), d, all_ids(4), 0.01), std::vector<double>(3, 0.0));
}

TEST(Logistic, FiniteDifferences) {
  const Dataset data = synth_data(60, 7, 2.0, 11);
  const auto ids = all_ids(data.size());
  Rng rng(3);
  const double eps = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(7), u(7);
    for (auto& x : w) x = rng.normal();
    for (auto& x : u) x = rng.normal();
    std::vector<double> plus = w, minus = w;
    for (std::size_t j = 0; j < 7; ++j) {
      plus[j] += eps * u[j];
      minus[j] -= eps * u[j];
    }
    const double fd = (logistic_loss(plus, data, ids, 0.01) - logistic_loss(minus, data, ids, 0.01)) / (2 * eps);
    const auto g = logistic_gradient(w, data, ids, 0.01);
    double dir = 0.0;
    for (std::size_t j = 0; j < 7; ++j) dir += g[j] * u[j];
    ASSERT_LE(std::abs(fd - dir), 1e-4 * std::max(1.0, std::abs(dir))) << "trial " << trial;
    ASSERT_LE(std::abs(fd - dir), 1e-5 * std::max(1.0, std::abs(dir)) * 10);
  }
}

TEST(Logistic, LargeLambdaDominates) {
  const Dataset data = synth_data(40, 5, 1.0, 2);
  const auto w = gaussian(5, 8);
  const auto g = logistic_gradient(w, data, all_ids(40), 1e3);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(g[j], 1e3 * w[j], 1e-3 * 1e3 * std::abs(w[j]) + 1.0);
}

TEST(Logistic, StrongConvexityAtLeastLambda) {
  const Dataset data = synth_data(20, 3, 1.0, 2);
  const LogisticProblem p(data, data, 0.01);
  ASSERT_TRUE(p.strong_convexity().has_value());
  EXPECT_GE(*p.strong_convexity(), 0.01);
}

TEST(Hinge, MarginCases) {
  Dataset d;
  d.dimension = 2;
  d.features = {2.0, 0.0, 0.0, -3.0};
  d.labels = {1.0, -1.0};
  const std::vector<double> w{1.0, 1.0};
  EXPECT_EQ(hinge_subgradient(w, d, all_ids(2)), std::vector<double>(2, 0.0));
  const std::vector<double> small{0.1, 0.0};
  EXPECT_EQ(hinge_subgradient(small, d, std::vector<std::size_t>{0}), (std::vector<double>{-2.0, 0.0}));
  // Exactly at the kink: zero branch.
  const std::vector<double> kink{0.5, 0.0};
  EXPECT_EQ(hinge_subgradient(kink, d, std::vector<std::size_t>{0}), std::vector<double>(2, 0.0));
  EXPECT_EQ(hinge_loss(kink, d, std::vector<std::size_t>{0}), 0.0);
  EXPECT_THROW(hinge_subgradient(w, d, std::vector<std::size_t>{}), Error);
}

TEST(Hinge, AveragedObjectiveDecreases) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset data = synth_data(400, 10, 2.0, seed);
    const HingeSvmProblem p(data, data, 0.0);
    OptimizerConfig c;
    c.algorithm = Algorithm::kVanilla;
    c.rounds = 200;
    c.lr = LrSchedule::constant(0.05);
    RunOptions opts;
    opts.batch_size = 16;
    const Metrics m = run_training(p, c, SketchDims{}, RunSeeds{seed, 0, 0}, opts);
    double early = 0.0, late = 0.0;
    for (std::size_t t = 1; t <= 20; ++t) early += m.records[t].train_loss / 20;
    for (std::size_t t = 181; t <= 200; ++t) late += m.records[t].train_loss / 20;
    EXPECT_LT(late, early) << "seed " << seed;
  }
}

TEST(Gradients, MeanOfPerSampleEqualsFull) {
  const Dataset data = synth_data(50, 6, 1.5, 4);
  const LogisticProblem logistic(data, data, 0.05);
  const HingeSvmProblem hinge(data, data, 0.05);
  const QuadraticProblem quadratic(make_quadratic(6, 0.1, 1.0, 1.0, 4), 50, 4);
  const auto w = gaussian(6, 12);
  for (const Problem* p : std::initializer_list<const Problem*>{&logistic, &hinge, &quadratic}) {
    std::vector<double> mean(6, 0.0), full(6);
    for (std::size_t i = 0; i < p->num_samples(); ++i) {
      const auto g = p->gradient(w, std::vector<std::size_t>{i});
      for (std::size_t j = 0; j < 6; ++j) mean[j] += g[j] / static_cast<double>(p->num_samples());
    }
    p->full_gradient(w, full);
    EXPECT_LE(max_abs_diff(mean, full), 1e-9) << to_string(p->kind());
  }
}

double trained_test_error(double separation, std::size_t n, std::size_t d, std::uint64_t seed) {
  const Dataset all = synth_data(n + n / 4, d, separation, seed);
  auto [train, test] = split_dataset(all, n / 4);
  const LogisticProblem p(train, test, 0.001);
  OptimizerConfig c;
  c.algorithm = Algorithm::kVanilla;
  c.rounds = 400;
  c.lr = LrSchedule::constant(0.5);
  RunOptions opts;
  opts.eval_every = 400;
  return run_training(p, c, SketchDims{}, RunSeeds{seed, 0, 0}, opts).summary.final_test_metric;
}

TEST(SynthData, SeparationControlsDifficulty) {
  const double none = trained_test_error(0.0, 2000, 20, 1);
  EXPECT_NEAR(none, 0.5, 0.05);
  EXPECT_LE(trained_test_error(10.0, 2000, 20, 1), 0.01);
}

TEST(SynthData, DeterministicChecksum) {
  const Dataset a = synth_data(30, 4, 2.0, 8);
  const Dataset b = synth_data(30, 4, 2.0, 8);
  EXPECT_EQ(a.checksum, b.checksum);
  EXPECT_EQ(a.checksum, compute_checksum(a));
  EXPECT_NE(a.checksum, synth_data(30, 4, 2.0, 9).checksum);
  std::size_t positives = 0;
  for (double y : a.labels) positives += y > 0;
  EXPECT_GT(positives, 5U);
  EXPECT_LT(positives, 25U);
}

TEST(LoadDataset, TwoLineFile) {
  const Dataset d = parse_dataset("1 0.5 0.25\n-1 0.1 0.9", "two");
  EXPECT_EQ(d.size(), 2U);
  EXPECT_EQ(d.dimension, 2U);
  EXPECT_EQ(d.features, (std::vector<double>{0.5, 0.25, 0.1, 0.9}));
  EXPECT_EQ(d.labels, (std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(d.checksum, compute_checksum(d));
}

TEST(LoadDataset, CommentsAndBlankLines) {
  const Dataset d = parse_dataset("# header\n\n3 1 2\n# mid\n7 4 5\n", "c");
  EXPECT_EQ(d.size(), 2U);
  EXPECT_EQ(d.labels[1], 7.0);
}

TEST(LoadDataset, Errors) {
  try {
    parse_dataset("1 0.5 0.25\n-1 0.1\n", "ragged.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("ragged.txt:2"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { parse_dataset("", "empty"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_dataset("1 abc\n", "bad"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { load_dataset("/nonexistent/data.txt"); }), ErrorCode::kIoError);
}

TEST(LoadDataset, FromFile) {
  const auto path = std::filesystem::temp_directory_path() / "sketchsgd_problems_test.txt";
  {
    std::ofstream out(path);
    out << "1 0 1\n0 1 0\n2 3 3\n";
  }
  const Dataset d = load_dataset(path);
  std::filesystem::remove(path);
  EXPECT_EQ(d.size(), 3U);
  const Dataset binary = one_vs_all(d, 1.0);
  EXPECT_EQ(binary.labels, (std::vector<double>{1.0, -1.0, -1.0}));
}

TEST(Preprocessing, NormalizeBiasSplit) {
  Dataset d = parse_dataset("1 0 10 5\n-1 2 20 5\n1 4 30 5\n", "p");
  const Dataset reference = d;
  normalize_unit_range(d, reference);
  EXPECT_EQ(d.features, (std::vector<double>{0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 1.0, 1.0, 0.0}));
  append_bias_feature(d);
  EXPECT_EQ(d.dimension, 4U);
  EXPECT_EQ(d.row(2)[3], 1.0);
  EXPECT_EQ(d.checksum, compute_checksum(d));
  const auto [train, test] = split_dataset(d, 1);
  EXPECT_EQ(train.size(), 2U);
  EXPECT_EQ(test.size(), 1U);
  EXPECT_EQ(test.row(0)[0], 1.0);
  EXPECT_THROW(split_dataset(d, 3), Error);
}

TEST(Classification, ErrorCountsSignMismatches) {
  const Dataset d = parse_dataset("1 1\n-1 1\n-1 -1\n1 0\n", "e");
  // sign(w x) with w = 1: predictions +, +, -, + (zero margin predicts +1).
  EXPECT_EQ(classification_error(std::vector<double>{1.0}, d), 0.25);
}

TEST(ProblemKind, Parse) {
  EXPECT_EQ(parse_problem_kind("hinge"), ProblemKind::kHingeSvm);
  EXPECT_EQ(parse_problem_kind(to_string(ProblemKind::kLogistic)), ProblemKind::kLogistic);
  EXPECT_FALSE(parse_problem_kind("mlp").has_value());
}

}  // namespace
}  // namespace sketchsgd
