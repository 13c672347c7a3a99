#include <numeric>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "forest_oracle.hpp"
#include "quartercast/error.hpp"
#include "quartercast/forest.hpp"

namespace quartercast {
namespace {

std::vector<std::string> names(Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back("f" + std::to_string(i));
  return out;
}

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return rows;
}

TEST(BestSplit, StepFunction) {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 0, 0, 10, 10;
  const auto rows = all_rows(4);
  const std::vector<int> features{0};
  const auto split = best_split(x, y, rows, features);
  ASSERT_TRUE(split);
  EXPECT_EQ(split->feature, 0);
  EXPECT_EQ(split->threshold, 2.5);
  EXPECT_NEAR(split->sse_reduction, 100.0, 1e-12);  // parent SSE 100, children 0
}

TEST(BestSplit, NoGainOrUnsplittable) {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  const auto rows = all_rows(4);
  const std::vector<int> features{0};
  EXPECT_FALSE(best_split(x, Eigen::VectorXd::Constant(4, 3.0), rows, features));
  Eigen::VectorXd y(4);
  y << 1, 5, 2, 8;
  EXPECT_FALSE(best_split(Eigen::MatrixXd::Constant(4, 1, 7.0), y, rows, features));
}

TEST(BestSplit, TwoPointMidpoint) {
  Eigen::MatrixXd x(2, 1);
  x << 0.25, 1.75;
  Eigen::VectorXd y(2);
  y << -1.0, 3.0;
  const auto rows = all_rows(2);
  const std::vector<int> features{0};
  const auto split = best_split(x, y, rows, features);
  ASSERT_TRUE(split);
  EXPECT_EQ(split->threshold, 1.0);
}

TEST(BestSplit, MatchesExhaustiveOracleOnEightRowFixtures) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> small(0, 3), target(0, 9);
  const std::vector<int> features{0, 1, 2};
  int splits = 0;
  for (int fixture = 0; fixture < 2000; ++fixture) {
    Eigen::MatrixXd x(8, 3);
    Eigen::VectorXd y(8);
    for (Eigen::Index i = 0; i < 8; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = small(rng) * 0.5;
      y[i] = target(rng);
    }
    const auto rows = all_rows(8);
    const auto got = best_split(x, y, rows, features);
    const auto want = testing::exhaustive_split(x, y, rows, features);
    ASSERT_EQ(got.has_value(), want.has_value()) << "fixture " << fixture;
    if (!got) continue;
    ++splits;
    EXPECT_EQ(got->feature, want->feature) << "fixture " << fixture;
    EXPECT_EQ(got->threshold, want->threshold) << "fixture " << fixture;
    EXPECT_NEAR(got->sse_reduction, want->sse_reduction, 1e-9 * (1.0 + want->sse_reduction));
  }
  EXPECT_GT(splits, 1000);
}

TEST(BuildTree, ConstantTargetsGiveSingleLeaf) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 3);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 6.5);
  const std::vector<int> features{0, 1, 2};
  TreeRng rng(1);
  const auto tree = build_tree(x, y, ForestParams{}, features, 1, rng);
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_EQ(tree.nodes[0].value, 6.5);
}

TEST(BuildTree, FullyGrownWithoutBootstrapMemorises) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(40, 3);
  Eigen::VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = u(gen);
    y[i] = u(gen) * 100.0;
  }
  ForestParams params;
  params.min_node_size = 1;
  params.bootstrap = false;
  const std::vector<int> features{0, 1, 2};
  TreeRng rng(3);
  const auto tree = build_tree(x, y, params, features, 1, rng);
  for (Eigen::Index i = 0; i < 40; ++i) EXPECT_EQ(tree.predict(x.row(i).transpose()), y[i]);
}

TEST(BuildTree, MatchesRecursiveOracleOnBootstrapSample) {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> small(0, 4), target(0, 20);
  for (int fixture = 0; fixture < 300; ++fixture) {
    Eigen::MatrixXd x(8, 2);
    Eigen::VectorXd y(8);
    for (Eigen::Index i = 0; i < 8; ++i) {
      x(i, 0) = small(gen);
      x(i, 1) = small(gen);
      y[i] = target(gen);
    }
    ForestParams params;
    params.min_node_size = 1;
    const std::vector<int> features{0, 1};
    TreeRng rng(static_cast<std::uint64_t>(fixture));
    const auto tree = build_tree(x, y, params, features, 2, rng);
    std::vector<TreeNode> expected;
    testing::exhaustive_tree(x, y, tree.bootstrap, params.min_node_size, expected);
    ASSERT_EQ(tree.nodes.size(), expected.size()) << "fixture " << fixture;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(tree.nodes[i].feature, expected[i].feature);
      EXPECT_EQ(tree.nodes[i].threshold, expected[i].threshold);
      EXPECT_EQ(tree.nodes[i].left, expected[i].left);
      EXPECT_EQ(tree.nodes[i].right, expected[i].right);
      EXPECT_NEAR(tree.nodes[i].value, expected[i].value, 1e-12);
    }
  }
}

TEST(Forest, ConstantTargets) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(60, 4);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(60, -2.0);
  ForestParams params;
  params.n_trees = 50;
  const auto forest = train_forest(x, y, names(4), params);
  EXPECT_EQ(forest.trees.size(), 50u);
  EXPECT_EQ(forest.oob_mse, 0.0);
  for (Eigen::Index i = 0; i < 60; ++i) EXPECT_EQ(predict_forest(forest, x.row(i).transpose()), -2.0);
}

TEST(Forest, SeedDeterminismAcrossThreadCounts) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  testing::friedman(200, 1, x, y);
  ForestParams params;
  params.n_trees = 64;
  params.seed = 42;
  std::vector<Eigen::VectorXd> predictions;
  const int max_threads = std::max(2U, std::thread::hardware_concurrency());
  for (int threads : {1, 2, max_threads}) {
    params.threads = threads;
    const auto forest = train_forest(x, y, names(10), params);
    predictions.push_back(predict_forest_rows(forest, x, threads));
    EXPECT_EQ(forest_to_json(forest), forest_to_json(train_forest(x, y, names(10), params)));
  }
  EXPECT_EQ(predictions[0], predictions[1]);
  EXPECT_EQ(predictions[0], predictions[2]);
  params.seed = 43;
  EXPECT_NE(predict_forest_rows(train_forest(x, y, names(10), params), x), predictions[0]);
}

TEST(Forest, AddingTreesKeepsExistingTrees) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  testing::friedman(100, 2, x, y);
  ForestParams params;
  params.seed = 5;
  params.n_trees = 10;
  const auto small = train_forest(x, y, names(10), params);
  params.n_trees = 25;
  const auto large = train_forest(x, y, names(10), params);
  for (std::size_t i = 0; i < small.trees.size(); ++i) EXPECT_EQ(small.trees[i].nodes, large.trees[i].nodes);
}

TEST(Forest, BeatsSingleTreeOnFriedman) {
  Eigen::MatrixXd x_train, x_test;
  Eigen::VectorXd y_train, y_test;
  testing::friedman(500, 2024, x_train, y_train);
  testing::friedman(200, 2025, x_test, y_test);
  ForestParams params;
  params.seed = 7;
  const auto forest = train_forest(x_train, y_train, names(10), params);
  params.n_trees = 1;
  const auto tree = train_forest(x_train, y_train, names(10), params);
  const double forest_mse = (predict_forest_rows(forest, x_test) - y_test).squaredNorm() / 200.0;
  const double tree_mse = (predict_forest_rows(tree, x_test) - y_test).squaredNorm() / 200.0;
  EXPECT_LT(forest_mse, tree_mse);
  EXPECT_GT(forest.oob_mse, 0.0);
  EXPECT_EQ(forest.oob_excluded, 0);
}

TEST(Forest, PredictionsWithinTargetRange) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  testing::friedman(150, 3, x, y);
  ForestParams params;
  params.n_trees = 40;
  const auto forest = train_forest(x, y, names(10), params);
  const Eigen::MatrixXd probe = Eigen::MatrixXd::Random(100, 10) * 3.0;
  const auto p = predict_forest_rows(forest, probe);
  EXPECT_GE(p.minCoeff(), y.minCoeff());
  EXPECT_LE(p.maxCoeff(), y.maxCoeff());
}

TEST(Forest, PredictIsMeanOfTrees) {
  Forest forest;
  forest.feature_names = {"a"};
  forest.trees.resize(2);
  forest.trees[0].nodes = {TreeNode{-1, 0.0, -1, -1, 10.0}};
  forest.trees[1].nodes = {TreeNode{-1, 0.0, -1, -1, 20.0}};
  EXPECT_EQ(predict_forest(forest, Eigen::VectorXd::Zero(1)), 15.0);
  EXPECT_EQ(predict_forest(forest, std::map<std::string, double>{{"a", 1.0}}), 15.0);
  try {
    predict_forest(forest, std::map<std::string, double>{{"b", 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema_mismatch);
  }
  EXPECT_THROW(predict_forest(forest, Eigen::VectorXd::Zero(2)), Error);
}

TEST(Forest, ConstantColumnsAreInactive) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  testing::friedman(120, 4, x, y);
  Eigen::MatrixXd padded(120, 12);
  padded << x, Eigen::MatrixXd::Zero(120, 2);
  ForestParams params;
  params.n_trees = 30;
  params.seed = 11;
  const auto base = train_forest(x, y, names(10), params);
  const auto with_constants = train_forest(padded, y, names(12), params);
  EXPECT_EQ(with_constants.active_features.size(), 10u);
  EXPECT_EQ(base.mtry, with_constants.mtry);
  for (std::size_t i = 0; i < base.trees.size(); ++i) EXPECT_EQ(base.trees[i].nodes, with_constants.trees[i].nodes);
}

TEST(Forest, JsonRoundTripIsLossless) {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  testing::friedman(80, 6, x, y);
  ForestParams params;
  params.n_trees = 12;
  params.max_depth = 6;
  params.seed = 0xFFFFFFFFFFFFFFF1ULL;
  const auto forest = train_forest(x, y, names(10), params);
  const auto text = forest_to_json(forest);
  const auto back = forest_from_json(text);
  EXPECT_EQ(forest_to_json(back), text);
  EXPECT_EQ(back.params.seed, params.seed);
  EXPECT_EQ(predict_forest_rows(back, x), predict_forest_rows(forest, x));
  EXPECT_THROW(forest_from_json("{\"format\":\"other\"}"), Error);
}

}  // namespace
}  // namespace quartercast
