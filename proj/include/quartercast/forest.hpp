#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace quartercast {

struct ForestParams {
  int n_trees = 500;
  std::optional<int> mtry;  // default floor(active features / 3), at least 1
  int min_node_size = 5;    // nodes this small or smaller become leaves
  std::optional<int> max_depth;
  std::uint64_t seed = 0;
  bool bootstrap = true;  // false only for memorisation tests
  int threads = 0;        // <= 0: default_threads(); never affects results

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Internal when feature >= 0 (rows with x[feature] <= threshold go left),
/// otherwise a leaf holding the mean target of its rows.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;           // nodes[0] is the root, preorder
  std::vector<Eigen::Index> bootstrap;  // training rows drawn (with repeats); not serialised

  double predict(const Eigen::Ref<const Eigen::VectorXd>& row) const;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double sse_reduction = 0.0;
};

/// Relative tolerance below which two candidate splits count as tied.
inline constexpr double kSplitTieTolerance = 1e-12;

/// Best variance-reduction split of `rows` over `features` (ascending), using
/// midpoints between consecutive distinct values. Ties go to the lowest
/// feature index, then the lowest threshold. None when no split reduces SSE.
std::optional<Split> best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::span<const Eigen::Index> rows, std::span<const int> features);

using TreeRng = std::mt19937_64;

/// Uniform integer in [0, n) with a platform-independent mapping.
std::uint64_t uniform_index(TreeRng& rng, std::uint64_t n);

/// Per-tree RNG seed derived from (forest seed, tree index).
std::uint64_t tree_stream_seed(std::uint64_t seed, std::uint64_t tree_index);

/// Grows one CART regression tree on a bootstrap sample drawn from `rng`.
/// `features` lists the columns eligible for splitting.
Tree build_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& params,
                std::span<const int> features, int mtry, TreeRng& rng);

struct Forest {
  std::vector<Tree> trees;
  ForestParams params;
  std::vector<std::string> feature_names;
  std::vector<int> active_features;  // columns with more than one distinct value
  int mtry = 1;
  double oob_mse = 0.0;
  int oob_excluded = 0;  // rows never out of bag

  std::size_t n_features() const noexcept { return feature_names.size(); }
};

/// Bagged trees; tree i depends only on (rows, params, i). Columns that are
/// constant across all rows are never split on and do not count towards mtry.
Forest train_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> feature_names,
                    const ForestParams& params);

/// Mean of the per-tree predictions.
double predict_forest(const Forest& forest, const Eigen::Ref<const Eigen::VectorXd>& row);
/// Looks features up by name; a missing name is a schema mismatch.
double predict_forest(const Forest& forest, const std::map<std::string, double>& row);
Eigen::VectorXd predict_forest_rows(const Forest& forest, const Eigen::MatrixXd& rows, int threads = 0);

/// Versioned JSON document; lossless round trip.
std::string forest_to_json(const Forest& forest);
Forest forest_from_json(std::string_view text);

}  // namespace quartercast
