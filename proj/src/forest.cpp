#include "quartercast/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "json.hpp"
#include "quartercast/error.hpp"
#include "quartercast/parallel.hpp"

namespace quartercast {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

struct Grower {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const ForestParams& params;
  std::span<const int> features;
  int mtry;
  TreeRng& rng;
  std::vector<TreeNode> nodes;

  std::vector<int> draw_features() {
    std::vector<int> pool(features.begin(), features.end());
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(mtry), pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  int grow(std::vector<Eigen::Index> rows, int depth) {
    double sum = 0.0;
    for (auto r : rows) sum += y[r];
    const double mean = sum / static_cast<double>(rows.size());
    double sse = 0.0;
    for (auto r : rows) sse += (y[r] - mean) * (y[r] - mean);

    const int index = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean});
    const bool too_small = static_cast<int>(rows.size()) <= params.min_node_size;
    const bool too_deep = params.max_depth && depth >= *params.max_depth;
    if (too_small || too_deep || sse == 0.0 || features.empty()) return index;

    const auto candidates = draw_features();
    const auto split = best_split(x, y, rows, candidates);
    if (!split) return index;

    std::vector<Eigen::Index> left, right;
    for (auto r : rows) (x(r, split->feature) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = nodes[static_cast<std::size_t>(index)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return index;
  }
};

}  // namespace

std::uint64_t uniform_index(TreeRng& rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::validation, "uniform_index over an empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

std::uint64_t tree_stream_seed(std::uint64_t seed, std::uint64_t tree_index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tree_index + 0x632be59bd9b4e019ULL));
}

double Tree::predict(const Eigen::Ref<const Eigen::VectorXd>& row) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const auto& node = nodes[at];
    at = static_cast<std::size_t>(row[node.feature] <= node.threshold ? node.left : node.right);
  }
  return nodes[at].value;
}

std::optional<Split> best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::span<const Eigen::Index> rows, std::span<const int> features) {
  const auto n = rows.size();
  if (n < 2) return std::nullopt;
  double mean = 0.0;
  for (auto r : rows) mean += y[r];
  mean /= static_cast<double>(n);
  double parent_sse = 0.0;
  double total = 0.0;
  for (auto r : rows) {
    parent_sse += (y[r] - mean) * (y[r] - mean);
    total += y[r] - mean;
  }
  if (parent_sse == 0.0) return std::nullopt;
  const double tie = kSplitTieTolerance * parent_sse;

  std::optional<Split> best;
  std::vector<std::pair<double, double>> column(n);  // (feature value, centred target)
  for (int f : features) {
    for (std::size_t i = 0; i < n; ++i) column[i] = {x(rows[i], f), y[rows[i]] - mean};
    std::sort(column.begin(), column.end());
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += column[i].second;
      if (!(column[i].first < column[i + 1].first)) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = static_cast<double>(n - i - 1);
      const double right_sum = total - left_sum;
      const double reduction =
          left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / static_cast<double>(n);
      if (!best || reduction > best->sse_reduction + tie) {
        best = Split{f, midpoint(column[i].first, column[i + 1].first), reduction};
      }
    }
  }
  if (!best || best->sse_reduction <= tie) return std::nullopt;
  return best;
}

Tree build_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& params,
                std::span<const int> features, int mtry, TreeRng& rng) {
  const auto n = static_cast<std::uint64_t>(x.rows());
  if (n == 0) throw Error(ErrorKind::validation, "cannot grow a tree on zero rows");
  Tree tree;
  tree.bootstrap.resize(n);
  if (params.bootstrap) {
    for (auto& r : tree.bootstrap) r = static_cast<Eigen::Index>(uniform_index(rng, n));
  } else {
    std::iota(tree.bootstrap.begin(), tree.bootstrap.end(), Eigen::Index{0});
  }
  Grower grower{x, y, params, features, mtry, rng, {}};
  grower.grow(tree.bootstrap, 0);
  tree.nodes = std::move(grower.nodes);
  return tree;
}

Forest train_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> feature_names,
                    const ForestParams& params) {
  if (x.rows() == 0) throw Error(ErrorKind::empty_training_set, "no training rows");
  if (y.size() != x.rows()) throw Error(ErrorKind::schema_mismatch, "target length differs from row count");
  if (static_cast<Eigen::Index>(feature_names.size()) != x.cols()) {
    throw Error(ErrorKind::schema_mismatch, "feature names do not match column count");
  }
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::validation, "training data must be finite");
  if (params.n_trees < 1 || params.min_node_size < 1) throw Error(ErrorKind::validation, "invalid forest params");
  if (params.mtry && (*params.mtry < 1 || *params.mtry > x.cols())) {
    throw Error(ErrorKind::validation, "mtry must be in 1..n_features");
  }

  Forest forest;
  forest.params = params;
  forest.feature_names = std::move(feature_names);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if ((x.col(c).array() != x(0, c)).any()) forest.active_features.push_back(static_cast<int>(c));
  }
  const int active = static_cast<int>(forest.active_features.size());
  forest.mtry = std::max(1, std::min(params.mtry.value_or(active / 3), std::max(active, 1)));

  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(forest.trees.size(), params.threads, [&](std::size_t i) {
    TreeRng rng(tree_stream_seed(params.seed, i));
    forest.trees[i] = build_tree(x, y, params, forest.active_features, forest.mtry, rng);
  });

  // Out-of-bag error, accumulated in tree order.
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> oob_sum(n, 0.0);
  std::vector<int> oob_count(n, 0);
  std::vector<char> in_bag(n);
  for (const auto& tree : forest.trees) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto r : tree.bootstrap) in_bag[static_cast<std::size_t>(r)] = 1;
    for (std::size_t r = 0; r < n; ++r) {
      if (in_bag[r]) continue;
      oob_sum[r] += tree.predict(x.row(static_cast<Eigen::Index>(r)).transpose());
      ++oob_count[r];
    }
  }
  double sq = 0.0;
  int counted = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (oob_count[r] == 0) {
      ++forest.oob_excluded;
      continue;
    }
    const double err = y[static_cast<Eigen::Index>(r)] - oob_sum[r] / oob_count[r];
    sq += err * err;
    ++counted;
  }
  forest.oob_mse = counted > 0 ? sq / counted : 0.0;
  return forest;
}

double predict_forest(const Forest& forest, const Eigen::Ref<const Eigen::VectorXd>& row) {
  if (static_cast<std::size_t>(row.size()) != forest.n_features()) {
    throw Error(ErrorKind::schema_mismatch, "row has " + std::to_string(row.size()) + " features, forest expects " +
                                                std::to_string(forest.n_features()));
  }
  if (forest.trees.empty()) throw Error(ErrorKind::validation, "forest has no trees");
  double sum = 0.0;
  for (const auto& tree : forest.trees) sum += tree.predict(row);
  return sum / static_cast<double>(forest.trees.size());
}

double predict_forest(const Forest& forest, const std::map<std::string, double>& row) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(forest.n_features()));
  for (std::size_t i = 0; i < forest.n_features(); ++i) {
    auto it = row.find(forest.feature_names[i]);
    if (it == row.end()) {
      throw Error(ErrorKind::schema_mismatch, "row lacks feature '" + forest.feature_names[i] + "'");
    }
    values[static_cast<Eigen::Index>(i)] = it->second;
  }
  return predict_forest(forest, values);
}

Eigen::VectorXd predict_forest_rows(const Forest& forest, const Eigen::MatrixXd& rows, int threads) {
  Eigen::VectorXd out(rows.rows());
  parallel_for(static_cast<std::size_t>(rows.rows()), threads, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[r] = predict_forest(forest, rows.row(r).transpose());
  });
  return out;
}

std::string forest_to_json(const Forest& forest) {
  using nlohmann::json;
  json params = {{"n_trees", forest.params.n_trees},
                 {"min_node_size", forest.params.min_node_size},
                 {"seed", forest.params.seed},
                 {"bootstrap", forest.params.bootstrap}};
  params["mtry"] = forest.params.mtry ? json(*forest.params.mtry) : json(nullptr);
  params["max_depth"] = forest.params.max_depth ? json(*forest.params.max_depth) : json(nullptr);
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& node : tree.nodes) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      value.push_back(node.value);
    }
    trees.push_back(
        {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
  }
  json doc = {{"format", "quartercast.forest"},
              {"version", 1},
              {"params", params},
              {"feature_names", forest.feature_names},
              {"active_features", forest.active_features},
              {"mtry", forest.mtry},
              {"oob_mse", forest.oob_mse},
              {"oob_excluded", forest.oob_excluded},
              {"trees", trees}};
  return doc.dump();
}

Forest forest_from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "quartercast.forest" || doc.at("version") != 1) {
      throw Error(ErrorKind::schema_mismatch, "not a version-1 forest document");
    }
    Forest forest;
    const auto& p = doc.at("params");
    forest.params.n_trees = p.at("n_trees").get<int>();
    forest.params.min_node_size = p.at("min_node_size").get<int>();
    forest.params.seed = p.at("seed").get<std::uint64_t>();
    forest.params.bootstrap = p.at("bootstrap").get<bool>();
    if (!p.at("mtry").is_null()) forest.params.mtry = p.at("mtry").get<int>();
    if (!p.at("max_depth").is_null()) forest.params.max_depth = p.at("max_depth").get<int>();
    forest.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    forest.active_features = doc.at("active_features").get<std::vector<int>>();
    forest.mtry = doc.at("mtry").get<int>();
    forest.oob_mse = doc.at("oob_mse").get<double>();
    forest.oob_excluded = doc.at("oob_excluded").get<int>();
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto value = t.at("value").get<std::vector<double>>();
      for (std::size_t i = 0; i < feature.size(); ++i) {
        tree.nodes.push_back(TreeNode{feature.at(i), threshold.at(i), left.at(i), right.at(i), value.at(i)});
      }
      forest.trees.push_back(std::move(tree));
    }
    return forest;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema_mismatch, std::string("malformed forest document: ") + e.what());
  }
}

}  // namespace quartercast
