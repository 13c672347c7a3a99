#include "quartercast/config.hpp"

#include <array>
#include <set>

#include "json.hpp"
#include "quartercast/error.hpp"

namespace quartercast {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::validation, "config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw Error(ErrorKind::validation, "config: unknown key '" + where + key + "'");
  }
}

QuarterRange parse_range(const json& j, const std::string& name) {
  reject_unknown(j, {"first", "last"}, name + ".");
  QuarterRange r{parse_quarter(j.at("first").get<std::string>()), parse_quarter(j.at("last").get<std::string>())};
  if (r.last < r.first) throw Error(ErrorKind::validation, "config: " + name + " has last before first");
  return r;
}

json range_json(const std::optional<QuarterRange>& r) {
  if (!r) return nullptr;
  return {{"first", to_string(r->first)}, {"last", to_string(r->last)}};
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  RunConfig config;
  try {
    const json doc = json::parse(json_text);
    reject_unknown(doc,
                   {"model", "train_range", "test_range", "seed", "forest", "features", "indicators", "model1",
                    "output_format"},
                   "");
    if (doc.contains("model")) config.model = parse_model(doc["model"].get<std::string>());
    if (doc.contains("train_range")) config.train = parse_range(doc["train_range"], "train_range");
    if (doc.contains("test_range")) config.test = parse_range(doc["test_range"], "test_range");
    if (doc.contains("seed")) config.seed = optional_from<std::uint64_t>(doc["seed"]);
    if (doc.contains("output_format")) config.output = parse_output_format(doc["output_format"].get<std::string>());
    if (doc.contains("forest")) {
      const auto& f = doc["forest"];
      reject_unknown(f, {"n_trees", "mtry", "min_node_size", "max_depth"}, "forest.");
      config.forest.n_trees = f.value("n_trees", config.forest.n_trees);
      if (f.contains("mtry")) config.forest.mtry = optional_from<int>(f["mtry"]);
      config.forest.min_node_size = f.value("min_node_size", config.forest.min_node_size);
      if (f.contains("max_depth")) config.forest.max_depth = optional_from<int>(f["max_depth"]);
      if (config.forest.n_trees < 1 || config.forest.min_node_size < 1 ||
          (config.forest.mtry && *config.forest.mtry < 1) || (config.forest.max_depth && *config.forest.max_depth < 0)) {
        throw Error(ErrorKind::validation, "config: forest parameters out of range");
      }
    }
    if (doc.contains("features")) {
      const auto& f = doc["features"];
      reject_unknown(f, {"lag_convention", "macro_source", "macro_at_origin", "macro_at_target"}, "features.");
      if (f.contains("lag_convention")) {
        const auto s = f["lag_convention"].get<std::string>();
        if (s != "origin" && s != "previous") {
          throw Error(ErrorKind::validation, "config: lag_convention must be 'origin' or 'previous'");
        }
        config.features.lags = s == "origin" ? LagConvention::origin : LagConvention::previous;
      }
      if (f.contains("macro_source")) {
        const auto s = f["macro_source"].get<std::string>();
        if (s != "indicator" && s != "revenue") {
          throw Error(ErrorKind::validation, "config: macro_source must be 'indicator' or 'revenue'");
        }
        config.features.macro_source = s == "indicator" ? MacroSource::indicator : MacroSource::revenue;
      }
      config.features.macro_at_origin = f.value("macro_at_origin", true);
      config.features.macro_at_target = f.value("macro_at_target", true);
      if (!config.features.macro_at_origin && !config.features.macro_at_target) {
        throw Error(ErrorKind::validation, "config: at least one of macro_at_origin, macro_at_target must be set");
      }
    }
    if (doc.contains("indicators")) {
      for (const auto& ind : doc["indicators"]) {
        reject_unknown(ind, {"id", "geos"}, "indicators[].");
        config.features.indicators.push_back(
            {ind.at("id").get<std::string>(), ind.value("geos", std::vector<std::string>{})});
      }
    }
    if (doc.contains("model1")) {
      reject_unknown(doc["model1"], {"include_average"}, "model1.");
      config.model1.include_average = doc["model1"].value("include_average", true);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, std::string("malformed config: ") + e.what());
  }
  return config;
}

namespace {

void check_model_settings(const RunConfig& config) {
  if (config.model != ModelId::m1 && !config.seed) {
    throw Error(ErrorKind::validation, "config: a seed is required for " + to_string(config.model));
  }
  if (config.model == ModelId::m3 && config.features.indicators.empty()) {
    throw Error(ErrorKind::validation, "config: m3 needs at least one entry in 'indicators'");
  }
}

}  // namespace

RunConfig resolve(RunConfig config, const Dataset& dataset) {
  if (!config.test) throw Error(ErrorKind::validation, "config: test_range is required");
  if (!config.train) config.train = QuarterRange{dataset.total.first(), quarter_add(config.test->first, -1)};
  if (!(config.train->last < config.test->first)) {
    throw Error(ErrorKind::validation, "config: train_range must end before test_range starts");
  }
  check_model_settings(config);
  return config;
}

RunConfig resolve_forward(RunConfig config, const Dataset& dataset) {
  config.test.reset();
  if (!config.train) config.train = dataset.total.range();
  check_model_settings(config);
  return config;
}

std::string canonical_json(const RunConfig& config) {
  json indicators = json::array();
  for (const auto& ind : config.features.indicators) indicators.push_back({{"id", ind.indicator}, {"geos", ind.geos}});
  const json doc = {
      {"model", to_string(config.model)},
      {"train_range", range_json(config.train)},
      {"test_range", range_json(config.test)},
      {"seed", optional_json(config.seed)},
      {"forest",
       {{"n_trees", config.forest.n_trees},
        {"mtry", optional_json(config.forest.mtry)},
        {"min_node_size", config.forest.min_node_size},
        {"max_depth", optional_json(config.forest.max_depth)},
        {"bootstrap", config.forest.bootstrap}}},
      {"features",
       {{"lag_convention", config.features.lags == LagConvention::origin ? "origin" : "previous"},
        {"macro_source", config.features.macro_source == MacroSource::indicator ? "indicator" : "revenue"},
        {"macro_at_origin", config.features.macro_at_origin},
        {"macro_at_target", config.features.macro_at_target}}},
      {"indicators", std::move(indicators)},
      {"model1", {{"include_average", config.model1.include_average}}},
  };
  return doc.dump();
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return out;
}

BacktestParams backtest_params(const RunConfig& config, int threads) {
  BacktestParams p;
  p.forest = config.forest;
  p.forest.seed = config.seed.value_or(0);
  p.forest.threads = threads;
  p.features = config.features;
  p.model1 = config.model1;
  p.threads = threads;
  return p;
}

}  // namespace quartercast
