// quartercast command line: synth, forecast, backtest, compare.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "quartercast/config.hpp"
#include "quartercast/error.hpp"
#include "quartercast/io.hpp"
#include "quartercast/parallel.hpp"
#include "quartercast/pipeline.hpp"
#include "quartercast/synth.hpp"

namespace fs = std::filesystem;
using namespace quartercast;

namespace {

struct RunFlags {
  std::string config;
  std::string revenue;
  std::string indicators;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  int threads = 0;
};

void print_warnings(const Warnings& warnings) {
  for (const auto& [name, count] : warnings) std::cerr << "quartercast: warning: " << name << " x" << count << "\n";
}

int worker_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("QUARTERCAST_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::validation, std::string("QUARTERCAST_THREADS must be a positive integer, got '") + env + "'");
  }
  return default_threads();
}

// --format, then the config, then a .csv extension on --out; JSON otherwise.
OutputFormat pick_format(const std::string& flag, std::optional<OutputFormat> from_config, const std::string& out) {
  if (!flag.empty()) return parse_output_format(flag);
  if (from_config) return *from_config;
  return fs::path(out).extension() == ".csv" ? OutputFormat::csv : OutputFormat::json;
}

RunConfig load_config(const RunFlags& f) {
  RunConfig config = f.config.empty() ? RunConfig{} : parse_run_config(read_text_file(f.config));
  if (!f.model.empty()) config.model = parse_model(f.model);
  if (f.seed) config.seed = f.seed;
  return config;
}

Dataset load_data(const RunFlags& f) {
  Dataset data = load_revenue_csv(f.revenue);
  if (!f.indicators.empty()) attach_indicators(data, load_indicator_csv(f.indicators));
  return data;
}

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--revenue", f.revenue, "revenue CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--indicators", f.indicators, "macro indicator CSV")->check(CLI::ExistingFile);
  cmd->add_option("--model", f.model, "m1, m2 or m3");
  cmd->add_option("--seed", f.seed, "forest seed");
  cmd->add_option("--out", f.out, "output file")->required();
  cmd->add_option("--format", f.format, "json or csv");
  cmd->add_option("--threads", f.threads, "worker threads (default: QUARTERCAST_THREADS or all cores)");
}

int run_synth(const std::string& spec_path, std::optional<std::uint64_t> seed, std::optional<double> linkage,
              const std::string& out_dir) {
  SynthSpec spec = spec_path.empty() ? SynthSpec{} : parse_synth_spec(read_text_file(spec_path));
  if (seed) spec.seed = *seed;
  if (linkage) spec.linkage = *linkage;
  const SyntheticData data = generate_synthetic(spec);
  if (data.floor_clamps > 0) {
    std::cerr << "quartercast: warning: " << data.floor_clamps << " revenue values clamped to the floor\n";
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory " + out_dir + ": " + ec.message());

  std::ostringstream revenue;
  write_revenue_csv(data.dataset, revenue);
  write_text_file(fs::path(out_dir) / "revenue.csv", revenue.str());
  if (!data.dataset.indicators.empty()) {
    std::ostringstream ind;
    write_indicator_csv(data.dataset.indicators, ind);
    write_text_file(fs::path(out_dir) / "indicators.csv", ind.str());
  }
  return 0;
}

int run_backtest(const RunFlags& f) {
  const Dataset data = load_data(f);
  const RunConfig config = resolve(load_config(f), data);
  const int threads = worker_threads(f.threads);
  Warnings warnings;
  EvaluationReport report =
      backtest(data, config.model, *config.train, *config.test, backtest_params(config, threads), &warnings);
  report.metadata.config_hash = config_hash(config);
  print_warnings(warnings);
  write_report(report, pick_format(f.format, config.output, f.out), f.out);
  return 0;
}

int run_forecast(const RunFlags& f) {
  const Dataset data = load_data(f);
  const RunConfig config = resolve_forward(load_config(f), data);
  const FiscalQuarter origin = data.total.last();
  const ModelRun run =
      forecast_forward(data, config.model, *config.train, origin, backtest_params(config, worker_threads(f.threads)));
  print_warnings(run.warnings);

  const int horizons = config.model == ModelId::m1 ? 1 : kMaxHorizon;
  std::ostringstream out;
  if (pick_format(f.format, config.output, f.out) == OutputFormat::csv) {
    out << "geo,origin,horizon,target,forecast\n";
    for (const auto& geo : data.geographies_with_total()) {
      for (int h = 1; h <= horizons; ++h) {
        const FiscalQuarter target = quarter_add(origin, h);
        out << geo << ',' << to_string(origin) << ',' << h << ',' << to_string(target) << ','
            << format_double(run.predictions.at({geo, target, h})) << '\n';
      }
    }
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& geo : data.geographies_with_total()) {
      for (int h = 1; h <= horizons; ++h) {
        const FiscalQuarter target = quarter_add(origin, h);
        rows.push_back({{"geo", geo},
                        {"horizon", h},
                        {"target", to_string(target)},
                        {"forecast", run.predictions.at({geo, target, h})}});
      }
    }
    const nlohmann::json doc = {{"schema", "quartercast.forecasts"},
                                {"version", 1},
                                {"model", to_string(config.model)},
                                {"config_hash", config_hash(config)},
                                {"origin", to_string(origin)},
                                {"forecasts", std::move(rows)}};
    out << doc.dump(2) << '\n';
  }
  write_text_file(f.out, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quarterly revenue forecasting: synthetic data, forecasts, backtests and comparisons"};
  app.require_subcommand(1);

  std::string synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> synth_linkage;
  auto* synth = app.add_subcommand("synth", "write a synthetic revenue and indicator dataset");
  synth->add_option("--config", synth_config, "synthetic spec (JSON)")->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "overrides the spec seed");
  synth->add_option("--linkage", synth_linkage, "overrides the indicator linkage");
  synth->add_option("--out", synth_out, "output directory")->required();

  RunFlags fc_flags, bt_flags;
  auto* forecast = app.add_subcommand("forecast", "forecast past the last quarter in the data");
  add_run_options(forecast, fc_flags);
  auto* bt = app.add_subcommand("backtest", "rolling-origin MAPE report over the test range");
  add_run_options(bt, bt_flags);

  std::string baseline, candidate, report_path, experts, cmp_out, cmp_format;
  bool horizons = false;
  auto* compare = app.add_subcommand("compare", "relative improvement tables between reports");
  auto* base_opt = compare->add_option("--baseline", baseline, "baseline report (JSON)")->check(CLI::ExistingFile);
  auto* cand_opt = compare->add_option("--candidate", candidate, "candidate report (JSON)")->check(CLI::ExistingFile);
  auto* rep_opt = compare->add_option("--report", report_path, "report (JSON)")->check(CLI::ExistingFile);
  auto* hor_flag = compare->add_flag("--horizons", horizons, "horizons 2.. against horizon 1 of --report");
  auto* exp_opt = compare->add_option("--experts", experts, "expert forecast CSV to compare --report against")
                      ->check(CLI::ExistingFile);
  compare->add_option("--out", cmp_out, "output file")->required();
  compare->add_option("--format", cmp_format, "json or csv");
  base_opt->needs(cand_opt)->excludes(rep_opt);
  cand_opt->needs(base_opt);
  hor_flag->needs(rep_opt)->excludes(exp_opt);
  exp_opt->needs(rep_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return run_synth(synth_config, synth_seed, synth_linkage, synth_out);
    if (*forecast) return run_forecast(fc_flags);
    if (*bt) return run_backtest(bt_flags);

    ComparisonTable table;
    if (!baseline.empty()) {
      table = compare_reports(load_report(baseline), load_report(candidate));
    } else if (horizons) {
      table = compare_horizons(load_report(report_path));
    } else if (!experts.empty()) {
      table = compare_with_experts(load_report(report_path), load_expert_forecasts_csv(experts));
    } else {
      throw Error(ErrorKind::validation,
                  "compare needs --baseline and --candidate, or --report with --horizons or --experts");
    }
    write_report(table, pick_format(cmp_format, std::nullopt, cmp_out), cmp_out);
    return 0;
  } catch (const Error& e) {
    std::cerr << "quartercast: error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
}
