#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "quartercast/pipeline.hpp"
#include "quartercast/series.hpp"

namespace quartercast {

enum class OutputFormat { json, csv };
std::string to_string(OutputFormat format);
OutputFormat parse_output_format(std::string_view text);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

// Revenue: geo,fiscal_year,fiscal_quarter,revenue. Rows may come in any order;
// TOTAL rows, when present, must match the per-quarter sums.
Dataset read_revenue_csv(std::istream& in, const std::string& source = "<input>");
Dataset load_revenue_csv(const std::filesystem::path& path);
/// Geography rows only; TOTAL is recomputed on load.
void write_revenue_csv(const Dataset& dataset, std::ostream& out);

// Indicators: geo,indicator,fiscal_year,fiscal_quarter,value.
std::map<IndicatorKey, QuarterlySeries> read_indicator_csv(std::istream& in, const std::string& source = "<input>");
std::map<IndicatorKey, QuarterlySeries> load_indicator_csv(const std::filesystem::path& path);
void write_indicator_csv(const std::map<IndicatorKey, QuarterlySeries>& indicators, std::ostream& out);

/// Adds indicator series to a dataset; each geography must be known.
void attach_indicators(Dataset& dataset, std::map<IndicatorKey, QuarterlySeries> indicators);

// Expert forecasts: geo,fiscal_year,fiscal_quarter,expert_forecast. Sparse.
ExpertForecasts read_expert_forecasts_csv(std::istream& in, const std::string& source = "<input>");
ExpertForecasts load_expert_forecasts_csv(const std::filesystem::path& path);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(std::string_view text);
EvaluationReport load_report(const std::filesystem::path& path);
/// Geographies by horizon, MAPE with two decimals.
std::string report_to_csv(const EvaluationReport& report);

std::string table_to_json(const ComparisonTable& table);
ComparisonTable table_from_json(std::string_view text);
/// Two-decimal cells; undefined cells as n/a.
std::string table_to_csv(const ComparisonTable& table);

void write_report(const EvaluationReport& report, OutputFormat format, const std::filesystem::path& path);
void write_report(const ComparisonTable& table, OutputFormat format, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace quartercast
