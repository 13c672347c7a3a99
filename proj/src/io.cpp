#include "quartercast/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "quartercast/error.hpp"

namespace quartercast {

using nlohmann::json;

std::string to_string(OutputFormat format) { return format == OutputFormat::json ? "json" : "csv"; }

OutputFormat parse_output_format(std::string_view text) {
  if (text == "json") return OutputFormat::json;
  if (text == "csv") return OutputFormat::csv;
  throw Error(ErrorKind::validation, "unknown output format '" + std::string(text) + "' (expected json or csv)");
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), r.ptr);
}

namespace {

std::string format_fixed2(double value) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, 2);
  return std::string(buf.data(), r.ptr);
}

std::string location(const std::string& source, long line) { return source + ":" + std::to_string(line); }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Calls row(fields, line_number) for every non-blank line after the header.
template <class Row>
void read_csv(std::istream& in, const std::string& source, std::string_view header, Row&& row) {
  std::string line;
  long number = 0;
  bool seen_header = false;
  const auto width = split_fields(header).size();
  while (std::getline(in, line)) {
    ++number;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (!seen_header) {
      if (text != header) {
        throw Error(ErrorKind::validation,
                    location(source, number) + ": expected header '" + std::string(header) + "'");
      }
      seen_header = true;
      continue;
    }
    auto fields = split_fields(text);
    if (fields.size() != width) {
      throw Error(ErrorKind::validation, location(source, number) + ": expected " + std::to_string(width) +
                                             " fields, found " + std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);
    row(fields, number);
  }
  if (in.bad()) throw Error(ErrorKind::io, "failed reading " + source);
  if (!seen_header) throw Error(ErrorKind::validation, source + ": missing header '" + std::string(header) + "'");
}

template <class T>
T parse_number(std::string_view text, const std::string& where, const char* what) {
  T value{};
  const auto r = std::from_chars(text.data(), text.data() + text.size(), value);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::validation, where + ": bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw Error(ErrorKind::validation, where + ": non-finite " + std::string(what));
  }
  return value;
}

FiscalQuarter parse_fields_quarter(std::string_view year, std::string_view quarter, const std::string& where) {
  const int y = parse_number<int>(year, where, "fiscal_year");
  const int q = parse_number<int>(quarter, where, "fiscal_quarter");
  try {
    return FiscalQuarter(y, q);
  } catch (const Error& e) {
    throw Error(ErrorKind::validation, where + ": " + e.what());
  }
}

using Points = std::map<FiscalQuarter, double>;

void insert_point(Points& points, FiscalQuarter fq, double value, const std::string& label, const std::string& where) {
  if (!points.emplace(fq, value).second) {
    throw Error(ErrorKind::duplicate, where + ": duplicate row for " + label + " " + to_string(fq));
  }
}

QuarterlySeries contiguous_series(const std::string& id, const std::string& label, const Points& points) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(points.size()));
  const auto first = points.begin()->first;
  Eigen::Index i = 0;
  for (const auto& [fq, value] : points) {
    const auto expected = quarter_add(first, i);
    if (fq != expected) {
      throw Error(ErrorKind::contiguity, "missing quarter " + label + " " + to_string(expected));
    }
    v[i++] = value;
  }
  return QuarterlySeries(id, first, std::move(v));
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return in;
}

}  // namespace

Dataset read_revenue_csv(std::istream& in, const std::string& source) {
  std::map<std::string, Points> by_geo;
  read_csv(in, source, "geo,fiscal_year,fiscal_quarter,revenue", [&](const auto& f, long line) {
    const auto where = location(source, line);
    if (f[0].empty()) throw Error(ErrorKind::validation, where + ": empty geo");
    const auto fq = parse_fields_quarter(f[1], f[2], where);
    const double revenue = parse_number<double>(f[3], where, "revenue");
    if (revenue <= 0.0) throw Error(ErrorKind::validation, where + ": revenue must be positive");
    const std::string geo(f[0]);
    insert_point(by_geo[geo], fq, revenue, geo, where);
  });

  std::map<std::string, QuarterlySeries> revenue;
  std::optional<QuarterlySeries> total;
  for (const auto& [geo, points] : by_geo) {
    auto series = contiguous_series(geo, geo, points);
    if (geo == kTotalId) {
      total = std::move(series);
    } else {
      revenue.emplace(geo, std::move(series));
    }
  }
  if (revenue.empty()) throw Error(ErrorKind::validation, source + ": no geography revenue rows");
  return make_dataset(std::move(revenue), std::move(total));
}

Dataset load_revenue_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_revenue_csv(in, path.string());
}

void write_revenue_csv(const Dataset& dataset, std::ostream& out) {
  out << "geo,fiscal_year,fiscal_quarter,revenue\n";
  for (const auto& [geo, series] : dataset.revenue) {
    for (Eigen::Index i = 0; i < series.size(); ++i) {
      const auto fq = series.quarter_at(i);
      out << geo << ',' << fq.year << ',' << fq.quarter << ',' << format_double(series.values()[i]) << '\n';
    }
  }
}

std::map<IndicatorKey, QuarterlySeries> read_indicator_csv(std::istream& in, const std::string& source) {
  std::map<IndicatorKey, Points> by_key;
  read_csv(in, source, "geo,indicator,fiscal_year,fiscal_quarter,value", [&](const auto& f, long line) {
    const auto where = location(source, line);
    if (f[0].empty() || f[1].empty()) throw Error(ErrorKind::validation, where + ": empty geo or indicator");
    const auto fq = parse_fields_quarter(f[2], f[3], where);
    const double value = parse_number<double>(f[4], where, "value");
    if (value <= 0.0) throw Error(ErrorKind::validation, where + ": indicator values must be positive");
    IndicatorKey key{std::string(f[0]), std::string(f[1])};
    insert_point(by_key[key], fq, value, key.first + "/" + key.second, where);
  });
  std::map<IndicatorKey, QuarterlySeries> out;
  for (const auto& [key, points] : by_key) {
    out.emplace(key, contiguous_series(key.first, key.first + "/" + key.second, points));
  }
  return out;
}

std::map<IndicatorKey, QuarterlySeries> load_indicator_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_indicator_csv(in, path.string());
}

void write_indicator_csv(const std::map<IndicatorKey, QuarterlySeries>& indicators, std::ostream& out) {
  out << "geo,indicator,fiscal_year,fiscal_quarter,value\n";
  for (const auto& [key, series] : indicators) {
    for (Eigen::Index i = 0; i < series.size(); ++i) {
      const auto fq = series.quarter_at(i);
      out << key.first << ',' << key.second << ',' << fq.year << ',' << fq.quarter << ','
          << format_double(series.values()[i]) << '\n';
    }
  }
}

void attach_indicators(Dataset& dataset, std::map<IndicatorKey, QuarterlySeries> indicators) {
  for (auto& [key, series] : indicators) {
    if (key.first != kTotalId && !dataset.revenue.contains(key.first)) {
      throw Error(ErrorKind::unknown_geography,
                  "indicator '" + key.second + "' refers to unknown geography '" + key.first + "'");
    }
    dataset.indicators.insert_or_assign(key, std::move(series));
  }
}

ExpertForecasts read_expert_forecasts_csv(std::istream& in, const std::string& source) {
  ExpertForecasts out;
  read_csv(in, source, "geo,fiscal_year,fiscal_quarter,expert_forecast", [&](const auto& f, long line) {
    const auto where = location(source, line);
    const auto fq = parse_fields_quarter(f[1], f[2], where);
    const double value = parse_number<double>(f[3], where, "expert_forecast");
    if (!out.emplace(std::pair{std::string(f[0]), fq}, value).second) {
      throw Error(ErrorKind::duplicate, where + ": duplicate expert forecast for " + std::string(f[0]) + " " +
                                            to_string(fq));
    }
  });
  return out;
}

ExpertForecasts load_expert_forecasts_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_expert_forecasts_csv(in, path.string());
}

namespace {

constexpr const char* kReportSchema = "quartercast.evaluation_report";
constexpr const char* kTableSchema = "quartercast.comparison_table";
constexpr int kSchemaVersion = 1;

json range_json(const QuarterRange& r) { return {{"first", to_string(r.first)}, {"last", to_string(r.last)}}; }

QuarterRange range_from(const json& j) {
  return {parse_quarter(j.at("first").get<std::string>()), parse_quarter(j.at("last").get<std::string>())};
}

void check_schema(const json& doc, const char* schema) {
  if (doc.at("schema").get<std::string>() != schema || doc.at("version").get<int>() != kSchemaVersion) {
    throw Error(ErrorKind::schema_mismatch,
                std::string("expected a ") + schema + " document, version " + std::to_string(kSchemaVersion));
  }
}

template <class Fn>
auto parse_document(std::string_view text, const char* what, Fn&& fn) {
  try {
    return fn(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema_mismatch, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  const auto& m = report.metadata;
  json cells = json::array();
  for (const auto& c : report.cells) {
    json detail = json::array();
    for (const auto& d : c.detail) {
      detail.push_back({{"origin", to_string(d.origin)},
                        {"target", to_string(d.target)},
                        {"actual", d.actual},
                        {"forecast", d.forecast},
                        {"ape", d.ape}});
    }
    cells.push_back({{"geo", c.geo}, {"horizon", c.horizon}, {"mape", c.mape}, {"detail", std::move(detail)}});
  }
  json doc = {{"schema", kReportSchema},
              {"version", kSchemaVersion},
              {"metadata",
               {{"model", to_string(m.model)},
                {"config_hash", m.config_hash},
                {"seed", m.seed},
                {"train_range", range_json(m.train)},
                {"test_range", range_json(m.test)}}},
              {"cells", std::move(cells)}};
  return doc.dump(2) + "\n";
}

EvaluationReport report_from_json(std::string_view text) {
  return parse_document(text, "evaluation report", [](const json& doc) {
    check_schema(doc, kReportSchema);
    EvaluationReport report;
    const auto& m = doc.at("metadata");
    report.metadata = {parse_model(m.at("model").get<std::string>()), m.at("config_hash").get<std::string>(),
                       m.at("seed").get<std::uint64_t>(), range_from(m.at("train_range")),
                       range_from(m.at("test_range"))};
    for (const auto& c : doc.at("cells")) {
      ReportCell cell{c.at("geo").get<std::string>(), c.at("horizon").get<int>(), c.at("mape").get<double>(), {}};
      for (const auto& d : c.at("detail")) {
        cell.detail.push_back({parse_quarter(d.at("origin").get<std::string>()),
                               parse_quarter(d.at("target").get<std::string>()), d.at("actual").get<double>(),
                               d.at("forecast").get<double>(), d.at("ape").get<double>()});
      }
      report.cells.push_back(std::move(cell));
    }
    return report;
  });
}

EvaluationReport load_report(const std::filesystem::path& path) { return report_from_json(read_text_file(path)); }

std::string report_to_csv(const EvaluationReport& report) {
  const auto horizons = report.horizons();
  std::ostringstream out;
  out << "geography";
  for (int h : horizons) out << ",Horizon " << h;
  out << '\n';
  for (const auto& geo : report.geographies()) {
    out << table_label(geo);
    for (int h : horizons) {
      const auto* cell = report.find(geo, h);
      out << ',' << (cell ? format_fixed2(cell->mape) : "n/a");
    }
    out << '\n';
  }
  return out.str();
}

std::string table_to_json(const ComparisonTable& table) {
  json rows = json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    json cells = json::array();
    for (const auto& c : table.cells[i]) cells.push_back(c ? json(*c) : json(nullptr));
    rows.push_back({{"label", table.rows[i]}, {"cells", std::move(cells)}});
  }
  json doc = {{"schema", kTableSchema},
              {"version", kSchemaVersion},
              {"title", table.title},
              {"columns", table.columns},
              {"rows", std::move(rows)}};
  return doc.dump(2) + "\n";
}

ComparisonTable table_from_json(std::string_view text) {
  return parse_document(text, "comparison table", [](const json& doc) {
    check_schema(doc, kTableSchema);
    ComparisonTable table;
    table.title = doc.at("title").get<std::string>();
    table.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& r : doc.at("rows")) {
      table.rows.push_back(r.at("label").get<std::string>());
      auto& cells = table.cells.emplace_back();
      for (const auto& c : r.at("cells")) {
        cells.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
      }
    }
    return table;
  });
}

std::string table_to_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "geography";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out << table.rows[i];
    for (const auto& c : table.cells[i]) out << ',' << (c ? format_fixed2(*c) : "n/a");
    out << '\n';
  }
  return out.str();
}

void write_report(const EvaluationReport& report, OutputFormat format, const std::filesystem::path& path) {
  write_text_file(path, format == OutputFormat::json ? report_to_json(report) : report_to_csv(report));
}

void write_report(const ComparisonTable& table, OutputFormat format, const std::filesystem::path& path) {
  write_text_file(path, format == OutputFormat::json ? table_to_json(table) : table_to_csv(table));
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream text;
  text << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::io, "failed reading " + path.string());
  return text.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

}  // namespace quartercast
