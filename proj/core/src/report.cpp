#include "chemvise/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

#include "chemvise/csv.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

namespace {

constexpr const char* kReportHeader =
    "protocol,family,kind,window_s,seed,fold,mcc,accuracy,tp,fp,tn,fn,n,hyperparameters";
constexpr const char* kSummaryHeader =
    "protocol,family,kind,window_s,n,mcc_median,mcc_q1,mcc_q3,mcc_iqr,mcc_min,mcc_max";

auto key_of(const ReportRow& r) {
  return std::tie(r.protocol, r.family, r.kind, r.window_s, r.seed, r.fold);
}

void check_cell(const std::string& text, std::string_view what) {
  require(text.find_first_of(",\n\r\"") == std::string::npos, ErrorKind::kConfig,
          std::string(what) + " may not contain commas, quotes or newlines: '" + text + "'");
}

}  // namespace

void ExperimentReport::sort() {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) { return key_of(a) < key_of(b); });
}

std::string ExperimentReport::config_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::kDegenerate, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const ExperimentReport& report) {
  using Key = std::tuple<std::string, std::string, std::string, double>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : report.rows) groups[{r.protocol, r.family, r.kind, r.window_s}].push_back(r.mcc);
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    SummaryRow s;
    std::tie(s.protocol, s.family, s.kind, s.window_s) = key;
    s.n = values.size();
    s.median = quantile(values, 0.5);
    s.q1 = quantile(values, 0.25);
    s.q3 = quantile(values, 0.75);
    s.iqr = s.q3 - s.q1;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& r : report.rows) {
    check_cell(r.protocol, "protocol");
    check_cell(r.family, "family");
    check_cell(r.kind, "kind");
    check_cell(r.hyperparameters, "hyperparameters");
    out << r.protocol << ',' << r.family << ',' << r.kind << ',' << csv::format_double(r.window_s) << ','
        << r.seed << ',' << r.fold << ',' << csv::format_double(r.mcc) << ','
        << csv::format_double(r.accuracy) << ',' << r.counts.tp << ',' << r.counts.fp << ','
        << r.counts.tn << ',' << r.counts.fn << ',' << r.counts.total() << ',' << r.hyperparameters
        << '\n';
  }
  return out.str();
}

std::string format_summary_csv(const std::vector<SummaryRow>& summary) {
  std::ostringstream out;
  out << kSummaryHeader << '\n';
  for (const auto& s : summary) {
    out << s.protocol << ',' << s.family << ',' << s.kind << ',' << csv::format_double(s.window_s) << ','
        << s.n << ',' << csv::format_double(s.median) << ',' << csv::format_double(s.q1) << ','
        << csv::format_double(s.q3) << ',' << csv::format_double(s.iqr) << ','
        << csv::format_double(s.min) << ',' << csv::format_double(s.max) << '\n';
  }
  return out.str();
}

std::vector<ReportRow> parse_report_csv(std::string_view text, std::string_view source) {
  const csv::Table table = csv::parse_table(text, source);
  std::string header;
  for (std::size_t i = 0; i < table.header.size(); ++i) header += (i ? "," : "") + table.header[i];
  require(header == kReportHeader, ErrorKind::kParse, std::string(source) + ": unexpected header");
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& c = table.rows[i];
    const std::size_t line = table.line_numbers[i];
    ReportRow r;
    r.protocol = c[0];
    r.family = c[1];
    r.kind = c[2];
    r.window_s = csv::parse_double(c[3], line, "window_s");
    r.seed = static_cast<int>(csv::parse_int(c[4], line, "seed"));
    r.fold = static_cast<int>(csv::parse_int(c[5], line, "fold"));
    r.mcc = csv::parse_double(c[6], line, "mcc");
    r.accuracy = csv::parse_double(c[7], line, "accuracy");
    r.counts.tp = csv::parse_int(c[8], line, "tp");
    r.counts.fp = csv::parse_int(c[9], line, "fp");
    r.counts.tn = csv::parse_int(c[10], line, "tn");
    r.counts.fn = csv::parse_int(c[11], line, "fn");
    require(csv::parse_int(c[12], line, "n") == r.counts.total(), ErrorKind::kParse,
            std::string(source) + " line " + std::to_string(line) + ": confusion counts do not sum to n");
    r.hyperparameters = c[13];
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) raise(ErrorKind::kIo, out_dir.string() + ": " + ec.message());
  ExperimentReport sorted = report;
  sorted.sort();
  csv::write_file(out_dir / "report.csv", format_report_csv(sorted));
  csv::write_file(out_dir / "summary.csv", format_summary_csv(summarize(sorted)));
  nlohmann::json prov;
  prov["config"] = sorted.config;
  prov["config_hash"] = sorted.config_hash();
  prov["master_seed"] = sorted.master_seed;
  prov["version"] = sorted.version;
  csv::write_file(out_dir / "provenance.json", prov.dump(2) + "\n");
}

ExperimentReport read_report(const std::filesystem::path& dir) {
  ExperimentReport report;
  report.rows = parse_report_csv(csv::read_file(dir / "report.csv"), (dir / "report.csv").string());
  try {
    const auto prov = nlohmann::json::parse(csv::read_file(dir / "provenance.json"));
    report.config = prov.at("config");
    report.master_seed = prov.at("master_seed").get<std::uint64_t>();
    report.version = prov.at("version").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::kParse, (dir / "provenance.json").string() + ": " + e.what());
  }
  return report;
}

}  // namespace chemvise
