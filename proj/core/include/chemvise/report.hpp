#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemvise/classify.hpp"

namespace chemvise {

struct ReportRow {
  std::string protocol;
  std::string family;
  std::string kind;  // target space, or "none" for label-only models
  double window_s = 0.0;
  int seed = 0;      // repeat index
  int fold = -1;     // -1: holdout evaluation
  double mcc = 0.0;
  double accuracy = 0.0;
  ConfusionCounts counts;
  std::string hyperparameters;

  bool operator==(const ReportRow&) const = default;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t master_seed = 0;
  std::string version;

  // Canonical order: protocol, family, kind, window, seed, fold.
  void sort();
  std::string config_hash() const;
};

struct SummaryRow {
  std::string protocol;
  std::string family;
  std::string kind;
  double window_s = 0.0;
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// MCC statistics per (protocol, family, kind, window); quartiles by linear
// interpolation between order statistics.
std::vector<SummaryRow> summarize(const ExperimentReport& report);

double quantile(std::vector<double> values, double q);

std::string format_report_csv(const ExperimentReport& report);
std::string format_summary_csv(const std::vector<SummaryRow>& summary);
std::vector<ReportRow> parse_report_csv(std::string_view text, std::string_view source = "report.csv");

// report.csv, summary.csv and provenance.json; the directory is created.
void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir);
ExperimentReport read_report(const std::filesystem::path& dir);

}  // namespace chemvise
