#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splatprep/quality_metrics.hpp"

namespace splatprep {

/// One evaluated run (or one image inside a run).
struct MetricsRecord {
  std::string label;     ///< free-form; file name for per-image records
  std::string sh_level;  ///< table row, e.g. "1000"
  std::string density;   ///< table column, e.g. "vanilla", "n=10"
  double psnr = 0.0;     ///< dB; +inf for identical images
  double ssim = 0.0;
  double loss = 0.0;
  std::optional<double> time_s;
};

struct MetricTable {
  std::string name;
  bool higher_is_better = true;
  std::map<std::string, std::map<std::string, double>> cells;  ///< row -> column -> mean of cell
  std::vector<double> average;                                 ///< per column
  std::vector<std::size_t> count;                              ///< records used per column
  std::vector<double> increase;                                ///< average - baseline average
  std::vector<double> percent_increase;                        ///< 100 * increase / baseline average
  std::map<std::string, std::string> best;                     ///< row -> column
  std::map<std::string, std::string> second_best;
};

struct QualityReport {
  std::string baseline;
  std::vector<std::string> columns;  ///< order of first appearance
  std::vector<std::string> rows;     ///< order of first appearance
  std::vector<MetricsRecord> records;
  MetricTable psnr;
  MetricTable ssim;
  MetricTable loss;
  std::optional<MetricTable> time_s;
  std::vector<std::string> warnings;

  std::size_t column_index(const std::string& column) const;
};

/// Column means, increases against the baseline column, and best/second
/// best per row. Identical-image PSNR values are left out of the averages
/// with a warning. Throws UsageError if the baseline column is absent.
QualityReport build_report(const std::vector<MetricsRecord>& records, const std::string& baseline);

struct EvalParams {
  SsimParams ssim{};
  double lambda = 0.2;
  std::string sh_level;  ///< tags for the summary record
  std::string density;
};

struct EvalResult {
  std::vector<MetricsRecord> records;  ///< one per matched file name, sorted
  std::vector<std::string> unmatched;  ///< present in only one directory
  MetricsRecord summary;               ///< means over records (finite PSNR only)
};

MetricsRecord metrics_for(const Image& observed, const Image& rendered, const EvalParams& params);

EvalResult evaluate_dir(const std::filesystem::path& observed_dir, const std::filesystem::path& rendered_dir,
                        const EvalParams& params);

nlohmann::json to_json(const MetricsRecord& r);
MetricsRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalResult& r);
nlohmann::json to_json(const QualityReport& r);

/// Long-form CSV: metric,row,column,value plus average/increase rows.
std::string to_csv(const QualityReport& r);

/// Records from a JSON file: an eval report contributes its summary, a
/// {"records": [...]} file contributes every entry.
std::vector<MetricsRecord> load_records(const std::filesystem::path& path);

}  // namespace splatprep
