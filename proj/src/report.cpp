#include "splatprep/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "splatprep/error.hpp"
#include "splatprep/image_io.hpp"
#include "splatprep/log.hpp"

namespace splatprep {
namespace {

using nlohmann::json;

template <class Get>
MetricTable make_table(const std::string& name, bool higher_is_better, const QualityReport& rep, Get get,
                       std::vector<std::string>& warnings) {
  MetricTable t;
  t.name = name;
  t.higher_is_better = higher_is_better;
  const std::size_t nc = rep.columns.size();
  std::vector<double> sums(nc, 0.0);
  t.count.assign(nc, 0);
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> cell_acc;
  std::size_t excluded = 0;
  for (const MetricsRecord& r : rep.records) {
    const std::optional<double> v = get(r);
    if (!v) continue;
    if (!std::isfinite(*v)) {
      ++excluded;
      continue;
    }
    const std::size_t c = rep.column_index(r.density);
    sums[c] += *v;
    ++t.count[c];
    auto& acc = cell_acc[r.sh_level][r.density];
    acc.first += *v;
    ++acc.second;
  }
  if (excluded)
    warnings.push_back(name + ": " + std::to_string(excluded) + " non-finite value(s) (identical images) excluded from averages");

  t.average.assign(nc, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < nc; ++c)
    if (t.count[c]) t.average[c] = sums[c] / static_cast<double>(t.count[c]);
  const double base = t.average[rep.column_index(rep.baseline)];
  t.increase.resize(nc);
  t.percent_increase.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    t.increase[c] = t.average[c] - base;
    t.percent_increase[c] = 100.0 * t.increase[c] / base;
  }

  for (const auto& [row, cols] : cell_acc) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (const auto& [col, acc] : cols) {
      const double mean = acc.first / static_cast<double>(acc.second);
      t.cells[row][col] = mean;
      ranked.emplace_back(mean, rep.column_index(col));
    }
    std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return higher_is_better ? a.first > b.first : a.first < b.first;
      return a.second < b.second;
    });
    if (!ranked.empty()) t.best[row] = rep.columns[ranked[0].second];
    if (ranked.size() > 1) t.second_best[row] = rep.columns[ranked[1].second];
  }
  return t;
}

json number_or_string(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError("expected a number or \"inf\", got \"" + s + "\"", 0);
  }
  return j.get<double>();
}

json table_json(const MetricTable& t, const QualityReport& rep) {
  json j;
  j["higher_is_better"] = t.higher_is_better;
  json cells = json::object();
  for (const auto& row : rep.rows) {
    auto it = t.cells.find(row);
    if (it == t.cells.end()) continue;
    json r = json::object();
    for (const auto& col : rep.columns)
      if (auto c = it->second.find(col); c != it->second.end()) r[col] = c->second;
    cells[row] = r;
  }
  j["cells"] = cells;
  json avg = json::object(), inc = json::object(), pct = json::object(), cnt = json::object();
  for (std::size_t c = 0; c < rep.columns.size(); ++c) {
    avg[rep.columns[c]] = number_or_string(t.average[c]);
    cnt[rep.columns[c]] = t.count[c];
    if (rep.columns[c] == rep.baseline) continue;
    inc[rep.columns[c]] = number_or_string(t.increase[c]);
    pct[rep.columns[c]] = number_or_string(t.percent_increase[c]);
  }
  j["average"] = avg;
  j["count"] = cnt;
  j["increase"] = inc;
  j["percent_increase"] = pct;
  j["best"] = t.best;
  j["second_best"] = t.second_best;
  return j;
}

}  // namespace

std::size_t QualityReport::column_index(const std::string& column) const {
  auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw UsageError("unknown column '" + column + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

QualityReport build_report(const std::vector<MetricsRecord>& records, const std::string& baseline) {
  QualityReport rep;
  rep.baseline = baseline;
  rep.records = records;
  for (const auto& r : records) {
    if (std::find(rep.columns.begin(), rep.columns.end(), r.density) == rep.columns.end()) rep.columns.push_back(r.density);
    if (std::find(rep.rows.begin(), rep.rows.end(), r.sh_level) == rep.rows.end()) rep.rows.push_back(r.sh_level);
  }
  if (std::find(rep.columns.begin(), rep.columns.end(), baseline) == rep.columns.end())
    throw UsageError("baseline column '" + baseline + "' has no records");

  rep.psnr = make_table("psnr", true, rep, [](const MetricsRecord& r) { return std::optional<double>(r.psnr); }, rep.warnings);
  rep.ssim = make_table("ssim", true, rep, [](const MetricsRecord& r) { return std::optional<double>(r.ssim); }, rep.warnings);
  rep.loss = make_table("loss", false, rep, [](const MetricsRecord& r) { return std::optional<double>(r.loss); }, rep.warnings);
  const bool any_time = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.time_s.has_value(); });
  if (any_time) {
    MetricTable t = make_table("time_s", false, rep, [](const MetricsRecord& r) { return r.time_s; }, rep.warnings);
    if (t.count[rep.column_index(baseline)] > 0) rep.time_s = std::move(t);
  }
  for (const auto& w : rep.warnings) log().warn("{}", w);
  return rep;
}

MetricsRecord metrics_for(const Image& observed, const Image& rendered, const EvalParams& params) {
  const ImagePair pair(observed, rendered);
  MetricsRecord r;
  r.psnr = psnr(pair);
  r.ssim = ssim(pair, params.ssim);
  r.loss = (1.0 - params.lambda) * l1_loss(pair) + params.lambda * (1.0 - r.ssim);
  r.sh_level = params.sh_level;
  r.density = params.density;
  return r;
}

EvalResult evaluate_dir(const std::filesystem::path& observed_dir, const std::filesystem::path& rendered_dir,
                        const EvalParams& params) {
  std::map<std::string, std::filesystem::path> obs, ren;
  for (const auto& p : list_images(observed_dir)) obs[p.filename().string()] = p;
  for (const auto& p : list_images(rendered_dir)) ren[p.filename().string()] = p;

  EvalResult out;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> jobs;
  std::vector<std::string> names;
  for (const auto& [name, path] : obs) {
    if (auto it = ren.find(name); it != ren.end()) {
      jobs.emplace_back(path, it->second);
      names.push_back(name);
    } else {
      out.unmatched.push_back(name);
    }
  }
  for (const auto& [name, path] : ren)
    if (!obs.count(name)) out.unmatched.push_back(name);
  std::sort(out.unmatched.begin(), out.unmatched.end());
  for (const auto& u : out.unmatched) log().warn("'{}' has no counterpart; pair skipped", u);

  std::vector<MetricsRecord> records(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      records[i] = metrics_for(load_image(jobs[i].first), load_image(jobs[i].second), params);
      records[i].label = names[i];
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!errors[i].empty()) throw Error("evaluating '" + names[i] + "': " + errors[i]);
    out.records.push_back(records[i]);
  }

  MetricsRecord& s = out.summary;
  s.label = "summary";
  s.sh_level = params.sh_level;
  s.density = params.density;
  double psnr_sum = 0.0;
  std::size_t psnr_n = 0;
  for (const auto& r : out.records) {
    if (std::isfinite(r.psnr)) {
      psnr_sum += r.psnr;
      ++psnr_n;
    }
    s.ssim += r.ssim;
    s.loss += r.loss;
  }
  if (!out.records.empty()) {
    s.ssim /= static_cast<double>(out.records.size());
    s.loss /= static_cast<double>(out.records.size());
  }
  s.psnr = psnr_n ? psnr_sum / static_cast<double>(psnr_n)
                  : (out.records.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : std::numeric_limits<double>::infinity());
  return out;
}

json to_json(const MetricsRecord& r) {
  json j{{"label", r.label},
         {"sh_level", r.sh_level},
         {"density", r.density},
         {"psnr", number_or_string(r.psnr)},
         {"ssim", r.ssim},
         {"loss", r.loss}};
  if (r.time_s) j["time_s"] = *r.time_s;
  return j;
}

MetricsRecord record_from_json(const json& j) {
  MetricsRecord r;
  r.label = j.value("label", "");
  if (j.contains("sh_level")) r.sh_level = j["sh_level"].is_string() ? j["sh_level"].get<std::string>() : j["sh_level"].dump();
  r.density = j.value("density", "");
  r.psnr = number_from(j.at("psnr"));
  r.ssim = number_from(j.at("ssim"));
  r.loss = number_from(j.at("loss"));
  if (j.contains("time_s") && !j["time_s"].is_null()) r.time_s = number_from(j["time_s"]);
  return r;
}

json to_json(const EvalResult& r) {
  json j;
  j["records"] = json::array();
  for (const auto& rec : r.records) j["records"].push_back(to_json(rec));
  j["unmatched"] = r.unmatched;
  j["summary"] = to_json(r.summary);
  return j;
}

json to_json(const QualityReport& r) {
  json j;
  j["baseline"] = r.baseline;
  j["columns"] = r.columns;
  j["rows"] = r.rows;
  j["tables"]["psnr"] = table_json(r.psnr, r);
  j["tables"]["ssim"] = table_json(r.ssim, r);
  j["tables"]["loss"] = table_json(r.loss, r);
  if (r.time_s) j["tables"]["time_s"] = table_json(*r.time_s, r);
  j["warnings"] = r.warnings;
  return j;
}

std::string to_csv(const QualityReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "metric,row,column,value\n";
  std::vector<const MetricTable*> tables = {&r.psnr, &r.ssim, &r.loss};
  if (r.time_s) tables.push_back(&*r.time_s);
  for (const MetricTable* t : tables) {
    for (const auto& row : r.rows) {
      auto it = t->cells.find(row);
      if (it == t->cells.end()) continue;
      for (const auto& col : r.columns)
        if (auto c = it->second.find(col); c != it->second.end()) out << t->name << ',' << row << ',' << col << ',' << c->second << '\n';
    }
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      out << t->name << ",average," << r.columns[c] << ',' << t->average[c] << '\n';
      if (r.columns[c] == r.baseline) continue;
      out << t->name << ",increase," << r.columns[c] << ',' << t->increase[c] << '\n';
      out << t->name << ",percent_increase," << r.columns[c] << ',' << t->percent_increase[c] << '\n';
    }
  }
  return out.str();
}

std::vector<MetricsRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  std::vector<MetricsRecord> out;
  if (j.contains("summary")) {
    out.push_back(record_from_json(j["summary"]));
  } else if (j.contains("records")) {
    for (const auto& r : j["records"]) out.push_back(record_from_json(r));
  } else if (j.is_array()) {
    for (const auto& r : j) out.push_back(record_from_json(r));
  } else {
    throw ParseError(path.string() + ": expected an eval report or a records list", 0);
  }
  return out;
}

}  // namespace splatprep
