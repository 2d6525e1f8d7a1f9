#pragma once

// JSON shapes shared by the command-line tool: trial reports, attack rows,
// aggregates and run manifests.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinr/image_io.hpp"
#include "spinr/metrics.hpp"
#include "spinr/robustness.hpp"
#include "spinr/stream.hpp"

namespace spinr::cli {

using json = nlohmann::ordered_json;

/// Non-finite values are written as strings ("inf"), which plain JSON
/// numbers cannot carry.
inline json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double read_real(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return NAN;
}

inline json reals(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(real(v));
  return out;
}

inline json summary_json(const MetricSummary& s) {
  return {{"mean", real(s.mean)},
          {"std_sample", real(s.std_sample)},
          {"std_population", real(s.std_population)},
          {"count", s.count},
          {"excluded", s.excluded}};
}

inline json report_json(const TrialReport& r) {
  json j = {{"method", r.method},
            {"seed", r.seed},
            {"params", r.param_count},
            {"psnr", real(r.psnr)},
            {"ssim", r.ssim ? json(real(*r.ssim)) : json(nullptr)},
            {"cf", real(r.cf)}};
  json attacks = json::object();
  for (const auto& [label, a] : r.attacks) attacks[label] = {{"psnr", reals(a.psnr)}, {"ssim", reals(a.ssim)}};
  j["attacks"] = attacks;
  return j;
}

inline TrialReport report_from_json(const json& j) {
  TrialReport r;
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.param_count = j.at("params").get<std::size_t>();
  r.psnr = read_real(j.at("psnr"));
  if (!j.at("ssim").is_null()) r.ssim = read_real(j.at("ssim"));
  r.cf = read_real(j.at("cf"));
  if (j.contains("attacks"))
    for (const auto& [label, a] : j.at("attacks").items()) {
      AttackSummary s;
      for (const auto& v : a.at("psnr")) s.psnr.push_back(read_real(v));
      for (const auto& v : a.at("ssim")) s.ssim.push_back(read_real(v));
      r.attacks[label] = s;
    }
  return r;
}

inline json aggregate_json(const AggregateReport& a) {
  json j = {{"method", a.method},
            {"runs", a.runs},
            {"psnr", summary_json(a.psnr)},
            {"ssim", a.ssim.count ? summary_json(a.ssim) : json(nullptr)},
            {"cf", summary_json(a.cf)}};
  json attacks = json::object();
  for (const auto& [label, s] : a.attacks) attacks[label] = summary_json(s);
  j["attacks"] = attacks;
  return j;
}

inline json attack_json(const AttackResult& r) {
  const AttackSummary s = r.summary();
  json j = {{"label", r.spec.label()},
            {"trials", r.spec.trials},
            {"seed", r.spec.seed},
            {"psnr", reals(s.psnr)},
            {"ssim", reals(s.ssim)},
            {"psnr_summary", summary_json(r.psnr)}};
  j["ssim_summary"] = r.ssim ? summary_json(*r.ssim) : json(nullptr);
  return j;
}

/// "41.23" or "inf".
inline std::string db(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string mean_std(const MetricSummary& s, int precision = 2) {
  if (s.count == 0) return s.excluded ? "inf" : "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f +- %.*f", precision, s.mean, precision, s.std_sample);
  return buf;
}

inline std::string file_hash(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  char buf[32];
  std::snprintf(buf, sizeof buf, "crc32:%08x", stream::crc32(bytes));
  return buf;
}

/// Exact text form of a double for replayable argument lists.
inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace spinr::cli
