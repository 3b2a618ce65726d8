#pragma once

// CSV serialization of traces. Numbers are printed with 17 significant digits
// so a file round-trips bit-exactly and identical runs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfw/run.hpp"

namespace dfw::harness {

inline constexpr const char* kTraceHeader = "t,objective,gap,consensus_err,tracking_err,theorem_bound,comm_rounds,lambda_t";

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv(const std::vector<TraceRecord>& records) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& r : records) {
    os << r.t << ',' << fmt_double(r.objective) << ',' << fmt_double(r.gap) << ',' << fmt_double(r.consensus_err) << ','
       << fmt_double(r.tracking_err) << ',' << fmt_double(r.theorem_bound) << ',' << r.comm_rounds << ','
       << fmt_double(r.lambda_t) << '\n';
  }
  return os.str();
}

inline std::vector<TraceRecord> parse_trace_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader) throw std::invalid_argument("trace csv: bad header");
  std::vector<TraceRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[8];
    for (auto& cell : f)
      if (!std::getline(ls, cell, ',')) throw std::invalid_argument("trace csv: short row '" + line + "'");
    TraceRecord r;
    r.t = std::stoull(f[0]);
    r.objective = std::stod(f[1]);
    r.gap = std::stod(f[2]);
    r.consensus_err = std::stod(f[3]);
    r.tracking_err = std::stod(f[4]);
    r.theorem_bound = std::stod(f[5]);
    r.comm_rounds = std::stoull(f[6]);
    r.lambda_t = std::stod(f[7]);
    out.push_back(r);
  }
  return out;
}

/// Per-t sample means and standard errors over trials (stderr 0 for one trial).
struct Aggregate {
  std::vector<std::size_t> t;
  std::vector<double> gap_mean, gap_se, cons_mean, cons_se, track_mean, track_se, bound;
};

inline Aggregate aggregate(const std::vector<RunTrace>& trials) {
  if (trials.empty()) throw std::invalid_argument("aggregate: no trials");
  Aggregate a;
  const std::size_t rows = trials.front().records.size();
  const double n = static_cast<double>(trials.size());
  auto stat = [&](std::size_t r, auto field, double& mean, double& se) {
    double sum = 0.0;
    for (const auto& tr : trials) sum += field(tr.records[r]);
    mean = sum / n;
    double ss = 0.0;
    for (const auto& tr : trials) ss += (field(tr.records[r]) - mean) * (field(tr.records[r]) - mean);
    se = trials.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  };
  for (std::size_t r = 0; r < rows; ++r) {
    double m, s;
    a.t.push_back(trials.front().records[r].t);
    stat(r, [](const TraceRecord& x) { return x.gap; }, m, s);
    a.gap_mean.push_back(m);
    a.gap_se.push_back(s);
    stat(r, [](const TraceRecord& x) { return x.consensus_err; }, m, s);
    a.cons_mean.push_back(m);
    a.cons_se.push_back(s);
    stat(r, [](const TraceRecord& x) { return x.tracking_err; }, m, s);
    a.track_mean.push_back(m);
    a.track_se.push_back(s);
    double worst = 0.0;
    for (const auto& tr : trials) worst = std::max(worst, tr.records[r].theorem_bound);
    a.bound.push_back(worst);
  }
  return a;
}

inline std::string aggregate_csv(const Aggregate& a) {
  std::ostringstream os;
  os << "t,gap_mean,gap_stderr,consensus_err_mean,consensus_err_stderr,tracking_err_mean,tracking_err_stderr,"
        "theorem_bound\n";
  for (std::size_t r = 0; r < a.t.size(); ++r)
    os << a.t[r] << ',' << fmt_double(a.gap_mean[r]) << ',' << fmt_double(a.gap_se[r]) << ','
       << fmt_double(a.cons_mean[r]) << ',' << fmt_double(a.cons_se[r]) << ',' << fmt_double(a.track_mean[r]) << ','
       << fmt_double(a.track_se[r]) << ',' << fmt_double(a.bound[r]) << '\n';
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace dfw::harness
