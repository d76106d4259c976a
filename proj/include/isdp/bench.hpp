#pragma once

// Benchmark harness: runs (instance, algorithm) pairs over a worker pool,
// emits one CSV row each plus shifted-geometric-mean aggregates per
// configuration. CSV schema is stable:
//   instance,algo,status,value,bound,gap,iterations,cuts,nodes,time_s

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "isdp/instances.hpp"
#include "isdp/oa.hpp"

namespace isdp {

/// (prod (y_j + s))^(1/n) - s. Direct product when it cannot overflow,
/// log-space otherwise; inputs are sorted first so the result is invariant
/// under permutation.
inline double shifted_geometric_mean(std::vector<double> ys, double s) {
  if (ys.empty()) throw std::invalid_argument("shifted_geometric_mean: empty list");
  std::sort(ys.begin(), ys.end());
  if (ys.size() == 1) return ys[0];
  double log_sum = 0.0;
  bool overflow = false;
  double prod = 1.0;
  for (double y : ys) {
    const double t = y + s;
    log_sum += std::log(std::max(t, 0.0));
    prod *= t;
    if (prod > 1e280) overflow = true;
  }
  if (!overflow) return std::pow(prod, 1.0 / static_cast<double>(ys.size())) - s;
  return std::exp(log_sum / static_cast<double>(ys.size())) - s;
}

inline const char* kBenchCsvHeader = "instance,algo,status,value,bound,gap,iterations,cuts,nodes,time_s";

struct BenchRecord {
  std::string instance;
  std::string algo;
  std::string status;
  double value = kInf;
  double bound = -kInf;
  double gap = kInf;
  long iterations = 0;
  long cuts = 0;
  long nodes = 0;
  double time_s = 0.0;
};

namespace bench_detail {
inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace bench_detail

inline std::string to_csv_row(const BenchRecord& r) {
  std::ostringstream out;
  out << r.instance << ',' << r.algo << ',' << r.status << ',' << bench_detail::num(r.value)
      << ',' << bench_detail::num(r.bound) << ',' << bench_detail::num(r.gap) << ','
      << r.iterations << ',' << r.cuts << ',' << r.nodes << ','
      << bench_detail::num(r.time_s);
  return out.str();
}

inline BenchRecord to_record(const std::string& instance, const std::string& algo,
                             const SolveReport& rep) {
  BenchRecord r;
  r.instance = instance;
  r.algo = algo;
  r.status = to_string(rep.status);
  r.value = rep.value;
  r.bound = rep.bound;
  r.gap = rep.gap;
  r.iterations = rep.iterations;
  r.cuts = rep.total_cuts;
  r.nodes = rep.total_nodes;
  r.time_s = rep.wall_s;
  return r;
}

/// Runs tasks 0..count-1 on a small pool; results land at their task index,
/// so output order is deterministic regardless of scheduling.
template <class Fn>
void run_indexed(long count, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex mu;
  long next = 0;
  auto worker = [&]() {
    for (;;) {
      long idx;
      {
        std::lock_guard<std::mutex> lk(mu);
        if (next >= count) return;
        idx = next++;
      }
      fn(idx);
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
}

struct BenchTask {
  GeneratorSpec spec;
  std::string algo;
  std::string instance_id;
};

struct BenchConfig {
  GeneratorFamily family = GeneratorFamily::BlsNormal;
  std::vector<int> sizes;
  std::vector<double> params;
  int reps = 10;
  std::vector<std::string> algos;
  double time_limit_s = 3600.0;
  double eps = 1e-6;
  CutMode cut_mode = CutMode::Soc;
  std::uint64_t base_seed = 1;
  int jobs = 1;
  CardRelation card = CardRelation::Equal;
};

inline const char* family_name(GeneratorFamily f) {
  switch (f) {
    case GeneratorFamily::BlsNormal: return "bls_normal";
    case GeneratorFamily::BlsBinary: return "bls_binary";
    case GeneratorFamily::Qkp: return "qkp";
  }
  return "?";
}

inline SolveReport run_algorithm(const std::string& algo, const BsdpInstance& b, double eps,
                                 double time_limit_s, CutMode mode) {
  OaLimits limits;
  limits.time_limit_s = time_limit_s;
  if (algo == "oa") return run_oa(b, eps, limits, CutMode::Aggregate);
  if (algo == "oa_soc") return run_oa_soc(b, eps, limits, mode);
  if (algo == "lazy_soc") return run_lazy_soc(b, eps, limits, mode);
  throw std::invalid_argument("unknown algorithm " + algo);
}

struct BenchOutput {
  std::vector<std::string> lines;      // CSV rows in task order
  std::vector<std::string> aggregate;  // '#' comment lines with SGM and limit counts
};

inline BenchOutput run_bench(const BenchConfig& cfg) {
  std::vector<BenchTask> tasks;
  for (int n : cfg.sizes)
    for (double param : cfg.params)
      for (int rep = 0; rep < cfg.reps; ++rep) {
        GeneratorSpec spec{cfg.family, n, param, cfg.base_seed + static_cast<std::uint64_t>(rep)};
        std::ostringstream id;
        id << family_name(cfg.family) << "-n" << n << "-p" << param << "-s" << spec.seed;
        for (const auto& algo : cfg.algos) tasks.push_back({spec, algo, id.str()});
      }

  std::vector<BenchRecord> records(tasks.size());
  run_indexed(static_cast<long>(tasks.size()), cfg.jobs, [&](long idx) {
    const BenchTask& task = tasks[idx];
    BenchRecord rec;
    rec.instance = task.instance_id;
    rec.algo = task.algo;
    try {
      BqcqpInstance p = generate(task.spec, cfg.card);
      BsdpInstance b = bqcqp_to_bsdp(p);
      SolveReport rep = run_algorithm(task.algo, b, cfg.eps, cfg.time_limit_s, cfg.cut_mode);
      rec = to_record(task.instance_id, task.algo, rep);
    } catch (const std::exception& e) {
      rec.status = "error";
    }
    records[idx] = std::move(rec);
  });

  BenchOutput out;
  for (const auto& r : records) out.lines.push_back(to_csv_row(r));

  // aggregates: one line per (n, param, algo)
  for (int n : cfg.sizes)
    for (double param : cfg.params)
      for (const auto& algo : cfg.algos) {
        std::vector<double> times;
        int limit_hits = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
          if (tasks[i].algo != algo || tasks[i].spec.n != n || tasks[i].spec.param != param)
            continue;
          times.push_back(records[i].time_s);
          if (records[i].status == std::string("time_limit")) ++limit_hits;
        }
        if (times.empty()) continue;
        std::ostringstream line;
        line << "# sgm family=" << family_name(cfg.family) << " n=" << n << " p=" << param
             << " algo=" << algo << " sgm_time_s=" << bench_detail::num(shifted_geometric_mean(times, 10.0))
             << " limit=" << limit_hits;
        out.aggregate.push_back(line.str());
      }
  return out;
}

}  // namespace isdp
