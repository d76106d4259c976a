// Command-line surface: generate benchmark instances, solve them with any of
// the three algorithms, cross-check against exhaustive enumeration, and run
// benchmark sweeps with CSV output.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "isdp/bench.hpp"
#include "isdp/instances.hpp"
#include "isdp/io.hpp"
#include "isdp/oa.hpp"

using namespace isdp;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GeneratorFamily parse_family(const std::string& name) {
  if (name == "bls_normal") return GeneratorFamily::BlsNormal;
  if (name == "bls_binary") return GeneratorFamily::BlsBinary;
  if (name == "qkp") return GeneratorFamily::Qkp;
  throw CLI::ValidationError("--family", "unknown family " + name);
}

CutMode parse_cut_mode(const std::string& name) {
  if (name == "aggregate") return CutMode::Aggregate;
  if (name == "linear") return CutMode::Linear;
  if (name == "soc") return CutMode::Soc;
  if (name == "kk") return CutMode::Kk;
  throw CLI::ValidationError("--cut-mode", "unknown cut mode " + name);
}

void print_iteration_log(const SolveReport& rep) {
  std::fprintf(stderr, "iter,lb,ub,gap,new_cuts,nodes,elapsed\n");
  for (const auto& rec : rep.records)
    std::fprintf(stderr, "%ld,%s,%s,%s,%ld,%ld,%.3f\n", rec.iter,
                 bench_detail::num(rec.lb).c_str(), bench_detail::num(rec.ub).c_str(),
                 bench_detail::num(rec.gap).c_str(), rec.new_cuts, rec.nodes, rec.elapsed_s);
}

int report_exit_code(const SolveReport& rep) {
  switch (rep.status) {
    case SolveStatus::Optimal: return 0;
    case SolveStatus::TimeLimit:
    case SolveStatus::IterationLimit: return 2;
    case SolveStatus::Infeasible: return 3;
    case SolveStatus::Error: return 1;
  }
  return 1;
}

void print_report(const SolveReport& rep, const std::string& instance, const std::string& algo,
                  bool as_json, bool as_csv) {
  if (as_json) {
    nlohmann::json j;
    j["status"] = to_string(rep.status);
    j["value"] = std::isfinite(rep.value) ? nlohmann::json(rep.value)
                                          : nlohmann::json(bench_detail::num(rep.value));
    j["bound"] = std::isfinite(rep.bound) ? nlohmann::json(rep.bound)
                                          : nlohmann::json(bench_detail::num(rep.bound));
    j["gap"] = std::isfinite(rep.gap) ? nlohmann::json(rep.gap)
                                      : nlohmann::json(bench_detail::num(rep.gap));
    j["iterations"] = rep.iterations;
    j["cuts"] = rep.total_cuts;
    j["nodes"] = rep.total_nodes;
    j["time_s"] = rep.wall_s;
    j["x"] = rep.x;
    std::printf("%s\n", j.dump().c_str());
    return;
  }
  if (as_csv) {
    std::printf("%s\n", kBenchCsvHeader);
    std::printf("%s\n", to_csv_row(to_record(instance, algo, rep)).c_str());
    return;
  }
  std::printf("status=%s value=%s bound=%s gap=%s iterations=%ld cuts=%ld nodes=%ld time_s=%.3f\n",
              to_string(rep.status), bench_detail::num(rep.value).c_str(),
              bench_detail::num(rep.bound).c_str(), bench_detail::num(rep.gap).c_str(),
              rep.iterations, rep.total_cuts, rep.total_nodes, rep.wall_s);
  if (!rep.x.empty()) {
    std::printf("x=");
    for (double v : rep.x) std::printf("%g", v);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"integer semidefinite programming solver for lifted binary QCQPs"};
  app.require_subcommand(1);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "write a benchmark instance in BSDP1 format");
  std::string g_family = "bls_normal", g_out, g_card = "eq";
  int g_n = 10;
  double g_param = 3;
  std::uint64_t g_seed = 1;
  gen->add_option("--family", g_family, "bls_normal|bls_binary|qkp");
  gen->add_option("--n", g_n, "variable count")->required();
  gen->add_option("--param", g_param, "k for BLS families, density for qkp");
  gen->add_option("--seed", g_seed, "64-bit seed");
  gen->add_option("--out", g_out, "output path (default stdout)");
  gen->add_option("--card-relation", g_card, "le|eq cardinality row for BLS");

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "solve a BSDP1 instance");
  std::string s_instance, s_algo = "oa_soc", s_cut_mode = "soc", s_card = "eq";
  double s_eps = 1e-6, s_time = 3600;
  std::uint64_t s_seed = 0;
  bool s_json = false, s_csv = false, s_log = false;
  solve->add_option("--instance", s_instance, "BSDP1 file")->required();
  solve->add_option("--algo", s_algo, "oa|oa_soc|lazy_soc");
  solve->add_option("--eps", s_eps, "relative gap tolerance");
  solve->add_option("--time-limit", s_time, "seconds");
  solve->add_option("--cut-mode", s_cut_mode, "aggregate|linear|soc|kk");
  solve->add_option("--seed", s_seed, "unused; accepted for benchmark symmetry");
  solve->add_option("--card-relation", s_card, "generation passthrough, ignored here");
  solve->add_flag("--json", s_json, "emit the report as JSON");
  solve->add_flag("--csv", s_csv, "emit the report as a CSV row");
  solve->add_flag("--log", s_log, "per-iteration log lines on stderr");

  // ---- oracle ----
  auto* oracle = app.add_subcommand("oracle", "cross-check an algorithm against enumeration");
  std::string o_instance, o_algo = "oa_soc", o_cut_mode = "soc";
  double o_eps = 1e-6, o_time = 3600;
  oracle->add_option("--instance", o_instance)->required();
  oracle->add_option("--algo", o_algo, "oa|oa_soc|lazy_soc");
  oracle->add_option("--eps", o_eps);
  oracle->add_option("--time-limit", o_time);
  oracle->add_option("--cut-mode", o_cut_mode);

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "run a benchmark sweep and write CSV");
  std::string b_family = "bls_normal", b_out, b_cut_mode = "soc", b_card = "eq";
  std::vector<int> b_sizes;
  std::vector<double> b_params;
  std::vector<std::string> b_algos;
  int b_reps = 10, b_jobs = 1;
  double b_time = 3600, b_eps = 1e-6;
  std::uint64_t b_seed = 1;
  bench->add_option("--family", b_family, "bls_normal|bls_binary|qkp");
  bench->add_option("--sizes", b_sizes, "variable counts")->required();
  bench->add_option("--params", b_params, "k values or densities")->required();
  bench->add_option("--reps", b_reps, "instances per configuration");
  bench->add_option("--algos", b_algos, "subset of oa,oa_soc,lazy_soc")->required();
  bench->add_option("--time-limit", b_time, "seconds per run");
  bench->add_option("--eps", b_eps);
  bench->add_option("--out", b_out, "CSV path (default stdout)");
  bench->add_option("--jobs", b_jobs, "worker threads");
  bench->add_option("--seed", b_seed, "base seed");
  bench->add_option("--cut-mode", b_cut_mode);
  bench->add_option("--card-relation", b_card);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      GeneratorSpec spec{parse_family(g_family), g_n, g_param, g_seed};
      CardRelation card = g_card == "le" ? CardRelation::LessEqual : CardRelation::Equal;
      std::string text = emit_instance(generate(spec, card));
      if (g_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        std::ofstream out(g_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + g_out);
        out << text;
      }
      return 0;
    }

    if (*solve) {
      ParsedInstance inst = parse_instance(read_file(s_instance));
      SolveReport rep;
      if (std::holds_alternative<BqcqpInstance>(inst)) {
        BsdpInstance b = bqcqp_to_bsdp(std::get<BqcqpInstance>(inst));
        rep = run_algorithm(s_algo, b, s_eps, s_time, parse_cut_mode(s_cut_mode));
      } else {
        if (s_algo != "oa") {
          std::fprintf(stderr, "error: %s requires a BSDP instance; general ISDPs take --algo oa\n",
                       s_algo.c_str());
          return 1;
        }
        OaLimits limits;
        limits.time_limit_s = s_time;
        rep = run_oa(std::get<IsdpInstance>(inst), s_eps, limits, parse_cut_mode(s_cut_mode));
      }
      if (s_log) print_iteration_log(rep);
      print_report(rep, s_instance, s_algo, s_json, s_csv);
      return report_exit_code(rep);
    }

    if (*oracle) {
      ParsedInstance inst = parse_instance(read_file(o_instance));
      if (!std::holds_alternative<BqcqpInstance>(inst)) {
        std::fprintf(stderr, "error: the oracle enumerates binary QCQPs only\n");
        return 1;
      }
      const BqcqpInstance& p = std::get<BqcqpInstance>(inst);
      if (p.n > 25) {
        std::fprintf(stderr, "error: n=%d exceeds the enumeration cap of 25\n", p.n);
        return 1;
      }
      BruteForceResult bf = brute_force(p);
      BsdpInstance b = bqcqp_to_bsdp(p);
      SolveReport rep = run_algorithm(o_algo, b, o_eps, o_time, parse_cut_mode(o_cut_mode));
      const char* brute_status = bf.feasible ? "feasible" : "infeasible";
      std::printf("brute_force status=%s value=%s\n", brute_status,
                  bf.feasible ? bench_detail::num(bf.value).c_str() : "-");
      std::printf("%s status=%s value=%s\n", o_algo.c_str(), to_string(rep.status),
                  bench_detail::num(rep.value).c_str());
      if (!bf.feasible && rep.status == SolveStatus::Infeasible) return 0;
      if (!bf.feasible || rep.status != SolveStatus::Optimal) return 4;
      const double scale = std::max(1.0, std::abs(bf.value));
      return std::abs(rep.value - bf.value) <= 1e-6 * scale ? 0 : 4;
    }

    if (*bench) {
      BenchConfig cfg;
      cfg.family = parse_family(b_family);
      cfg.sizes = b_sizes;
      cfg.params = b_params;
      cfg.reps = b_reps;
      cfg.algos = b_algos;
      cfg.time_limit_s = b_time;
      cfg.eps = b_eps;
      cfg.jobs = b_jobs;
      cfg.base_seed = b_seed;
      cfg.cut_mode = parse_cut_mode(b_cut_mode);
      cfg.card = b_card == "le" ? CardRelation::LessEqual : CardRelation::Equal;
      BenchOutput out = run_bench(cfg);

      std::ostringstream text;
      text << kBenchCsvHeader << "\n";
      for (const auto& line : out.lines) text << line << "\n";
      for (const auto& line : out.aggregate) text << line << "\n";
      if (b_out.empty()) {
        std::fputs(text.str().c_str(), stdout);
      } else {
        std::ofstream f(b_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + b_out);
        f << text.str();
      }
      bool all_error = !out.lines.empty();
      for (const auto& line : out.lines)
        if (line.find(",error,") == std::string::npos) all_error = false;
      return all_error ? 1 : 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
