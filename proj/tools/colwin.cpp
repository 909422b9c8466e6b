#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "colwin/colwin.hpp"

namespace {

using namespace colwin;

std::string default_dir() {
  const char* env = std::getenv("COLWIN_DATA_DIR");
  return env && *env ? env : "colwin_data";
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Value parse_offset(const std::string& s) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used == s.size()) return static_cast<std::int64_t>(v);
    double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError("invalid offset '" + s + "'");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

int cmd_gen(const std::string& dir, std::uint64_t rows, std::uint64_t seed, const std::string& table) {
  Database db(dir);
  if (db.has_table(table)) throw ValidationError("table '" + table + "' already exists in " + dir);
  auto t = db.create_table(lineorder_schema(table));
  auto n = db.generate_lineorder(t, rows, seed);
  std::cout << n << " rows\n";
  return 0;
}

int cmd_run(const std::string& dir, const std::string& query_path, const std::string& algo, const std::string& strategy,
            bool oracle) {
  Database db(dir);
  auto q = load_query(query_path);
  auto a = algo.empty() ? q.algorithm : parse_algorithm(algo);
  auto s = strategy.empty() ? q.strategy : parse_strategy(strategy);
  auto result = run_query(db, q, a, s);
  if (oracle) {
    auto diff = compare_with_oracle(result.rows, run_oracle(db, q));
    if (!diff.empty()) {
      std::cerr << "oracle mismatch: " << diff << '\n';
      return 3;
    }
  }
  write_csv(std::cout, result.schema, result.rows);
  if (oracle) std::cerr << "oracle: " << result.rows.size() << " rows match\n";
  return 0;
}

int cmd_bench(const std::string& dir, const std::string& query_path, const std::string& offsets, const std::string& algos,
              const std::string& strategies, int reps) {
  if (reps < 1) throw ValidationError("--reps must be >= 1");
  Database db(dir);
  auto base = load_query(query_path);
  std::vector<Algorithm> algorithms;
  for (const auto& a : split(algos)) algorithms.push_back(parse_algorithm(a));
  std::vector<Strategy> strats;
  for (const auto& s : split(strategies)) strats.push_back(parse_strategy(s));
  std::vector<std::string> offset_list = split(offsets);
  if (offset_list.empty()) offset_list.push_back("");

  std::cout << "offset,algorithm,strategy,rows_processed,wall_ms,combine_ops,peak_bytes\n";
  for (const auto& off : offset_list) {
    auto q = off.empty() ? base : with_offset(base, parse_offset(off));
    for (auto a : algorithms) {
      for (auto s : strats) {
        run_query(db, q, a, s, false);  // warm-up
        std::vector<double> times;
        QueryResult last;
        for (int r = 0; r < reps; ++r) {
          last = run_query(db, q, a, s, false);
          times.push_back(last.wall_ms);
        }
        std::cout << (off.empty() ? "-" : off) << ',' << to_string(a) << ',' << to_string(s) << ','
                  << last.stats.input_rows << ',' << format_value(median(times)) << ','
                  << last.stats.counters.combine_ops << ',' << last.peak.modeled + last.peak.evaluation << '\n';
      }
    }
  }
  return 0;
}

int cmd_estimate(const std::string& dir, const std::string& query_path, bool measure) {
  Database db(dir);
  auto q = load_query(query_path);
  auto source = make_source(db, q);
  auto params = measure_params(*source, q.window, q.select);
  std::cout << "strategy,predicted_bytes";
  if (measure) std::cout << ",measured_bytes,measured_tree_bytes";
  std::cout << '\n';
  for (auto s : {Strategy::S1, Strategy::S2a, Strategy::S2b}) {
    std::cout << to_string(s) << ',' << estimate(s, params);
    if (measure) {
      WindowOptions options;
      options.algorithm = q.algorithm;
      options.strategy = s;
      options.pass_through = q.select;
      WindowOperator op(make_source(db, q), q.window, options);
      auto peak = measure_peak(op);
      std::cout << ',' << peak.modeled << ',' << peak.evaluation;
    }
    std::cout << '\n';
  }
  std::cerr << "N=" << params.N << " M=" << params.M << " G_max=" << params.G_max << " size_t_keys=" << params.size_t_keys
            << " size_t_sa=" << params.size_t_sa << " size_p=" << params.size_p_sa << " size_t_sort=" << params.size_t_sort
            << " size_t_aggr=" << params.size_t_aggr << " window_size=" << params.window_size << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"colwin: window functions over a columnar store"};
  app.require_subcommand(1);
  std::string dir = default_dir();
  app.add_option("--dir", dir, "data directory (default: $COLWIN_DATA_DIR or ./colwin_data)");

  auto* gen = app.add_subcommand("gen", "generate a lineorder table");
  std::uint64_t rows = 0, seed = 1;
  std::string table = "lineorder";
  gen->add_option("--rows", rows, "row count")->required();
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--table", table, "table name");
  gen->add_option("--dir", dir, "data directory");

  std::string query, algo, strategy;
  bool oracle = false;
  auto* run = app.add_subcommand("run", "run a query file, print CSV");
  run->add_option("--query", query, "query JSON file")->required();
  run->add_option("--algo", algo, "naive | cumulative | segment_tree (default: from query)");
  run->add_option("--strategy", strategy, "s1 | s2a | s2b (default: from query)");
  run->add_flag("--oracle", oracle, "cross-check with the reference evaluator");
  run->add_option("--dir", dir, "data directory");

  std::string offsets, algos = "naive,cumulative,segment_tree", strategies = "s1";
  int reps = 3;
  auto* bench = app.add_subcommand("bench", "time a query over offsets and configurations");
  bench->add_option("--query", query, "query JSON file")->required();
  bench->add_option("--offsets", offsets, "comma-separated frame offsets");
  bench->add_option("--algos", algos, "comma-separated algorithms");
  bench->add_option("--strategies", strategies, "comma-separated strategies");
  bench->add_option("--reps", reps, "timed repetitions per configuration");
  bench->add_option("--dir", dir, "data directory");

  bool measure = false;
  auto* est = app.add_subcommand("estimate-mem", "memory model predictions per strategy");
  est->add_option("--query", query, "query JSON file")->required();
  est->add_flag("--measure", measure, "also run each strategy and report measured peaks");
  est->add_option("--dir", dir, "data directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(dir, rows, seed, table);
    if (*run) return cmd_run(dir, query, algo, strategy, oracle);
    if (*bench) return cmd_bench(dir, query, offsets, algos, strategies, reps);
    if (*est) return cmd_estimate(dir, query, measure);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
