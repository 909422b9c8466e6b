#pragma once

#include <algorithm>
#include <chrono>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "colwin/csv.hpp"
#include "colwin/memory_model.hpp"
#include "colwin/oracle.hpp"
#include "colwin/position_engine.hpp"
#include "colwin/storage.hpp"
#include "colwin/window_operator.hpp"
#include "colwin/window_spec.hpp"

namespace colwin {

struct FilterSpec {
  std::string attr;
  Predicate predicate;
};

/// Declarative query: scan, optional filter, one window clause, selected
/// pass-through attributes and an outer sort.
struct QuerySpec {
  std::string table;
  std::optional<FilterSpec> filter;
  WindowSpec window;
  std::vector<std::string> select;
  std::vector<OrderKey> order_by;
  Algorithm algorithm = Algorithm::SegmentTree;
  Strategy strategy = Strategy::S1;
};

namespace query_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& field, const std::string& what) {
  throw ValidationError("query field '" + field + "': " + what);
}

inline const json& member(const json& obj, const std::string& key, const std::string& field) {
  if (!obj.is_object() || !obj.contains(key)) fail(field + "." + key, "is required");
  return obj.at(key);
}

inline std::string string_at(const json& obj, const std::string& key, const std::string& field) {
  const auto& v = member(obj, key, field);
  if (!v.is_string()) fail(field + "." + key, "must be a string");
  return v.get<std::string>();
}

inline Value value_from_json(const json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  fail(field, "must be a number or a string");
}

inline std::vector<std::string> string_list(const json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "must be a list of attribute names");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) fail(field, "must contain strings only");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::vector<OrderKey> order_list(const json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "must be a list");
  std::vector<OrderKey> out;
  for (const auto& e : v) {
    if (e.is_string()) {
      out.push_back({e.get<std::string>(), SortDirection::Asc});
      continue;
    }
    OrderKey k{string_at(e, "attr", field), SortDirection::Asc};
    if (e.contains("dir")) {
      auto d = e.at("dir").is_string() ? e.at("dir").get<std::string>() : "";
      if (d == "asc" || d == "ASC") k.direction = SortDirection::Asc;
      else if (d == "desc" || d == "DESC") k.direction = SortDirection::Desc;
      else fail(field + ".dir", "must be 'asc' or 'desc'");
    }
    out.push_back(std::move(k));
  }
  return out;
}

inline BoundKind parse_bound_kind(const std::string& s, const std::string& field) {
  if (s == "unbounded_preceding") return BoundKind::UnboundedPreceding;
  if (s == "preceding") return BoundKind::Preceding;
  if (s == "current_row") return BoundKind::CurrentRow;
  if (s == "following") return BoundKind::Following;
  if (s == "unbounded_following") return BoundKind::UnboundedFollowing;
  fail(field, "unknown bound kind '" + s +
                  "' (valid: unbounded_preceding, preceding, current_row, following, unbounded_following)");
}

inline FrameBound parse_bound(const json& v, const std::string& field) {
  FrameBound b{parse_bound_kind(string_at(v, "kind", field), field + ".kind"), std::nullopt};
  if (v.contains("offset")) b.offset = value_from_json(v.at("offset"), field + ".offset");
  return b;
}

inline FrameSpec parse_frame(const json& v, const std::string& field) {
  FrameSpec f;
  auto mode = string_at(v, "mode", field);
  if (mode == "rows" || mode == "ROWS") f.mode = FrameMode::Rows;
  else if (mode == "range" || mode == "RANGE") f.mode = FrameMode::Range;
  else fail(field + ".mode", "must be 'rows' or 'range'");
  f.start = parse_bound(member(v, "start", field), field + ".start");
  f.end = parse_bound(member(v, "end", field), field + ".end");
  return f;
}

}  // namespace query_detail

inline QuerySpec parse_query(const nlohmann::json& doc) {
  using namespace query_detail;
  QuerySpec q;
  q.table = string_at(doc, "table", "query");
  if (doc.contains("filter")) {
    const auto& f = doc.at("filter");
    FilterSpec fs;
    fs.attr = string_at(f, "attr", "filter");
    try {
      fs.predicate.op = parse_compare_op(string_at(f, "op", "filter"));
    } catch (const ValidationError& e) {
      fail("filter.op", e.what());
    }
    fs.predicate.literal = value_from_json(member(f, "value", "filter"), "filter.value");
    q.filter = std::move(fs);
  }
  const auto& w = member(doc, "window", "query");
  if (w.contains("partition_by")) q.window.partition_keys = string_list(w.at("partition_by"), "window.partition_by");
  if (w.contains("order_by")) q.window.order_keys = order_list(w.at("order_by"), "window.order_by");
  if (w.contains("frame")) q.window.frame = parse_frame(w.at("frame"), "window.frame");
  const auto& fns = member(w, "functions", "window");
  if (!fns.is_array()) fail("window.functions", "must be a list");
  for (std::size_t i = 0; i < fns.size(); ++i) {
    std::string field = "window.functions[" + std::to_string(i) + "]";
    WindowFunction fn;
    auto name = string_at(fns[i], "fn", field);
    try {
      fn.kind = parse_function_kind(name);
    } catch (const ValidationError& e) {
      fail(field + ".fn", e.what());
    }
    if (fns[i].contains("attr")) fn.attr = string_at(fns[i], "attr", field);
    fn.output = fns[i].contains("as") ? string_at(fns[i], "as", field) : std::string(to_string(fn.kind));
    q.window.functions.push_back(std::move(fn));
  }
  if (doc.contains("select")) q.select = string_list(doc.at("select"), "select");
  if (doc.contains("order_by")) q.order_by = order_list(doc.at("order_by"), "order_by");
  if (doc.contains("algorithm")) {
    auto name = string_at(doc, "algorithm", "query");
    try {
      q.algorithm = parse_algorithm(name);
    } catch (const ValidationError& e) {
      fail("algorithm", e.what());
    }
  }
  if (doc.contains("strategy")) {
    auto name = string_at(doc, "strategy", "query");
    try {
      q.strategy = parse_strategy(name);
    } catch (const ValidationError& e) {
      fail("strategy", e.what());
    }
  }
  try {
    validate_structure(q.window);
  } catch (const ValidationError& e) {
    fail("window", e.what());
  }
  return q;
}

inline QuerySpec load_query(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open query file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("query file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_query(doc);
}

/// Replaces every PRECEDING/FOLLOWING offset of the window frame.
inline QuerySpec with_offset(QuerySpec q, const Value& offset) {
  if (!q.window.frame) return q;
  for (FrameBound* b : {&q.window.frame->start, &q.window.frame->end}) {
    if (b->has_offset()) b->offset = offset;
  }
  return q;
}

struct QueryResult {
  std::vector<Attribute> schema;
  std::vector<ValueTuple> rows;
  WindowRunStats stats;
  MeasuredPeak peak;
  double wall_ms = 0;
};

inline std::unique_ptr<PositionalOperator> make_source(const Database& db, const QuerySpec& q) {
  std::unique_ptr<PositionalOperator> source = std::make_unique<ScanOperator>(db.table(q.table));
  if (q.filter) source = std::make_unique<FilterOperator>(std::move(source), q.filter->attr, q.filter->predicate);
  return source;
}

/// Sorts by the query's outer keys, then by every column for a total order.
inline void outer_sort(const std::vector<Attribute>& schema, std::vector<ValueTuple>& rows, const std::vector<OrderKey>& keys) {
  std::vector<std::pair<std::size_t, SortDirection>> cols;
  for (const auto& k : keys) {
    auto it = std::find_if(schema.begin(), schema.end(), [&](const Attribute& a) { return a.name == k.attr; });
    if (it == schema.end()) throw ValidationError("query field 'order_by': '" + k.attr + "' is not an output column");
    cols.emplace_back(static_cast<std::size_t>(it - schema.begin()), k.direction);
  }
  for (std::size_t c = 0; c < schema.size(); ++c) cols.emplace_back(c, SortDirection::Asc);
  std::stable_sort(rows.begin(), rows.end(), [&](const ValueTuple& a, const ValueTuple& b) {
    for (auto [c, dir] : cols) {
      auto r = compare_values(a[c], b[c]);
      if (r != 0) return dir == SortDirection::Asc ? r < 0 : r > 0;
    }
    return false;
  });
}

/// Runs the query through the window operator. `wall_ms` covers scan,
/// filter and window evaluation, not the outer sort.
inline QueryResult run_query(const Database& db, const QuerySpec& q, Algorithm algorithm, Strategy strategy,
                             bool sort_output = true) {
  WindowOptions options;
  options.algorithm = algorithm;
  options.strategy = strategy;
  options.pass_through = q.select;
  auto start = std::chrono::steady_clock::now();
  WindowOperator op(make_source(db, q), q.window, options);
  QueryResult r;
  r.schema = op.schema();
  while (auto block = op.next()) {
    for (auto& row : block->rows) r.rows.push_back(std::move(row));
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  r.stats = op.stats();
  r.peak = {op.memory().peak_modeled(), op.memory().peak_evaluation(), r.stats.output_rows};
  if (sort_output) outer_sort(r.schema, r.rows, q.order_by);
  return r;
}

/// Evaluates the query with the reference oracle over materialized input.
inline OracleResult run_oracle(const Database& db, const QuerySpec& q) {
  std::vector<std::string> attrs;
  auto add = [&](const std::string& a) {
    if (!a.empty() && std::find(attrs.begin(), attrs.end(), a) == attrs.end()) attrs.push_back(a);
  };
  for (const auto& k : q.window.partition_keys) add(k);
  for (const auto& o : q.window.order_keys) add(o.attr);
  for (const auto& f : q.window.functions) add(f.attr);
  for (const auto& s : q.select) add(s);
  if (attrs.empty()) {
    auto t = db.table(q.table);
    add(t.schema.attributes.front().name);
  }
  MaterializeOperator input(make_source(db, q), attrs);
  auto rows = collect(input);
  return oracle_evaluate(rows, attrs, q.window, q.select);
}

inline void write_csv(std::ostream& out, const std::vector<Attribute>& schema, const std::vector<ValueTuple>& rows) {
  for (std::size_t c = 0; c < schema.size(); ++c) out << (c ? "," : "") << csv_escape(schema[c].name);
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_escape(format_value(row[c]));
    out << '\n';
  }
}

}  // namespace colwin
