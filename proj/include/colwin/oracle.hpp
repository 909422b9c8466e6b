#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "colwin/value.hpp"
#include "colwin/window_spec.hpp"

namespace colwin {

/// One output row of the reference evaluator, in input order.
struct OracleRow {
  ValueTuple pass_through;
  ValueTuple appended;
};

struct OracleResult {
  std::vector<OracleRow> rows;
};

namespace oracle_detail {

inline std::size_t column_of(const std::vector<std::string>& columns, const std::string& name) {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("unknown attribute '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

// Ordering of two rows by the ORDER BY keys; 0 means peers.
inline int order_cmp(const ValueTuple& a, const ValueTuple& b, const std::vector<std::size_t>& cols,
                     const std::vector<SortDirection>& dirs) {
  for (std::size_t k = 0; k < cols.size(); ++k) {
    auto c = compare_values(a[cols[k]], b[cols[k]]);
    if (c == 0) continue;
    int r = c < 0 ? -1 : 1;
    return dirs[k] == SortDirection::Asc ? r : -r;
  }
  return 0;
}

// Is v within [base - lo, base + hi] (either side may be unbounded)?
inline bool in_value_range(const Value& v, const Value& base, const FrameBound& start, const FrameBound& end) {
  auto lower_ok = [&] {
    if (start.kind == BoundKind::UnboundedPreceding) return true;
    if (start.kind == BoundKind::CurrentRow) return compare_values(v, base) >= 0;
    if (is_int(v) && is_int(*start.offset)) {
      return static_cast<__int128>(as_int(v)) + as_int(*start.offset) >= static_cast<__int128>(as_int(base));
    }
    return as_double(v) >= as_double(base) - as_double(*start.offset);
  };
  auto upper_ok = [&] {
    if (end.kind == BoundKind::UnboundedFollowing) return true;
    if (end.kind == BoundKind::CurrentRow) return compare_values(v, base) <= 0;
    if (is_int(v) && is_int(*end.offset)) {
      return static_cast<__int128>(as_int(v)) <= static_cast<__int128>(as_int(base)) + as_int(*end.offset);
    }
    return as_double(v) <= as_double(base) + as_double(*end.offset);
  };
  return lower_ok() && upper_ok();
}

inline bool in_row_range(std::size_t j, std::size_t i, const FrameBound& start, const FrameBound& end) {
  auto sj = static_cast<__int128>(j);
  auto si = static_cast<__int128>(i);
  bool lower = start.kind == BoundKind::UnboundedPreceding ||
               (start.kind == BoundKind::CurrentRow && sj >= si) ||
               (start.kind == BoundKind::Preceding && sj >= si - as_int(*start.offset));
  bool upper = end.kind == BoundKind::UnboundedFollowing || (end.kind == BoundKind::CurrentRow && sj <= si) ||
               (end.kind == BoundKind::Following && sj <= si + as_int(*end.offset));
  return lower && upper;
}

inline Value fold(FunctionKind kind, const std::vector<const Value*>& frame) {
  switch (kind) {
    case FunctionKind::Count:
      return static_cast<std::int64_t>(frame.size());
    case FunctionKind::Sum: {
      if (!frame.empty() && is_float(*frame.front())) {
        double s = 0.0;
        for (const auto* v : frame) s = s + as_double(*v);
        return s;
      }
      std::uint64_t s = 0;
      for (const auto* v : frame) s += static_cast<std::uint64_t>(as_int(*v));
      return static_cast<std::int64_t>(s);
    }
    case FunctionKind::Min:
    case FunctionKind::Max: {
      const Value* best = frame.front();
      for (const auto* v : frame) {
        auto c = compare_values(*v, *best);
        if (kind == FunctionKind::Min ? c < 0 : c > 0) best = v;
      }
      return *best;
    }
    default:
      throw ValidationError("not a framed function");
  }
}

}  // namespace oracle_detail

/// Definitional evaluation: groups by key equality, stable-sorts each group,
/// scans the whole group for every row to find its frame and folds the
/// frame left to right. Quadratic; for testing only.
inline OracleResult oracle_evaluate(const std::vector<ValueTuple>& rows, const std::vector<std::string>& columns,
                                    const WindowSpec& spec, const std::vector<std::string>& pass_through) {
  using namespace oracle_detail;
  validate_structure(spec);
  std::vector<std::size_t> key_cols, order_cols, pass_cols, arg_cols;
  std::vector<SortDirection> dirs;
  for (const auto& k : spec.partition_keys) key_cols.push_back(column_of(columns, k));
  for (const auto& o : spec.order_keys) {
    order_cols.push_back(column_of(columns, o.attr));
    dirs.push_back(o.direction);
  }
  for (const auto& p : pass_through) pass_cols.push_back(column_of(columns, p));
  for (const auto& f : spec.functions) arg_cols.push_back(f.attr.empty() ? 0 : column_of(columns, f.attr));
  const FrameSpec frame = spec.effective_frame();

  // Groups in order of first appearance, found by linear key comparison.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> representative;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t g = 0;
    for (; g < groups.size(); ++g) {
      bool same = true;
      for (auto c : key_cols) same = same && compare_values(rows[r][c], rows[representative[g]][c]) == 0;
      if (same) break;
    }
    if (g == groups.size()) {
      groups.emplace_back();
      representative.push_back(r);
    }
    groups[g].push_back(r);
  }

  OracleResult result;
  result.rows.resize(rows.size());
  for (auto& members : groups) {
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return order_cmp(rows[a], rows[b], order_cols, dirs) < 0;
    });
    const std::size_t n = members.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cur = rows[members[i]];
      ValueTuple appended;
      for (std::size_t f = 0; f < spec.functions.size(); ++f) {
        const auto kind = spec.functions[f].kind;
        if (kind == FunctionKind::RowNumber) {
          appended.emplace_back(static_cast<std::int64_t>(i + 1));
        } else if (kind == FunctionKind::Rank) {
          std::int64_t before = 0;
          for (std::size_t j = 0; j < n; ++j) before += order_cmp(rows[members[j]], cur, order_cols, dirs) < 0;
          appended.emplace_back(before + 1);
        } else if (kind == FunctionKind::DenseRank) {
          // Distinct key values below the current row: boundaries between
          // non-peer neighbours in sorted order up to the first peer.
          std::int64_t distinct = 0;
          for (std::size_t j = 1; j <= i; ++j) {
            distinct += order_cmp(rows[members[j - 1]], rows[members[j]], order_cols, dirs) != 0;
          }
          appended.emplace_back(distinct + 1);
        } else {
          std::vector<const Value*> in_frame;
          for (std::size_t j = 0; j < n; ++j) {
            bool member = frame.mode == FrameMode::Rows
                              ? in_row_range(j, i, frame.start, frame.end)
                              : in_value_range(rows[members[j]][order_cols.front()], cur[order_cols.front()], frame.start,
                                               frame.end);
            if (member) in_frame.push_back(&rows[members[j]][arg_cols[f]]);
          }
          appended.push_back(fold(kind, in_frame));
        }
      }
      ValueTuple pass;
      for (auto c : pass_cols) pass.push_back(cur[c]);
      result.rows[members[i]] = {std::move(pass), std::move(appended)};
    }
  }
  return result;
}

/// Equal up to a relative tolerance for floats, exact otherwise.
inline bool values_match(const Value& a, const Value& b, double rel_tol = 1e-9) {
  if (is_float(a) && is_float(b)) {
    double x = as_double(a), y = as_double(b);
    if (x == y) return true;
    if (std::isnan(x) || std::isnan(y)) return false;
    return std::fabs(x - y) <= rel_tol * std::max(std::fabs(x), std::fabs(y));
  }
  return a == b;
}

inline bool tuples_match(const ValueTuple& a, const ValueTuple& b, double rel_tol = 1e-9) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!values_match(a[i], b[i], rel_tol)) return false;
  }
  return true;
}

/// Compares engine rows (pass-through values followed by function outputs,
/// any order) with the oracle as multisets. Returns an empty string on
/// agreement, otherwise a description of the first difference.
inline std::string compare_with_oracle(std::vector<ValueTuple> engine, const OracleResult& oracle, double rel_tol = 1e-9) {
  std::vector<ValueTuple> expected;
  expected.reserve(oracle.rows.size());
  for (const auto& r : oracle.rows) {
    ValueTuple t = r.pass_through;
    t.insert(t.end(), r.appended.begin(), r.appended.end());
    expected.push_back(std::move(t));
  }
  if (engine.size() != expected.size()) {
    return "row count " + std::to_string(engine.size()) + " != expected " + std::to_string(expected.size());
  }
  auto less = [](const ValueTuple& a, const ValueTuple& b) { return compare_tuples(a, b) < 0; };
  std::sort(engine.begin(), engine.end(), less);
  std::sort(expected.begin(), expected.end(), less);
  for (std::size_t i = 0; i < engine.size(); ++i) {
    if (!tuples_match(engine[i], expected[i], rel_tol)) {
      std::string got, want;
      for (const auto& v : engine[i]) got += format_value(v) + ",";
      for (const auto& v : expected[i]) want += format_value(v) + ",";
      return "sorted row " + std::to_string(i) + ": got [" + got + "] expected [" + want + "]";
    }
  }
  return {};
}

}  // namespace colwin
