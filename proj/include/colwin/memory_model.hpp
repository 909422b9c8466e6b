#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "colwin/position_engine.hpp"
#include "colwin/storage.hpp"
#include "colwin/window_operator.hpp"
#include "colwin/window_spec.hpp"

namespace colwin {

/// Inputs of the analytical memory formulas. Sizes are bytes per row.
struct MemoryModelParams {
  std::uint64_t N = 0;
  std::uint64_t M = 0;
  std::uint64_t G_max = 0;
  std::uint64_t size_t_keys = 0;
  std::uint64_t size_t_sa = 0;
  std::uint64_t size_p_sa = 0;
  std::uint64_t size_t_sort = 0;
  std::uint64_t size_t_aggr = 0;
  std::uint64_t window_size = 0;

  void validate() const {
    if (G_max > N || M > N) throw ValidationError("memory model: G_max and M must not exceed N");
  }
};

/// Predicted auxiliary bytes of the window operator. Signed because the
/// S2a delta is negative when positions are wider than the tuples.
inline std::int64_t estimate(Strategy strategy, const MemoryModelParams& p) {
  p.validate();
  auto i = [](std::uint64_t v) { return static_cast<std::int64_t>(v); };
  const std::int64_t keys = i(p.M) * i(p.size_t_keys);
  switch (strategy) {
    case Strategy::S1:
      return keys + i(p.N) * i(p.size_t_sa);
    case Strategy::S2a:
      return keys + i(p.N) * i(p.size_p_sa) + i(p.G_max) * (i(p.size_t_sa) - i(p.size_p_sa));
    case Strategy::S2b:
      return keys + i(p.N) * i(p.size_p_sa) + i(p.G_max) * i(p.size_t_sort) + i(p.size_t_aggr) * i(p.window_size);
  }
  return 0;
}

namespace detail {

inline std::uint64_t widths(std::span<const ValueType> types) {
  std::uint64_t w = 0;
  for (const auto& t : types) w += t.byte_width();
  return w;
}

// Largest number of rows any RANGE frame covers in one sorted group.
inline std::uint64_t max_range_frame(std::vector<Value>& values, const FrameSpec& frame) {
  std::sort(values.begin(), values.end(), value_less);
  const std::int64_t n = static_cast<std::int64_t>(values.size());
  std::uint64_t best = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t first = 0, last = n - 1;
    if (frame.start.kind != BoundKind::UnboundedPreceding) {
      Value lo = frame.start.offset ? shift_value(values[i], *frame.start.offset, true) : values[i];
      first = std::lower_bound(values.begin(), values.end(), lo, value_less) - values.begin();
    }
    if (frame.end.kind != BoundKind::UnboundedFollowing) {
      Value hi = frame.end.offset ? shift_value(values[i], *frame.end.offset, false) : values[i];
      last = std::upper_bound(values.begin(), values.end(), hi, value_less) - values.begin() - 1;
    }
    if (last >= first) best = std::max<std::uint64_t>(best, static_cast<std::uint64_t>(last - first + 1));
  }
  return best;
}

}  // namespace detail

/// Fills the model parameters from the input by a counting pass over the
/// partition keys (and the RANGE key when the frame is value based).
/// Attribute sizes follow the operator's tuple layout: the sort/aggregate
/// tuple also carries pass-through attributes that are not partition keys.
inline MemoryModelParams measure_params(PositionalOperator& input, const WindowSpec& spec,
                                        std::span<const std::string> pass_through) {
  const auto& tables = input.tables();
  auto type_of = [&](const std::string& name) { return resolve_attribute(tables, name).type; };
  EvalPlan plan = EvalPlan::bind(spec, type_of);

  MemoryModelParams p;
  p.size_p_sa = sizeof(std::uint64_t) * tables.size();
  std::vector<ValueType> key_types;
  for (const auto& k : spec.partition_keys) key_types.push_back(type_of(k));
  p.size_t_keys = detail::widths(key_types);

  std::vector<std::string> sa;
  auto add = [&](const std::string& n) {
    if (std::find(sa.begin(), sa.end(), n) == sa.end()) sa.push_back(n);
  };
  std::vector<ValueType> sort_types, aggr_types, sa_types;
  for (const auto& o : spec.order_keys) {
    if (std::find(sa.begin(), sa.end(), o.attr) == sa.end()) sort_types.push_back(type_of(o.attr));
    add(o.attr);
  }
  for (const auto& a : plan.arguments) {
    aggr_types.push_back(type_of(a));
    add(a);
  }
  for (const auto& pt : pass_through) {
    if (std::find(spec.partition_keys.begin(), spec.partition_keys.end(), pt) == spec.partition_keys.end()) add(pt);
  }
  for (const auto& n : sa) sa_types.push_back(type_of(n));
  p.size_t_sort = detail::widths(sort_types);
  p.size_t_aggr = detail::widths(aggr_types);
  p.size_t_sa = detail::widths(sa_types);

  const bool range = plan.monoid && plan.frame.mode == FrameMode::Range;
  std::vector<std::unique_ptr<ColumnReader>> key_readers;
  std::vector<std::size_t> key_tables;
  for (const auto& k : spec.partition_keys) {
    auto ref = resolve_attribute(tables, k);
    key_tables.push_back(ref.table);
    key_readers.push_back(std::make_unique<ColumnReader>(tables[ref.table], ref.name));
  }
  std::unique_ptr<ColumnReader> order_reader;
  std::size_t order_table = 0;
  if (range) {
    auto ref = resolve_attribute(tables, spec.order_keys.front().attr);
    order_table = ref.table;
    order_reader = std::make_unique<ColumnReader>(tables[ref.table], ref.name);
  }

  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::uint64_t> counts;
  std::vector<std::vector<Value>> order_values;
  RowLayout key_layout(key_types);
  std::string key(key_layout.width(), '\0');
  while (auto block = input.next()) {
    for (std::size_t i = 0; i < block->size(); ++i) {
      auto row = block->row(i);
      for (std::size_t k = 0; k < key_readers.size(); ++k) {
        key_readers[k]->read_raw(row[key_tables[k]], reinterpret_cast<std::byte*>(key.data()) + key_layout.offset(k));
      }
      auto [it, inserted] = index.emplace(key, counts.size());
      if (inserted) {
        counts.push_back(0);
        order_values.emplace_back();
      }
      ++counts[it->second];
      if (range) order_values[it->second].push_back(order_reader->read(row[order_table]));
      ++p.N;
    }
  }
  p.M = counts.size();
  for (auto c : counts) p.G_max = std::max(p.G_max, c);

  if (!plan.monoid) {
    p.window_size = 0;
  } else if (range) {
    for (auto& values : order_values) p.window_size = std::max(p.window_size, detail::max_range_frame(values, plan.frame));
  } else {
    const auto& f = plan.frame;
    if (f.start.kind == BoundKind::UnboundedPreceding || f.end.kind == BoundKind::UnboundedFollowing) {
      p.window_size = p.G_max;
    } else {
      std::uint64_t before = f.start.offset ? static_cast<std::uint64_t>(as_int(*f.start.offset)) : 0;
      std::uint64_t after = f.end.offset ? static_cast<std::uint64_t>(as_int(*f.end.offset)) : 0;
      std::uint64_t span = before >= p.G_max || after >= p.G_max ? p.G_max : before + after + 1;
      p.window_size = std::min(p.G_max, span);
    }
  }
  return p;
}

struct MeasuredPeak {
  std::uint64_t modeled = 0;     // hash table, group rows, sort keys, caches, sort scratch
  std::uint64_t evaluation = 0;  // segment trees and cumulative state
  std::uint64_t output_rows = 0;
};

/// Drains the operator and reports its accounted high-water marks.
inline MeasuredPeak measure_peak(WindowOperator& op) {
  while (op.next()) {
  }
  return {op.memory().peak_modeled(), op.memory().peak_evaluation(), op.stats().output_rows};
}

}  // namespace colwin
