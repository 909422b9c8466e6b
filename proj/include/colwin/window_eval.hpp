#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "colwin/memory_tracker.hpp"
#include "colwin/monoid.hpp"
#include "colwin/segment_tree.hpp"
#include "colwin/value.hpp"
#include "colwin/window_spec.hpp"

namespace colwin {

enum class Algorithm : std::uint8_t { Naive, Cumulative, SegmentTree };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Naive:
      return "naive";
    case Algorithm::Cumulative:
      return "cumulative";
    case Algorithm::SegmentTree:
      return "segment_tree";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "naive") return Algorithm::Naive;
  if (name == "cumulative") return Algorithm::Cumulative;
  if (name == "segment_tree" || name == "segtree") return Algorithm::SegmentTree;
  throw ValidationError("unknown algorithm '" + std::string(name) + "' (valid: naive, cumulative, segment_tree)");
}

/// Work counters shared by all algorithms. A combine is one monoid
/// operation on a whole aggregate tuple (for cumulative SUM, an add or a
/// subtract).
struct EvalCounters {
  std::uint64_t combine_ops = 0;
  std::uint64_t tree_visits = 0;
  /// Combines spent on each group's rows after the first; used to check
  /// the per-row cost of cumulative evaluation.
  std::uint64_t max_row_combines = 0;
};

/// Read access to one ordered group while it is evaluated. Rows are in
/// group order. ensure()/evict_before() bracket which rows' arguments will
/// be read next; implementations backed by on-demand reads use them to
/// keep only the current frame resident.
class GroupAccess {
 public:
  virtual ~GroupAccess() = default;
  [[nodiscard]] virtual std::size_t size() const = 0;
  /// Value of the first ORDER BY key.
  [[nodiscard]] virtual Value order_value(std::size_t i) const = 0;
  /// Equal on every ORDER BY key.
  [[nodiscard]] virtual bool peers(std::size_t i, std::size_t j) const = 0;
  /// Raw value of distinct function argument `arg` at row i.
  virtual Value argument(std::size_t i, std::size_t arg) = 0;
  virtual void ensure(std::size_t /*last*/) {}
  virtual void evict_before(std::size_t /*first*/) {}
};

/// Group held as already-ordered tuples; used for tuple-level callers and
/// tests.
class VectorGroup final : public GroupAccess {
 public:
  VectorGroup(std::vector<ValueTuple> rows, std::vector<std::size_t> order_columns, std::vector<std::size_t> argument_columns)
      : rows_(std::move(rows)), order_columns_(std::move(order_columns)), argument_columns_(std::move(argument_columns)) {}

  [[nodiscard]] std::size_t size() const override { return rows_.size(); }
  [[nodiscard]] Value order_value(std::size_t i) const override { return rows_[i][order_columns_.at(0)]; }
  [[nodiscard]] bool peers(std::size_t i, std::size_t j) const override {
    for (auto c : order_columns_) {
      if (compare_values(rows_[i][c], rows_[j][c]) != 0) return false;
    }
    return true;
  }
  Value argument(std::size_t i, std::size_t arg) override { return rows_[i][argument_columns_[arg]]; }

 private:
  std::vector<ValueTuple> rows_;
  std::vector<std::size_t> order_columns_;
  std::vector<std::size_t> argument_columns_;
};

/// Inclusive row range; first > last means empty.
struct FrameRange {
  std::int64_t first = 0;
  std::int64_t last = -1;
  [[nodiscard]] bool empty() const { return first > last; }
  [[nodiscard]] std::int64_t size() const { return empty() ? 0 : last - first + 1; }
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

/// v + delta (or v - delta), saturating for int64.
inline Value shift_value(const Value& v, const Value& delta, bool subtract) {
  if (is_int(v) && is_int(delta)) {
    std::int64_t out;
    bool overflow = subtract ? __builtin_sub_overflow(as_int(v), as_int(delta), &out)
                             : __builtin_add_overflow(as_int(v), as_int(delta), &out);
    if (overflow) out = subtract ? std::numeric_limits<std::int64_t>::min() : std::numeric_limits<std::int64_t>::max();
    return out;
  }
  return subtract ? as_double(v) - as_double(delta) : as_double(v) + as_double(delta);
}

namespace detail {

// First index in [0, n) whose order value is >= target (or > when strict).
inline std::int64_t search_order(const GroupAccess& g, const Value& target, bool strict) {
  std::size_t lo = 0, hi = g.size();
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    auto c = compare_values(g.order_value(mid), target);
    bool before = strict ? c <= 0 : c < 0;
    if (before) lo = mid + 1;
    else hi = mid;
  }
  return static_cast<std::int64_t>(lo);
}

}  // namespace detail

/// Frame of row i. ROWS bounds clamp to the group; RANGE bounds are found
/// by binary search over the (ascending) first ORDER BY key, and peers of
/// the current row are always inside a CURRENT ROW bound.
inline FrameRange frame_bounds(const GroupAccess& g, std::size_t i, const FrameSpec& frame) {
  const auto n = static_cast<std::int64_t>(g.size());
  const auto row = static_cast<std::int64_t>(i);
  FrameRange r;
  if (frame.mode == FrameMode::Rows) {
    switch (frame.start.kind) {
      case BoundKind::UnboundedPreceding:
        r.first = 0;
        break;
      case BoundKind::Preceding:
        r.first = std::max<std::int64_t>(0, row - std::min(as_int(*frame.start.offset), row));
        break;
      default:
        r.first = row;
    }
    switch (frame.end.kind) {
      case BoundKind::UnboundedFollowing:
        r.last = n - 1;
        break;
      case BoundKind::Following:
        r.last = std::min<std::int64_t>(n - 1, row + std::min(as_int(*frame.end.offset), n));
        break;
      default:
        r.last = row;
    }
    return r;
  }
  const Value current = g.order_value(i);
  switch (frame.start.kind) {
    case BoundKind::UnboundedPreceding:
      r.first = 0;
      break;
    case BoundKind::Preceding:
      r.first = detail::search_order(g, shift_value(current, *frame.start.offset, true), false);
      break;
    default:
      r.first = detail::search_order(g, current, false);
  }
  switch (frame.end.kind) {
    case BoundKind::UnboundedFollowing:
      r.last = n - 1;
      break;
    case BoundKind::Following:
      r.last = detail::search_order(g, shift_value(current, *frame.end.offset, false), true) - 1;
      break;
    default:
      r.last = detail::search_order(g, current, true) - 1;
  }
  return r;
}

/// Frames of rows 0, 1, 2, ... in turn. Constant-offset frames never move
/// backwards, so RANGE bounds advance two pointers instead of searching.
class FrameCursor {
 public:
  FrameCursor(const GroupAccess& g, const FrameSpec& frame)
      : g_(g), frame_(frame), n_(static_cast<std::int64_t>(g.size())) {}

  FrameRange next() {
    const std::size_t i = row_++;
    if (frame_.mode == FrameMode::Rows) return frame_bounds(g_, i, frame_);
    const Value current = g_.order_value(i);
    FrameRange r{0, n_ - 1};
    if (frame_.start.kind != BoundKind::UnboundedPreceding) {
      Value lo = frame_.start.offset ? shift_value(current, *frame_.start.offset, true) : current;
      while (first_ < n_ && compare_values(g_.order_value(static_cast<std::size_t>(first_)), lo) < 0) ++first_;
      r.first = first_;
    }
    if (frame_.end.kind != BoundKind::UnboundedFollowing) {
      Value hi = frame_.end.offset ? shift_value(current, *frame_.end.offset, false) : current;
      while (end_ < n_ && compare_values(g_.order_value(static_cast<std::size_t>(end_)), hi) <= 0) ++end_;
      r.last = end_ - 1;
    }
    return r;
  }

 private:
  const GroupAccess& g_;
  const FrameSpec& frame_;
  std::int64_t n_;
  std::size_t row_ = 0;
  std::int64_t first_ = 0;
  std::int64_t end_ = 0;
};

/// Window spec resolved against argument types: the product monoid of all
/// framed functions and where each output comes from.
struct EvalPlan {
  struct Output {
    FunctionKind kind;
    std::size_t component = 0;  // framed functions only
  };

  FrameSpec frame;
  std::optional<Monoid> monoid;
  std::vector<std::size_t> component_argument;
  std::vector<Output> outputs;
  std::vector<std::string> arguments;  // distinct framed-function arguments
  std::optional<ValueType> order_type;

  /// `type_of` maps an attribute name to its type.
  static EvalPlan bind(const WindowSpec& spec, const std::function<ValueType(const std::string&)>& type_of) {
    validate_structure(spec);
    EvalPlan plan;
    plan.frame = spec.effective_frame();
    if (!spec.order_keys.empty()) plan.order_type = type_of(spec.order_keys.front().attr);
    std::vector<Monoid> parts;
    for (const auto& f : spec.functions) {
      if (is_ranking(f.kind)) {
        plan.outputs.push_back({f.kind, 0});
        continue;
      }
      auto type = type_of(f.attr);
      auto component = component_for(f.kind, type);
      parts.push_back(make_monoid(component.kind, type));
      auto it = std::find(plan.arguments.begin(), plan.arguments.end(), f.attr);
      if (it == plan.arguments.end()) it = plan.arguments.insert(plan.arguments.end(), f.attr);
      plan.component_argument.push_back(static_cast<std::size_t>(it - plan.arguments.begin()));
      plan.outputs.push_back({f.kind, parts.size() - 1});
    }
    if (!parts.empty()) plan.monoid = compose(parts);
    if (plan.frame.mode == FrameMode::Range) {
      const auto& otype = *plan.order_type;
      for (FrameBound* b : {&plan.frame.start, &plan.frame.end}) {
        if (!b->offset) continue;
        if (otype.kind == TypeKind::FixedText) throw ValidationError("RANGE offsets need a numeric ORDER BY key");
        if (otype.kind == TypeKind::Int64 && !is_int(*b->offset)) {
          throw ValidationError("RANGE offset over an int64 key must be an integer");
        }
        if (otype.kind == TypeKind::Float64) b->offset = as_double(*b->offset);
      }
    }
    return plan;
  }

  [[nodiscard]] ValueType output_type(std::size_t i) const {
    const auto& o = outputs[i];
    if (is_ranking(o.kind)) return ValueType::int64();
    return monoid->components()[o.component].state_type();
  }
};

namespace detail {

inline void fold_row(const EvalPlan& plan, GroupAccess& g, std::size_t row, ValueTuple& acc) {
  const auto& m = *plan.monoid;
  for (std::size_t k = 0; k < m.arity(); ++k) m.combine_slot(k, acc[k], m.lift(k, g.argument(row, plan.component_argument[k])));
}

inline ValueTuple lift_row(const EvalPlan& plan, GroupAccess& g, std::size_t row) {
  const auto& m = *plan.monoid;
  ValueTuple leaf;
  leaf.reserve(m.arity());
  for (std::size_t k = 0; k < m.arity(); ++k) leaf.push_back(m.lift(k, g.argument(row, plan.component_argument[k])));
  return leaf;
}

inline std::vector<ValueTuple> evaluate_naive(const EvalPlan& plan, GroupAccess& g, EvalCounters& counters) {
  std::vector<ValueTuple> out;
  out.reserve(g.size());
  FrameCursor frames(g, plan.frame);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto frame = frames.next();
    ValueTuple acc = plan.monoid->identity();
    if (!frame.empty()) {
      g.ensure(static_cast<std::size_t>(frame.last));
      g.evict_before(static_cast<std::size_t>(frame.first));
      for (auto j = frame.first; j <= frame.last; ++j) fold_row(plan, g, static_cast<std::size_t>(j), acc);
      counters.combine_ops += static_cast<std::uint64_t>(frame.size());
    }
    out.push_back(std::move(acc));
  }
  return out;
}

/// Sliding state for one monoid component: a running sum (add on enter,
/// subtract on leave) or an ordered multiset for MIN/MAX.
class CumulativeSlot {
 public:
  CumulativeSlot(const MonoidComponent& c, Value identity, MemoryTracker* tracker)
      : kind_(c.kind), sum_(identity), identity_(std::move(identity)), tracked_(tracker, MemCategory::EvalState, 0) {}

  void enter(const Value& v) {
    switch (kind_) {
      case AggKind::SumI64:
      case AggKind::Count:
        std::get<std::int64_t>(sum_) = static_cast<std::int64_t>(static_cast<std::uint64_t>(std::get<std::int64_t>(sum_)) +
                                                                  static_cast<std::uint64_t>(std::get<std::int64_t>(v)));
        break;
      case AggKind::SumF64:
        std::get<double>(sum_) += std::get<double>(v);
        break;
      case AggKind::Min:
      case AggKind::Max:
        values_.insert(v);
        tracked_.resize(values_.size() * kNodeBytes);
        break;
    }
  }

  void leave(const Value& v) {
    switch (kind_) {
      case AggKind::SumI64:
      case AggKind::Count:
        std::get<std::int64_t>(sum_) = static_cast<std::int64_t>(static_cast<std::uint64_t>(std::get<std::int64_t>(sum_)) -
                                                                  static_cast<std::uint64_t>(std::get<std::int64_t>(v)));
        break;
      case AggKind::SumF64:
        std::get<double>(sum_) -= std::get<double>(v);
        break;
      case AggKind::Min:
      case AggKind::Max:
        values_.erase(values_.find(v));
        tracked_.resize(values_.size() * kNodeBytes);
        break;
    }
  }

  [[nodiscard]] Value result() const {
    switch (kind_) {
      case AggKind::Min:
        return values_.empty() ? identity_ : *values_.begin();
      case AggKind::Max:
        return values_.empty() ? identity_ : *values_.rbegin();
      default:
        return sum_;
    }
  }

 private:
  // Red-black tree node: value plus three links and a color word.
  static constexpr std::size_t kNodeBytes = sizeof(Value) + 4 * sizeof(void*);

  AggKind kind_;
  Value sum_;
  Value identity_;
  std::multiset<Value, ValueLessFn> values_;
  TrackedBytes tracked_;
};

inline std::vector<ValueTuple> evaluate_cumulative(const EvalPlan& plan, GroupAccess& g, EvalCounters& counters,
                                                   MemoryTracker* tracker) {
  const auto& m = *plan.monoid;
  std::vector<CumulativeSlot> slots;
  slots.reserve(m.arity());
  for (std::size_t k = 0; k < m.arity(); ++k) slots.emplace_back(m.components()[k], m.identity_ref()[k], tracker);

  auto apply = [&](std::size_t row, bool entering) {
    for (std::size_t k = 0; k < m.arity(); ++k) {
      Value v = m.lift(k, g.argument(row, plan.component_argument[k]));
      if (entering) slots[k].enter(v);
      else slots[k].leave(v);
    }
  };

  std::vector<ValueTuple> out;
  out.reserve(g.size());
  // Current window [win_first, win_end). Frames of constant-offset specs
  // never move backwards, so each row enters and leaves at most once.
  std::int64_t win_first = 0, win_end = 0;
  FrameCursor frames(g, plan.frame);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto frame = frames.next();
    std::uint64_t before = counters.combine_ops;
    if (!frame.empty()) {
      if (frame.first < win_first || frame.last + 1 < win_end) throw Error("cumulative evaluation needs monotone frames");
      g.ensure(static_cast<std::size_t>(frame.last));
      if (frame.first >= win_end) {
        // Disjoint from the previous window: drop it entirely.
        for (; win_first < win_end; ++win_first, ++counters.combine_ops) apply(static_cast<std::size_t>(win_first), false);
        win_first = win_end = frame.first;
      }
      for (; win_end <= frame.last; ++win_end, ++counters.combine_ops) apply(static_cast<std::size_t>(win_end), true);
      for (; win_first < frame.first; ++win_first, ++counters.combine_ops) apply(static_cast<std::size_t>(win_first), false);
      g.evict_before(static_cast<std::size_t>(frame.first));
    }
    if (i > 0) counters.max_row_combines = std::max(counters.max_row_combines, counters.combine_ops - before);
    ValueTuple acc;
    acc.reserve(m.arity());
    for (const auto& s : slots) acc.push_back(s.result());
    out.push_back(std::move(acc));
  }
  return out;
}

inline std::size_t tree_bytes(std::size_t nodes, std::size_t arity, bool with_order_values, std::size_t leaves) {
  return nodes * (sizeof(ValueTuple) + arity * sizeof(Value)) + (with_order_values ? leaves * sizeof(Value) : 0);
}

// Range queries over a tree keyed by the native ordering type, so the
// descent compares plain numbers rather than Values.
template <class Key>
void range_tree_queries(const EvalPlan& plan, std::vector<ValueTuple> leaves, const std::vector<Value>& order_values,
                        Key (*key_of)(const Value&), std::vector<ValueTuple>& out, EvalCounters& counters,
                        MemoryTracker* tracker) {
  const auto n = leaves.size();
  const auto& fr = plan.frame;
  std::vector<Key> keys;
  keys.reserve(n);
  for (const auto& v : order_values) keys.push_back(key_of(v));
  using Less = std::conditional_t<std::is_same_v<Key, Value>, ValueLessFn, std::less<Key>>;
  const SegmentTree<Monoid, Key, Less> tree(std::move(leaves), std::move(keys), *plan.monoid);
  TrackedBytes tracked(tracker, MemCategory::Tree, tree_bytes(tree.stored_nodes(), plan.monoid->arity(), true, n));
  counters.combine_ops += tree.capacity() - 1;
  const Key min_key = key_of(type_min(*plan.order_type));
  const Key max_key = key_of(type_max(*plan.order_type));
  TreeQueryStats stats;
  for (std::size_t i = 0; i < n; ++i) {
    const Value& current = order_values[i];
    Key lo = fr.start.kind == BoundKind::UnboundedPreceding ? min_key
             : fr.start.kind == BoundKind::Preceding        ? key_of(shift_value(current, *fr.start.offset, true))
                                                            : tree.get_leaf_value(i);
    Key hi = fr.end.kind == BoundKind::UnboundedFollowing ? max_key
             : fr.end.kind == BoundKind::Following        ? key_of(shift_value(current, *fr.end.offset, false))
                                                          : tree.get_leaf_value(i);
    out.push_back(tree.evaluate_range(lo, hi, &stats));
  }
  counters.combine_ops += stats.combines;
  counters.tree_visits += stats.visits;
}

inline std::int64_t int_key(const Value& v) { return as_int(v); }
inline double float_key(const Value& v) { return as_double(v); }
inline Value value_key(const Value& v) { return v; }

inline std::vector<ValueTuple> evaluate_segment_tree(const EvalPlan& plan, GroupAccess& g, EvalCounters& counters,
                                                     MemoryTracker* tracker) {
  const auto n = g.size();
  const auto& m = *plan.monoid;
  std::vector<ValueTuple> out;
  if (n == 0) return out;
  out.reserve(n);
  const bool range = plan.frame.mode == FrameMode::Range;

  std::vector<ValueTuple> leaves;
  leaves.reserve(n);
  std::vector<Value> order_values;
  if (range) order_values.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    g.ensure(j);
    g.evict_before(j);
    leaves.push_back(lift_row(plan, g, j));
    if (range) order_values.push_back(g.order_value(j));
  }
  if (range) {
    switch (plan.order_type->kind) {
      case TypeKind::Int64:
        range_tree_queries<std::int64_t>(plan, std::move(leaves), order_values, int_key, out, counters, tracker);
        break;
      case TypeKind::Float64:
        range_tree_queries<double>(plan, std::move(leaves), order_values, float_key, out, counters, tracker);
        break;
      case TypeKind::FixedText:
        range_tree_queries<Value>(plan, std::move(leaves), order_values, value_key, out, counters, tracker);
        break;
    }
    return out;
  }

  const SegmentTree<Monoid> tree(std::move(leaves), m);
  TrackedBytes tracked(tracker, MemCategory::Tree, tree_bytes(tree.stored_nodes(), m.arity(), false, n));
  counters.combine_ops += tree.capacity() - 1;
  TreeQueryStats stats;
  FrameCursor frames(g, plan.frame);
  for (std::size_t i = 0; i < n; ++i) {
    auto frame = frames.next();
    out.push_back(tree.evaluate_rows(frame.first, frame.last, &stats));
  }
  counters.combine_ops += stats.combines;
  counters.tree_visits += stats.visits;
  return out;
}

}  // namespace detail

/// Ranking functions over an ordered group: the window is the whole group
/// and each row only needs its predecessor.
inline std::vector<ValueTuple> evaluate_ranking(const GroupAccess& g, std::span<const FunctionKind> functions) {
  std::vector<ValueTuple> out(g.size());
  std::int64_t rank = 0, dense = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool new_peer_group = i == 0 || !g.peers(i, i - 1);
    if (new_peer_group) {
      rank = static_cast<std::int64_t>(i) + 1;
      ++dense;
    }
    out[i].reserve(functions.size());
    for (auto f : functions) {
      switch (f) {
        case FunctionKind::RowNumber:
          out[i].emplace_back(static_cast<std::int64_t>(i) + 1);
          break;
        case FunctionKind::Rank:
          out[i].emplace_back(rank);
          break;
        case FunctionKind::DenseRank:
          out[i].emplace_back(dense);
          break;
        default:
          throw ValidationError(std::string(to_string(f)) + " is not a ranking function");
      }
    }
  }
  return out;
}

/// All function outputs for an ordered group, one tuple per row in group
/// order, columns in the spec's function order.
inline std::vector<ValueTuple> evaluate_group(GroupAccess& g, const EvalPlan& plan, Algorithm algorithm,
                                              EvalCounters& counters, MemoryTracker* tracker = nullptr) {
  std::vector<ValueTuple> framed;
  if (plan.monoid) {
    switch (algorithm) {
      case Algorithm::Naive:
        framed = detail::evaluate_naive(plan, g, counters);
        break;
      case Algorithm::Cumulative:
        framed = detail::evaluate_cumulative(plan, g, counters, tracker);
        break;
      case Algorithm::SegmentTree:
        framed = detail::evaluate_segment_tree(plan, g, counters, tracker);
        break;
    }
  }
  std::vector<FunctionKind> ranking_kinds;
  for (const auto& o : plan.outputs) {
    if (is_ranking(o.kind)) ranking_kinds.push_back(o.kind);
  }
  std::vector<ValueTuple> ranks;
  if (!ranking_kinds.empty()) ranks = evaluate_ranking(g, ranking_kinds);

  std::vector<ValueTuple> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i].reserve(plan.outputs.size());
    std::size_t next_rank = 0;
    for (const auto& o : plan.outputs) {
      if (is_ranking(o.kind)) out[i].push_back(std::move(ranks[i][next_rank++]));
      else out[i].push_back(framed[i][o.component]);
    }
  }
  return out;
}

}  // namespace colwin
