#pragma once

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "colwin/monoid.hpp"
#include "colwin/value.hpp"

namespace colwin {

/// Instrumentation filled in by tree queries when requested.
struct TreeQueryStats {
  std::uint64_t visits = 0;
  std::uint64_t combines = 0;
};

struct ValueLessFn {
  bool operator()(const Value& a, const Value& b) const { return value_less(a, b); }
};

/// Segment tree over a monoid, stored as an implicit array: node i has
/// children 2i+1 and 2i+2, the bottom level starts at index capacity-1,
/// and capacity is the next power of two >= the leaf count. Only the
/// prefix up to the last real leaf is stored; every index past it (the
/// padding leaves and their descendants) reads as the identity.
///
/// Range queries need each leaf's ordering value. Leaves must then be
/// in ascending order of that value.
template <MonoidLike M, class Key = Value, class KeyLess = ValueLessFn>
class SegmentTree {
 public:
  using value_type = typename M::value_type;

  /// Tree for index-range (ROWS) queries.
  SegmentTree(std::vector<value_type> leaves, M monoid) : monoid_(std::move(monoid)), identity_(monoid_.identity()) {
    build(std::move(leaves));
  }

  /// Tree for value-range (RANGE) queries. `order_values[k]` is the ordering
  /// value of leaf k.
  SegmentTree(std::vector<value_type> leaves, std::vector<Key> order_values, M monoid, KeyLess less = {})
      : monoid_(std::move(monoid)), identity_(monoid_.identity()), order_values_(std::move(order_values)), less_(less) {
    if (order_values_->size() != leaves.size()) throw ValidationError("one ordering value per leaf is required");
    assert(std::is_sorted(order_values_->begin(), order_values_->end(), less_) && "range tree leaves must be sorted");
    build(std::move(leaves));
  }

  [[nodiscard]] const M& monoid() const { return monoid_; }
  [[nodiscard]] std::size_t leaf_count() const { return leaf_count_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t stored_nodes() const { return nodes_.size(); }
  [[nodiscard]] std::size_t height() const { return static_cast<std::size_t>(std::countr_zero(capacity_)); }

  /// Node value, or the identity for indices outside the stored prefix.
  [[nodiscard]] const value_type& get_value(std::size_t index) const {
    return index < nodes_.size() ? nodes_[index] : identity_;
  }

  [[nodiscard]] const value_type& leaf(std::size_t k) const { return get_value(capacity_ - 1 + k); }

  [[nodiscard]] const Key& get_leaf_value(std::size_t k) const { return (*order_values_)[k]; }

  /// Ordering value of leaf k, clamped to the last real leaf for padding.
  [[nodiscard]] const Key& get_leaf_or_max(std::size_t k) const {
    return get_leaf_value(std::min(k, leaf_count_ - 1));
  }

  /// Fold of leaves[max(first,0) .. min(last, n-1)]; identity if empty.
  [[nodiscard]] value_type evaluate_rows(std::int64_t first, std::int64_t last, TreeQueryStats* stats = nullptr) const {
    value_type acc = identity_;
    first = std::max<std::int64_t>(first, 0);
    last = std::min<std::int64_t>(last, static_cast<std::int64_t>(leaf_count_) - 1);
    rows_segment(0, 0, static_cast<std::int64_t>(capacity_) - 1, first, last, acc, stats);
    return acc;
  }

  /// Fold of every leaf whose ordering value v satisfies lo <= v <= hi.
  [[nodiscard]] value_type evaluate_range(const Key& lo, const Key& hi, TreeQueryStats* stats = nullptr) const {
    if (!order_values_) throw ValidationError("tree was built without ordering values");
    value_type acc = identity_;
    range_segment(0, 0, capacity_ - 1, lo, hi, acc, stats);
    return acc;
  }

 private:
  void build(std::vector<value_type> leaves) {
    if (leaves.empty()) throw ValidationError("segment tree needs at least one leaf");
    leaf_count_ = leaves.size();
    capacity_ = std::bit_ceil(leaf_count_);
    nodes_.assign(capacity_ - 1 + leaf_count_, identity_);
    std::move(leaves.begin(), leaves.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(capacity_ - 1));
    for (std::size_t i = capacity_ - 1; i-- > 0;) nodes_[i] = monoid_.op(get_value(2 * i + 1), get_value(2 * i + 2));
  }

  // Descends while the current segment [seg_first, seg_last] differs from
  // the requested [first, last]; the request is trimmed to each child.
  void rows_segment(std::size_t index, std::int64_t seg_first, std::int64_t seg_last, std::int64_t first,
                    std::int64_t last, value_type& acc, TreeQueryStats* stats) const {
    if (stats) ++stats->visits;
    if (first > last) return;
    if (first == seg_first && last == seg_last) {
      absorb(acc, index, stats);
      return;
    }
    std::int64_t mid = (seg_first + seg_last) / 2;
    rows_segment(2 * index + 1, seg_first, mid, first, std::min(last, mid), acc, stats);
    rows_segment(2 * index + 2, mid + 1, seg_last, std::max(first, mid + 1), last, acc, stats);
  }

  // Value-range variant: a node is taken whole once its sorted leaf values
  // fall inside [lo, hi]; bounds are tightened to the children's values.
  void range_segment(std::size_t index, std::size_t seg_first, std::size_t seg_last, const Key& lo, const Key& hi,
                     value_type& acc, TreeQueryStats* stats) const {
    if (stats) ++stats->visits;
    if (less_(hi, lo) || seg_first >= leaf_count_) return;
    // Every value in the segment lies outside [lo, hi]. Without this test a
    // query below the segment's smallest value never reaches a covered node.
    if (less_(hi, get_leaf_value(seg_first)) || less_(get_leaf_or_max(seg_last), lo)) return;
    if (!less_(get_leaf_value(seg_first), lo) && !less_(hi, get_leaf_or_max(seg_last))) {
      absorb(acc, index, stats);
      return;
    }
    std::size_t mid = (seg_first + seg_last) / 2;
    const Key& mid_value = get_leaf_or_max(mid);
    const Key& next_value = get_leaf_or_max(mid + 1);
    range_segment(2 * index + 1, seg_first, mid, lo, less_(mid_value, hi) ? mid_value : hi, acc, stats);
    range_segment(2 * index + 2, mid + 1, seg_last, less_(lo, next_value) ? next_value : lo, hi, acc, stats);
  }

  void absorb(value_type& acc, std::size_t index, TreeQueryStats* stats) const {
    if (index >= nodes_.size()) return;  // virtual identity node
    if (stats) ++stats->combines;
    accumulate(monoid_, acc, nodes_[index]);
  }

  M monoid_;
  value_type identity_;
  std::optional<std::vector<Key>> order_values_;
  KeyLess less_{};
  std::vector<value_type> nodes_;
  std::size_t leaf_count_ = 0;
  std::size_t capacity_ = 1;
};

}  // namespace colwin
