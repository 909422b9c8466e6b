#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "colwin/memory_tracker.hpp"
#include "colwin/position_engine.hpp"
#include "colwin/row_store.hpp"
#include "colwin/storage.hpp"
#include "colwin/window_eval.hpp"
#include "colwin/window_spec.hpp"

namespace colwin {

/// Where tuples get built when the operator consumes positions.
///  S1:  whole tuples go into the hash table.
///  S2a: the hash table keeps positions; a group is fully materialized
///       when its processing starts, dropping positions as they are read.
///  S2b: the hash table keeps positions; only sort keys are materialized
///       per group and function arguments are read per frame.
enum class Strategy : std::uint8_t { S1, S2a, S2b };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::S1:
      return "s1";
    case Strategy::S2a:
      return "s2a";
    case Strategy::S2b:
      return "s2b";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  if (name == "s1" || name == "S1") return Strategy::S1;
  if (name == "s2a" || name == "S2a") return Strategy::S2a;
  if (name == "s2b" || name == "S2b") return Strategy::S2b;
  throw ValidationError("unknown strategy '" + std::string(name) + "' (valid: s1, s2a, s2b)");
}

struct WindowOptions {
  Algorithm algorithm = Algorithm::SegmentTree;
  Strategy strategy = Strategy::S1;
  /// Input attributes copied unchanged into every output row.
  std::vector<std::string> pass_through;
  std::size_t block_size = kDefaultBlockSize;
};

struct WindowRunStats {
  std::uint64_t input_rows = 0;
  std::uint64_t output_rows = 0;
  std::uint64_t groups = 0;
  std::uint64_t max_group_rows = 0;
  EvalCounters counters;
};

/// Stable sort order of rows by the given columns: new row i is old row
/// perm[i].
inline std::vector<std::uint32_t> sort_permutation(const RowStore& rows, const RowLayout& layout,
                                                   std::span<const std::size_t> columns,
                                                   std::span<const SortDirection> directions) {
  std::vector<std::uint32_t> perm(rows.size());
  std::iota(perm.begin(), perm.end(), 0u);
  if (columns.empty()) return perm;
  auto rest = [&](std::uint32_t a, std::uint32_t b, std::size_t from) {
    const std::byte* ra = rows.row(a);
    const std::byte* rb = rows.row(b);
    for (std::size_t k = from; k < columns.size(); ++k) {
      auto c = columns[k];
      auto cmp = compare_encoded(layout.type(c), ra + layout.offset(c), rb + layout.offset(c));
      if (cmp != 0) return directions[k] == SortDirection::Asc ? cmp < 0 : cmp > 0;
    }
    return a < b;
  };
  const auto& lead = layout.type(columns[0]);
  if (!lead.is_numeric()) {
    std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) { return rest(a, b, 0); });
    return perm;
  }
  // Numeric leading key: compare order-preserving integer images first.
  const bool asc = directions[0] == SortDirection::Asc;
  const bool is_float = lead.kind == TypeKind::Float64;
  std::vector<std::uint64_t> keys(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::byte* p = rows.row(r) + layout.offset(columns[0]);
    std::uint64_t bits;
    if (is_float) {
      double d;
      std::memcpy(&d, p, 8);
      if (d == 0.0) d = 0.0;
      std::memcpy(&bits, &d, 8);
      bits = (bits >> 63) ? ~bits : bits | (std::uint64_t{1} << 63);
    } else {
      std::memcpy(&bits, p, 8);
      bits ^= std::uint64_t{1} << 63;
    }
    keys[r] = bits;
  }
  std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (keys[a] != keys[b]) return (keys[a] < keys[b]) == asc;
    return rest(a, b, 1);
  });
  return perm;
}

/// Orders a group's rows in place by the given columns (stable).
inline void order_rows(RowStore& rows, const RowLayout& layout, std::span<const std::size_t> columns,
                       std::span<const SortDirection> directions, MemoryTracker* tracker) {
  TrackedBytes scratch(tracker, MemCategory::SortScratch, rows.size() * (sizeof(std::uint32_t) + sizeof(std::uint64_t)));
  auto perm = sort_permutation(rows, layout, columns, directions);
  rows.permute(perm);
}

namespace detail {

/// Group whose rows (sort keys, arguments, extra pass-through values) are
/// materialized in a RowStore.
class RowGroupAccess final : public GroupAccess {
 public:
  RowGroupAccess(const RowStore& rows, const RowLayout& layout, std::vector<std::size_t> order_columns,
                 std::vector<std::size_t> argument_columns)
      : rows_(rows), layout_(layout), order_columns_(std::move(order_columns)), argument_columns_(std::move(argument_columns)) {}

  [[nodiscard]] std::size_t size() const override { return rows_.size(); }
  [[nodiscard]] Value order_value(std::size_t i) const override { return layout_.decode(rows_.row(i), order_columns_.at(0)); }
  [[nodiscard]] bool peers(std::size_t i, std::size_t j) const override {
    for (auto c : order_columns_) {
      if (compare_encoded(layout_.type(c), rows_.row(i) + layout_.offset(c), rows_.row(j) + layout_.offset(c)) != 0) return false;
    }
    return true;
  }
  Value argument(std::size_t i, std::size_t arg) override { return layout_.decode(rows_.row(i), argument_columns_[arg]); }

 private:
  const RowStore& rows_;
  const RowLayout& layout_;
  std::vector<std::size_t> order_columns_;
  std::vector<std::size_t> argument_columns_;
};

struct PositionalColumn {
  std::size_t table;
  ColumnReader* reader;
};

/// S2b group: sort keys are resident, function arguments are read through
/// positions into a ring buffer that holds the current frame only.
class OnDemandGroupAccess final : public GroupAccess {
 public:
  OnDemandGroupAccess(const RowStore& sort_rows, const RowLayout& sort_layout, const RowStore& positions,
                      std::vector<PositionalColumn> arguments, RowLayout argument_layout, MemoryTracker* tracker)
      : sort_rows_(sort_rows),
        sort_layout_(sort_layout),
        positions_(positions),
        arguments_(std::move(arguments)),
        argument_layout_(std::move(argument_layout)),
        cache_bytes_(tracker, MemCategory::WindowCache, 0) {}

  [[nodiscard]] std::size_t size() const override { return sort_rows_.size(); }
  [[nodiscard]] Value order_value(std::size_t i) const override { return sort_layout_.decode(sort_rows_.row(i), 0); }
  [[nodiscard]] bool peers(std::size_t i, std::size_t j) const override {
    for (std::size_t c = 0; c < sort_layout_.arity(); ++c) {
      if (compare_encoded(sort_layout_.type(c), sort_rows_.row(i) + sort_layout_.offset(c),
                          sort_rows_.row(j) + sort_layout_.offset(c)) != 0) {
        return false;
      }
    }
    return true;
  }

  Value argument(std::size_t i, std::size_t arg) override {
    if (i < first_ || i >= first_ + count_) throw Error("frame value requested outside the resident window");
    return argument_layout_.decode(slot(i), arg);
  }

  void ensure(std::size_t last) override {
    while (first_ + count_ <= last) {
      if (count_ == capacity_) grow();
      std::size_t i = first_ + count_;
      const std::byte* pos_row = positions_.row(i);
      std::byte* dst = slot_at((head_ + count_) % capacity_);
      for (std::size_t a = 0; a < arguments_.size(); ++a) {
        Position p;
        std::memcpy(&p.row, pos_row + arguments_[a].table * sizeof(std::uint64_t), sizeof(std::uint64_t));
        arguments_[a].reader->read_raw(p, dst + argument_layout_.offset(a));
      }
      ++count_;
    }
  }

  void evict_before(std::size_t first) override {
    while (count_ > 0 && first_ < first) {
      head_ = (head_ + 1) % capacity_;
      ++first_;
      --count_;
    }
    if (count_ == 0 && first_ < first) first_ = first;
  }

  [[nodiscard]] std::size_t capacity() const { return capacity_; }

 private:
  std::byte* slot_at(std::size_t ring_index) { return buffer_.data() + ring_index * argument_layout_.width(); }
  const std::byte* slot(std::size_t i) { return slot_at((head_ + (i - first_)) % capacity_); }

  void grow() {
    std::size_t new_capacity = std::max<std::size_t>(capacity_ * 2, 16);
    std::vector<std::byte> next(new_capacity * argument_layout_.width());
    for (std::size_t k = 0; k < count_; ++k) {
      std::memcpy(next.data() + k * argument_layout_.width(), slot_at((head_ + k) % capacity_), argument_layout_.width());
    }
    buffer_ = std::move(next);
    capacity_ = new_capacity;
    head_ = 0;
    cache_bytes_.resize(buffer_.size());
  }

  const RowStore& sort_rows_;
  const RowLayout& sort_layout_;
  const RowStore& positions_;
  std::vector<PositionalColumn> arguments_;
  RowLayout argument_layout_;
  std::vector<std::byte> buffer_;
  std::size_t capacity_ = 0;
  std::size_t head_ = 0;
  std::size_t first_ = 0;
  std::size_t count_ = 0;
  TrackedBytes cache_bytes_;
};

}  // namespace detail

/// Window operator: hash partitioning, per-group ordering and evaluation.
/// Output rows are the pass-through attributes followed by the function
/// outputs; they are emitted group by group, each group in its sorted
/// order. Cardinality equals the input's.
class WindowOperator final : public TupleStream {
 public:
  /// Positional input; the strategy decides where tuples are built.
  WindowOperator(std::unique_ptr<PositionalOperator> input, WindowSpec spec, WindowOptions options)
      : positional_(std::move(input)), spec_(std::move(spec)), options_(std::move(options)) {
    bind([&](const std::string& name) {
      auto ref = resolve_attribute(positional_->tables(), name);
      return Source{name, ref.type, ref.table, ref.name, 0};
    });
  }

  /// Tuple input (operator above the materialization point). Strategies do
  /// not apply; rows are stored as tuples.
  WindowOperator(std::unique_ptr<TupleStream> input, WindowSpec spec, WindowOptions options)
      : tuples_(std::move(input)), spec_(std::move(spec)), options_(std::move(options)) {
    options_.strategy = Strategy::S1;
    bind([&](const std::string& name) {
      const auto& schema = tuples_->schema();
      for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].name == name) return Source{name, schema[i].type, 0, name, i};
      }
      throw ValidationError("unknown attribute '" + name + "' in tuple input");
    });
  }

  [[nodiscard]] const std::vector<Attribute>& schema() const override { return output_schema_; }
  [[nodiscard]] const WindowRunStats& stats() const { return stats_; }
  [[nodiscard]] const MemoryTracker& memory() const { return tracker_; }
  [[nodiscard]] const EvalPlan& plan() const { return plan_; }

  /// Consumes the whole input into groups. Called by the first next().
  void partition() {
    if (partitioned_) return;
    partitioned_ = true;
    if (positional_) partition_positional();
    else partition_tuples();
    stats_.groups = groups_.size();
    for (const auto& g : groups_) stats_.max_group_rows = std::max<std::uint64_t>(stats_.max_group_rows, g.payload.size());
  }

  [[nodiscard]] std::vector<std::size_t> group_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& g : groups_) out.push_back(g.payload.size());
    return out;
  }

  std::optional<TupleBlock> next() override {
    partition();
    while (pending_cursor_ >= pending_.size()) {
      if (next_group_ >= groups_.size()) {
        release_hash_table();
        return std::nullopt;
      }
      pending_ = process_group(groups_[next_group_++]);
      pending_cursor_ = 0;
    }
    auto end = std::min(pending_.size(), pending_cursor_ + options_.block_size);
    TupleBlock block{output_schema_, {}};
    block.rows.reserve(end - pending_cursor_);
    for (; pending_cursor_ < end; ++pending_cursor_) block.rows.push_back(std::move(pending_[pending_cursor_]));
    stats_.output_rows += block.rows.size();
    if (pending_cursor_ == pending_.size()) {
      pending_.clear();
      pending_.shrink_to_fit();
    }
    return block;
  }

 private:
  struct Source {
    std::string name;
    ValueType type;
    std::size_t table = 0;
    std::string column;
    std::size_t tuple_index = 0;
  };

  struct Group {
    std::string key;
    RowStore payload;  // data rows (S1) or position rows (S2a/S2b)
  };

  // Where an output pass-through value comes from.
  struct PassSource {
    bool from_key;
    std::size_t index;  // key column, or data / extra column
  };

  template <class Resolve>
  void bind(Resolve resolve) {
    std::unordered_map<std::string, Source> cache;
    auto source = [&](const std::string& name) -> const Source& {
      auto it = cache.find(name);
      if (it == cache.end()) it = cache.emplace(name, resolve(name)).first;
      return it->second;
    };
    plan_ = EvalPlan::bind(spec_, [&](const std::string& n) { return source(n).type; });

    auto add_unique = [](std::vector<Source>& list, const Source& s) -> std::size_t {
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].name == s.name) return i;
      }
      list.push_back(s);
      return list.size() - 1;
    };

    std::vector<ValueType> key_types;
    for (const auto& k : spec_.partition_keys) {
      if (std::find_if(keys_.begin(), keys_.end(), [&](const Source& s) { return s.name == k; }) != keys_.end()) {
        throw ValidationError("duplicate partition key '" + k + "'");
      }
      keys_.push_back(source(k));
      key_types.push_back(keys_.back().type);
    }
    key_layout_ = RowLayout(key_types);

    // Data tuple: sort keys, then arguments, then pass-through attributes
    // that are not partition keys.
    for (const auto& o : spec_.order_keys) {
      sort_columns_.push_back(add_unique(data_, source(o.attr)));
      directions_.push_back(o.direction);
    }
    for (const auto& a : plan_.arguments) argument_columns_.push_back(add_unique(data_, source(a)));
    for (const auto& p : options_.pass_through) {
      auto key_it = std::find_if(keys_.begin(), keys_.end(), [&](const Source& s) { return s.name == p; });
      if (key_it != keys_.end()) {
        pass_.push_back({true, static_cast<std::size_t>(key_it - keys_.begin())});
        output_schema_.push_back({p, key_it->type});
        continue;
      }
      const auto& s = source(p);
      pass_.push_back({false, add_unique(data_, s)});
      output_schema_.push_back({p, s.type});
    }
    for (std::size_t i = 0; i < spec_.functions.size(); ++i) {
      output_schema_.push_back({spec_.functions[i].output, plan_.output_type(i)});
    }
    std::vector<ValueType> data_types;
    for (const auto& d : data_) data_types.push_back(d.type);
    data_layout_ = RowLayout(data_types);

    std::vector<ValueType> sort_types;
    for (auto c : sort_columns_) sort_types.push_back(data_[c].type);
    sort_layout_ = RowLayout(sort_types);
    std::vector<ValueType> argument_types;
    for (auto c : argument_columns_) argument_types.push_back(data_[c].type);
    argument_layout_ = RowLayout(argument_types);

    if (positional_) {
      arity_ = positional_->tables().size();
      for (const auto& s : keys_) key_readers_.push_back(reader_for(s));
      for (const auto& s : data_) data_readers_.push_back(reader_for(s));
    }
  }

  detail::PositionalColumn reader_for(const Source& s) {
    auto key = std::to_string(s.table) + "." + s.column;
    auto it = readers_.find(key);
    if (it == readers_.end()) {
      it = readers_.emplace(key, std::make_unique<ColumnReader>(positional_->tables()[s.table], s.column)).first;
    }
    return {s.table, it->second.get()};
  }

  bool stores_positions() const { return positional_ && options_.strategy != Strategy::S1; }

  Group& group_for(const std::string& key) {
    auto it = index_.find(key);
    if (it != index_.end()) return groups_[it->second];
    index_.emplace(key, groups_.size());
    tracker_.add(MemCategory::HashKeys, key_layout_.width());
    std::size_t row_bytes = stores_positions() ? arity_ * sizeof(std::uint64_t) : data_layout_.width();
    groups_.push_back({key, RowStore(row_bytes, &tracker_, MemCategory::HashData)});
    return groups_.back();
  }

  static Position position_in(const JoinIndexBlock& block, std::size_t row, std::size_t table) {
    return block.row(row)[table];
  }

  void partition_positional() {
    std::string key(key_layout_.width(), '\0');
    while (auto block = positional_->next()) {
      for (std::size_t i = 0; i < block->size(); ++i) {
        ++stats_.input_rows;
        for (std::size_t k = 0; k < keys_.size(); ++k) {
          key_readers_[k].reader->read_raw(position_in(*block, i, key_readers_[k].table),
                                           reinterpret_cast<std::byte*>(key.data()) + key_layout_.offset(k));
        }
        Group& g = group_for(key);
        std::byte* row = g.payload.append();
        if (stores_positions()) {
          auto positions = block->row(i);
          for (std::size_t t = 0; t < arity_; ++t) std::memcpy(row + t * sizeof(std::uint64_t), &positions[t].row, sizeof(std::uint64_t));
        } else {
          for (std::size_t c = 0; c < data_.size(); ++c) {
            data_readers_[c].reader->read_raw(position_in(*block, i, data_readers_[c].table), row + data_layout_.offset(c));
          }
        }
      }
    }
  }

  void partition_tuples() {
    std::string key(key_layout_.width(), '\0');
    while (auto block = tuples_->next()) {
      for (const auto& tuple : block->rows) {
        ++stats_.input_rows;
        for (std::size_t k = 0; k < keys_.size(); ++k) {
          key_layout_.encode(reinterpret_cast<std::byte*>(key.data()), k, tuple[keys_[k].tuple_index]);
        }
        Group& g = group_for(key);
        std::byte* row = g.payload.append();
        for (std::size_t c = 0; c < data_.size(); ++c) data_layout_.encode(row, c, tuple[data_[c].tuple_index]);
      }
    }
  }

  Position stored_position(const RowStore& positions, std::size_t row, std::size_t table) const {
    Position p;
    std::memcpy(&p.row, positions.row(row) + table * sizeof(std::uint64_t), sizeof(std::uint64_t));
    return p;
  }

  // S2a: build data rows from positions, freeing position chunks as soon
  // as they have been read.
  RowStore materialize_group(Group& g) {
    RowStore rows(data_layout_.width(), &tracker_, MemCategory::GroupRows);
    for (std::size_t i = 0; i < g.payload.size(); ++i) {
      std::byte* row = rows.append();
      for (std::size_t c = 0; c < data_.size(); ++c) {
        data_readers_[c].reader->read_raw(stored_position(g.payload, i, data_readers_[c].table), row + data_layout_.offset(c));
      }
      g.payload.release_before(i + 1);
    }
    g.payload.clear();
    return rows;
  }

  std::vector<ValueTuple> process_group(Group& g) {
    std::vector<ValueTuple> results;
    std::vector<ValueTuple> out;
    const std::size_t n = g.payload.size();

    if (!stores_positions() || options_.strategy == Strategy::S2a) {
      RowStore rows = stores_positions() ? materialize_group(g) : std::move(g.payload);
      order_rows(rows, data_layout_, sort_columns_, directions_, &tracker_);
      detail::RowGroupAccess access(rows, data_layout_, sort_columns_, argument_columns_);
      results = evaluate_group(access, plan_, options_.algorithm, stats_.counters, &tracker_);
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        ValueTuple row;
        row.reserve(output_schema_.size());
        for (const auto& p : pass_) {
          row.push_back(p.from_key ? key_layout_.decode(reinterpret_cast<const std::byte*>(g.key.data()), p.index)
                                   : data_layout_.decode(rows.row(i), p.index));
        }
        for (auto& v : results[i]) row.push_back(std::move(v));
        out.push_back(std::move(row));
      }
      return out;
    }

    // S2b: materialize sort keys only, permute positions alongside them.
    RowStore sort_rows(sort_layout_.width(), &tracker_, MemCategory::SortKeys);
    for (std::size_t i = 0; i < n; ++i) {
      std::byte* row = sort_rows.append();
      for (std::size_t c = 0; c < sort_columns_.size(); ++c) {
        const auto& r = data_readers_[sort_columns_[c]];
        r.reader->read_raw(stored_position(g.payload, i, r.table), row + sort_layout_.offset(c));
      }
    }
    {
      TrackedBytes scratch(&tracker_, MemCategory::SortScratch, n * (2 * sizeof(std::uint32_t) + sizeof(std::uint64_t)));
      std::vector<std::size_t> all_sort(sort_columns_.size());
      std::iota(all_sort.begin(), all_sort.end(), 0);
      auto perm = sort_permutation(sort_rows, sort_layout_, all_sort, directions_);
      auto perm_copy = perm;
      sort_rows.permute(perm);
      g.payload.permute(perm_copy);
    }
    std::vector<detail::PositionalColumn> argument_readers;
    for (auto c : argument_columns_) argument_readers.push_back(data_readers_[c]);
    {
      detail::OnDemandGroupAccess access(sort_rows, sort_layout_, g.payload, std::move(argument_readers), argument_layout_,
                                         &tracker_);
      results = evaluate_group(access, plan_, options_.algorithm, stats_.counters, &tracker_);
    }
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      ValueTuple row;
      row.reserve(output_schema_.size());
      for (const auto& p : pass_) {
        if (p.from_key) {
          row.push_back(key_layout_.decode(reinterpret_cast<const std::byte*>(g.key.data()), p.index));
        } else {
          const auto& r = data_readers_[p.index];
          row.push_back(r.reader->read(stored_position(g.payload, i, r.table)));
        }
      }
      for (auto& v : results[i]) row.push_back(std::move(v));
      out.push_back(std::move(row));
    }
    g.payload.clear();
    return out;
  }

  void release_hash_table() {
    if (released_) return;
    released_ = true;
    for (auto& g : groups_) g.payload.clear();
    tracker_.release(MemCategory::HashKeys, groups_.size() * key_layout_.width());
  }

  std::unique_ptr<PositionalOperator> positional_;
  std::unique_ptr<TupleStream> tuples_;
  WindowSpec spec_;
  WindowOptions options_;
  EvalPlan plan_;

  std::vector<Source> keys_;
  std::vector<Source> data_;
  std::vector<std::size_t> sort_columns_;
  std::vector<SortDirection> directions_;
  std::vector<std::size_t> argument_columns_;
  std::vector<PassSource> pass_;
  RowLayout key_layout_;
  RowLayout data_layout_;
  RowLayout sort_layout_;
  RowLayout argument_layout_;
  std::vector<Attribute> output_schema_;

  std::size_t arity_ = 1;
  std::unordered_map<std::string, std::unique_ptr<ColumnReader>> readers_;
  std::vector<detail::PositionalColumn> key_readers_;
  std::vector<detail::PositionalColumn> data_readers_;

  MemoryTracker tracker_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Group> groups_;
  bool partitioned_ = false;
  bool released_ = false;
  std::size_t next_group_ = 0;
  std::vector<ValueTuple> pending_;
  std::size_t pending_cursor_ = 0;
  WindowRunStats stats_;
};

}  // namespace colwin
