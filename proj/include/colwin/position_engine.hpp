#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colwin/storage.hpp"
#include "colwin/value.hpp"

namespace colwin {

inline constexpr std::size_t kDefaultBlockSize = 4096;

/// Block of join-index rows. Logical rows are stored row-major: row i holds
/// one Position per joined table at [i * arity, (i + 1) * arity).
struct JoinIndexBlock {
  std::size_t arity = 1;
  std::size_t capacity = kDefaultBlockSize;
  std::vector<Position> positions;

  [[nodiscard]] std::size_t size() const { return positions.size() / arity; }
  [[nodiscard]] bool empty() const { return positions.empty(); }
  [[nodiscard]] std::span<const Position> row(std::size_t i) const { return {positions.data() + i * arity, arity}; }
  void push_row(std::span<const Position> row) { positions.insert(positions.end(), row.begin(), row.end()); }
};

struct TupleBlock {
  std::vector<Attribute> schema;
  std::vector<ValueTuple> rows;
};

/// Pull-based producer of positional blocks. Once next() has returned
/// nullopt it keeps doing so.
class PositionalOperator {
 public:
  virtual ~PositionalOperator() = default;
  virtual std::optional<JoinIndexBlock> next() = 0;
  [[nodiscard]] virtual const std::vector<TableHandle>& tables() const = 0;
};

/// Pull-based producer of tuple blocks (the part of a plan above the
/// materialization point).
class TupleStream {
 public:
  virtual ~TupleStream() = default;
  virtual std::optional<TupleBlock> next() = 0;
  [[nodiscard]] virtual const std::vector<Attribute>& schema() const = 0;
};

/// An attribute of one of the tables of a join index.
struct AttrRef {
  std::size_t table = 0;
  std::string name;
  ValueType type;

  friend bool operator==(const AttrRef& a, const AttrRef& b) { return a.table == b.table && a.name == b.name; }
};

/// Resolves "attr" (must be unique across tables) or "table.attr".
inline AttrRef resolve_attribute(const std::vector<TableHandle>& tables, std::string_view name) {
  if (auto dot = name.find('.'); dot != std::string_view::npos) {
    auto table_name = name.substr(0, dot);
    auto attr = name.substr(dot + 1);
    for (std::size_t t = 0; t < tables.size(); ++t) {
      if (tables[t].name() == table_name) return {t, std::string(attr), tables[t].schema.at(attr).type};
    }
    throw ValidationError("unknown table in attribute reference '" + std::string(name) + "'");
  }
  std::optional<AttrRef> found;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    if (auto i = tables[t].schema.find(name)) {
      if (found) throw ValidationError("ambiguous attribute '" + std::string(name) + "'; qualify it as table.attr");
      found = AttrRef{t, std::string(name), tables[t].schema.attributes[*i].type};
    }
  }
  if (!found) throw ValidationError("unknown attribute '" + std::string(name) + "'");
  return *found;
}

/// Emits positions 0..row_count-1 of one table in ascending order.
class ScanOperator final : public PositionalOperator {
 public:
  ScanOperator(TableHandle table, std::size_t block_size = kDefaultBlockSize) : tables_{std::move(table)}, block_size_(block_size) {
    if (block_size_ == 0) throw ValidationError("block_size must be >= 1");
  }

  std::optional<JoinIndexBlock> next() override {
    const auto rows = tables_[0].row_count;
    if (cursor_ >= rows) return std::nullopt;
    JoinIndexBlock block{1, block_size_, {}};
    auto end = std::min<std::uint64_t>(rows, cursor_ + block_size_);
    block.positions.reserve(end - cursor_);
    for (; cursor_ < end; ++cursor_) block.positions.push_back({cursor_});
    return block;
  }

  [[nodiscard]] const std::vector<TableHandle>& tables() const override { return tables_; }

 private:
  std::vector<TableHandle> tables_;
  std::size_t block_size_;
  std::uint64_t cursor_ = 0;
};

/// Replays a precomputed join index (row-major positions).
class JoinIndexSource final : public PositionalOperator {
 public:
  JoinIndexSource(std::vector<TableHandle> tables, std::vector<Position> rows, std::size_t block_size = kDefaultBlockSize)
      : tables_(std::move(tables)), rows_(std::move(rows)), block_size_(block_size) {
    if (tables_.empty()) throw ValidationError("join index needs at least one table");
    if (block_size_ == 0) throw ValidationError("block_size must be >= 1");
    if (rows_.size() % tables_.size() != 0) throw ValidationError("join index rows must have one position per table");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (rows_[i].row >= tables_[i % tables_.size()].row_count) {
        throw ValidationError("join index position out of range for table " + tables_[i % tables_.size()].name());
      }
    }
  }

  std::optional<JoinIndexBlock> next() override {
    const auto arity = tables_.size();
    const auto total = rows_.size() / arity;
    if (cursor_ >= total) return std::nullopt;
    auto end = std::min(total, cursor_ + block_size_);
    JoinIndexBlock block{arity, block_size_, {}};
    block.positions.assign(rows_.begin() + static_cast<std::ptrdiff_t>(cursor_ * arity),
                           rows_.begin() + static_cast<std::ptrdiff_t>(end * arity));
    cursor_ = end;
    return block;
  }

  [[nodiscard]] const std::vector<TableHandle>& tables() const override { return tables_; }

 private:
  std::vector<TableHandle> tables_;
  std::vector<Position> rows_;
  std::size_t block_size_;
  std::size_t cursor_ = 0;
};

/// Synthetic two-table join index pairing row i of `left` with row i of
/// `right`. Stands in for a join operator when a wide join index is needed.
inline std::unique_ptr<PositionalOperator> pair_by_ordinal(const TableHandle& left, const TableHandle& right,
                                                           std::size_t block_size = kDefaultBlockSize) {
  auto n = std::min(left.row_count, right.row_count);
  std::vector<Position> rows;
  rows.reserve(2 * n);
  for (std::uint64_t i = 0; i < n; ++i) {
    rows.push_back({i});
    rows.push_back({i});
  }
  return std::make_unique<JoinIndexSource>(std::vector<TableHandle>{left, right}, std::move(rows), block_size);
}

enum class CompareOp { Less, LessEqual, Equal, GreaterEqual, Greater, NotEqual };

inline CompareOp parse_compare_op(std::string_view op) {
  if (op == "<") return CompareOp::Less;
  if (op == "<=") return CompareOp::LessEqual;
  if (op == "=" || op == "==") return CompareOp::Equal;
  if (op == ">=") return CompareOp::GreaterEqual;
  if (op == ">") return CompareOp::Greater;
  if (op == "!=" || op == "<>") return CompareOp::NotEqual;
  throw ValidationError("unknown comparison operator '" + std::string(op) + "'");
}

struct Predicate {
  CompareOp op = CompareOp::Equal;
  Value literal;

  [[nodiscard]] bool matches(const Value& v) const {
    auto c = compare_values(v, literal);
    switch (op) {
      case CompareOp::Less:
        return c < 0;
      case CompareOp::LessEqual:
        return c <= 0;
      case CompareOp::Equal:
        return c == 0;
      case CompareOp::GreaterEqual:
        return c >= 0;
      case CompareOp::Greater:
        return c > 0;
      case CompareOp::NotEqual:
        return c != 0;
    }
    return false;
  }
};

/// Late-materialization filter: reads only the predicate attribute and
/// forwards the qualifying join-index rows in input order.
class FilterOperator final : public PositionalOperator {
 public:
  FilterOperator(std::unique_ptr<PositionalOperator> input, std::string_view attr, Predicate predicate)
      : input_(std::move(input)), attr_(resolve_attribute(input_->tables(), attr)), predicate_(std::move(predicate)) {
    if (attr_.type.kind == TypeKind::Float64 && is_int(predicate_.literal)) {
      predicate_.literal = static_cast<double>(as_int(predicate_.literal));
    }
    if (!conforms(predicate_.literal, attr_.type) &&
        !(attr_.type.kind == TypeKind::FixedText && is_text(predicate_.literal))) {
      throw ValidationError("predicate literal type does not match " + to_string(attr_.type) + " attribute '" +
                            attr_.name + "'");
    }
    reader_.emplace(input_->tables()[attr_.table], attr_.name);
  }

  std::optional<JoinIndexBlock> next() override {
    if (done_) return std::nullopt;
    while (auto in = input_->next()) {
      JoinIndexBlock out{in->arity, in->capacity, {}};
      for (std::size_t i = 0; i < in->size(); ++i) {
        auto row = in->row(i);
        if (predicate_.matches(reader_->read(row[attr_.table]))) out.push_row(row);
      }
      if (!out.empty()) return out;
    }
    done_ = true;
    return std::nullopt;
  }

  [[nodiscard]] const std::vector<TableHandle>& tables() const override { return input_->tables(); }

 private:
  std::unique_ptr<PositionalOperator> input_;
  AttrRef attr_;
  Predicate predicate_;
  std::optional<ColumnReader> reader_;
  bool done_ = false;
};

/// Materialization point: turns join-index rows into tuples of the
/// requested attributes. Cardinality is preserved.
class MaterializeOperator final : public TupleStream {
 public:
  MaterializeOperator(std::unique_ptr<PositionalOperator> input, const std::vector<std::string>& attrs)
      : input_(std::move(input)) {
    if (attrs.empty()) throw ValidationError("attribute list must be non-empty");
    for (const auto& name : attrs) {
      auto ref = resolve_attribute(input_->tables(), name);
      schema_.push_back({name, ref.type});
      readers_.emplace_back(input_->tables()[ref.table], ref.name);
      tables_.push_back(ref.table);
    }
  }

  std::optional<TupleBlock> next() override {
    if (done_) return std::nullopt;
    auto in = input_->next();
    if (!in) {
      done_ = true;
      return std::nullopt;
    }
    TupleBlock out{schema_, std::vector<ValueTuple>(in->size())};
    for (auto& row : out.rows) row.reserve(readers_.size());
    for (std::size_t c = 0; c < readers_.size(); ++c) {
      for (std::size_t i = 0; i < in->size(); ++i) out.rows[i].push_back(readers_[c].read(in->row(i)[tables_[c]]));
    }
    return out;
  }

  [[nodiscard]] const std::vector<Attribute>& schema() const override { return schema_; }

 private:
  std::unique_ptr<PositionalOperator> input_;
  std::vector<Attribute> schema_;
  std::vector<ColumnReader> readers_;
  std::vector<std::size_t> tables_;
  bool done_ = false;
};

/// Tuple input from memory, e.g. the output of an aggregation below the
/// window operator.
class VectorTupleSource final : public TupleStream {
 public:
  VectorTupleSource(std::vector<Attribute> schema, std::vector<ValueTuple> rows, std::size_t block_size = kDefaultBlockSize)
      : schema_(std::move(schema)), rows_(std::move(rows)), block_size_(block_size) {
    for (const auto& r : rows_) {
      if (r.size() != schema_.size()) throw ValidationError("tuple arity does not match schema");
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (!conforms(r[c], schema_[c].type)) throw ValidationError("tuple value does not conform to " + schema_[c].name);
      }
    }
  }

  std::optional<TupleBlock> next() override {
    if (cursor_ >= rows_.size()) return std::nullopt;
    auto end = std::min(rows_.size(), cursor_ + block_size_);
    TupleBlock block{schema_, {rows_.begin() + static_cast<std::ptrdiff_t>(cursor_), rows_.begin() + static_cast<std::ptrdiff_t>(end)}};
    cursor_ = end;
    return block;
  }

  [[nodiscard]] const std::vector<Attribute>& schema() const override { return schema_; }

 private:
  std::vector<Attribute> schema_;
  std::vector<ValueTuple> rows_;
  std::size_t block_size_;
  std::size_t cursor_ = 0;
};

/// Drains a tuple stream into one vector of rows.
inline std::vector<ValueTuple> collect(TupleStream& stream) {
  std::vector<ValueTuple> out;
  while (auto block = stream.next()) {
    for (auto& r : block->rows) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace colwin
