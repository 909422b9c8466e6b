#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "colwin/csv.hpp"
#include "colwin/value.hpp"

namespace colwin {

namespace fs = std::filesystem;

/// Values per buffered read block.
inline constexpr std::size_t kReadBlockValues = 4096;

/// Row ordinal within one table.
struct Position {
  std::uint64_t row = 0;
  friend auto operator<=>(const Position&, const Position&) = default;
};

struct Attribute {
  std::string name;
  ValueType type;
};

struct TableSchema {
  std::string name;
  std::vector<Attribute> attributes;

  void validate() const {
    if (name.empty()) throw ValidationError("table name must be non-empty");
    if (attributes.empty()) throw ValidationError("schema must have >=1 attribute");
    std::set<std::string_view> seen;
    for (const auto& a : attributes) {
      if (a.name.empty()) throw ValidationError("attribute names must be non-empty");
      if (!seen.insert(a.name).second) throw ValidationError("duplicate attribute '" + a.name + "' in table " + name);
    }
  }

  [[nodiscard]] std::optional<std::size_t> find(std::string_view attr) const {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (attributes[i].name == attr) return i;
    }
    return std::nullopt;
  }

  [[nodiscard]] const Attribute& at(std::string_view attr) const {
    if (auto i = find(attr)) return attributes[*i];
    throw ValidationError("unknown attribute '" + std::string(attr) + "' in table " + name);
  }
};

/// Snapshot of a catalog entry. Cheap to copy; storage itself is immutable
/// between loads.
struct TableHandle {
  fs::path dir;
  TableSchema schema;
  std::uint64_t row_count = 0;

  [[nodiscard]] const std::string& name() const { return schema.name; }
  [[nodiscard]] fs::path column_path(std::string_view attr) const {
    (void)schema.at(attr);
    return dir / schema.name / (std::string(attr) + ".col");
  }
};

/// Per-column count of blocks fetched from disk. Lets tests prove which
/// attributes an operator touched.
class IoStats {
 public:
  void record_block(const fs::path& column) {
    std::lock_guard lock(mutex_);
    ++blocks_[column.string()];
  }
  std::uint64_t blocks_read(const fs::path& column) const {
    std::lock_guard lock(mutex_);
    auto it = blocks_.find(column.string());
    return it == blocks_.end() ? 0 : it->second;
  }
  void reset() {
    std::lock_guard lock(mutex_);
    blocks_.clear();
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::uint64_t> blocks_;
};

inline IoStats& io_stats() {
  static IoStats stats;
  return stats;
}

/// Positional reader over one column file. Ascending position runs are
/// served from buffered blocks of `block_values` values.
class ColumnReader {
 public:
  ColumnReader(const TableHandle& table, std::string_view attr, std::size_t block_values = kReadBlockValues)
      : path_(table.column_path(attr)),
        type_(table.schema.at(attr).type),
        row_count_(table.row_count),
        block_values_(block_values),
        file_(path_, std::ios::binary) {
    if (!file_) throw StorageError("cannot open column file " + path_.string());
    buffer_.resize(block_values_ * type_.byte_width());
  }

  [[nodiscard]] const ValueType& type() const { return type_; }
  [[nodiscard]] std::uint64_t row_count() const { return row_count_; }

  /// Copies the encoded bytes of the value at `pos` into `dst`.
  void read_raw(Position pos, std::byte* dst) {
    std::memcpy(dst, locate(pos), type_.byte_width());
  }

  Value read(Position pos) { return decode_value(locate(pos), type_); }

  std::vector<Value> read(std::span<const Position> positions) {
    std::vector<Value> out;
    out.reserve(positions.size());
    for (auto p : positions) out.push_back(read(p));
    return out;
  }

 private:
  // A miss right after the previous position starts a full block there
  // (sequential run); any other miss fetches just that value.
  const std::byte* locate(Position pos) {
    if (pos.row >= row_count_) {
      throw StorageError("position " + std::to_string(pos.row) + " out of range for " + path_.string() + " (" +
                         std::to_string(row_count_) + " rows)");
    }
    if (pos.row < block_first_ || pos.row >= block_first_ + block_count_) {
      bool sequential = block_count_ == 0 || pos.row == last_row_ + 1;
      load(pos.row, sequential ? block_values_ : 1);
    }
    last_row_ = pos.row;
    return buffer_.data() + (pos.row - block_first_) * type_.byte_width();
  }

  void load(std::uint64_t first, std::uint64_t max_count) {
    std::uint64_t count = std::min<std::uint64_t>(max_count, row_count_ - first);
    file_.clear();
    file_.seekg(static_cast<std::streamoff>(first * type_.byte_width()));
    file_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(count * type_.byte_width()));
    if (!file_) throw StorageError("short read on " + path_.string());
    block_first_ = first;
    block_count_ = count;
    io_stats().record_block(path_);
  }

  fs::path path_;
  ValueType type_;
  std::uint64_t row_count_;
  std::size_t block_values_;
  std::ifstream file_;
  std::vector<std::byte> buffer_;
  std::uint64_t block_first_ = 0;
  std::uint64_t block_count_ = 0;
  std::uint64_t last_row_ = 0;
};

/// Reads several attributes of one table for the same positions.
class SyncReader {
 public:
  SyncReader(const TableHandle& table, std::span<const std::string> attrs) {
    readers_.reserve(attrs.size());
    for (const auto& a : attrs) readers_.emplace_back(table, a);
  }

  [[nodiscard]] std::size_t arity() const { return readers_.size(); }
  ColumnReader& column(std::size_t i) { return readers_[i]; }

  ValueTuple read(Position pos) {
    ValueTuple row;
    row.reserve(readers_.size());
    for (auto& r : readers_) row.push_back(r.read(pos));
    return row;
  }

  std::vector<ValueTuple> read(std::span<const Position> positions) {
    std::vector<ValueTuple> out(positions.size());
    for (auto& row : out) row.reserve(readers_.size());
    // Column-at-a-time keeps each reader's block buffer hot.
    for (auto& r : readers_) {
      for (std::size_t i = 0; i < positions.size(); ++i) out[i].push_back(r.read(positions[i]));
    }
    return out;
  }

 private:
  std::vector<ColumnReader> readers_;
};

namespace detail {

/// Appends encoded values to every column file of a table and can roll the
/// files back to their sizes at construction.
class TableAppender {
 public:
  explicit TableAppender(const TableHandle& table) : table_(table) {
    for (const auto& a : table.schema.attributes) {
      auto path = table.column_path(a.name);
      original_sizes_.push_back(fs::file_size(path));
      files_.emplace_back(path, std::ios::binary | std::ios::app);
      if (!files_.back()) throw StorageError("cannot open " + path.string() + " for append");
      buffers_.emplace_back();
    }
  }

  void append(std::size_t column, const Value& v) {
    const auto& type = table_.schema.attributes[column].type;
    auto& buf = buffers_[column];
    auto offset = buf.size();
    buf.resize(offset + type.byte_width());
    encode_value(v, type, buf.data() + offset);
    if (buf.size() >= (1u << 16)) flush(column);
  }

  void flush() {
    for (std::size_t c = 0; c < files_.size(); ++c) flush(c);
    for (auto& f : files_) {
      f.flush();
      if (!f) throw StorageError("write failure on table " + table_.name());
    }
  }

  void rollback() noexcept {
    for (std::size_t c = 0; c < files_.size(); ++c) {
      files_[c].close();
      std::error_code ec;
      fs::resize_file(table_.column_path(table_.schema.attributes[c].name), original_sizes_[c], ec);
    }
  }

 private:
  void flush(std::size_t column) {
    auto& buf = buffers_[column];
    files_[column].write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  }

  const TableHandle& table_;
  std::vector<std::uintmax_t> original_sizes_;
  std::vector<std::ofstream> files_;
  std::vector<std::vector<std::byte>> buffers_;
};

/// Unbiased draw from [0, bound) using rejection on the raw 64-bit output.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace detail

/// SSB order priorities (lo_orderpriority is CHAR(15) in SSB).
inline constexpr std::array<std::string_view, 5> kOrderPriorities = {"1-URGENT", "2-HIGH", "3-MEDIUM",
                                                                     "4-NOT SPECIFIED", "5-LOW"};
inline constexpr std::int64_t kMaxOrderTotalPrice = 60'000'000;

inline TableSchema lineorder_schema(std::string name = "lineorder") {
  return TableSchema{std::move(name),
                     {{"lo_orderkey", ValueType::int64()},
                      {"lo_orderpriority", ValueType::fixed_text(15)},
                      {"lo_ordtotalprice", ValueType::int64()}}};
}

/// A directory of tables: `catalog.json` plus `<table>/<attr>.col` files.
/// Writers need exclusive access; readers only need a TableHandle.
class Database {
 public:
  explicit Database(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    if (fs::exists(catalog_path())) read_catalog();
  }

  [[nodiscard]] const fs::path& dir() const { return dir_; }

  [[nodiscard]] bool has_table(std::string_view name) const { return tables_.contains(std::string(name)); }

  [[nodiscard]] TableHandle table(std::string_view name) const {
    auto it = tables_.find(std::string(name));
    if (it == tables_.end()) throw ValidationError("unknown table '" + std::string(name) + "' in " + dir_.string());
    return it->second;
  }

  [[nodiscard]] std::vector<std::string> table_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : tables_) out.push_back(name);
    return out;
  }

  TableHandle create_table(const TableSchema& schema) {
    schema.validate();
    if (has_table(schema.name)) throw ValidationError("table '" + schema.name + "' already exists");
    TableHandle handle{dir_, schema, 0};
    fs::create_directories(dir_ / schema.name);
    for (const auto& a : schema.attributes) {
      std::ofstream f(handle.column_path(a.name), std::ios::binary | std::ios::trunc);
      if (!f) throw StorageError("cannot create column file for " + a.name);
    }
    tables_[schema.name] = handle;
    write_catalog();
    return handle;
  }

  /// Appends CSV rows (no header). On any parse error nothing is kept.
  std::uint64_t load_csv(TableHandle& table, const fs::path& csv) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw StorageError("cannot open " + csv.string());
    const auto& attrs = table.schema.attributes;
    detail::TableAppender appender(table);
    std::uint64_t rows = 0;
    try {
      CsvReader reader(in);
      while (auto record = reader.next()) {
        auto line = std::to_string(reader.record_line());
        if (record->size() != attrs.size()) {
          throw ValidationError("line " + line + ": expected " + std::to_string(attrs.size()) + " columns, got " +
                                std::to_string(record->size()));
        }
        for (std::size_t c = 0; c < attrs.size(); ++c) {
          Value v;
          try {
            v = parse_value((*record)[c], attrs[c].type);
          } catch (const ValidationError& e) {
            throw ValidationError("line " + line + ", column " + std::to_string(c + 1) + ": " + e.what());
          }
          appender.append(c, v);
        }
        ++rows;
      }
      appender.flush();
    } catch (...) {
      appender.rollback();
      throw;
    }
    commit_rows(table, rows);
    return rows;
  }

  /// Deterministic LINEORDER subset: sequential keys, uniform priorities,
  /// uniform prices in [1, 60 000 000]. PRNG: std::mt19937_64 seeded with
  /// `seed` (its output sequence is fixed by the C++ standard).
  std::uint64_t generate_lineorder(TableHandle& table, std::uint64_t rows, std::uint64_t seed) {
    for (const auto& a : lineorder_schema().attributes) {
      if (table.schema.at(a.name).type != a.type) {
        throw ValidationError("table " + table.name() + " attribute " + a.name + " must be " + to_string(a.type));
      }
    }
    std::mt19937_64 rng(seed);
    detail::TableAppender appender(table);
    auto key_col = *table.schema.find("lo_orderkey");
    auto prio_col = *table.schema.find("lo_orderpriority");
    auto price_col = *table.schema.find("lo_ordtotalprice");
    try {
      for (std::uint64_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < table.schema.attributes.size(); ++c) {
          if (c == key_col) {
            appender.append(c, static_cast<std::int64_t>(table.row_count + i + 1));
          } else if (c == prio_col) {
            appender.append(c, std::string(kOrderPriorities[detail::uniform_below(rng, kOrderPriorities.size())]));
          } else if (c == price_col) {
            appender.append(c, static_cast<std::int64_t>(1 + detail::uniform_below(rng, kMaxOrderTotalPrice)));
          } else {
            throw ValidationError("lineorder generator cannot fill attribute " + table.schema.attributes[c].name);
          }
        }
      }
      appender.flush();
    } catch (...) {
      appender.rollback();
      throw;
    }
    commit_rows(table, rows);
    return rows;
  }

  /// Appends already-typed rows. Used by tests and tools that synthesize data.
  std::uint64_t append_rows(TableHandle& table, std::span<const ValueTuple> rows) {
    detail::TableAppender appender(table);
    try {
      for (const auto& row : rows) {
        if (row.size() != table.schema.attributes.size()) throw ValidationError("row arity mismatch");
        for (std::size_t c = 0; c < row.size(); ++c) {
          if (!conforms(row[c], table.schema.attributes[c].type)) {
            throw ValidationError("value does not conform to " + to_string(table.schema.attributes[c].type));
          }
          appender.append(c, row[c]);
        }
      }
      appender.flush();
    } catch (...) {
      appender.rollback();
      throw;
    }
    commit_rows(table, rows.size());
    return rows.size();
  }

 private:
  fs::path catalog_path() const { return dir_ / "catalog.json"; }

  void commit_rows(TableHandle& table, std::uint64_t rows) {
    table.row_count += rows;
    tables_[table.name()].row_count = table.row_count;
    write_catalog();
  }

  void read_catalog() {
    std::ifstream in(catalog_path());
    nlohmann::json doc;
    try {
      in >> doc;
      for (const auto& t : doc.at("tables")) {
        TableHandle h;
        h.dir = dir_;
        h.schema.name = t.at("name").get<std::string>();
        h.row_count = t.at("rows").get<std::uint64_t>();
        for (const auto& a : t.at("attributes")) {
          h.schema.attributes.push_back({a.at("name").get<std::string>(), parse_value_type(a.at("type").get<std::string>())});
        }
        tables_[h.schema.name] = std::move(h);
      }
    } catch (const nlohmann::json::exception& e) {
      throw StorageError("corrupt catalog " + catalog_path().string() + ": " + e.what());
    }
  }

  void write_catalog() const {
    nlohmann::json doc;
    doc["tables"] = nlohmann::json::array();
    for (const auto& [name, h] : tables_) {
      nlohmann::json attrs = nlohmann::json::array();
      for (const auto& a : h.schema.attributes) attrs.push_back({{"name", a.name}, {"type", to_string(a.type)}});
      doc["tables"].push_back({{"name", name}, {"rows", h.row_count}, {"attributes", attrs}});
    }
    auto tmp = catalog_path();
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << doc.dump(2) << '\n';
      if (!out) throw StorageError("cannot write catalog in " + dir_.string());
    }
    fs::rename(tmp, catalog_path());
  }

  fs::path dir_;
  std::map<std::string, TableHandle> tables_;
};

}  // namespace colwin
