#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstring>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "colwin/memory_tracker.hpp"
#include "colwin/value.hpp"

namespace colwin {

/// Fixed-width row format: attribute values packed back to back.
class RowLayout {
 public:
  RowLayout() = default;
  explicit RowLayout(std::vector<ValueType> types) : types_(std::move(types)) {
    for (const auto& t : types_) {
      offsets_.push_back(width_);
      width_ += t.byte_width();
    }
  }

  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::size_t arity() const { return types_.size(); }
  [[nodiscard]] const ValueType& type(std::size_t c) const { return types_[c]; }
  [[nodiscard]] std::size_t offset(std::size_t c) const { return offsets_[c]; }

  [[nodiscard]] Value decode(const std::byte* row, std::size_t c) const { return decode_value(row + offsets_[c], types_[c]); }
  void encode(std::byte* row, std::size_t c, const Value& v) const { encode_value(v, types_[c], row + offsets_[c]); }

 private:
  std::vector<ValueType> types_;
  std::vector<std::size_t> offsets_;
  std::size_t width_ = 0;
};

/// Typed comparison of two encoded values without building a Value.
inline std::strong_ordering compare_encoded(const ValueType& type, const std::byte* a, const std::byte* b) {
  switch (type.kind) {
    case TypeKind::Int64: {
      std::int64_t x, y;
      std::memcpy(&x, a, 8);
      std::memcpy(&y, b, 8);
      return x <=> y;
    }
    case TypeKind::Float64: {
      double x, y;
      std::memcpy(&x, a, 8);
      std::memcpy(&y, b, 8);
      if (x < y) return std::strong_ordering::less;
      if (x > y) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    }
    case TypeKind::FixedText: {
      int c = std::memcmp(a, b, type.width);
      return c <=> 0;
    }
  }
  return std::strong_ordering::equal;
}

/// Append-only store of fixed-width rows in fixed-size chunks. Every chunk
/// allocated is reported to the tracker. Leading chunks can be released
/// once consumed, which is how positions are dropped while a group is
/// being materialized.
class RowStore {
 public:
  static constexpr std::size_t kRowsPerChunk = 1024;

  RowStore(std::size_t row_bytes, MemoryTracker* tracker, MemCategory category, std::size_t rows_per_chunk = kRowsPerChunk)
      : row_bytes_(std::max<std::size_t>(row_bytes, 1)), rows_per_chunk_(rows_per_chunk), tracker_(tracker), category_(category) {}

  RowStore(const RowStore&) = delete;
  RowStore& operator=(const RowStore&) = delete;
  RowStore(RowStore&& o) noexcept { *this = std::move(o); }
  RowStore& operator=(RowStore&& o) noexcept {
    if (this != &o) {
      clear();
      row_bytes_ = o.row_bytes_;
      rows_per_chunk_ = o.rows_per_chunk_;
      tracker_ = o.tracker_;
      category_ = o.category_;
      chunks_ = std::move(o.chunks_);
      size_ = o.size_;
      released_chunks_ = o.released_chunks_;
      o.chunks_.clear();
      o.size_ = 0;
      o.released_chunks_ = 0;
    }
    return *this;
  }
  ~RowStore() { clear(); }

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }
  [[nodiscard]] std::size_t row_bytes() const { return row_bytes_; }
  [[nodiscard]] std::size_t allocated_bytes() const { return (chunks_.size() - released_chunks_) * chunk_bytes(); }

  std::byte* append() {
    if (size_ == chunks_.size() * rows_per_chunk_) {
      chunks_.push_back(std::make_unique<std::byte[]>(chunk_bytes()));
      if (tracker_) tracker_->add(category_, chunk_bytes());
    }
    return row(size_++);
  }

  [[nodiscard]] std::byte* row(std::size_t i) { return chunks_[i / rows_per_chunk_].get() + (i % rows_per_chunk_) * row_bytes_; }
  [[nodiscard]] const std::byte* row(std::size_t i) const {
    return chunks_[i / rows_per_chunk_].get() + (i % rows_per_chunk_) * row_bytes_;
  }

  /// Frees every chunk whose rows all lie below `end`. Those rows must not
  /// be accessed afterwards.
  void release_before(std::size_t end) {
    std::size_t full = std::min(end / rows_per_chunk_, chunks_.size());
    for (; released_chunks_ < full; ++released_chunks_) {
      chunks_[released_chunks_].reset();
      if (tracker_) tracker_->release(category_, chunk_bytes());
    }
  }

  void clear() {
    if (tracker_) tracker_->release(category_, allocated_bytes());
    chunks_.clear();
    size_ = 0;
    released_chunks_ = 0;
  }

  /// Reorders rows so that new row i is old row perm[i]. `perm` is
  /// consumed (used as visited marks).
  void permute(std::vector<std::uint32_t>& perm) {
    std::vector<std::byte> tmp(row_bytes_);
    constexpr std::uint32_t kDone = 0xFFFFFFFFu;
    for (std::size_t start = 0; start < perm.size(); ++start) {
      if (perm[start] == kDone) continue;
      if (perm[start] == start) {
        perm[start] = kDone;
        continue;
      }
      std::memcpy(tmp.data(), row(start), row_bytes_);
      std::size_t dst = start;
      for (;;) {
        std::size_t src = perm[dst];
        perm[dst] = kDone;
        if (src == start) {
          std::memcpy(row(dst), tmp.data(), row_bytes_);
          break;
        }
        std::memcpy(row(dst), row(src), row_bytes_);
        dst = src;
      }
    }
  }

 private:
  [[nodiscard]] std::size_t chunk_bytes() const { return row_bytes_ * rows_per_chunk_; }

  std::size_t row_bytes_ = 1;
  std::size_t rows_per_chunk_ = kRowsPerChunk;
  MemoryTracker* tracker_ = nullptr;
  MemCategory category_ = MemCategory::HashData;
  std::vector<std::unique_ptr<std::byte[]>> chunks_;
  std::size_t size_ = 0;
  std::size_t released_chunks_ = 0;
};

}  // namespace colwin
