#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace colwin {

/// What an operator-owned allocation is for. The first group is what the
/// analytical memory model describes; the evaluation structures (trees,
/// ordered multisets) are reported on their own line.
enum class MemCategory : std::uint8_t {
  HashKeys,
  HashData,
  GroupRows,
  SortKeys,
  WindowCache,
  SortScratch,
  Tree,
  EvalState,
};

inline constexpr std::size_t kMemCategories = 8;

inline std::string_view to_string(MemCategory c) {
  switch (c) {
    case MemCategory::HashKeys:
      return "hash_keys";
    case MemCategory::HashData:
      return "hash_data";
    case MemCategory::GroupRows:
      return "group_rows";
    case MemCategory::SortKeys:
      return "sort_keys";
    case MemCategory::WindowCache:
      return "window_cache";
    case MemCategory::SortScratch:
      return "sort_scratch";
    case MemCategory::Tree:
      return "tree";
    case MemCategory::EvalState:
      return "eval_state";
  }
  return "?";
}

inline bool is_modeled(MemCategory c) { return c != MemCategory::Tree && c != MemCategory::EvalState; }

/// Byte accounting with high-water marks. Owned by one operator run.
class MemoryTracker {
 public:
  void add(MemCategory c, std::size_t bytes) {
    current_[index(c)] += bytes;
    if (is_modeled(c)) {
      modeled_ += bytes;
      modeled_peak_ = std::max(modeled_peak_, modeled_);
    } else {
      evaluation_ += bytes;
      evaluation_peak_ = std::max(evaluation_peak_, evaluation_);
    }
    peak_[index(c)] = std::max(peak_[index(c)], current_[index(c)]);
  }

  void release(MemCategory c, std::size_t bytes) {
    current_[index(c)] -= bytes;
    (is_modeled(c) ? modeled_ : evaluation_) -= bytes;
  }

  [[nodiscard]] std::size_t current(MemCategory c) const { return current_[index(c)]; }
  [[nodiscard]] std::size_t peak(MemCategory c) const { return peak_[index(c)]; }
  [[nodiscard]] std::size_t current_modeled() const { return modeled_; }
  /// High-water mark of the categories the analytical model covers.
  [[nodiscard]] std::size_t peak_modeled() const { return modeled_peak_; }
  /// High-water mark of segment trees and cumulative-evaluation state.
  [[nodiscard]] std::size_t peak_evaluation() const { return evaluation_peak_; }

 private:
  static std::size_t index(MemCategory c) { return static_cast<std::size_t>(c); }

  std::array<std::size_t, kMemCategories> current_{};
  std::array<std::size_t, kMemCategories> peak_{};
  std::size_t modeled_ = 0;
  std::size_t modeled_peak_ = 0;
  std::size_t evaluation_ = 0;
  std::size_t evaluation_peak_ = 0;
};

/// RAII registration of a fixed byte count.
class TrackedBytes {
 public:
  TrackedBytes() = default;
  TrackedBytes(MemoryTracker* tracker, MemCategory c, std::size_t bytes) : tracker_(tracker), category_(c), bytes_(bytes) {
    if (tracker_) tracker_->add(category_, bytes_);
  }
  TrackedBytes(const TrackedBytes&) = delete;
  TrackedBytes& operator=(const TrackedBytes&) = delete;
  TrackedBytes(TrackedBytes&& o) noexcept : tracker_(o.tracker_), category_(o.category_), bytes_(o.bytes_) { o.bytes_ = 0; }
  TrackedBytes& operator=(TrackedBytes&& o) noexcept {
    if (this != &o) {
      reset();
      tracker_ = o.tracker_;
      category_ = o.category_;
      bytes_ = o.bytes_;
      o.bytes_ = 0;
    }
    return *this;
  }
  ~TrackedBytes() { reset(); }

  /// Changes the registered amount (e.g. after a container grew).
  void resize(std::size_t bytes) {
    if (!tracker_) return;
    if (bytes > bytes_) tracker_->add(category_, bytes - bytes_);
    else tracker_->release(category_, bytes_ - bytes);
    bytes_ = bytes;
  }

  void reset() {
    if (tracker_ && bytes_) tracker_->release(category_, bytes_);
    bytes_ = 0;
  }

 private:
  MemoryTracker* tracker_ = nullptr;
  MemCategory category_ = MemCategory::HashData;
  std::size_t bytes_ = 0;
};

}  // namespace colwin
