#pragma once

#include <bit>
#include <charconv>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace colwin {

static_assert(std::endian::native == std::endian::little, "column files are little-endian; big-endian hosts need byte swapping");

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed specs, schemas, queries and predicates.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

enum class TypeKind : std::uint8_t { Int64, Float64, FixedText };

/// Fixed-width column type. Text is stored NUL-padded to `width` bytes.
struct ValueType {
  TypeKind kind = TypeKind::Int64;
  std::uint16_t width = 8;

  static constexpr ValueType int64() { return {TypeKind::Int64, 8}; }
  static constexpr ValueType float64() { return {TypeKind::Float64, 8}; }
  static ValueType fixed_text(int width) {
    if (width < 1 || width > 255) {
      throw ValidationError("FixedText width must be in [1, 255], got " + std::to_string(width));
    }
    return {TypeKind::FixedText, static_cast<std::uint16_t>(width)};
  }

  [[nodiscard]] constexpr std::size_t byte_width() const { return width; }
  [[nodiscard]] constexpr bool is_numeric() const { return kind != TypeKind::FixedText; }

  friend bool operator==(const ValueType&, const ValueType&) = default;
};

inline std::string to_string(const ValueType& type) {
  switch (type.kind) {
    case TypeKind::Int64:
      return "int64";
    case TypeKind::Float64:
      return "float64";
    case TypeKind::FixedText:
      return "text(" + std::to_string(type.width) + ")";
  }
  return "?";
}

/// Parses "int64", "float64" or "text(N)".
inline ValueType parse_value_type(std::string_view text) {
  if (text == "int64") return ValueType::int64();
  if (text == "float64") return ValueType::float64();
  if (text.starts_with("text(") && text.ends_with(")")) {
    auto digits = text.substr(5, text.size() - 6);
    int width = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), width);
    if (ec == std::errc{} && ptr == digits.data() + digits.size()) return ValueType::fixed_text(width);
  }
  throw ValidationError("unknown value type '" + std::string(text) + "'");
}

using Value = std::variant<std::int64_t, double, std::string>;
using ValueTuple = std::vector<Value>;

inline bool is_int(const Value& v) { return std::holds_alternative<std::int64_t>(v); }
inline bool is_float(const Value& v) { return std::holds_alternative<double>(v); }
inline bool is_text(const Value& v) { return std::holds_alternative<std::string>(v); }

inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
inline const std::string& as_text(const Value& v) { return std::get<std::string>(v); }

inline double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ValidationError("expected a numeric value, got text");
}

inline bool conforms(const Value& v, const ValueType& type) {
  switch (type.kind) {
    case TypeKind::Int64:
      return is_int(v);
    case TypeKind::Float64:
      return is_float(v);
    case TypeKind::FixedText:
      return is_text(v) && as_text(v).size() <= type.width;
  }
  return false;
}

/// Total order: numerics compare by value across Int64/Float64, text
/// compares bytewise, and every numeric sorts before every text.
inline std::strong_ordering compare_values(const Value& a, const Value& b) {
  if (is_int(a) && is_int(b)) return as_int(a) <=> as_int(b);
  if (is_text(a) || is_text(b)) {
    if (is_text(a) && is_text(b)) return as_text(a).compare(as_text(b)) <=> 0;
    return is_text(a) ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  double x = as_double(a);
  double y = as_double(b);
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

inline bool value_less(const Value& a, const Value& b) { return compare_values(a, b) < 0; }

inline std::strong_ordering compare_tuples(std::span<const Value> a, std::span<const Value> b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (auto c = compare_values(a[i], b[i]); c != 0) return c;
  }
  return a.size() <=> b.size();
}

/// Shortest round-trip text form. Floats always carry a '.' or exponent.
inline std::string format_value(const Value& v) {
  if (is_int(v)) return std::to_string(as_int(v));
  if (is_text(v)) return as_text(v);
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), std::get<double>(v));
  std::string out(buf, ptr);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

inline Value parse_value(std::string_view text, const ValueType& type) {
  switch (type.kind) {
    case TypeKind::Int64: {
      std::int64_t out = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("'" + std::string(text) + "' is not a valid int64");
      }
      return out;
    }
    case TypeKind::Float64: {
      double out = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("'" + std::string(text) + "' is not a valid float64");
      }
      return out;
    }
    case TypeKind::FixedText:
      if (text.size() > type.width) {
        throw ValidationError("text '" + std::string(text) + "' exceeds width " + std::to_string(type.width));
      }
      if (text.find('\0') != std::string_view::npos) throw ValidationError("text values must not contain NUL");
      return std::string(text);
  }
  throw ValidationError("unsupported type");
}

// Fixed-width little-endian encoding shared by column files and row buffers.

inline void encode_value(const Value& v, const ValueType& type, std::byte* dst) {
  switch (type.kind) {
    case TypeKind::Int64: {
      std::int64_t x = as_int(v);
      std::memcpy(dst, &x, 8);
      return;
    }
    case TypeKind::Float64: {
      double x = std::get<double>(v);
      std::memcpy(dst, &x, 8);
      return;
    }
    case TypeKind::FixedText: {
      const auto& s = as_text(v);
      std::memset(dst, 0, type.width);
      std::memcpy(dst, s.data(), std::min<std::size_t>(s.size(), type.width));
      return;
    }
  }
}

inline Value decode_value(const std::byte* src, const ValueType& type) {
  switch (type.kind) {
    case TypeKind::Int64: {
      std::int64_t x;
      std::memcpy(&x, src, 8);
      return x;
    }
    case TypeKind::Float64: {
      double x;
      std::memcpy(&x, src, 8);
      return x;
    }
    case TypeKind::FixedText: {
      const char* chars = reinterpret_cast<const char*>(src);
      std::size_t len = type.width;
      while (len > 0 && chars[len - 1] == '\0') --len;
      return std::string(chars, len);
    }
  }
  return std::int64_t{0};
}

/// Smallest and largest representable values of a type; these serve as the
/// -inf / +inf identities of MAX / MIN.
inline Value type_min(const ValueType& type) {
  switch (type.kind) {
    case TypeKind::Int64:
      return std::numeric_limits<std::int64_t>::min();
    case TypeKind::Float64:
      return -std::numeric_limits<double>::infinity();
    case TypeKind::FixedText:
      return std::string();
  }
  return std::int64_t{0};
}

inline Value type_max(const ValueType& type) {
  switch (type.kind) {
    case TypeKind::Int64:
      return std::numeric_limits<std::int64_t>::max();
    case TypeKind::Float64:
      return std::numeric_limits<double>::infinity();
    case TypeKind::FixedText:
      return std::string(type.width, '\xFF');
  }
  return std::int64_t{0};
}

}  // namespace colwin
