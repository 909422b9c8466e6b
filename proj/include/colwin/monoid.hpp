#pragma once

#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colwin/value.hpp"

namespace colwin {

/// Anything with an identity element and an associative binary operation.
template <class M>
concept MonoidLike = requires(const M& m, const typename M::value_type& a) {
  { m.identity() } -> std::convertible_to<typename M::value_type>;
  { m.op(a, a) } -> std::convertible_to<typename M::value_type>;
};

/// acc = op(acc, x), in place when the monoid supports it.
template <MonoidLike M>
void accumulate(const M& m, typename M::value_type& acc, const typename M::value_type& x) {
  if constexpr (requires { m.combine_into(acc, x); }) {
    m.combine_into(acc, x);
  } else {
    acc = m.op(acc, x);
  }
}

// Typed monoids for callers that know their element type at compile time.

template <class T>
struct SumOf {
  using value_type = T;
  [[nodiscard]] T identity() const { return T{}; }
  [[nodiscard]] T op(const T& a, const T& b) const { return a + b; }
};

template <class T>
struct MinOf {
  using value_type = T;
  [[nodiscard]] T identity() const { return std::numeric_limits<T>::has_infinity ? std::numeric_limits<T>::infinity() : std::numeric_limits<T>::max(); }
  [[nodiscard]] T op(const T& a, const T& b) const { return b < a ? b : a; }
};

template <class T>
struct MaxOf {
  using value_type = T;
  [[nodiscard]] T identity() const { return std::numeric_limits<T>::has_infinity ? -std::numeric_limits<T>::infinity() : std::numeric_limits<T>::lowest(); }
  [[nodiscard]] T op(const T& a, const T& b) const { return a < b ? b : a; }
};

enum class AggKind : std::uint8_t { SumI64, SumF64, Min, Max, Count };

inline std::string_view to_string(AggKind kind) {
  switch (kind) {
    case AggKind::SumI64:
      return "SUM_I64";
    case AggKind::SumF64:
      return "SUM_F64";
    case AggKind::Min:
      return "MIN";
    case AggKind::Max:
      return "MAX";
    case AggKind::Count:
      return "COUNT";
  }
  return "?";
}

struct MonoidComponent {
  AggKind kind;
  ValueType input_type;

  /// Type of the values the component folds (and outputs).
  [[nodiscard]] ValueType state_type() const {
    switch (kind) {
      case AggKind::SumI64:
      case AggKind::Count:
        return ValueType::int64();
      case AggKind::SumF64:
        return ValueType::float64();
      case AggKind::Min:
      case AggKind::Max:
        return input_type;
    }
    return input_type;
  }
};

/// Runtime product monoid over Value tuples. A single aggregate is the
/// arity-1 case; compose() builds the componentwise product.
class Monoid {
 public:
  using value_type = ValueTuple;

  Monoid(std::vector<MonoidComponent> components, std::string name)
      : components_(std::move(components)), name_(std::move(name)) {
    identity_.reserve(components_.size());
    for (const auto& c : components_) identity_.push_back(component_identity(c));
  }

  [[nodiscard]] std::size_t arity() const { return components_.size(); }
  [[nodiscard]] const std::vector<MonoidComponent>& components() const { return components_; }
  [[nodiscard]] const std::string& name() const { return name_; }

  [[nodiscard]] ValueTuple identity() const { return identity_; }
  [[nodiscard]] const ValueTuple& identity_ref() const { return identity_; }

  [[nodiscard]] ValueTuple op(const ValueTuple& a, const ValueTuple& b) const {
    ValueTuple out = a;
    combine_into(out, b);
    return out;
  }

  void combine_into(ValueTuple& acc, std::span<const Value> x) const {
    for (std::size_t k = 0; k < components_.size(); ++k) combine_slot(k, acc[k], x[k]);
  }
  void combine_into(ValueTuple& acc, const ValueTuple& x) const { combine_into(acc, std::span<const Value>(x)); }

  /// acc = op_k(acc, x) for component k.
  void combine_slot(std::size_t k, Value& acc, const Value& x) const {
    switch (components_[k].kind) {
      case AggKind::SumI64:
      case AggKind::Count: {
        // Wrapping add keeps the operation associative on overflow.
        auto sum = static_cast<std::uint64_t>(std::get<std::int64_t>(acc)) + static_cast<std::uint64_t>(std::get<std::int64_t>(x));
        std::get<std::int64_t>(acc) = static_cast<std::int64_t>(sum);
        return;
      }
      case AggKind::SumF64:
        std::get<double>(acc) += std::get<double>(x);
        return;
      case AggKind::Min:
        if (compare_values(x, acc) < 0) acc = x;
        return;
      case AggKind::Max:
        if (compare_values(acc, x) < 0) acc = x;
        return;
    }
  }

  /// Leaf value contributed by a raw attribute value (COUNT maps rows to 1).
  [[nodiscard]] Value lift(std::size_t k, const Value& raw) const {
    if (components_[k].kind == AggKind::Count) return std::int64_t{1};
    return raw;
  }

 private:
  static Value component_identity(const MonoidComponent& c) {
    switch (c.kind) {
      case AggKind::SumI64:
      case AggKind::Count:
        return std::int64_t{0};
      case AggKind::SumF64:
        return 0.0;
      case AggKind::Min:
        return type_max(c.input_type);
      case AggKind::Max:
        return type_min(c.input_type);
    }
    return std::int64_t{0};
  }

  std::vector<MonoidComponent> components_;
  std::string name_;
  ValueTuple identity_;
};

inline Monoid make_monoid(AggKind kind, const ValueType& type) {
  switch (kind) {
    case AggKind::SumI64:
      if (type.kind != TypeKind::Int64) throw ValidationError("SUM_I64 requires an int64 attribute, got " + to_string(type));
      break;
    case AggKind::SumF64:
      if (type.kind != TypeKind::Float64) throw ValidationError("SUM_F64 requires a float64 attribute, got " + to_string(type));
      break;
    case AggKind::Min:
    case AggKind::Max:
    case AggKind::Count:
      break;
  }
  return Monoid({{kind, type}}, std::string(to_string(kind)));
}

/// SUM picking the integer or floating flavour from the attribute type.
inline AggKind sum_kind_for(const ValueType& type) {
  if (type.kind == TypeKind::Int64) return AggKind::SumI64;
  if (type.kind == TypeKind::Float64) return AggKind::SumF64;
  throw ValidationError("SUM requires a numeric attribute, got " + to_string(type));
}

inline Monoid compose(std::span<const Monoid> monoids) {
  if (monoids.empty()) throw ValidationError("compose needs at least one monoid");
  std::vector<MonoidComponent> parts;
  std::string name = "(";
  for (const auto& m : monoids) {
    parts.insert(parts.end(), m.components().begin(), m.components().end());
    if (name.size() > 1) name += ",";
    name += m.name();
  }
  return Monoid(std::move(parts), name + ")");
}

}  // namespace colwin
