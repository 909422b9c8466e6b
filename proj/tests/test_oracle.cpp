#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace colwin;
using colwin::testing::range_frame;
using colwin::testing::rows_frame;
using colwin::testing::single;

namespace {

Value I(std::int64_t v) { return Value{v}; }

std::vector<Value> appended(const OracleResult& r) {
  std::vector<Value> out;
  for (const auto& row : r.rows) out.push_back(row.appended.at(0));
  return out;
}

const OrderKey kX{"x", SortDirection::Asc};

}  // namespace

TEST(Oracle, RowsSumInInputOrder) {
  std::vector<ValueTuple> rows{{I(3)}, {I(1)}, {I(2)}};
  auto spec = single(FunctionKind::Sum, "x", {}, {kX}, rows_frame(FrameBound::preceding(I(1)), FrameBound::current_row()));
  EXPECT_EQ(appended(oracle_evaluate(rows, {"x"}, spec, {"x"})), (std::vector<Value>{I(5), I(1), I(3)}));
}

TEST(Oracle, EmptyInput) {
  auto spec = single(FunctionKind::Sum, "x", {}, {}, std::nullopt);
  EXPECT_TRUE(oracle_evaluate({}, {"x"}, spec, {}).rows.empty());
}

TEST(Oracle, RankingAndPartitions) {
  std::vector<ValueTuple> rows{{std::string("a"), I(10)}, {std::string("b"), I(5)}, {std::string("a"), I(10)},
                               {std::string("a"), I(20)}};
  auto rank = single(FunctionKind::Rank, "", {"p"}, {kX}, std::nullopt);
  auto r = oracle_evaluate(rows, {"p", "x"}, rank, {"p"});
  EXPECT_EQ(appended(r), (std::vector<Value>{I(1), I(1), I(1), I(3)}));
  EXPECT_EQ(r.rows[1].pass_through, ValueTuple{std::string("b")});
  auto dense = single(FunctionKind::DenseRank, "", {"p"}, {kX}, std::nullopt);
  EXPECT_EQ(appended(oracle_evaluate(rows, {"p", "x"}, dense, {})), (std::vector<Value>{I(1), I(1), I(1), I(2)}));
}

TEST(Oracle, RangeFrameAndEmptyMin) {
  std::vector<ValueTuple> rows{{I(5)}, {I(10)}, {I(30)}};
  auto sum = single(FunctionKind::Sum, "x", {}, {kX}, range_frame(FrameBound::preceding(I(10)), FrameBound::following(I(10))));
  EXPECT_EQ(appended(oracle_evaluate(rows, {"x"}, sum, {})), (std::vector<Value>{I(15), I(15), I(30)}));
  auto mn = single(FunctionKind::Min, "x", {}, {kX}, rows_frame(FrameBound::following(I(1)), FrameBound::following(I(1))));
  mn.frame->start = FrameBound::current_row();
  EXPECT_EQ(appended(oracle_evaluate(rows, {"x"}, mn, {})), (std::vector<Value>{I(5), I(10), I(30)}));
}

TEST(Oracle, CompareIsOrderInsensitiveWithFloatTolerance) {
  OracleResult r;
  r.rows.push_back({{I(1)}, {Value{0.1 + 0.2}}});
  r.rows.push_back({{I(2)}, {Value{1.0}}});
  EXPECT_EQ(compare_with_oracle({{I(2), Value{1.0}}, {I(1), Value{0.3}}}, r), "");
  EXPECT_NE(compare_with_oracle({{I(2), Value{1.0}}, {I(1), Value{0.31}}}, r), "");
  EXPECT_NE(compare_with_oracle({{I(2), Value{1.0}}}, r), "");
  EXPECT_FALSE(values_match(I(1), Value{1.0}));
}
