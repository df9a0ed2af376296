#include <doctest.h>

#include <algorithm>

#include "modc/countdown.hpp"
#include "modc/error.hpp"
#include "modc/random.hpp"
#include "oracles.hpp"

using namespace modc;

TEST_CASE("apply_op follows the positive-integer rules") {
  CHECK(apply_op(10, 10, Op::Mul) == 100);
  CHECK(apply_op(96, 6, Op::Div) == 16);
  CHECK(apply_op(100, 4, Op::Sub) == 96);
  CHECK_THROWS_AS(apply_op(7, 7, Op::Sub), InvalidStep);
  CHECK_THROWS_AS(apply_op(3, 7, Op::Sub), InvalidStep);
  CHECK_THROWS_AS(apply_op(7, 2, Op::Div), InvalidStep);
  CHECK_THROWS_AS(apply_op(0, 2, Op::Add), InvalidStep);
  CHECK_THROWS_AS(apply_op(200, 200, Op::Mul), InvalidStep);  // above the 10,000 cap
  CHECK(apply_op(3, 4, Op::Add) == apply_op(4, 3, Op::Add));
  CHECK(apply_op(3, 4, Op::Mul) == apply_op(4, 3, Op::Mul));
  CHECK_FALSE(try_apply_op(std::int64_t{1} << 62, std::int64_t{1} << 62, Op::Add).has_value());
}

TEST_CASE("operators round-trip through their symbols") {
  for (Op op : kAllOps) CHECK(parse_op(std::string(1, op_symbol(op))) == op);
  CHECK(parse_op("x") == Op::Mul);
  CHECK_THROWS_AS(parse_op("^"), InvalidArgument);
}

TEST_CASE("problem ids depend on content only") {
  const Problem a = Problem::make({10, 4, 10, 6}, 16);
  const Problem b = Problem::make({6, 10, 10, 4}, 16);
  CHECK(a.id == b.id);
  CHECK(a.id.size() == 16);
  CHECK(a.id != Problem::make({10, 4, 10, 6}, 17).id);
}

TEST_CASE("verify_expression") {
  const Problem p = Problem::make({10, 10, 4, 6}, 16);
  CHECK(verify_expression(p, {{{10, 10, Op::Mul, 100}, {100, 4, Op::Sub, 96}, {96, 6, Op::Div, 16}}}));
  // 6 left over
  CHECK_FALSE(verify_expression(p, {{{10, 10, Op::Add, 20}, {20, 4, Op::Sub, 16}}}));
  // wrong result and unavailable operand are rejected, not thrown
  CHECK_FALSE(verify_expression(p, {{{10, 10, Op::Mul, 99}}}));
  CHECK_FALSE(verify_expression(p, {{{7, 3, Op::Add, 10}}}));
  CHECK_FALSE(verify_expression(Problem::make({1, 1, 1, 1}, 5), {{{1, 1, Op::Add, 2}, {2, 1, Op::Add, 3}, {3, 1, Op::Add, 4}}}));

  SUBCASE("partial use when enabled") {
    Rules partial;
    partial.allow_partial_use = true;
    CHECK(verify_expression(p, {{{10, 10, Op::Add, 20}, {20, 4, Op::Sub, 16}}}, partial));
  }
}

TEST_CASE("enumerate_solutions and is_reachable") {
  const Problem p = Problem::make({10, 10, 4, 6}, 16);
  const auto all = enumerate_solutions(p);
  const Expression worked{{{10, 10, Op::Mul, 100}, {100, 4, Op::Sub, 96}, {96, 6, Op::Div, 16}}};
  CHECK(std::find(all.begin(), all.end(), worked) != all.end());
  for (const auto& e : all) CHECK(verify_expression(p, e));
  CHECK(is_reachable(p));

  const auto twos = enumerate_solutions(Problem::make({2, 2}, 4));
  CHECK(twos.size() == 2);
  CHECK(std::find(twos.begin(), twos.end(), Expression{{{2, 2, Op::Add, 4}}}) != twos.end());
  CHECK(std::find(twos.begin(), twos.end(), Expression{{{2, 2, Op::Mul, 4}}}) != twos.end());

  CHECK(enumerate_solutions(Problem::make({1, 1, 1, 1}, 5)).empty());
  CHECK_FALSE(is_reachable(Problem::make({1, 1, 1, 1}, 5)));
  CHECK(is_reachable(Problem::make({1, 1}, 2)));
  CHECK_THROWS_AS(enumerate_solutions(Problem::make({1, 2, 3, 4, 5, 6}, 7)), TooLarge);
  CHECK_THROWS_AS(is_reachable(Problem::make({1, 2, 3, 4, 5, 6}, 7)), TooLarge);
}

TEST_CASE("oracle matches a naive recursion on three numbers (property)") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Value> nums{rng.integer(1, 12), rng.integer(1, 12), rng.integer(1, 12)};
    const Value target = rng.integer(1, 60);
    const Problem p = Problem::make(nums, target);
    std::set<oracle::Sequence> mine;
    for (const auto& e : enumerate_solutions(p)) {
      oracle::Sequence s;
      for (const Step& st : e.steps) s.emplace_back(st.left, st.right, op_symbol(st.op), st.result);
      mine.insert(s);
    }
    const auto naive = oracle::naive_solutions(nums, target);
    CHECK(mine == naive);
    CHECK(is_reachable(p) == !naive.empty());
  }
}

TEST_CASE("search state conservation (property)") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Problem p = Problem::make({rng.integer(1, 30), rng.integer(1, 30), rng.integer(1, 30), rng.integer(1, 30)}, 10);
    SearchState s = SearchState::initial(p);
    while (s.remaining.size() > 1) {
      const auto steps = successor_steps(s.remaining);
      REQUIRE_FALSE(steps.empty());  // + always applies
      for (const Step& st : steps) {
        CHECK(st.result >= 1);
        CHECK(st.result == apply_op(st.left, st.right, st.op));
      }
      s = s.apply(steps[rng.integer(0, steps.size() - 1)]);
      CHECK(s.remaining.size() + s.history.size() == p.start_numbers.size());
      // replaying the history reproduces the state
      SearchState replay = SearchState::initial(p);
      for (const Step& st : s.history) replay = replay.apply(st);
      CHECK(replay.remaining == s.remaining);
    }
  }
}

TEST_CASE("apply rejects unavailable operands") {
  const SearchState s = SearchState::initial(Problem::make({2, 3}, 5));
  CHECK_THROWS_AS(s.apply({4, 1, Op::Add, 5}), InvalidStep);
  CHECK_THROWS_AS(s.apply({3, 2, Op::Add, 6}), InvalidStep);
}
