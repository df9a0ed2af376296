#pragma once

// Countdown problems: a multiset of starting numbers, a target, and the
// arithmetic rules for combining two numbers into one.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modc {

using Value = std::int64_t;

enum class Op : char { Add = '+', Sub = '-', Mul = '*', Div = '/' };

inline constexpr Op kAllOps[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};

char op_symbol(Op op) noexcept;
/// Accepts "+", "-", "*", "/" and the unicode-free aliases "x" and ":".
Op parse_op(std::string_view text);

struct Rules {
  /// When false a solution must consume every starting number.
  bool allow_partial_use = false;
  /// Intermediate results above this are rejected.
  Value value_cap = 10'000;
};

struct Step {
  Value left = 0;
  Value right = 0;
  Op op = Op::Add;
  Value result = 0;

  friend bool operator==(const Step&, const Step&) = default;
  friend auto operator<=>(const Step& a, const Step& b) {
    if (auto c = a.left <=> b.left; c != 0) return c;
    if (auto c = a.right <=> b.right; c != 0) return c;
    if (auto c = static_cast<char>(a.op) <=> static_cast<char>(b.op); c != 0) return c;
    return a.result <=> b.result;
  }
};

std::string to_string(const Step& step);

struct Expression {
  std::vector<Step> steps;

  friend bool operator==(const Expression&, const Expression&) = default;
};

struct Problem {
  std::vector<Value> start_numbers;
  Value target = 0;
  std::string id;

  /// Builds a problem whose id is the content hash of (sorted numbers, target).
  static Problem make(std::vector<Value> numbers, Value target);
};

/// Content hash of (sorted numbers, target) as 16 hex digits.
std::string problem_id(std::span<const Value> numbers, Value target);

/// a op b under the positive-integer rules. Throws InvalidStep when the
/// result is not a positive integer or exceeds the value cap.
Value apply_op(Value a, Value b, Op op, const Rules& rules = {});
std::optional<Value> try_apply_op(Value a, Value b, Op op, const Rules& rules = {}) noexcept;

/// Every distinct valid step on a sorted multiset. Commutative operations
/// list the larger operand first; subtraction and division only admit the
/// order that yields a positive integer.
std::vector<Step> successor_steps(std::span<const Value> sorted_remaining, const Rules& rules = {});

struct SearchState {
  std::vector<Value> remaining;  // kept sorted ascending
  std::vector<Step> history;

  static SearchState initial(const Problem& problem);
  /// Applies a step whose operands are present in `remaining`. Throws
  /// InvalidStep otherwise.
  SearchState apply(const Step& step, const Rules& rules = {}) const;
  bool is_goal(Value target, const Rules& rules = {}) const;
};

/// Replays `expr` from the problem's starting numbers. Never throws; any
/// invalid step makes the expression invalid.
bool verify_expression(const Problem& problem, const Expression& expr, const Rules& rules = {});

inline constexpr std::size_t kMaxOracleNumbers = 5;

/// Every valid expression reaching the target. Throws TooLarge above
/// kMaxOracleNumbers starting numbers.
std::vector<Expression> enumerate_solutions(const Problem& problem, const Rules& rules = {});

/// Same answer as !enumerate_solutions(problem).empty(), with early exit.
bool is_reachable(const Problem& problem, const Rules& rules = {});

}  // namespace modc
