#include "modc/countdown.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "modc/error.hpp"
#include "modc/random.hpp"

namespace modc {

char op_symbol(Op op) noexcept { return static_cast<char>(op); }

Op parse_op(std::string_view text) {
  if (text == "+") return Op::Add;
  if (text == "-") return Op::Sub;
  if (text == "*" || text == "x") return Op::Mul;
  if (text == "/" || text == ":") return Op::Div;
  throw InvalidArgument("unknown operator '" + std::string(text) + "'");
}

std::string to_string(const Step& step) {
  return std::to_string(step.left) + op_symbol(step.op) + std::to_string(step.right) + "=" +
         std::to_string(step.result);
}

std::string problem_id(std::span<const Value> numbers, Value target) {
  std::vector<Value> sorted(numbers.begin(), numbers.end());
  std::sort(sorted.begin(), sorted.end());
  std::string key;
  for (Value v : sorted) key += std::to_string(v) + ",";
  key += ":" + std::to_string(target);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
  return buf;
}

Problem Problem::make(std::vector<Value> numbers, Value target) {
  Problem p;
  p.id = problem_id(numbers, target);
  p.start_numbers = std::move(numbers);
  p.target = target;
  return p;
}

std::optional<Value> try_apply_op(Value a, Value b, Op op, const Rules& rules) noexcept {
  if (a < 1 || b < 1) return std::nullopt;
  Value r = 0;
  switch (op) {
    case Op::Add:
      if (__builtin_add_overflow(a, b, &r)) return std::nullopt;
      break;
    case Op::Sub: r = a - b; break;
    case Op::Mul:
      if (__builtin_mul_overflow(a, b, &r)) return std::nullopt;
      break;
    case Op::Div:
      if (a % b != 0) return std::nullopt;
      r = a / b;
      break;
    default: return std::nullopt;
  }
  if (r < 1 || r > rules.value_cap) return std::nullopt;
  return r;
}

Value apply_op(Value a, Value b, Op op, const Rules& rules) {
  if (auto r = try_apply_op(a, b, op, rules)) return *r;
  throw InvalidStep(std::to_string(a) + " " + op_symbol(op) + " " + std::to_string(b) +
                    " is not a positive integer within the value cap");
}

std::vector<Step> successor_steps(std::span<const Value> sorted, const Rules& rules) {
  std::vector<Step> steps;
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j > i + 1 && sorted[j] == sorted[j - 1]) continue;
      const Value big = sorted[j];
      const Value small = sorted[i];
      for (Op op : kAllOps) {
        if (auto r = try_apply_op(big, small, op, rules)) steps.push_back({big, small, op, *r});
      }
    }
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

SearchState SearchState::initial(const Problem& problem) {
  SearchState s;
  s.remaining = problem.start_numbers;
  std::sort(s.remaining.begin(), s.remaining.end());
  return s;
}

namespace {

bool remove_one(std::vector<Value>& values, Value v) {
  auto it = std::lower_bound(values.begin(), values.end(), v);
  if (it == values.end() || *it != v) return false;
  values.erase(it);
  return true;
}

void insert_sorted(std::vector<Value>& values, Value v) {
  values.insert(std::upper_bound(values.begin(), values.end(), v), v);
}

}  // namespace

SearchState SearchState::apply(const Step& step, const Rules& rules) const {
  auto r = try_apply_op(step.left, step.right, step.op, rules);
  if (!r || *r != step.result) throw InvalidStep("step " + to_string(step) + " is not valid");
  SearchState next;
  next.remaining = remaining;
  if (!remove_one(next.remaining, step.left) || !remove_one(next.remaining, step.right)) {
    throw InvalidStep("operands of " + to_string(step) + " are not available");
  }
  insert_sorted(next.remaining, step.result);
  next.history = history;
  next.history.push_back(step);
  return next;
}

bool SearchState::is_goal(Value target, const Rules& rules) const {
  if (rules.allow_partial_use) {
    if (history.empty()) return std::binary_search(remaining.begin(), remaining.end(), target);
    return history.back().result == target;
  }
  return remaining.size() == 1 && remaining.front() == target;
}

bool verify_expression(const Problem& problem, const Expression& expr, const Rules& rules) {
  SearchState state = SearchState::initial(problem);
  for (const Step& step : expr.steps) {
    try {
      state = state.apply(step, rules);
    } catch (const InvalidStep&) {
      return false;
    }
  }
  return state.is_goal(problem.target, rules);
}

namespace {

void check_oracle_size(const Problem& problem) {
  if (problem.start_numbers.size() > kMaxOracleNumbers) {
    throw TooLarge("exhaustive oracle supports at most " + std::to_string(kMaxOracleNumbers) +
                   " starting numbers, got " + std::to_string(problem.start_numbers.size()));
  }
}

void enumerate_from(const SearchState& state, Value target, const Rules& rules,
                    std::vector<Expression>& out) {
  if (rules.allow_partial_use && state.is_goal(target, rules)) out.push_back({state.history});
  if (state.remaining.size() < 2) {
    if (!rules.allow_partial_use && state.is_goal(target, rules)) out.push_back({state.history});
    return;
  }
  for (const Step& step : successor_steps(state.remaining, rules)) {
    enumerate_from(state.apply(step, rules), target, rules, out);
  }
}

bool reachable_from(const std::vector<Value>& remaining, Value target, const Rules& rules,
                    std::set<std::vector<Value>>& dead) {
  if (remaining.size() == 1) return remaining.front() == target;
  if (dead.contains(remaining)) return false;
  for (const Step& step : successor_steps(remaining, rules)) {
    if (rules.allow_partial_use && step.result == target) return true;
    std::vector<Value> next = remaining;
    remove_one(next, step.left);
    remove_one(next, step.right);
    insert_sorted(next, step.result);
    if (reachable_from(next, target, rules, dead)) return true;
  }
  dead.insert(remaining);
  return false;
}

}  // namespace

std::vector<Expression> enumerate_solutions(const Problem& problem, const Rules& rules) {
  check_oracle_size(problem);
  std::vector<Expression> out;
  if (problem.start_numbers.empty()) return out;
  enumerate_from(SearchState::initial(problem), problem.target, rules, out);
  return out;
}

bool is_reachable(const Problem& problem, const Rules& rules) {
  check_oracle_size(problem);
  if (problem.start_numbers.empty()) return false;
  SearchState root = SearchState::initial(problem);
  if (rules.allow_partial_use && root.is_goal(problem.target, rules)) return true;
  std::set<std::vector<Value>> dead;
  return reachable_from(root.remaining, problem.target, rules, dead);
}

}  // namespace modc
