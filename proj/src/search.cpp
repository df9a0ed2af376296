#include "modc/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "modc/error.hpp"

namespace modc {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::DFS: return "dfs";
    case Mode::BFS: return "bfs";
  }
  throw InvalidArgument("unknown search mode");
}

std::string_view to_string(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::SumDistance: return "sum";
    case HeuristicKind::NearestNumber: return "nearest";
  }
  throw InvalidArgument("unknown heuristic");
}

Mode parse_mode(std::string_view text) {
  if (text == "dfs") return Mode::DFS;
  if (text == "bfs") return Mode::BFS;
  throw InvalidArgument("unknown mode '" + std::string(text) + "'");
}

HeuristicKind parse_heuristic(std::string_view text) {
  if (text == "sum") return HeuristicKind::SumDistance;
  if (text == "nearest") return HeuristicKind::NearestNumber;
  throw InvalidArgument("unknown heuristic '" + std::string(text) + "'");
}

std::uint64_t state_fingerprint(std::span<const Value> sorted_remaining) noexcept {
  std::uint64_t h = mix64(sorted_remaining.size());
  for (Value v : sorted_remaining) h = mix64(h ^ static_cast<std::uint64_t>(v));
  return h;
}

double heuristic_score(const SearchState& state, Value target, const Heuristic& h, Rng& rng) {
  double base = 0.0;
  switch (h.kind) {
    case HeuristicKind::SumDistance: {
      const Value sum = std::accumulate(state.remaining.begin(), state.remaining.end(), Value{0});
      base = static_cast<double>(std::abs(target - sum));
      break;
    }
    case HeuristicKind::NearestNumber: {
      Value best = std::numeric_limits<Value>::max();
      for (Value v : state.remaining) best = std::min(best, std::abs(target - v));
      base = static_cast<double>(best);
      break;
    }
  }
  if (h.noise_scale > 0.0) base += rng.uniform(0.0, h.noise_scale);
  return base;
}

std::vector<std::pair<Step, SearchState>> expand(const SearchState& state, const Rules& rules) {
  std::vector<std::pair<Step, SearchState>> children;
  if (state.remaining.size() < 2) return children;
  for (const Step& step : successor_steps(state.remaining, rules)) {
    children.emplace_back(step, state.apply(step, rules));
  }
  return children;
}

namespace {

void validate(const SearchConfig& config) {
  if (config.beam_width < 1) throw InvalidArgument("beam_width must be >= 1");
  if (config.node_budget < 1) throw InvalidArgument("node_budget must be >= 1");
  if (config.heuristic.noise_scale < 0.0 || !std::isfinite(config.heuristic.noise_scale)) {
    throw InvalidArgument("noise_scale must be finite and non-negative");
  }
}

struct Scored {
  double score;
  std::size_t order;  // canonical child index, breaks score ties
  SearchState state;
};

bool by_score(const Scored& a, const Scored& b) {
  if (a.score != b.score) return a.score < b.score;
  return a.order < b.order;
}

class Recorder {
 public:
  Recorder(Trajectory& t, std::size_t limit) : t_(t), limit_(limit) {}
  void visit(const SearchState& s, double score, int depth) {
    if (t_.visited.size() >= limit_) return;
    t_.visited.push_back({state_fingerprint(s.remaining), score, depth, s.remaining});
  }

 private:
  Trajectory& t_;
  std::size_t limit_;
};

Trajectory start_trajectory(const Problem& problem, const SearchConfig& config, Mode mode) {
  if (config.mode != mode) throw InvalidArgument("search config mode does not match searcher");
  validate(config);
  Trajectory t;
  t.problem_id = problem.id;
  t.config = config;
  t.mode_used = mode;
  return t;
}

void finish(Trajectory& t, const SearchState& goal) {
  t.solved = true;
  t.solution = Expression{goal.history};
}

class DepthFirst {
 public:
  DepthFirst(const Problem& p, const SearchConfig& c, Trajectory& t)
      : problem_(p), config_(c), traj_(t), rng_(c.seed), rec_(t, c.record_limit) {}

  void run() {
    SearchState root = SearchState::initial(problem_);
    const double score = heuristic_score(root, problem_.target, config_.heuristic, rng_);
    visit(root, score, 0);
  }

 private:
  // Returns true when the search should stop (solved or out of budget).
  // No visited-set is needed along a path: every step shrinks the multiset,
  // so a path cannot revisit a state.
  bool visit(const SearchState& state, double score, int depth) {
    rec_.visit(state, score, depth);
    if (state.is_goal(problem_.target, config_.rules)) {
      finish(traj_, state);
      return true;
    }
    if (state.remaining.size() < 2) return false;
    if (traj_.expanded_nodes >= config_.node_budget) return true;
    ++traj_.expanded_nodes;

    auto children = expand(state, config_.rules);
    std::vector<Scored> scored;
    scored.reserve(children.size());
    for (std::size_t i = 0; i < children.size(); ++i) {
      const double s = heuristic_score(children[i].second, problem_.target, config_.heuristic, rng_);
      scored.push_back({s, i, std::move(children[i].second)});
    }
    std::sort(scored.begin(), scored.end(), by_score);
    if (scored.size() > static_cast<std::size_t>(config_.beam_width)) {
      scored.resize(config_.beam_width);
    }
    for (const Scored& child : scored) {
      if (visit(child.state, child.score, depth + 1)) return true;
    }
    return false;
  }

  const Problem& problem_;
  const SearchConfig& config_;
  Trajectory& traj_;
  Rng rng_;
  Recorder rec_;
};

}  // namespace

Trajectory dfs_search(const Problem& problem, const SearchConfig& config) {
  Trajectory t = start_trajectory(problem, config, Mode::DFS);
  DepthFirst(problem, config, t).run();
  return t;
}

Trajectory bfs_search(const Problem& problem, const SearchConfig& config) {
  Trajectory t = start_trajectory(problem, config, Mode::BFS);
  Rng rng(config.seed);
  Recorder rec(t, config.record_limit);

  SearchState root = SearchState::initial(problem);
  std::vector<Scored> frontier;
  frontier.push_back({heuristic_score(root, problem.target, config.heuristic, rng), 0, root});

  for (int depth = 0; !frontier.empty(); ++depth) {
    for (const Scored& node : frontier) {
      rec.visit(node.state, node.score, depth);
      if (node.state.is_goal(problem.target, config.rules)) {
        finish(t, node.state);
        return t;
      }
    }
    std::vector<Scored> next;
    for (const Scored& node : frontier) {
      if (node.state.remaining.size() < 2) continue;
      if (t.expanded_nodes >= config.node_budget) return t;
      ++t.expanded_nodes;
      for (auto& [step, child] : expand(node.state, config.rules)) {
        const double s = heuristic_score(child, problem.target, config.heuristic, rng);
        next.push_back({s, next.size(), std::move(child)});
      }
    }
    // Merge states with identical multisets within the level, keeping the
    // best-scoring representative.
    std::sort(next.begin(), next.end(), by_score);
    std::vector<Scored> merged;
    std::map<std::vector<Value>, bool> seen;
    for (Scored& s : next) {
      if (seen.emplace(s.state.remaining, true).second) merged.push_back(std::move(s));
      if (merged.size() == static_cast<std::size_t>(config.beam_width)) break;
    }
    frontier = std::move(merged);
  }
  return t;
}

Trajectory run_search(const Problem& problem, const SearchConfig& config) {
  switch (config.mode) {
    case Mode::DFS: return dfs_search(problem, config);
    case Mode::BFS: return bfs_search(problem, config);
  }
  throw InvalidArgument("unknown search mode");
}

}  // namespace modc
