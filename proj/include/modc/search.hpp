#pragma once

// Heuristic-guided, budget-limited DFS and BFS over Countdown states.
//
// Both searchers score children with the same heuristic and prune to the
// same beam width, but DFS prunes locally (per expansion) and spends its
// budget deep-first, while BFS prunes globally per level. With a binding
// node budget the two succeed on different problem instances.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "modc/countdown.hpp"
#include "modc/random.hpp"

namespace modc {

enum class Mode { DFS, BFS };
enum class HeuristicKind { SumDistance, NearestNumber };

inline constexpr Mode kAllModes[] = {Mode::DFS, Mode::BFS};
inline constexpr HeuristicKind kAllHeuristics[] = {HeuristicKind::SumDistance,
                                                   HeuristicKind::NearestNumber};

std::string_view to_string(Mode mode);
std::string_view to_string(HeuristicKind kind);
/// "dfs" / "bfs"
Mode parse_mode(std::string_view text);
/// "sum" / "nearest"
HeuristicKind parse_heuristic(std::string_view text);

struct Heuristic {
  HeuristicKind kind = HeuristicKind::SumDistance;
  /// Scores are perturbed by Uniform[0, noise_scale].
  double noise_scale = 0.0;
};

struct SearchConfig {
  Mode mode = Mode::DFS;
  Heuristic heuristic;
  int beam_width = 4;
  int node_budget = 256;
  std::uint64_t seed = 0;
  Rules rules;
  /// Maximum number of visit records kept on the trajectory.
  std::size_t record_limit = 256;
};

struct VisitRecord {
  std::uint64_t fingerprint = 0;
  double score = 0.0;
  int depth = 0;
  std::vector<Value> remaining;

  friend bool operator==(const VisitRecord&, const VisitRecord&) = default;
};

struct Trajectory {
  std::string problem_id;
  SearchConfig config;
  Mode mode_used = Mode::DFS;
  int expanded_nodes = 0;
  bool solved = false;
  std::optional<Expression> solution;
  std::vector<VisitRecord> visited;
};

std::uint64_t state_fingerprint(std::span<const Value> sorted_remaining) noexcept;

/// Lower is better; zero at a goal state when noise is off.
double heuristic_score(const SearchState& state, Value target, const Heuristic& h, Rng& rng);

/// All children of a state in canonical step order.
std::vector<std::pair<Step, SearchState>> expand(const SearchState& state, const Rules& rules = {});

Trajectory dfs_search(const Problem& problem, const SearchConfig& config);
Trajectory bfs_search(const Problem& problem, const SearchConfig& config);
/// Dispatches on config.mode; throws InvalidArgument for an unknown mode.
Trajectory run_search(const Problem& problem, const SearchConfig& config);

}  // namespace modc
