#pragma once

// Unsupervised mode discovery by gradient clustering.
//
// Pipeline: serialize trajectories without mode names -> fit a bigram model
// -> per-example gradient of the log-likelihood -> Rademacher projection ->
// k-means. Clusters then stand in for mode labels.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "modc/datagen.hpp"
#include "modc/sampler.hpp"
#include "modc/search.hpp"

namespace modc {

using TokenSeq = std::vector<std::string>;

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Tokens produced by serialize_trajectory.
  static Vocabulary trajectory_tokens();

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_[id]; }
  /// Throws UnknownToken.
  int id(std::string_view token) const;
  std::vector<int> encode(const TokenSeq& seq) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Token sequence describing the search: the target, each visited state as
/// a depth-change marker ("DN" deeper, "|" same depth, "BT" shallower) and a
/// depth tag, then the solution steps. Numbers are reduced to magnitude
/// buckets, and state contents are left out because their bigrams swamp the
/// visit-order signal. The mode that produced the trajectory is deliberately
/// not serialized.
TokenSeq serialize_trajectory(const Problem& problem, const Trajectory& trajectory);

/// Bigram model: logits[a * V + b] scores token b following token a.
struct ToyModel {
  Vocabulary vocab;
  std::vector<double> logits;

  std::size_t dim() const { return logits.size(); }
  /// Softmax of row a.
  std::vector<double> next_token_probs(int a) const;
};

ToyModel uniform_model(const Vocabulary& vocab);
ToyModel random_init_model(const Vocabulary& vocab, std::uint64_t seed, double scale = 0.1);

double example_log_likelihood(const ToyModel& model, const TokenSeq& example);

struct FitOptions {
  int epochs = 100;
  double lr = 1.0;
};

struct FitReport {
  std::vector<double> log_likelihood;  // mean per-bigram value, one entry per epoch plus start
};

/// Gradient ascent on the corpus log-likelihood with per-row scaling and a
/// halving line search, so the objective never decreases. Throws EmptyCorpus.
ToyModel fit_toy_model(const std::vector<TokenSeq>& corpus, const Vocabulary& vocab,
                       const FitOptions& options = {}, FitReport* report = nullptr);

/// Exact gradient of the example's log-likelihood w.r.t. every logit:
/// observed bigram counts minus model-expected counts per visited row.
std::vector<double> per_example_gradient(const ToyModel& model, const TokenSeq& example);

/// (1/sqrt(d)) S g with S_ij = +-1 derived from (seed, i, j); S is never
/// materialized.
std::vector<double> rademacher_project_raw(std::span<const double> g, int d, std::uint64_t seed);

struct GradientFeature {
  std::string example_id;
  std::vector<double> projected;  // unit length unless `zero`
  double norm = 0.0;              // length before normalization
  bool zero = false;
};

GradientFeature rademacher_project(std::span<const double> g, int d, std::uint64_t seed,
                                   std::string example_id = {});

struct ClusterAssignment {
  std::string example_id;
  int cluster = 0;
  int n_clusters = 1;
};

struct KMeansOptions {
  int clusters = 2;
  int max_iters = 100;
  int n_restarts = 10;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct KMeansResult {
  std::vector<int> labels;
  double wcss = 0.0;
  /// Objective after each assignment step of the winning restart.
  std::vector<double> wcss_history;
  int best_restart = 0;
};

/// k-means++ seeding, Lloyd iterations, best of n_restarts by WCSS (ties to
/// the lower restart index). Throws DegenerateInput when every point is
/// identical and clusters > 1.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& options);

std::vector<ClusterAssignment> kmeans_cluster(const std::vector<GradientFeature>& features, int C,
                                              int max_iters = 100, int n_restarts = 10,
                                              std::uint64_t seed = 0, int jobs = 1);

/// Macro-F1 over truth labels, maximized over injective label-to-cluster
/// matchings. Throws LabelMismatch on size mismatch and TooLarge above eight
/// clusters or labels.
double cluster_f1(const std::vector<int>& clusters, const std::vector<int>& truth);
double cluster_f1(const std::vector<int>& clusters, const std::vector<std::string>& truth);

enum class ModelInit { Fitted, RandomInit };

ModelInit parse_model_init(std::string_view text);

struct DiscoveryConfig {
  int clusters = 2;
  int dim = 512;
  std::uint64_t seed = 0;
  ModelInit init = ModelInit::Fitted;
  FitOptions fit;
  int max_iters = 100;
  int n_restarts = 10;
  int jobs = 1;
};

struct ClusterSummary {
  int cluster = 0;
  int size = 0;
  double dfs_share = 0.0;  // only meaningful when truth labels exist
};

struct DiscoveryResult {
  std::vector<int> cluster;  // parallel to the input examples
  std::vector<ClusterSummary> clusters;
  std::optional<double> f1;
  double wcss = 0.0;
  FitReport fit;
};

/// Clusters arbitrary token sequences. `truth`, when non-empty, must be
/// parallel to the corpus and is only used for the F1 report.
DiscoveryResult discover_modes(const std::vector<TokenSeq>& corpus, const Vocabulary& vocab,
                               const DiscoveryConfig& config, const std::vector<int>& truth = {});

/// Serializes the examples and clusters them; F1 is against the mode that
/// produced each trajectory, with DFS = 0 and BFS = 1.
DiscoveryResult discover_modes(const std::vector<TrainingExample>& examples,
                               const DiscoveryConfig& config);

/// Cluster specialists for sampling, largest cluster first.
SamplingPolicy cluster_policy(const DiscoveryResult& result, double concentration = 0.6);

}  // namespace modc
