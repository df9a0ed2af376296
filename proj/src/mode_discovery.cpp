#include "modc/mode_discovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "modc/error.hpp"
#include "modc/parallel.hpp"
#include "modc/random.hpp"

namespace modc {

namespace {
constexpr int kDepthTokens = 8;
}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw InvalidArgument("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::trajectory_tokens() {
  std::vector<std::string> tokens{"<s>", "</s>", "T", "DN", "|", "BT", "+", "-", "*", "/", "=", "GOAL",
                                  "N1", "N2", "N3", "N4", "D+"};
  for (int d = 0; d < kDepthTokens; ++d) tokens.push_back("D" + std::to_string(d));
  return Vocabulary(std::move(tokens));
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw UnknownToken("token '" + std::string(token) + "' is not in the vocabulary");
  return it->second;
}

std::vector<int> Vocabulary::encode(const TokenSeq& seq) const {
  std::vector<int> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq) ids.push_back(id(t));
  return ids;
}

namespace {

std::string depth_token(int depth) {
  return depth < kDepthTokens ? "D" + std::to_string(depth) : "D+";
}

std::string bucket(Value v) {
  if (v < 10) return "N1";
  if (v < 100) return "N2";
  if (v < 1000) return "N3";
  return "N4";
}

}  // namespace

TokenSeq serialize_trajectory(const Problem& problem, const Trajectory& trajectory) {
  TokenSeq out{"<s>", "T", bucket(problem.target)};
  int prev_depth = 0;
  for (std::size_t i = 0; i < trajectory.visited.size(); ++i) {
    const VisitRecord& v = trajectory.visited[i];
    if (i > 0) {
      out.push_back(v.depth > prev_depth ? "DN" : v.depth == prev_depth ? "|" : "BT");
    }
    prev_depth = v.depth;
    out.push_back(depth_token(v.depth));
  }
  if (trajectory.solution) {
    for (const Step& s : trajectory.solution->steps) {
      out.push_back(bucket(s.left));
      out.push_back(std::string(1, op_symbol(s.op)));
      out.push_back(bucket(s.right));
      out.push_back("=");
      out.push_back(bucket(s.result));
    }
    out.push_back("GOAL");
  }
  out.push_back("</s>");
  return out;
}

std::vector<double> ToyModel::next_token_probs(int a) const {
  const std::size_t v = vocab.size();
  const double* row = logits.data() + static_cast<std::size_t>(a) * v;
  const double mx = *std::max_element(row, row + v);
  std::vector<double> p(v);
  double z = 0.0;
  for (std::size_t b = 0; b < v; ++b) z += (p[b] = std::exp(row[b] - mx));
  for (double& x : p) x /= z;
  return p;
}

ToyModel uniform_model(const Vocabulary& vocab) {
  return {vocab, std::vector<double>(vocab.size() * vocab.size(), 0.0)};
}

ToyModel random_init_model(const Vocabulary& vocab, std::uint64_t seed, double scale) {
  ToyModel m = uniform_model(vocab);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (double& x : m.logits) x = normal(rng.engine());
  return m;
}

namespace {

double row_logsumexp(const double* row, std::size_t v) {
  const double mx = *std::max_element(row, row + v);
  double z = 0.0;
  for (std::size_t b = 0; b < v; ++b) z += std::exp(row[b] - mx);
  return mx + std::log(z);
}

// Sum of log-likelihoods given bigram counts.
double counts_log_likelihood(const std::vector<double>& logits, const std::vector<double>& counts,
                             std::size_t v) {
  double ll = 0.0;
  for (std::size_t a = 0; a < v; ++a) {
    const double* row = logits.data() + a * v;
    const double* c = counts.data() + a * v;
    const double n = std::accumulate(c, c + v, 0.0);
    if (n == 0.0) continue;
    const double lse = row_logsumexp(row, v);
    for (std::size_t b = 0; b < v; ++b) {
      if (c[b] != 0.0) ll += c[b] * (row[b] - lse);
    }
  }
  return ll;
}

void add_bigram_counts(const std::vector<int>& ids, std::size_t v, std::vector<double>& counts) {
  for (std::size_t t = 1; t < ids.size(); ++t) counts[ids[t - 1] * v + ids[t]] += 1.0;
}

}  // namespace

double example_log_likelihood(const ToyModel& model, const TokenSeq& example) {
  const std::size_t v = model.vocab.size();
  const std::vector<int> ids = model.vocab.encode(example);
  double ll = 0.0;
  for (std::size_t t = 1; t < ids.size(); ++t) {
    const double* row = model.logits.data() + static_cast<std::size_t>(ids[t - 1]) * v;
    ll += row[ids[t]] - row_logsumexp(row, v);
  }
  return ll;
}

ToyModel fit_toy_model(const std::vector<TokenSeq>& corpus, const Vocabulary& vocab,
                       const FitOptions& options, FitReport* report) {
  if (corpus.empty()) throw EmptyCorpus("cannot fit a model to an empty corpus");
  if (options.epochs < 0 || !(options.lr > 0.0)) throw InvalidArgument("need epochs >= 0 and lr > 0");
  const std::size_t v = vocab.size();
  std::vector<double> counts(v * v, 0.0);
  for (const TokenSeq& seq : corpus) add_bigram_counts(vocab.encode(seq), v, counts);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total == 0.0) throw EmptyCorpus("corpus contains no bigrams");

  ToyModel model = uniform_model(vocab);
  double ll = counts_log_likelihood(model.logits, counts, v);
  if (report) report->log_likelihood = {ll / total};
  double lr = options.lr;

  std::vector<double> direction(v * v);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // Row-scaled gradient: empirical next-token distribution minus model's.
    for (std::size_t a = 0; a < v; ++a) {
      const double* c = counts.data() + a * v;
      const double n = std::accumulate(c, c + v, 0.0);
      if (n == 0.0) {
        std::fill_n(direction.begin() + a * v, v, 0.0);
        continue;
      }
      const auto p = model.next_token_probs(static_cast<int>(a));
      for (std::size_t b = 0; b < v; ++b) direction[a * v + b] = c[b] / n - p[b];
    }
    for (int tries = 0; tries < 40; ++tries) {
      std::vector<double> candidate = model.logits;
      for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] += lr * direction[i];
      const double cand_ll = counts_log_likelihood(candidate, counts, v);
      if (cand_ll >= ll) {
        model.logits = std::move(candidate);
        ll = cand_ll;
        break;
      }
      lr *= 0.5;
    }
    if (report) report->log_likelihood.push_back(ll / total);
  }
  return model;
}

std::vector<double> per_example_gradient(const ToyModel& model, const TokenSeq& example) {
  const std::size_t v = model.vocab.size();
  const std::vector<int> ids = model.vocab.encode(example);
  std::vector<double> g(v * v, 0.0);
  std::vector<double> row_total(v, 0.0);
  for (std::size_t t = 1; t < ids.size(); ++t) {
    g[ids[t - 1] * v + ids[t]] += 1.0;
    row_total[ids[t - 1]] += 1.0;
  }
  for (std::size_t a = 0; a < v; ++a) {
    if (row_total[a] == 0.0) continue;
    const auto p = model.next_token_probs(static_cast<int>(a));
    for (std::size_t b = 0; b < v; ++b) g[a * v + b] -= row_total[a] * p[b];
  }
  return g;
}

std::vector<double> rademacher_project_raw(std::span<const double> g, int d, std::uint64_t seed) {
  if (d < 1) throw InvalidArgument("projection dimension must be >= 1");
  std::vector<std::size_t> nz;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g[j] != 0.0) nz.push_back(j);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> out(d, 0.0);
  for (int i = 0; i < d; ++i) {
    std::size_t cached_block = std::numeric_limits<std::size_t>::max();
    std::uint64_t bits = 0;
    double s = 0.0;
    for (std::size_t j : nz) {
      const std::size_t block = j / 64;
      if (block != cached_block) {
        bits = derive_seed(seed, "rademacher", i, block);
        cached_block = block;
      }
      s += ((bits >> (j % 64)) & 1u) ? g[j] : -g[j];
    }
    out[i] = scale * s;
  }
  return out;
}

GradientFeature rademacher_project(std::span<const double> g, int d, std::uint64_t seed,
                                   std::string example_id) {
  GradientFeature f;
  f.example_id = std::move(example_id);
  f.projected = rademacher_project_raw(g, d, seed);
  double ss = 0.0;
  for (double x : f.projected) ss += x * x;
  f.norm = std::sqrt(ss);
  if (f.norm == 0.0) {
    f.zero = true;
  } else {
    for (double& x : f.projected) x /= f.norm;
  }
  return f;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

struct Restart {
  std::vector<int> labels;
  double wcss = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

Restart lloyd(const std::vector<std::vector<double>>& pts, const KMeansOptions& opt, std::uint64_t seed) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.front().size();
  const int kc = opt.clusters;
  Rng rng(seed);

  // k-means++ seeding
  std::vector<std::vector<double>> centers;
  centers.push_back(pts[static_cast<std::size_t>(rng.integer(0, n - 1))]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts[i].data(), centers[0].data(), dim);
  while (static_cast<int>(centers.size()) < kc) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = rng.uniform(0.0, total);
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = static_cast<std::size_t>(rng.integer(0, n - 1));
    }
    centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(pts[i].data(), centers.back().data(), dim));
    }
  }

  Restart r;
  r.labels.assign(n, -1);
  std::vector<double> best_d(n);
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    bool changed = false;
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < kc; ++c) {
        const double dd = sq_dist(pts[i].data(), centers[c].data(), dim);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (r.labels[i] != best) changed = true;
      r.labels[i] = best;
      best_d[i] = bd;
      wcss += bd;
    }
    r.history.push_back(wcss);
    r.wcss = wcss;
    const bool converged = !changed || (prev - wcss) <= opt.rel_tol * std::max(prev, 1e-300);
    prev = wcss;
    if (converged && iter > 0) break;

    std::vector<std::vector<double>> sums(kc, std::vector<double>(dim, 0.0));
    std::vector<int> sizes(kc, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[r.labels[i]];
      for (std::size_t t = 0; t < dim; ++t) s[t] += pts[i][t];
      ++sizes[r.labels[i]];
    }
    std::vector<bool> taken(n, false);
    for (int c = 0; c < kc; ++c) {
      if (sizes[c] > 0) {
        for (std::size_t t = 0; t < dim; ++t) centers[c][t] = sums[c][t] / sizes[c];
        continue;
      }
      // Empty cluster: move its center onto the worst-fit point.
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && best_d[i] > fd) {
          fd = best_d[i];
          far = i;
        }
      }
      taken[far] = true;
      centers[c] = pts[far];
    }
  }
  return r;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansOptions& opt) {
  if (opt.clusters < 1) throw InvalidArgument("need at least one cluster");
  if (points.size() < static_cast<std::size_t>(opt.clusters)) {
    throw InvalidArgument("more clusters than points");
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("points have inconsistent dimensions");
  }
  if (opt.clusters > 1 &&
      std::all_of(points.begin(), points.end(), [&](const auto& p) { return p == points.front(); })) {
    throw DegenerateInput("all points are identical; cannot form " + std::to_string(opt.clusters) +
                          " clusters");
  }
  if (opt.max_iters < 1 || opt.n_restarts < 1) throw InvalidArgument("need max_iters, n_restarts >= 1");

  std::vector<Restart> runs(opt.n_restarts);
  parallel_for(runs.size(), opt.jobs, [&](std::size_t r) {
    runs[r] = lloyd(points, opt, derive_seed(opt.seed, "kmeans-restart", r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].wcss < runs[best].wcss) best = r;
  }
  return {std::move(runs[best].labels), runs[best].wcss, std::move(runs[best].history),
          static_cast<int>(best)};
}

std::vector<ClusterAssignment> kmeans_cluster(const std::vector<GradientFeature>& features, int C,
                                              int max_iters, int n_restarts, std::uint64_t seed,
                                              int jobs) {
  std::vector<std::vector<double>> pts;
  pts.reserve(features.size());
  for (const auto& f : features) pts.push_back(f.projected);
  const KMeansResult r = kmeans(pts, {C, max_iters, n_restarts, 1e-6, seed, jobs});
  std::vector<ClusterAssignment> out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) out.push_back({features[i].example_id, r.labels[i], C});
  return out;
}

double cluster_f1(const std::vector<int>& clusters, const std::vector<int>& truth) {
  if (clusters.size() != truth.size() || clusters.empty()) {
    throw LabelMismatch("need equally many (and at least one) cluster ids and truth labels");
  }
  std::vector<int> cids(clusters.begin(), clusters.end());
  std::sort(cids.begin(), cids.end());
  cids.erase(std::unique(cids.begin(), cids.end()), cids.end());
  std::vector<int> lids(truth.begin(), truth.end());
  std::sort(lids.begin(), lids.end());
  lids.erase(std::unique(lids.begin(), lids.end()), lids.end());
  if (cids.size() > 8 || lids.size() > 8) throw TooLarge("F1 matching supports at most 8 clusters and labels");

  const std::size_t m = std::max(cids.size(), lids.size());
  // confusion[l][c]; cluster columns beyond cids.size() are empty dummies.
  std::vector<std::vector<int>> confusion(lids.size(), std::vector<int>(m, 0));
  std::vector<int> csize(m, 0), lsize(lids.size(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto l = std::lower_bound(lids.begin(), lids.end(), truth[i]) - lids.begin();
    const auto c = std::lower_bound(cids.begin(), cids.end(), clusters[i]) - cids.begin();
    ++confusion[l][c];
    ++csize[c];
    ++lsize[l];
  }
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double sum = 0.0;
    for (std::size_t l = 0; l < lids.size(); ++l) {
      const int c = perm[l];
      const int tp = confusion[l][c];
      if (tp == 0) continue;
      const double precision = static_cast<double>(tp) / csize[c];
      const double recall = static_cast<double>(tp) / lsize[l];
      sum += 2.0 * precision * recall / (precision + recall);
    }
    best = std::max(best, sum / lids.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double cluster_f1(const std::vector<int>& clusters, const std::vector<std::string>& truth) {
  std::unordered_map<std::string, int> ids;
  std::vector<int> t;
  t.reserve(truth.size());
  for (const auto& s : truth) t.push_back(ids.emplace(s, static_cast<int>(ids.size())).first->second);
  return cluster_f1(clusters, t);
}

ModelInit parse_model_init(std::string_view text) {
  if (text == "fitted") return ModelInit::Fitted;
  if (text == "random-init") return ModelInit::RandomInit;
  throw InvalidArgument("unknown model init '" + std::string(text) + "'");
}

DiscoveryResult discover_modes(const std::vector<TokenSeq>& corpus, const Vocabulary& vocab,
                               const DiscoveryConfig& config, const std::vector<int>& truth) {
  if (corpus.empty()) throw EmptyCorpus("no examples to cluster");
  if (!truth.empty() && truth.size() != corpus.size()) {
    throw LabelMismatch("truth labels must be parallel to the corpus");
  }
  DiscoveryResult out;
  const ToyModel model = config.init == ModelInit::Fitted
                             ? fit_toy_model(corpus, vocab, config.fit, &out.fit)
                             : random_init_model(vocab, derive_seed(config.seed, "model-init"));

  std::vector<std::vector<double>> features(corpus.size());
  const std::uint64_t proj_seed = derive_seed(config.seed, "projection");
  parallel_for(corpus.size(), config.jobs, [&](std::size_t i) {
    GradientFeature f = rademacher_project(per_example_gradient(model, corpus[i]), config.dim, proj_seed);
    features[i] = std::move(f.projected);
  });

  KMeansOptions km;
  km.clusters = config.clusters;
  km.max_iters = config.max_iters;
  km.n_restarts = config.n_restarts;
  km.seed = derive_seed(config.seed, "kmeans");
  km.jobs = config.jobs;
  KMeansResult r = kmeans(features, km);
  out.cluster = std::move(r.labels);
  out.wcss = r.wcss;

  out.clusters.resize(config.clusters);
  std::vector<int> dfs(config.clusters, 0);
  for (int c = 0; c < config.clusters; ++c) out.clusters[c].cluster = c;
  for (std::size_t i = 0; i < out.cluster.size(); ++i) {
    ++out.clusters[out.cluster[i]].size;
    if (!truth.empty() && truth[i] == 0) ++dfs[out.cluster[i]];
  }
  if (!truth.empty()) {
    for (int c = 0; c < config.clusters; ++c) {
      const int size = out.clusters[c].size;
      out.clusters[c].dfs_share = size ? static_cast<double>(dfs[c]) / size : 0.0;
    }
    out.f1 = cluster_f1(out.cluster, truth);
  }
  return out;
}

DiscoveryResult discover_modes(const std::vector<TrainingExample>& examples,
                               const DiscoveryConfig& config) {
  std::vector<TokenSeq> corpus;
  std::vector<int> truth;
  corpus.reserve(examples.size());
  for (const auto& ex : examples) {
    corpus.push_back(serialize_trajectory(ex.problem, ex.trajectory));
    truth.push_back(ex.trajectory.mode_used == Mode::DFS ? 0 : 1);
  }
  return discover_modes(corpus, Vocabulary::trajectory_tokens(), config, truth);
}

SamplingPolicy cluster_policy(const DiscoveryResult& result, double concentration) {
  std::vector<ClusterSummary> order = result.clusters;
  std::stable_sort(order.begin(), order.end(),
                   [](const ClusterSummary& a, const ClusterSummary& b) { return a.size > b.size; });
  std::vector<double> q;
  for (const auto& c : order) {
    if (c.size > 0) q.push_back(c.dfs_share);
  }
  return SamplingPolicy::modc_clusters(std::move(q), concentration);
}

}  // namespace modc
