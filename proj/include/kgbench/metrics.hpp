#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "kgbench/graph.hpp"
#include "kgbench/split.hpp"

namespace kgbench {

// Boundary between evaluation and models: one finite score per triple,
// higher = more plausible, batch order preserved, deterministic for a fixed
// model state. Implementations must tolerate concurrent score_batch calls
// when evaluation runs multi-threaded.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual void score_batch(std::span<const TripleKey> triples, std::vector<double>& out) = 0;
};

// Deterministic stand-in for a uniform-random scorer: the score is a hash of
// (seed, h, r, t) mapped to [0,1). Stateless, so thread count cannot change it.
class HashRandomScorer : public Scorer {
 public:
  explicit HashRandomScorer(uint64_t seed) : seed_(seed) {}
  void score_batch(std::span<const TripleKey> triples, std::vector<double>& out) override;

 private:
  uint64_t seed_;
};

enum class Side : uint8_t { head, tail };
enum class TieMode : uint8_t { expected, optimistic, pessimistic };

struct RankOptions {
  bool filtered = true;          // remove known-positive corruptions
  bool typed_candidates = true;  // candidates restricted to the required node type
  TieMode tie = TieMode::expected;
};

struct RankResult {
  double rank = 0;              // 1-based; fractional under expected-rank ties
  size_t candidate_count = 0;   // after filtering, true entity included
};

// Substitutes every candidate entity into `side` of the test triple, drops
// candidates (other than the true one) whose corrupted triple is a known
// positive, scores the rest, and ranks the true triple. Expected rank is
// 1 + |{score > s}| + |{score = s, other}| / 2, the mean over random tie
// orders.
RankResult rank_entity(Scorer& scorer, const Triple& t, Side side, const Graph& g,
                       const TripleSet& known_positives, const RankOptions& opts = {});

// Fraction of ranks <= k.
double hits_at_k(std::span<const double> ranks, int k);
// Mean of 1/rank.
double mean_reciprocal_rank(std::span<const double> ranks);

struct LabeledScore {
  bool positive = false;
  double score = 0;
};

// Pairwise concordance: P(score_pos > score_neg) + 0.5 P(equal), computed via
// midranks in O(n log n); matches the O(n^2) definition exactly.
double roc_auc(std::span<const LabeledScore> scores);

// Average precision with tied groups treated atomically: each tied group
// contributes (recall gain) * (precision at the group boundary).
double pr_auc(std::span<const LabeledScore> scores);

struct RankRecord {
  TripleKey triple;
  double head_rank = 0;
  size_t head_candidates = 0;
  double tail_rank = 0;
  size_t tail_candidates = 0;
};

struct MetricBlock {
  std::map<int, double> hits;  // k -> hits@k
  double mrr = 0;
  size_t queries = 0;
};

struct ClassificationBlock {
  bool present = false;
  double roc_auc = 0;
  double pr_auc = 0;
  size_t positives = 0;
  size_t negatives = 0;
};

struct RelationReport {
  MetricBlock pooled, head, tail;
  ClassificationBlock classification;
};

struct EvalReport {
  RelationReport overall;
  std::map<std::string, RelationReport> per_relation;
  std::vector<RankRecord> records;  // canonical test order; aggregates recompute from these
  bool classification_skipped = false;
  size_t test_triples = 0;
  size_t negative_count = 0;
};

struct EvalConfig {
  std::vector<int> ks = {1, 3, 10};
  RankOptions rank;
  int threads = 1;  // rank queries are independent; results merge in test order
};

// Ranking metrics over head and tail ranks of all test triples (pooled and
// per side), classification metrics over test positives vs test negatives,
// per-relation breakdowns of both. Known-positive filter = train + valid +
// test. Missing negatives skip classification with a flag.
EvalReport evaluate(Scorer& scorer, const Split& split, const Graph& g,
                    const EvalConfig& config = {});

// report.tsv: metric <TAB> relation("ALL"|name) <TAB> side("ALL"|head|tail)
// <TAB> value
void write_eval_report(std::ostream& out, const EvalReport& report);
// ranks.tsv: one line per test triple with both ranks and candidate counts.
void write_rank_records(std::ostream& out, const EvalReport& report, const Graph& g);

}  // namespace kgbench
