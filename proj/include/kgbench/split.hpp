#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgbench/graph.hpp"
#include "kgbench/rng.hpp"

namespace kgbench {

enum class SplitMode : uint8_t { random, time_slice };

struct SplitSpec {
  SplitMode mode = SplitMode::random;
  double train_ratio = 0.9;
  double valid_ratio = 0.05;
  double test_ratio = 0.05;
  double negative_ratio = 1.0;  // negatives per positive
  uint64_t seed = 0;
  int max_corruption_attempts = 100;

  void check() const;  // ratios >= 0 and sum to 1 within 1e-9, etc.
};

struct NegativeStats {
  size_t true_assigned = 0;
  size_t sampled = 0;
  size_t skipped = 0;  // corruption exhausted
};

struct SplitReport {
  SplitMode mode = SplitMode::random;
  // moved-to-train (random mode) / dropped (time-slice mode), keyed by
  // unseen_entity | reverse_symmetric | inverse | super_relation
  std::map<std::string, size_t> moved;
  std::map<std::string, size_t> dropped;
  size_t repair_iterations = 0;
  NegativeStats negatives[3];  // train, valid, test
  std::vector<std::string> warnings;
};

// Disjoint train/valid/test positives plus per-part negatives. Entity and
// relation indices refer to the graph the split was produced from.
struct Split {
  std::vector<Triple> train, valid, test;
  std::vector<Triple> train_neg, valid_neg, test_neg;
  SplitReport report;
};

extern const char* const kPartNames[3];  // "train", "valid", "test"

// Shuffles positives with the seeded generator, cuts by ratio, then repairs
// to a fixpoint: valid/test triples with entities absent from train, or
// trivially inferable from the current train index, are moved into train.
// Moves are monotone, so the loop terminates in at most |positives| passes.
// Negatives are attached via sample_negatives.
Split random_split(const Graph& g, const SplitSpec& spec);

struct TimeSliceSplit {
  Graph merged;  // union of both snapshots; the split's indices refer to it
  Split split;
};

// train = positives of the old snapshot. New-only positives become
// candidates; candidates touching entities unseen in train, or trivially
// inferable from train, are dropped (train is fixed history) and counted.
// Survivors are divided between valid and test in ratio valid:test.
TimeSliceSplit time_slice_split(const Graph& g_old, const Graph& g_new, const SplitSpec& spec);

// Attaches negatives to fixed parts. True negatives (polarity-negative
// triples of the graph) are assigned first: a disjointness-derived negative
// goes to the part holding its generating positive, source-provided ones to
// train. Remaining per-part quota ceil(negative_ratio * |part|) is filled by
// typed corruption with a fair head/tail coin per positive, rejecting
// candidates that equal any positive in the whole graph or any accepted
// negative.
void sample_negatives(Split& split, const Graph& g, const SplitSpec& spec);

// One typed corruption of `pos`: a coin picks the slot, the replacement is
// drawn uniformly from entities of the slot's node type. Returns nullopt when
// every attempt collided with a positive (symmetric-aware) or with
// `accepted`. Symmetric-relation candidates come back canonicalized.
std::optional<Triple> sample_typed_corruption(Rng& rng, const Triple& pos, const Graph& g,
                                              int max_attempts,
                                              const TripleSet* accepted = nullptr);

// train.tsv / valid.tsv / test.tsv / *_neg.tsv (head <TAB> relation <TAB>
// tail) and split_report.tsv (key <TAB> value).
void write_split_files(const std::string& dir, const Split& split, const Graph& g);
void write_split_report(std::ostream& out, const SplitReport& report);

// Reads a part file against an existing graph; unknown entities or relations
// are data errors (part files never extend the universe).
std::vector<Triple> read_split_part(const std::string& path, const Graph& g, Polarity polarity);

}  // namespace kgbench
