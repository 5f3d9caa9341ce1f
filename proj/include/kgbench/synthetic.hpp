#pragma once

#include <map>
#include <string>
#include <vector>

#include "kgbench/graph.hpp"
#include "kgbench/schema.hpp"

namespace kgbench {

// Desk-scale corpus generator. Planted edges are the top-scoring typed pairs
// under a latent translational model, so embedding baselines have learnable
// signal; noise edges are uniform typed pairs. Self-loops are never emitted
// and disjoint relation pairs never receive the same (head, tail).
struct SyntheticSpec {
  std::map<std::string, size_t> entities_per_type;    // node type -> entity count
  std::vector<RelationRecord> relations;              // validated at generation time
  std::map<std::string, size_t> edges_per_relation;   // relation -> edge count
  int latent_dim = 4;
  double noise_fraction = 0.1;
  uint64_t seed = 0;

  // Requires at least one symmetric relation, one inverse pair, one
  // parent/child pair and one disjoint pair, matching what the splitter's
  // leakage rules need to be exercised.
  void check() const;
};

// Two node types, six relations: a symmetric interaction, a mutually inverse
// pair, and a parent with two disjoint children. 150+150 entities, 500 edges
// per relation.
SyntheticSpec default_synthetic_spec();

struct SyntheticData {
  RelationSchema schema;
  EntityTable entities;
  std::vector<Triple> triples;  // positives, canonical order
};

SyntheticData generate_synthetic_data(const SyntheticSpec& spec);

// Emits edges.tsv, schema.tsv and thresholds.tsv in the exact ingest formats.
void write_synthetic_files(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace kgbench
