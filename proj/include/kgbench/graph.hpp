#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgbench/schema.hpp"

namespace kgbench {

using EntityIdx = uint32_t;

enum class Polarity : uint8_t { positive, negative };

struct Date {
  int year = 0;
  unsigned month = 0;
  unsigned day = 0;
  auto operator<=>(const Date&) const = default;
};

std::optional<Date> parse_date(std::string_view s);  // strict YYYY-MM-DD
std::string format_date(const Date& d);

// One typed, polarity-labeled, quality-scored, source-attributed edge.
// head/tail are dense intern indices into the owning EntityTable.
struct Triple {
  EntityIdx head = 0;
  RelationIdx rel = 0;
  EntityIdx tail = 0;
  Polarity polarity = Polarity::positive;
  std::optional<double> quality;
  std::optional<Date> date;
  std::string source;
};

// Canonical ordering used everywhere a deterministic triple order is needed.
inline bool triple_less(const Triple& a, const Triple& b) {
  if (a.head != b.head) return a.head < b.head;
  if (a.rel != b.rel) return a.rel < b.rel;
  if (a.tail != b.tail) return a.tail < b.tail;
  return a.polarity < b.polarity;
}

// Total order over every field; exact duplicates end up adjacent.
inline bool triple_full_less(const Triple& a, const Triple& b) {
  if (a.head != b.head) return a.head < b.head;
  if (a.rel != b.rel) return a.rel < b.rel;
  if (a.tail != b.tail) return a.tail < b.tail;
  if (a.polarity != b.polarity) return a.polarity < b.polarity;
  if (a.quality != b.quality) return a.quality < b.quality;
  if (a.source != b.source) return a.source < b.source;
  return a.date < b.date;
}

struct TripleKey {
  EntityIdx head = 0;
  RelationIdx rel = 0;
  EntityIdx tail = 0;
  bool operator==(const TripleKey&) const = default;
};

struct TripleKeyHash {
  size_t operator()(const TripleKey& k) const {
    uint64_t x = (uint64_t(k.head) << 32) ^ (uint64_t(k.rel) << 17) ^ uint64_t(k.tail);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return static_cast<size_t>(x);
  }
};

// Plain (h, r, t) existence set; used as the mutable train index during
// split repair and as the known-positive filter in ranking.
class TripleSet {
 public:
  void insert(const TripleKey& k) { set_.insert(k); }
  void insert(const Triple& t) { set_.insert(TripleKey{t.head, t.rel, t.tail}); }
  bool has(const TripleKey& k) const { return set_.count(k) != 0; }
  bool has(EntityIdx h, RelationIdx r, EntityIdx t) const { return has(TripleKey{h, r, t}); }
  // Also matches the reversed direction when r is symmetric, so canonical
  // (undirected) storage does not hide a duplicate.
  bool has_sym_aware(const TripleKey& k, const RelationSchema& schema) const {
    if (has(k)) return true;
    return schema.relation(k.rel).symmetric && has(TripleKey{k.tail, k.rel, k.head});
  }
  size_t size() const { return set_.size(); }
  void reserve(size_t n) { set_.reserve(n); }

 private:
  std::unordered_set<TripleKey, TripleKeyHash> set_;
};

// Interns (node_type, local_id) pairs to dense indices, a bijection onto
// 0..|E|-1. The table defines the entity universe: candidate sets and typed
// corruption draw from it, whether or not an entity survived edge filtering.
class EntityTable {
 public:
  EntityIdx intern(NodeTypeIdx type, std::string_view local_id);
  std::optional<EntityIdx> find(NodeTypeIdx type, std::string_view local_id) const;

  size_t size() const { return types_.size(); }
  NodeTypeIdx type_of(EntityIdx e) const { return types_[e]; }
  const std::string& local_id(EntityIdx e) const { return local_ids_[e]; }
  // "TYPE:local" form used in all file formats.
  std::string name(EntityIdx e, const RelationSchema& schema) const;

  std::span<const EntityIdx> entities_of_type(NodeTypeIdx type) const;
  size_t type_count() const { return by_type_.size(); }

 private:
  std::vector<NodeTypeIdx> types_;
  std::vector<std::string> local_ids_;
  std::unordered_map<std::string, EntityIdx> index_;  // key "type_idx:local"
  std::vector<std::vector<EntityIdx>> by_type_;
};

struct GraphStats {
  std::vector<std::pair<std::string, size_t>> entities_per_node_type;  // nonzero only
  std::vector<std::pair<std::string, size_t>> triples_per_relation;    // nonzero only
  size_t distinct_node_types = 0;
  size_t distinct_relations = 0;
  size_t positive_triples = 0;
  size_t negative_triples = 0;
  size_t entity_count = 0;
};

struct AssembleReport {
  size_t duplicates_merged = 0;
  size_t conflicts = 0;        // same (h,r,t) asserted positive and negative
  size_t type_rejected = 0;    // domain/range violations
  std::vector<std::string> notes;
};

// Deduplicated triple store with existence and adjacency indices.
// Immutable after assemble(); safe for concurrent reads.
class Graph {
 public:
  // Merges duplicate (h,r,t,polarity) keeping max quality, the
  // lexicographically smallest source and the earliest date. A key asserted
  // both positive and negative keeps the positive; the negative is dropped
  // and counted as a conflict. Type-violating triples are rejected and
  // counted. Stored triples are sorted canonically.
  static Graph assemble(std::vector<Triple> triples, const RelationSchema& schema,
                        EntityTable entities, AssembleReport* report = nullptr);

  const RelationSchema& schema() const { return *schema_; }
  const EntityTable& entities() const { return entities_; }

  std::span<const Triple> triples() const { return triples_; }
  size_t positive_count() const { return positive_count_; }
  size_t negative_count() const { return triples_.size() - positive_count_; }

  bool has(EntityIdx h, RelationIdx r, EntityIdx t, Polarity pol) const;
  bool has_positive(EntityIdx h, RelationIdx r, EntityIdx t) const {
    return has(h, r, t, Polarity::positive);
  }
  // Symmetric relations also match the reversed direction.
  bool has_positive_sym_aware(EntityIdx h, RelationIdx r, EntityIdx t) const;

  std::span<const uint32_t> by_head(EntityIdx e) const;   // triple indices
  std::span<const uint32_t> by_tail(EntityIdx e) const;
  std::span<const uint32_t> by_relation(RelationIdx r) const;

  std::span<const EntityIdx> entities_of_type(NodeTypeIdx type) const {
    return entities_.entities_of_type(type);
  }

  GraphStats stats() const;

 private:
  Graph() = default;

  const RelationSchema* schema_ = nullptr;
  EntityTable entities_;
  std::vector<Triple> triples_;  // sorted canonically; positives and negatives
  size_t positive_count_ = 0;
  std::unordered_map<TripleKey, uint32_t, TripleKeyHash> existence_;  // key -> triple idx
  // CSR adjacency
  std::vector<uint32_t> head_offsets_, head_items_;
  std::vector<uint32_t> tail_offsets_, tail_items_;
  std::vector<uint32_t> rel_offsets_, rel_items_;
};

enum class Inferable : uint8_t { none, reverse_symmetric, inverse, super_relation };

const char* to_string(Inferable reason);

// Returns the first matching leakage rule for a positive candidate against a
// train index, checked in the order reverse_symmetric -> inverse ->
// super_relation (a test edge whose relation is an ancestor of a train edge's
// relation over the same pair is entailed by the more specific fact).
Inferable is_trivially_inferable(const TripleKey& candidate, const TripleSet& train,
                                 const RelationSchema& schema);

// Symmetric relations store (min, max) by intern index; everything else is
// left untouched. Idempotent.
Triple canonical_form(Triple t, const RelationSchema& schema);
TripleKey canonical_key(TripleKey k, const RelationSchema& schema);

void write_stats(std::ostream& out, const GraphStats& stats);

}  // namespace kgbench
