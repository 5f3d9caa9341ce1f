#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgbench {

using NodeTypeIdx = uint32_t;
using RelationIdx = uint32_t;

// One line of a relation-schema file, before validation.
struct RelationRecord {
  std::string name;
  std::string domain;
  std::string range;
  bool symmetric = false;
  std::string inverse_of;               // empty = none
  std::vector<std::string> parents;
  std::vector<std::string> disjoint_with;
};

// A validated relation definition with all cross-references resolved to
// indices and the hierarchy closure precomputed.
struct RelationDef {
  std::string name;
  NodeTypeIdx domain = 0;
  NodeTypeIdx range = 0;
  bool symmetric = false;
  std::optional<RelationIdx> inverse;
  std::vector<RelationIdx> parents;      // direct super-relations
  std::vector<RelationIdx> disjoint;     // symmetrized, sorted
  std::vector<RelationIdx> ancestors;    // strict transitive closure, sorted
  std::vector<RelationIdx> descendants;  // strict transitive closure, sorted
};

// Immutable after validate(); safe for concurrent reads.
class RelationSchema {
 public:
  // Enforces every RelationDef invariant or throws SchemaError:
  // duplicate relation names, malformed node-type labels, symmetric relations
  // with domain != range, non-mutual inverses, inverse signature mismatches,
  // cyclic hierarchies, child/parent signature mismatches, self- or
  // ancestor-disjointness, and disjoint pairs with differing signatures.
  // Disjointness is symmetrized; the ancestor/descendant closure is
  // precomputed here because inferability checks sit on the splitter's
  // hot path.
  static RelationSchema validate(const std::vector<RelationRecord>& records);

  size_t node_type_count() const { return node_types_.size(); }
  size_t relation_count() const { return relations_.size(); }

  const std::string& node_type_name(NodeTypeIdx i) const { return node_types_[i]; }
  std::optional<NodeTypeIdx> find_node_type(std::string_view name) const;

  const RelationDef& relation(RelationIdx i) const;
  std::optional<RelationIdx> find_relation(std::string_view name) const;

  const std::vector<RelationDef>& relations() const { return relations_; }

 private:
  std::vector<std::string> node_types_;
  std::unordered_map<std::string, NodeTypeIdx> node_type_index_;
  std::vector<RelationDef> relations_;
  std::unordered_map<std::string, RelationIdx> relation_index_;
};

// Relation-schema file: tab-separated, one relation per line, "-" for empty,
// comma-separated multi-values, "#" comments.
//   name  domain  range  symmetric(0|1)  inverse_of  parents  disjoint_with
std::vector<RelationRecord> read_schema_records(std::istream& in,
                                                std::string_view filename = "<schema>");
RelationSchema load_schema_file(const std::string& path);
void write_schema_file(std::ostream& out, const RelationSchema& schema);

}  // namespace kgbench
