#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgbench/graph.hpp"

namespace kgbench {

enum class QualityLevel : uint8_t { high, medium, low, all };

QualityLevel parse_quality_level(std::string_view s);
const char* to_string(QualityLevel level);

// Per-source cutoffs, one row per source. Level `all` applies no cutoff.
struct QualitySetting {
  QualityLevel level = QualityLevel::all;
  struct Cutoffs {
    double high = 0, medium = 0, low = 0;
  };
  std::map<std::string, Cutoffs> thresholds;

  // cutoff(high) >= cutoff(medium) >= cutoff(low) per source
  void check() const;
  double cutoff_for(const std::string& source) const;  // throws if source unknown
};

// Threshold file: source <TAB> high <TAB> medium <TAB> low
std::map<std::string, QualitySetting::Cutoffs> read_threshold_file(std::istream& in,
                                                                   std::string_view filename);
std::map<std::string, QualitySetting::Cutoffs> load_threshold_file(const std::string& path);

struct ParseError {
  size_t line = 0;
  std::string reason;
};

struct IngestReport {
  size_t lines_read = 0;  // data lines; blank and '#' lines are not counted
  size_t triples_parsed = 0;
  std::vector<ParseError> errors;
  std::map<std::string, size_t> dropped;  // per filter name
  size_t duplicates_merged = 0;
  size_t true_negatives_inferred = 0;
  size_t conflicts = 0;
  std::vector<std::string> notes;

  void merge(const IngestReport& other);
};

// Edge file: UTF-8, tab-separated, LF or CRLF, "#" comments.
//   head(TYPE:id)  relation  tail(TYPE:id)  quality(decimal|-)  source
//   [date ISO-8601|-]  [polarity +|-]
// Malformed lines are recorded with line number and reason, then skipped;
// entity IDs are interned into `entities` (shared across files when parsing
// several snapshots against one table).
std::vector<Triple> parse_edges(std::istream& in, const RelationSchema& schema,
                                EntityTable& entities, IngestReport& report,
                                std::string_view filename = "<edges>");

// Keeps a triple iff level = all, quality absent (counted as unscored), or
// quality >= cutoff(level, source). Throws DataError when a scored triple's
// source is missing from the threshold map and level != all.
std::vector<Triple> apply_quality_filter(std::vector<Triple> triples,
                                         const QualitySetting& setting, IngestReport& report);

std::vector<Triple> filter_sources_and_relations(std::vector<Triple> triples,
                                                 const std::set<std::string>& excluded_sources,
                                                 const std::set<std::string>& excluded_relations,
                                                 const RelationSchema& schema,
                                                 IngestReport& report);

// Positives only. Symmetric-relation triples are canonicalized and exact
// duplicates removed; one edge per undirected relationship.
std::vector<Triple> make_undirected(std::vector<Triple> triples, const RelationSchema& schema);

// Positives only. Adds the explicit reverse of every symmetric-relation
// triple (quality/source/date copied); self-loops are not duplicated.
std::vector<Triple> make_directed(std::vector<Triple> triples, const RelationSchema& schema);

struct DisjointConflict {
  TripleKey positive_a;  // (h, r, t)
  TripleKey positive_b;  // (h, s, t) with s disjoint from r
};

// For every positive (h,r,t) and s disjoint from r, emits the true negative
// (h,s,t) unless that key is itself a positive, in which case a conflict is
// recorded instead. Symmetric-relation negatives are canonicalized. Output
// is deduplicated and sorted.
std::vector<Triple> infer_true_negatives(const std::vector<Triple>& positives,
                                         const RelationSchema& schema,
                                         std::vector<DisjointConflict>* conflicts = nullptr);

// Convenience wrapper over Graph::assemble that folds the assembly counters
// into an IngestReport.
Graph assemble_graph(std::vector<Triple> positives, std::vector<Triple> negatives,
                     const RelationSchema& schema, EntityTable entities, IngestReport& report);

// Graph file round trip: the edge-file format doubles as the on-disk graph
// representation between pipeline stages.
void write_edges(std::ostream& out, std::span<const Triple> triples,
                 const RelationSchema& schema, const EntityTable& entities);
void write_graph_file(const std::string& path, const Graph& g);
Graph load_graph_file(const std::string& path, const RelationSchema& schema,
                      IngestReport& report);

}  // namespace kgbench
