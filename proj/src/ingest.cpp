#include "kgbench/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kgbench/errors.hpp"

namespace kgbench {

QualityLevel parse_quality_level(std::string_view s) {
  if (s == "high") return QualityLevel::high;
  if (s == "medium") return QualityLevel::medium;
  if (s == "low") return QualityLevel::low;
  if (s == "all") return QualityLevel::all;
  throw ConfigError("unknown quality level '" + std::string(s) +
                    "' (expected high|medium|low|all)");
}

const char* to_string(QualityLevel level) {
  switch (level) {
    case QualityLevel::high: return "high";
    case QualityLevel::medium: return "medium";
    case QualityLevel::low: return "low";
    case QualityLevel::all: return "all";
  }
  return "?";
}

void QualitySetting::check() const {
  for (const auto& [source, c] : thresholds) {
    if (!(c.high >= c.medium && c.medium >= c.low))
      throw DataError("quality thresholds for source '" + source +
                      "' must satisfy high >= medium >= low");
    if (c.low < 0.0 || c.high > 1.0)
      throw DataError("quality thresholds for source '" + source + "' must lie in [0,1]");
  }
}

double QualitySetting::cutoff_for(const std::string& source) const {
  auto it = thresholds.find(source);
  if (it == thresholds.end())
    throw DataError("source '" + source + "' missing from quality threshold map");
  switch (level) {
    case QualityLevel::high: return it->second.high;
    case QualityLevel::medium: return it->second.medium;
    case QualityLevel::low: return it->second.low;
    case QualityLevel::all: return 0.0;
  }
  return 0.0;
}

void IngestReport::merge(const IngestReport& other) {
  lines_read += other.lines_read;
  triples_parsed += other.triples_parsed;
  errors.insert(errors.end(), other.errors.begin(), other.errors.end());
  for (const auto& [k, v] : other.dropped) dropped[k] += v;
  duplicates_merged += other.duplicates_merged;
  true_negatives_inferred += other.true_negatives_inferred;
  conflicts += other.conflicts;
  notes.insert(notes.end(), other.notes.begin(), other.notes.end());
}

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool parse_decimal(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace

std::map<std::string, QualitySetting::Cutoffs> read_threshold_file(std::istream& in,
                                                                   std::string_view filename) {
  std::map<std::string, QualitySetting::Cutoffs> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != 4)
      throw DataError(std::string(filename) + ":" + std::to_string(line_no) +
                      ": expected 4 columns (source, high, medium, low)");
    QualitySetting::Cutoffs c;
    if (!parse_decimal(cols[1], c.high) || !parse_decimal(cols[2], c.medium) ||
        !parse_decimal(cols[3], c.low))
      throw DataError(std::string(filename) + ":" + std::to_string(line_no) +
                      ": non-numeric threshold");
    out[cols[0]] = c;
  }
  return out;
}

std::map<std::string, QualitySetting::Cutoffs> load_threshold_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open threshold file: " + path);
  return read_threshold_file(in, path);
}

std::vector<Triple> parse_edges(std::istream& in, const RelationSchema& schema,
                                EntityTable& entities, IngestReport& report,
                                std::string_view filename) {
  if (!in) throw DataError("unreadable edge stream: " + std::string(filename));
  std::vector<Triple> triples;
  std::string line;
  size_t line_no = 0;

  auto fail = [&](const std::string& reason) {
    report.errors.push_back({line_no, std::string(filename) + ":" + std::to_string(line_no) +
                                          ": " + reason});
  };

  // "TYPE:id" -> interned entity; the node type must exist in the schema.
  auto parse_entity = [&](const std::string& field,
                          std::optional<EntityIdx>& out) -> std::string {
    size_t colon = field.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == field.size())
      return "entity '" + field + "' is not TYPE:id";
    std::string type_name = field.substr(0, colon);
    auto type = schema.find_node_type(type_name);
    if (!type) return "unknown node type '" + type_name + "'";
    out = entities.intern(*type, field.substr(colon + 1));
    return "";
  };

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    report.lines_read++;
    auto cols = split_tabs(line);
    if (cols.size() < 5 || cols.size() > 7) {
      fail("expected 5-7 tab-separated columns, got " + std::to_string(cols.size()));
      continue;
    }

    Triple t;
    std::optional<EntityIdx> head, tail;
    if (std::string err = parse_entity(cols[0], head); !err.empty()) {
      fail(err);
      continue;
    }
    auto rel = schema.find_relation(cols[1]);
    if (!rel) {
      fail("unknown relation '" + cols[1] + "'");
      continue;
    }
    if (std::string err = parse_entity(cols[2], tail); !err.empty()) {
      fail(err);
      continue;
    }
    t.head = *head;
    t.rel = *rel;
    t.tail = *tail;

    const RelationDef& def = schema.relation(t.rel);
    if (entities.type_of(t.head) != def.domain) {
      fail("head type '" + schema.node_type_name(entities.type_of(t.head)) +
           "' violates domain of '" + def.name + "'");
      continue;
    }
    if (entities.type_of(t.tail) != def.range) {
      fail("tail type '" + schema.node_type_name(entities.type_of(t.tail)) +
           "' violates range of '" + def.name + "'");
      continue;
    }

    if (cols[3] != "-") {
      double q = 0;
      if (!parse_decimal(cols[3], q)) {
        fail("quality '" + cols[3] + "' is not a decimal");
        continue;
      }
      if (q < 0.0 || q > 1.0) {
        fail("quality " + cols[3] + " outside [0,1]");
        continue;
      }
      t.quality = q;
    }

    if (cols[4].empty()) {
      fail("empty source label");
      continue;
    }
    t.source = cols[4];

    if (cols.size() >= 6 && cols[5] != "-") {
      auto d = parse_date(cols[5]);
      if (!d) {
        fail("date '" + cols[5] + "' is not ISO-8601 (YYYY-MM-DD)");
        continue;
      }
      t.date = d;
    }

    if (cols.size() == 7) {
      if (cols[6] == "+")
        t.polarity = Polarity::positive;
      else if (cols[6] == "-")
        t.polarity = Polarity::negative;
      else {
        fail("polarity '" + cols[6] + "' is not + or -");
        continue;
      }
    }

    report.triples_parsed++;
    triples.push_back(std::move(t));
  }
  return triples;
}

std::vector<Triple> apply_quality_filter(std::vector<Triple> triples,
                                         const QualitySetting& setting, IngestReport& report) {
  if (setting.level == QualityLevel::all) return triples;
  setting.check();
  std::vector<Triple> kept;
  kept.reserve(triples.size());
  size_t unscored = 0, dropped = 0;
  for (auto& t : triples) {
    if (!t.quality) {
      // Absence of a score is not evidence of low confidence.
      unscored++;
      kept.push_back(std::move(t));
      continue;
    }
    if (*t.quality >= setting.cutoff_for(t.source))
      kept.push_back(std::move(t));
    else
      dropped++;
  }
  report.dropped["quality"] += dropped;
  if (unscored > 0)
    report.notes.push_back("quality filter kept " + std::to_string(unscored) +
                           " unscored triples");
  return kept;
}

std::vector<Triple> filter_sources_and_relations(std::vector<Triple> triples,
                                                 const std::set<std::string>& excluded_sources,
                                                 const std::set<std::string>& excluded_relations,
                                                 const RelationSchema& schema,
                                                 IngestReport& report) {
  for (const auto& r : excluded_relations) {
    if (!schema.find_relation(r))
      report.notes.push_back("excluded relation '" + r + "' does not occur in the schema");
  }
  std::set<std::string> seen_sources;
  std::vector<Triple> kept;
  kept.reserve(triples.size());
  size_t dropped_source = 0, dropped_relation = 0;
  for (auto& t : triples) {
    seen_sources.insert(t.source);
    if (excluded_sources.count(t.source)) {
      dropped_source++;
      continue;
    }
    if (excluded_relations.count(schema.relation(t.rel).name)) {
      dropped_relation++;
      continue;
    }
    kept.push_back(std::move(t));
  }
  for (const auto& s : excluded_sources) {
    if (!seen_sources.count(s))
      report.notes.push_back("excluded source '" + s + "' does not occur in the data");
  }
  report.dropped["source"] += dropped_source;
  report.dropped["relation"] += dropped_relation;
  return kept;
}

std::vector<Triple> make_undirected(std::vector<Triple> triples, const RelationSchema& schema) {
  for (auto& t : triples) t = canonical_form(std::move(t), schema);
  std::sort(triples.begin(), triples.end(), triple_full_less);
  auto same = [](const Triple& a, const Triple& b) {
    return a.head == b.head && a.rel == b.rel && a.tail == b.tail && a.polarity == b.polarity &&
           a.quality == b.quality && a.source == b.source && a.date == b.date;
  };
  triples.erase(std::unique(triples.begin(), triples.end(), same), triples.end());
  return triples;
}

std::vector<Triple> make_directed(std::vector<Triple> triples, const RelationSchema& schema) {
  std::vector<Triple> out = triples;
  for (const auto& t : triples) {
    if (!schema.relation(t.rel).symmetric || t.head == t.tail) continue;
    Triple rev = t;
    std::swap(rev.head, rev.tail);
    out.push_back(std::move(rev));
  }
  std::sort(out.begin(), out.end(), triple_full_less);
  auto same = [](const Triple& a, const Triple& b) {
    return a.head == b.head && a.rel == b.rel && a.tail == b.tail && a.polarity == b.polarity &&
           a.quality == b.quality && a.source == b.source && a.date == b.date;
  };
  out.erase(std::unique(out.begin(), out.end(), same), out.end());
  return out;
}

std::vector<Triple> infer_true_negatives(const std::vector<Triple>& positives,
                                         const RelationSchema& schema,
                                         std::vector<DisjointConflict>* conflicts) {
  TripleSet positive_keys;
  for (const auto& t : positives) positive_keys.insert(t);

  std::vector<Triple> negatives;
  for (const auto& t : positives) {
    for (RelationIdx s : schema.relation(t.rel).disjoint) {
      TripleKey neg_key = canonical_key(TripleKey{t.head, s, t.tail}, schema);
      if (positive_keys.has_sym_aware(neg_key, schema)) {
        if (conflicts) conflicts->push_back({TripleKey{t.head, t.rel, t.tail}, neg_key});
        continue;
      }
      Triple neg;
      neg.head = neg_key.head;
      neg.rel = s;
      neg.tail = neg_key.tail;
      neg.polarity = Polarity::negative;
      neg.source = t.source;
      negatives.push_back(std::move(neg));
    }
  }
  std::sort(negatives.begin(), negatives.end(), triple_less);
  auto same_key = [](const Triple& a, const Triple& b) {
    return a.head == b.head && a.rel == b.rel && a.tail == b.tail;
  };
  negatives.erase(std::unique(negatives.begin(), negatives.end(), same_key), negatives.end());
  return negatives;
}

Graph assemble_graph(std::vector<Triple> positives, std::vector<Triple> negatives,
                     const RelationSchema& schema, EntityTable entities, IngestReport& report) {
  std::vector<Triple> all = std::move(positives);
  all.insert(all.end(), std::make_move_iterator(negatives.begin()),
             std::make_move_iterator(negatives.end()));
  AssembleReport arep;
  Graph g = Graph::assemble(std::move(all), schema, std::move(entities), &arep);
  report.duplicates_merged += arep.duplicates_merged;
  report.conflicts += arep.conflicts;
  if (arep.type_rejected > 0) report.dropped["type_violation"] += arep.type_rejected;
  return g;
}

void write_edges(std::ostream& out, std::span<const Triple> triples,
                 const RelationSchema& schema, const EntityTable& entities) {
  // Lines are sorted textually so the file form is canonical: re-parsing and
  // re-writing a graph file reproduces it byte for byte regardless of intern
  // order.
  std::vector<std::string> lines;
  lines.reserve(triples.size());
  char qbuf[40];
  for (const auto& t : triples) {
    std::string line = entities.name(t.head, schema);
    line += '\t';
    line += schema.relation(t.rel).name;
    line += '\t';
    line += entities.name(t.tail, schema);
    line += '\t';
    if (t.quality) {
      std::snprintf(qbuf, sizeof(qbuf), "%.17g", *t.quality);
      line += qbuf;
    } else {
      line += '-';
    }
    line += '\t';
    line += t.source;
    line += '\t';
    line += t.date ? format_date(*t.date) : std::string("-");
    line += '\t';
    line += (t.polarity == Polarity::positive ? '+' : '-');
    lines.push_back(std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& line : lines) out << line << '\n';
}

void write_graph_file(const std::string& path, const Graph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write graph file: " + path);
  write_edges(out, g.triples(), g.schema(), g.entities());
}

Graph load_graph_file(const std::string& path, const RelationSchema& schema,
                      IngestReport& report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file: " + path);
  EntityTable entities;
  auto triples = parse_edges(in, schema, entities, report, path);
  if (!report.errors.empty())
    throw DataError("graph file " + path + " has " + std::to_string(report.errors.size()) +
                    " malformed lines; first: " + report.errors.front().reason);
  return assemble_graph(std::move(triples), {}, schema, std::move(entities), report);
}

}  // namespace kgbench
