#include "kgbench/schema.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kgbench/errors.hpp"

namespace kgbench {

namespace {

bool valid_node_type_label(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ':' || c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
  }
  return true;
}

void sort_unique(std::vector<RelationIdx>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::optional<NodeTypeIdx> RelationSchema::find_node_type(std::string_view name) const {
  auto it = node_type_index_.find(std::string(name));
  if (it == node_type_index_.end()) return std::nullopt;
  return it->second;
}

const RelationDef& RelationSchema::relation(RelationIdx i) const {
  if (i >= relations_.size()) throw SchemaError("relation index out of range");
  return relations_[i];
}

std::optional<RelationIdx> RelationSchema::find_relation(std::string_view name) const {
  auto it = relation_index_.find(std::string(name));
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

RelationSchema RelationSchema::validate(const std::vector<RelationRecord>& records) {
  RelationSchema schema;

  auto intern_node_type = [&](const std::string& label) -> NodeTypeIdx {
    if (!valid_node_type_label(label))
      throw SchemaError("invalid node type label '" + label +
                        "' (must be non-empty, no whitespace, no ':')");
    auto it = schema.node_type_index_.find(label);
    if (it != schema.node_type_index_.end()) return it->second;
    NodeTypeIdx idx = static_cast<NodeTypeIdx>(schema.node_types_.size());
    schema.node_types_.push_back(label);
    schema.node_type_index_.emplace(label, idx);
    return idx;
  };

  // Pass 1: names and signatures.
  for (const auto& rec : records) {
    if (rec.name.empty()) throw SchemaError("empty relation name");
    if (schema.relation_index_.count(rec.name))
      throw SchemaError("duplicate relation name '" + rec.name + "'");
    RelationDef def;
    def.name = rec.name;
    def.domain = intern_node_type(rec.domain);
    def.range = intern_node_type(rec.range);
    def.symmetric = rec.symmetric;
    if (def.symmetric && def.domain != def.range)
      throw SchemaError("symmetric relation '" + rec.name + "' with domain != range");
    schema.relation_index_.emplace(rec.name, static_cast<RelationIdx>(schema.relations_.size()));
    schema.relations_.push_back(std::move(def));
  }

  auto resolve = [&](const std::string& name, const std::string& context) -> RelationIdx {
    auto it = schema.relation_index_.find(name);
    if (it == schema.relation_index_.end())
      throw SchemaError(context + " references unknown relation '" + name + "'");
    return it->second;
  };

  // Pass 2: cross-references.
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    RelationDef& def = schema.relations_[i];
    if (!rec.inverse_of.empty())
      def.inverse = resolve(rec.inverse_of, "inverse_of of '" + rec.name + "'");
    for (const auto& p : rec.parents)
      def.parents.push_back(resolve(p, "parents of '" + rec.name + "'"));
    for (const auto& d : rec.disjoint_with)
      def.disjoint.push_back(resolve(d, "disjoint_with of '" + rec.name + "'"));
    sort_unique(def.parents);
    sort_unique(def.disjoint);
  }

  // Inverses must be mutual and signature-swapped.
  for (RelationIdx i = 0; i < schema.relations_.size(); ++i) {
    const RelationDef& r = schema.relations_[i];
    if (!r.inverse) continue;
    const RelationDef& s = schema.relations_[*r.inverse];
    if (!s.inverse || *s.inverse != i)
      throw SchemaError("non-mutual inverse: '" + r.name + "' -> '" + s.name + "'");
    if (r.domain != s.range || r.range != s.domain)
      throw SchemaError("inverse pair '" + r.name + "'/'" + s.name +
                        "' has mismatched domain/range");
  }

  // Symmetrize disjointness, reject r # r.
  for (RelationIdx i = 0; i < schema.relations_.size(); ++i) {
    for (RelationIdx d : schema.relations_[i].disjoint) {
      if (d == i)
        throw SchemaError("relation '" + schema.relations_[i].name +
                          "' declared disjoint with itself");
      auto& back = schema.relations_[d].disjoint;
      if (!std::binary_search(back.begin(), back.end(), i)) {
        back.push_back(i);
        sort_unique(back);
      }
    }
  }

  // Disjoint relations must share a signature, otherwise the inferred
  // negative (h, s, t) could not be a well-typed triple.
  for (RelationIdx i = 0; i < schema.relations_.size(); ++i) {
    const RelationDef& r = schema.relations_[i];
    for (RelationIdx d : r.disjoint) {
      const RelationDef& s = schema.relations_[d];
      if (r.domain != s.domain || r.range != s.range)
        throw SchemaError("disjoint pair '" + r.name + "'/'" + s.name +
                          "' has mismatched domain/range");
    }
  }

  // Hierarchy: DAG check + transitive closure via DFS with an on-path marker.
  const size_t n = schema.relations_.size();
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on path, 2 done
  std::vector<std::vector<RelationIdx>> closure(n);
  auto dfs = [&](auto&& self, RelationIdx u) -> void {
    if (state[u] == 1)
      throw SchemaError("cyclic hierarchy involving '" + schema.relations_[u].name + "'");
    if (state[u] == 2) return;
    state[u] = 1;
    for (RelationIdx p : schema.relations_[u].parents) {
      self(self, p);
      closure[u].push_back(p);
      closure[u].insert(closure[u].end(), closure[p].begin(), closure[p].end());
    }
    sort_unique(closure[u]);
    state[u] = 2;
  };
  for (RelationIdx i = 0; i < n; ++i) dfs(dfs, i);

  for (RelationIdx i = 0; i < n; ++i) {
    RelationDef& def = schema.relations_[i];
    def.ancestors = std::move(closure[i]);
    for (RelationIdx a : def.ancestors) {
      const RelationDef& anc = schema.relations_[a];
      if (def.domain != anc.domain || def.range != anc.range)
        throw SchemaError("relation '" + def.name + "' and its ancestor '" + anc.name +
                          "' have mismatched domain/range");
      if (std::binary_search(def.disjoint.begin(), def.disjoint.end(), a))
        throw SchemaError("relation '" + def.name + "' disjoint with its ancestor '" +
                          anc.name + "'");
      schema.relations_[a].descendants.push_back(i);
    }
  }
  for (auto& def : schema.relations_) sort_unique(def.descendants);

  return schema;
}

namespace {

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

std::vector<std::string> split_commas(const std::string& field) {
  std::vector<std::string> out;
  if (field.empty() || field == "-") return out;
  size_t start = 0;
  while (true) {
    size_t pos = field.find(',', start);
    std::string item = (pos == std::string::npos) ? field.substr(start)
                                                  : field.substr(start, pos - start);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::vector<RelationRecord> read_schema_records(std::istream& in, std::string_view filename) {
  std::vector<RelationRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != 7)
      throw SchemaError(std::string(filename) + ":" + std::to_string(line_no) +
                        ": expected 7 tab-separated columns, got " + std::to_string(cols.size()));
    RelationRecord rec;
    rec.name = cols[0];
    rec.domain = cols[1];
    rec.range = cols[2];
    if (cols[3] == "0")
      rec.symmetric = false;
    else if (cols[3] == "1")
      rec.symmetric = true;
    else
      throw SchemaError(std::string(filename) + ":" + std::to_string(line_no) +
                        ": symmetric flag must be 0 or 1");
    rec.inverse_of = (cols[4] == "-") ? "" : cols[4];
    rec.parents = split_commas(cols[5]);
    rec.disjoint_with = split_commas(cols[6]);
    records.push_back(std::move(rec));
  }
  return records;
}

RelationSchema load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path);
  return RelationSchema::validate(read_schema_records(in, path));
}

void write_schema_file(std::ostream& out, const RelationSchema& schema) {
  auto join = [&](const std::vector<RelationIdx>& v) {
    if (v.empty()) return std::string("-");
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += schema.relation(v[i]).name;
    }
    return s;
  };
  for (const auto& r : schema.relations()) {
    out << r.name << '\t' << schema.node_type_name(r.domain) << '\t'
        << schema.node_type_name(r.range) << '\t' << (r.symmetric ? 1 : 0) << '\t'
        << (r.inverse ? schema.relation(*r.inverse).name : std::string("-")) << '\t'
        << join(r.parents) << '\t' << join(r.disjoint) << '\n';
  }
}

}  // namespace kgbench
