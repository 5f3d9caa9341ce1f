#include "kgbench/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ostream>

#include "kgbench/errors.hpp"

namespace kgbench {

std::optional<Date> parse_date(std::string_view s) {
  // YYYY-MM-DD, fixed width
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto num = [&](size_t pos, size_t len, int& out) {
    auto res = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return res.ec == std::errc() && res.ptr == s.data() + pos + len;
  };
  int y = 0, m = 0, d = 0;
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  return Date{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

EntityIdx EntityTable::intern(NodeTypeIdx type, std::string_view local_id) {
  std::string key = std::to_string(type) + ":" + std::string(local_id);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  EntityIdx idx = static_cast<EntityIdx>(types_.size());
  types_.push_back(type);
  local_ids_.emplace_back(local_id);
  index_.emplace(std::move(key), idx);
  if (by_type_.size() <= type) by_type_.resize(type + 1);
  by_type_[type].push_back(idx);
  return idx;
}

std::optional<EntityIdx> EntityTable::find(NodeTypeIdx type, std::string_view local_id) const {
  auto it = index_.find(std::to_string(type) + ":" + std::string(local_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string EntityTable::name(EntityIdx e, const RelationSchema& schema) const {
  return schema.node_type_name(types_[e]) + ":" + local_ids_[e];
}

std::span<const EntityIdx> EntityTable::entities_of_type(NodeTypeIdx type) const {
  if (type >= by_type_.size()) return {};
  return by_type_[type];
}

namespace {

// Build a CSR index of `items` grouped by key(items[i]) over [0, bucket_count).
void build_csr(size_t bucket_count, size_t item_count,
               const std::function<uint32_t(uint32_t)>& key, std::vector<uint32_t>& offsets,
               std::vector<uint32_t>& items) {
  offsets.assign(bucket_count + 1, 0);
  for (uint32_t i = 0; i < item_count; ++i) offsets[key(i) + 1]++;
  for (size_t b = 0; b < bucket_count; ++b) offsets[b + 1] += offsets[b];
  items.resize(item_count);
  std::vector<uint32_t> cursor(offsets.begin(), offsets.end() - 1);
  for (uint32_t i = 0; i < item_count; ++i) items[cursor[key(i)]++] = i;
}

}  // namespace

Graph Graph::assemble(std::vector<Triple> triples, const RelationSchema& schema,
                      EntityTable entities, AssembleReport* report) {
  AssembleReport local;
  AssembleReport& rep = report ? *report : local;

  // Type check against domain/range.
  std::vector<Triple> typed;
  typed.reserve(triples.size());
  for (auto& t : triples) {
    const RelationDef& def = schema.relation(t.rel);
    if (entities.type_of(t.head) != def.domain || entities.type_of(t.tail) != def.range) {
      rep.type_rejected++;
      continue;
    }
    typed.push_back(std::move(t));
  }

  // Merge duplicates: same (h,r,t,polarity) keeps max quality, smallest
  // source, earliest date.
  std::sort(typed.begin(), typed.end(), triple_less);
  std::vector<Triple> merged;
  merged.reserve(typed.size());
  for (auto& t : typed) {
    if (!merged.empty()) {
      Triple& prev = merged.back();
      if (prev.head == t.head && prev.rel == t.rel && prev.tail == t.tail &&
          prev.polarity == t.polarity) {
        rep.duplicates_merged++;
        if (t.quality && (!prev.quality || *t.quality > *prev.quality)) prev.quality = t.quality;
        if (t.source < prev.source) prev.source = t.source;
        if (t.date && (!prev.date || *t.date < *prev.date)) prev.date = t.date;
        continue;
      }
    }
    merged.push_back(std::move(t));
  }

  // Positive/negative conflicts: the positive is an asserted observation and
  // wins; the derived or asserted negative is dropped. A symmetric relation
  // conflicts in either orientation.
  TripleSet positive_keys;
  for (const auto& t : merged)
    if (t.polarity == Polarity::positive) positive_keys.insert(t);
  std::vector<Triple> kept;
  kept.reserve(merged.size());
  for (auto& t : merged) {
    if (t.polarity == Polarity::negative &&
        positive_keys.has_sym_aware(TripleKey{t.head, t.rel, t.tail}, schema)) {
      rep.conflicts++;
      continue;
    }
    kept.push_back(std::move(t));
  }

  Graph g;
  g.schema_ = &schema;
  g.entities_ = std::move(entities);
  g.triples_ = std::move(kept);
  g.positive_count_ = 0;
  g.existence_.reserve(g.triples_.size());
  for (uint32_t i = 0; i < g.triples_.size(); ++i) {
    const Triple& t = g.triples_[i];
    if (t.polarity == Polarity::positive) g.positive_count_++;
    g.existence_.emplace(TripleKey{t.head, t.rel, t.tail}, i);
  }

  const size_t e_count = g.entities_.size();
  const size_t r_count = schema.relation_count();
  const size_t n = g.triples_.size();
  build_csr(e_count, n, [&](uint32_t i) { return g.triples_[i].head; }, g.head_offsets_,
            g.head_items_);
  build_csr(e_count, n, [&](uint32_t i) { return g.triples_[i].tail; }, g.tail_offsets_,
            g.tail_items_);
  build_csr(r_count, n, [&](uint32_t i) { return g.triples_[i].rel; }, g.rel_offsets_,
            g.rel_items_);
  return g;
}

bool Graph::has(EntityIdx h, RelationIdx r, EntityIdx t, Polarity pol) const {
  auto it = existence_.find(TripleKey{h, r, t});
  if (it == existence_.end()) return false;
  return triples_[it->second].polarity == pol;
}

bool Graph::has_positive_sym_aware(EntityIdx h, RelationIdx r, EntityIdx t) const {
  if (has_positive(h, r, t)) return true;
  return schema_->relation(r).symmetric && has_positive(t, r, h);
}

std::span<const uint32_t> Graph::by_head(EntityIdx e) const {
  if (e + 1 >= head_offsets_.size()) return {};
  return {head_items_.data() + head_offsets_[e], head_offsets_[e + 1] - head_offsets_[e]};
}

std::span<const uint32_t> Graph::by_tail(EntityIdx e) const {
  if (e + 1 >= tail_offsets_.size()) return {};
  return {tail_items_.data() + tail_offsets_[e], tail_offsets_[e + 1] - tail_offsets_[e]};
}

std::span<const uint32_t> Graph::by_relation(RelationIdx r) const {
  if (r + 1 >= rel_offsets_.size()) return {};
  return {rel_items_.data() + rel_offsets_[r], rel_offsets_[r + 1] - rel_offsets_[r]};
}

GraphStats Graph::stats() const {
  GraphStats s;
  s.entity_count = entities_.size();
  std::vector<size_t> per_type(schema_->node_type_count(), 0);
  for (EntityIdx e = 0; e < entities_.size(); ++e) per_type[entities_.type_of(e)]++;
  std::vector<size_t> per_rel(schema_->relation_count(), 0);
  for (const auto& t : triples_) {
    per_rel[t.rel]++;
    (t.polarity == Polarity::positive ? s.positive_triples : s.negative_triples)++;
  }
  for (size_t i = 0; i < per_type.size(); ++i) {
    if (per_type[i] == 0) continue;
    s.entities_per_node_type.emplace_back(schema_->node_type_name(static_cast<NodeTypeIdx>(i)),
                                          per_type[i]);
    s.distinct_node_types++;
  }
  for (size_t i = 0; i < per_rel.size(); ++i) {
    if (per_rel[i] == 0) continue;
    s.triples_per_relation.emplace_back(schema_->relation(static_cast<RelationIdx>(i)).name,
                                        per_rel[i]);
    s.distinct_relations++;
  }
  return s;
}

const char* to_string(Inferable reason) {
  switch (reason) {
    case Inferable::none: return "none";
    case Inferable::reverse_symmetric: return "reverse_symmetric";
    case Inferable::inverse: return "inverse";
    case Inferable::super_relation: return "super_relation";
  }
  return "?";
}

Inferable is_trivially_inferable(const TripleKey& candidate, const TripleSet& train,
                                 const RelationSchema& schema) {
  if (candidate.rel >= schema.relation_count())
    throw SchemaError("relation index not in schema");
  const RelationDef& def = schema.relation(candidate.rel);
  if (def.symmetric && train.has(candidate.tail, candidate.rel, candidate.head))
    return Inferable::reverse_symmetric;
  if (def.inverse && train.has(candidate.tail, *def.inverse, candidate.head))
    return Inferable::inverse;
  for (RelationIdx child : def.descendants) {
    if (train.has(candidate.head, child, candidate.tail)) return Inferable::super_relation;
  }
  return Inferable::none;
}

Triple canonical_form(Triple t, const RelationSchema& schema) {
  if (schema.relation(t.rel).symmetric && t.head > t.tail) std::swap(t.head, t.tail);
  return t;
}

TripleKey canonical_key(TripleKey k, const RelationSchema& schema) {
  if (schema.relation(k.rel).symmetric && k.head > k.tail) std::swap(k.head, k.tail);
  return k;
}

void write_stats(std::ostream& out, const GraphStats& s) {
  out << "entities\t" << s.entity_count << '\n';
  out << "positive_triples\t" << s.positive_triples << '\n';
  out << "negative_triples\t" << s.negative_triples << '\n';
  out << "distinct_node_types\t" << s.distinct_node_types << '\n';
  out << "distinct_relations\t" << s.distinct_relations << '\n';
  for (const auto& [name, n] : s.entities_per_node_type)
    out << "entities." << name << '\t' << n << '\n';
  for (const auto& [name, n] : s.triples_per_relation)
    out << "triples." << name << '\t' << n << '\n';
}

}  // namespace kgbench
