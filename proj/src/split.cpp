#include "kgbench/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "kgbench/errors.hpp"

namespace kgbench {

const char* const kPartNames[3] = {"train", "valid", "test"};

void SplitSpec::check() const {
  if (train_ratio < 0 || valid_ratio < 0 || test_ratio < 0)
    throw ConfigError("split ratios must be non-negative");
  double sum = train_ratio + valid_ratio + test_ratio;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1 (got " + std::to_string(sum) + ")");
  if (negative_ratio <= 0) throw ConfigError("negative_ratio must be positive");
  if (max_corruption_attempts <= 0)
    throw ConfigError("max_corruption_attempts must be positive");
}

namespace {

std::vector<Triple>* neg_by_index(Split& s, int i) {
  switch (i) {
    case 0: return &s.train_neg;
    case 1: return &s.valid_neg;
    case 2: return &s.test_neg;
  }
  return nullptr;
}

struct PartIndex {
  std::unordered_map<TripleKey, int, TripleKeyHash> of;  // canonical key -> part
  void add(const Split& s, const RelationSchema& schema) {
    const std::vector<Triple>* parts[3] = {&s.train, &s.valid, &s.test};
    for (int p = 0; p < 3; ++p)
      for (const auto& t : *parts[p])
        of[canonical_key(TripleKey{t.head, t.rel, t.tail}, schema)] = p;
  }
};

std::vector<Triple> collect_positives(const Graph& g) {
  std::vector<Triple> out;
  out.reserve(g.positive_count());
  for (const auto& t : g.triples())
    if (t.polarity == Polarity::positive) out.push_back(t);
  return out;
}

void insert_entities(std::unordered_set<EntityIdx>& set, const Triple& t) {
  set.insert(t.head);
  set.insert(t.tail);
}

}  // namespace

std::optional<Triple> sample_typed_corruption(Rng& rng, const Triple& pos, const Graph& g,
                                              int max_attempts, const TripleSet* accepted) {
  const RelationSchema& schema = g.schema();
  const RelationDef& def = schema.relation(pos.rel);
  const bool corrupt_head = rng.coin();
  const NodeTypeIdx slot_type = corrupt_head ? def.domain : def.range;
  auto universe = g.entities_of_type(slot_type);
  if (universe.empty()) return std::nullopt;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    EntityIdx e = universe[rng.below(universe.size())];
    Triple cand;
    cand.head = corrupt_head ? e : pos.head;
    cand.rel = pos.rel;
    cand.tail = corrupt_head ? pos.tail : e;
    cand.polarity = Polarity::negative;
    cand.source = "sampled";
    cand = canonical_form(std::move(cand), schema);
    if (g.has_positive_sym_aware(cand.head, cand.rel, cand.tail)) continue;
    if (accepted && accepted->has(cand.head, cand.rel, cand.tail)) continue;
    return cand;
  }
  return std::nullopt;
}

void sample_negatives(Split& split, const Graph& g, const SplitSpec& spec) {
  const RelationSchema& schema = g.schema();
  Rng base(spec.seed);

  size_t quota[3];
  const std::vector<Triple>* parts[3] = {&split.train, &split.valid, &split.test};
  for (int p = 0; p < 3; ++p)
    quota[p] = static_cast<size_t>(
        std::ceil(spec.negative_ratio * static_cast<double>(parts[p]->size())));

  PartIndex part_index;
  part_index.add(split, schema);

  TripleSet accepted;

  // True negatives first. Graph triples are in canonical order, so the
  // assignment is deterministic.
  for (const auto& t : g.triples()) {
    if (t.polarity != Polarity::negative) continue;
    int part = 0;  // source-provided negatives default to train
    for (RelationIdx r : schema.relation(t.rel).disjoint) {
      auto it = part_index.of.find(canonical_key(TripleKey{t.head, r, t.tail}, schema));
      if (it != part_index.of.end()) {
        part = it->second;
        break;
      }
    }
    TripleKey key = canonical_key(TripleKey{t.head, t.rel, t.tail}, schema);
    if (accepted.has(key)) continue;  // both orientations of a symmetric negative
    accepted.insert(key);
    neg_by_index(split, part)->push_back(t);
    split.report.negatives[part].true_assigned++;
  }

  // Fill the remaining quota by typed corruption, one pass ("round") over the
  // part's positives at a time; a round that accepts nothing means the quota
  // is unreachable.
  for (int p = 0; p < 3; ++p) {
    auto& negs = *neg_by_index(split, p);
    const auto& positives = *parts[p];
    Rng part_rng = base.derive(std::string("negatives/") + kPartNames[p]);
    uint64_t round = 0;
    while (negs.size() < quota[p] && !positives.empty()) {
      bool progressed = false;
      Rng round_rng = part_rng.derive(round);
      for (size_t i = 0; i < positives.size() && negs.size() < quota[p]; ++i) {
        Rng rng = round_rng.derive(i);
        auto cand =
            sample_typed_corruption(rng, positives[i], g, spec.max_corruption_attempts, &accepted);
        if (cand) {
          accepted.insert(*cand);
          negs.push_back(std::move(*cand));
          split.report.negatives[p].sampled++;
          progressed = true;
        } else {
          split.report.negatives[p].skipped++;
        }
      }
      ++round;
      if (!progressed) {
        split.report.warnings.push_back(std::string("negative quota unreachable for part ") +
                                        kPartNames[p]);
        break;
      }
    }
    std::sort(negs.begin(), negs.end(), triple_less);
  }
}

Split random_split(const Graph& g, const SplitSpec& spec) {
  spec.check();
  if (spec.mode != SplitMode::random)
    throw ConfigError("random_split requires spec.mode = random");
  const RelationSchema& schema = g.schema();
  std::vector<Triple> positives = collect_positives(g);
  if (positives.empty()) throw DataError("random_split: graph has no positive triples");

  Split split;
  split.report.mode = SplitMode::random;
  if (spec.test_ratio == 0)
    split.report.warnings.push_back("test ratio is 0: benchmark has no test set");

  Rng rng(spec.seed);
  rng.derive("split/shuffle").shuffle(positives);

  const size_t n = positives.size();
  size_t b1 = static_cast<size_t>(std::llround(static_cast<double>(n) * spec.train_ratio));
  size_t b2 = static_cast<size_t>(
      std::llround(static_cast<double>(n) * (spec.train_ratio + spec.valid_ratio)));
  b1 = std::min(b1, n);
  b2 = std::min(std::max(b2, b1), n);

  split.train.assign(positives.begin(), positives.begin() + b1);
  split.valid.assign(positives.begin() + b1, positives.begin() + b2);
  split.test.assign(positives.begin() + b2, positives.end());

  // Repair to fixpoint. Entity coverage is checked before inferability in
  // each pass; the fixpoint satisfies both regardless of order.
  TripleSet train_index;
  std::unordered_set<EntityIdx> train_entities;
  for (const auto& t : split.train) {
    train_index.insert(t);
    insert_entities(train_entities, t);
  }

  auto move_to_train = [&](Triple t, const std::string& reason) {
    split.report.moved[reason]++;
    train_index.insert(t);
    insert_entities(train_entities, t);
    split.train.push_back(std::move(t));
  };

  bool moved_any = true;
  while (moved_any) {
    moved_any = false;
    split.report.repair_iterations++;
    for (std::vector<Triple>* part : {&split.valid, &split.test}) {
      std::vector<Triple> kept;
      kept.reserve(part->size());
      for (auto& t : *part) {
        if (!train_entities.count(t.head) || !train_entities.count(t.tail)) {
          move_to_train(std::move(t), "unseen_entity");
          moved_any = true;
          continue;
        }
        Inferable reason =
            is_trivially_inferable(TripleKey{t.head, t.rel, t.tail}, train_index, schema);
        if (reason != Inferable::none) {
          move_to_train(std::move(t), to_string(reason));
          moved_any = true;
          continue;
        }
        kept.push_back(std::move(t));
      }
      *part = std::move(kept);
    }
  }

  std::sort(split.train.begin(), split.train.end(), triple_less);
  std::sort(split.valid.begin(), split.valid.end(), triple_less);
  std::sort(split.test.begin(), split.test.end(), triple_less);

  sample_negatives(split, g, spec);
  return split;
}

TimeSliceSplit time_slice_split(const Graph& g_old, const Graph& g_new, const SplitSpec& spec) {
  spec.check();
  if (spec.mode != SplitMode::time_slice)
    throw ConfigError("time_slice_split requires spec.mode = time_slice");
  if (&g_old.schema() != &g_new.schema())
    throw DataError("time_slice_split: snapshots must share one schema");
  if (g_old.positive_count() == 0) throw DataError("time_slice_split: empty old graph");
  const RelationSchema& schema = g_old.schema();

  // Extend a copy of the old table so old intern indices stay valid in the
  // merged graph.
  EntityTable table = g_old.entities();
  const EntityTable& new_table = g_new.entities();
  std::vector<EntityIdx> remap(new_table.size());
  for (EntityIdx e = 0; e < new_table.size(); ++e)
    remap[e] = table.intern(new_table.type_of(e), new_table.local_id(e));

  std::vector<Triple> all(g_old.triples().begin(), g_old.triples().end());
  for (Triple t : g_new.triples()) {
    t.head = remap[t.head];
    t.tail = remap[t.tail];
    all.push_back(std::move(t));
  }

  AssembleReport arep;
  TimeSliceSplit result{Graph::assemble(std::move(all), schema, std::move(table), &arep),
                        Split{}};

  Split& split = result.split;
  split.report.mode = SplitMode::time_slice;
  if (spec.test_ratio == 0)
    split.report.warnings.push_back("test ratio is 0: benchmark has no test set");

  TripleSet old_positives;
  std::unordered_set<EntityIdx> train_entities;
  for (const auto& t : g_old.triples()) {
    if (t.polarity != Polarity::positive) continue;
    old_positives.insert(t);  // old indices are unchanged in the merged table
    insert_entities(train_entities, t);
  }

  std::vector<Triple> candidates;
  for (const auto& t : result.merged.triples()) {
    if (t.polarity != Polarity::positive) continue;
    if (old_positives.has(t.head, t.rel, t.tail)) {
      split.train.push_back(t);
      continue;
    }
    candidates.push_back(t);
  }

  std::vector<Triple> survivors;
  for (auto& t : candidates) {
    if (!train_entities.count(t.head) || !train_entities.count(t.tail)) {
      split.report.dropped["unseen_entity"]++;
      continue;
    }
    Inferable reason =
        is_trivially_inferable(TripleKey{t.head, t.rel, t.tail}, old_positives, schema);
    if (reason != Inferable::none) {
      split.report.dropped[to_string(reason)]++;
      continue;
    }
    survivors.push_back(std::move(t));
  }

  Rng rng(spec.seed);
  rng.derive("split/timeslice").shuffle(survivors);
  const double rv = spec.valid_ratio, rt = spec.test_ratio;
  size_t n_valid;
  if (rv + rt == 0) {
    split.report.warnings.push_back("valid and test ratios are both 0: survivors go to test");
    n_valid = 0;
  } else {
    n_valid = static_cast<size_t>(
        std::llround(static_cast<double>(survivors.size()) * rv / (rv + rt)));
  }
  n_valid = std::min(n_valid, survivors.size());
  split.valid.assign(survivors.begin(), survivors.begin() + n_valid);
  split.test.assign(survivors.begin() + n_valid, survivors.end());

  std::sort(split.train.begin(), split.train.end(), triple_less);
  std::sort(split.valid.begin(), split.valid.end(), triple_less);
  std::sort(split.test.begin(), split.test.end(), triple_less);

  sample_negatives(split, result.merged, spec);
  return result;
}

void write_split_report(std::ostream& out, const SplitReport& report) {
  out << "mode\t" << (report.mode == SplitMode::random ? "random" : "time_slice") << '\n';
  for (const auto& [reason, n] : report.moved) out << "moved." << reason << '\t' << n << '\n';
  for (const auto& [reason, n] : report.dropped) out << "dropped." << reason << '\t' << n << '\n';
  out << "repair_iterations\t" << report.repair_iterations << '\n';
  for (int p = 0; p < 3; ++p) {
    const NegativeStats& ns = report.negatives[p];
    out << "negatives." << kPartNames[p] << ".true\t" << ns.true_assigned << '\n';
    out << "negatives." << kPartNames[p] << ".sampled\t" << ns.sampled << '\n';
    out << "negatives." << kPartNames[p] << ".skipped\t" << ns.skipped << '\n';
  }
  for (const auto& w : report.warnings) out << "warning\t" << w << '\n';
}

namespace {

void write_part(const std::string& path, const std::vector<Triple>& triples, const Graph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write split file: " + path);
  const RelationSchema& schema = g.schema();
  const EntityTable& entities = g.entities();
  for (const auto& t : triples) {
    out << entities.name(t.head, schema) << '\t' << schema.relation(t.rel).name << '\t'
        << entities.name(t.tail, schema) << '\n';
  }
}

}  // namespace

void write_split_files(const std::string& dir, const Split& split, const Graph& g) {
  write_part(dir + "/train.tsv", split.train, g);
  write_part(dir + "/valid.tsv", split.valid, g);
  write_part(dir + "/test.tsv", split.test, g);
  write_part(dir + "/train_neg.tsv", split.train_neg, g);
  write_part(dir + "/valid_neg.tsv", split.valid_neg, g);
  write_part(dir + "/test_neg.tsv", split.test_neg, g);
  std::ofstream rep(dir + "/split_report.tsv", std::ios::binary);
  if (!rep) throw DataError("cannot write split report: " + dir + "/split_report.tsv");
  write_split_report(rep, split.report);
}

std::vector<Triple> read_split_part(const std::string& path, const Graph& g, Polarity polarity) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path);
  const RelationSchema& schema = g.schema();
  const EntityTable& entities = g.entities();
  std::vector<Triple> out;
  std::string line;
  size_t line_no = 0;
  auto parse_entity = [&](const std::string& field) -> EntityIdx {
    size_t colon = field.find(':');
    if (colon == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": entity '" + field +
                      "' is not TYPE:id");
    auto type = schema.find_node_type(field.substr(0, colon));
    if (!type)
      throw DataError(path + ":" + std::to_string(line_no) + ": unknown node type in '" +
                      field + "'");
    auto e = entities.find(*type, field.substr(colon + 1));
    if (!e)
      throw DataError(path + ":" + std::to_string(line_no) + ": entity '" + field +
                      "' not present in the graph");
    return *e;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t t1 = line.find('\t');
    size_t t2 = (t1 == std::string::npos) ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 columns");
    Triple t;
    t.head = parse_entity(line.substr(0, t1));
    auto rel = schema.find_relation(line.substr(t1 + 1, t2 - t1 - 1));
    if (!rel)
      throw DataError(path + ":" + std::to_string(line_no) + ": unknown relation");
    t.rel = *rel;
    t.tail = parse_entity(line.substr(t2 + 1));
    t.polarity = polarity;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace kgbench
