#include "kgbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>

#include "kgbench/errors.hpp"

namespace kgbench {

void HashRandomScorer::score_batch(std::span<const TripleKey> triples,
                                   std::vector<double>& out) {
  out.resize(triples.size());
  for (size_t i = 0; i < triples.size(); ++i) {
    uint64_t z = seed_;
    z ^= 0x9e3779b97f4a7c15ULL + (uint64_t(triples[i].head) << 32 | triples[i].tail);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z ^= uint64_t(triples[i].rel) + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    out[i] = static_cast<double>(z >> 11) * 0x1.0p-53;
  }
}

RankResult rank_entity(Scorer& scorer, const Triple& t, Side side, const Graph& g,
                       const TripleSet& known_positives, const RankOptions& opts) {
  const RelationSchema& schema = g.schema();
  const RelationDef& def = schema.relation(t.rel);
  const EntityIdx true_entity = (side == Side::head) ? t.head : t.tail;
  const NodeTypeIdx required_type = (side == Side::head) ? def.domain : def.range;
  if (g.entities().type_of(true_entity) != required_type)
    throw DataError("rank_entity: true entity's node type does not match the relation");

  std::vector<EntityIdx> all_entities;
  std::span<const EntityIdx> candidates;
  if (opts.typed_candidates) {
    candidates = g.entities_of_type(required_type);
  } else {
    all_entities.resize(g.entities().size());
    for (EntityIdx e = 0; e < all_entities.size(); ++e) all_entities[e] = e;
    candidates = all_entities;
  }

  std::vector<TripleKey> batch;
  batch.reserve(candidates.size());
  size_t true_pos = static_cast<size_t>(-1);
  for (EntityIdx c : candidates) {
    TripleKey corrupted = (side == Side::head) ? TripleKey{c, t.rel, t.tail}
                                               : TripleKey{t.head, t.rel, c};
    if (c == true_entity) {
      true_pos = batch.size();
    } else if (opts.filtered && known_positives.has_sym_aware(corrupted, schema)) {
      continue;
    }
    batch.push_back(corrupted);
  }
  if (true_pos == static_cast<size_t>(-1))
    throw DataError("rank_entity: true entity not in the candidate set");

  std::vector<double> scores;
  scorer.score_batch(batch, scores);
  if (scores.size() != batch.size())
    throw DataError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                    std::to_string(batch.size()) + " triples");

  const double true_score = scores[true_pos];
  size_t greater = 0, equal_others = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw DataError("scorer returned a non-finite score");
    if (i == true_pos) continue;
    if (scores[i] > true_score)
      greater++;
    else if (scores[i] == true_score)
      equal_others++;
  }

  RankResult res;
  res.candidate_count = batch.size();
  switch (opts.tie) {
    case TieMode::expected:
      res.rank = 1.0 + static_cast<double>(greater) + static_cast<double>(equal_others) / 2.0;
      break;
    case TieMode::optimistic:
      res.rank = 1.0 + static_cast<double>(greater);
      break;
    case TieMode::pessimistic:
      res.rank = 1.0 + static_cast<double>(greater) + static_cast<double>(equal_others);
      break;
  }
  return res;
}

double hits_at_k(std::span<const double> ranks, int k) {
  if (ranks.empty()) throw DataError("hits_at_k: empty rank list");
  if (k <= 0) throw DataError("hits_at_k: k must be positive");
  size_t hits = 0;
  for (double r : ranks)
    if (r <= static_cast<double>(k)) hits++;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(std::span<const double> ranks) {
  if (ranks.empty()) throw DataError("mean_reciprocal_rank: empty rank list");
  double sum = 0;
  for (double r : ranks) {
    if (r < 1.0) throw DataError("mean_reciprocal_rank: rank below 1");
    sum += 1.0 / r;
  }
  return sum / static_cast<double>(ranks.size());
}

double roc_auc(std::span<const LabeledScore> scores) {
  size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scores) (s.positive ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("roc_auc: need at least one positive and one negative");

  std::vector<LabeledScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });

  // Midrank sum of positives; ties within a group share the average rank.
  double pos_rank_sum = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (sorted[k].positive) pos_rank_sum += midrank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double pr_auc(std::span<const LabeledScore> scores) {
  size_t n_pos = 0;
  for (const auto& s : scores)
    if (s.positive) n_pos++;
  if (n_pos == 0) throw DataError("pr_auc: need at least one positive");

  std::vector<LabeledScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });

  double ap = 0;
  size_t seen = 0, seen_pos = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i, group_pos = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      if (sorted[j].positive) group_pos++;
      ++j;
    }
    seen += j - i;
    seen_pos += group_pos;
    if (group_pos > 0)
      ap += static_cast<double>(group_pos) *
            (static_cast<double>(seen_pos) / static_cast<double>(seen));
    i = j;
  }
  return ap / static_cast<double>(n_pos);
}

namespace {

void fill_metric_block(MetricBlock& block, std::span<const double> ranks,
                       const std::vector<int>& ks) {
  block.queries = ranks.size();
  if (ranks.empty()) return;
  for (int k : ks) block.hits[k] = hits_at_k(ranks, k);
  block.mrr = mean_reciprocal_rank(ranks);
}

void fill_classification(ClassificationBlock& block, std::span<const LabeledScore> scores) {
  size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scores) (s.positive ? n_pos : n_neg)++;
  block.positives = n_pos;
  block.negatives = n_neg;
  if (n_pos == 0 || n_neg == 0) return;  // block stays absent
  block.roc_auc = roc_auc(scores);
  block.pr_auc = pr_auc(scores);
  block.present = true;
}

}  // namespace

EvalReport evaluate(Scorer& scorer, const Split& split, const Graph& g,
                    const EvalConfig& config) {
  if (split.test.empty()) throw DataError("evaluate: empty test set");
  const RelationSchema& schema = g.schema();

  TripleSet known_positives;
  for (const std::vector<Triple>* part : {&split.train, &split.valid, &split.test})
    for (const auto& t : *part) known_positives.insert(t);

  EvalReport report;
  report.test_triples = split.test.size();
  report.negative_count = split.test_neg.size();
  report.records.resize(split.test.size());

  // Rank queries are independent; each worker fills its own slots so the
  // result is identical for any worker count.
  int threads = std::max(1, config.threads);
  threads = static_cast<int>(
      std::min<size_t>(static_cast<size_t>(threads), split.test.size()));
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&](size_t begin, size_t end) {
    try {
      for (size_t i = begin; i < end; ++i) {
        const Triple& t = split.test[i];
        RankRecord rec;
        rec.triple = TripleKey{t.head, t.rel, t.tail};
        RankResult hr = rank_entity(scorer, t, Side::head, g, known_positives, config.rank);
        RankResult tr = rank_entity(scorer, t, Side::tail, g, known_positives, config.rank);
        rec.head_rank = hr.rank;
        rec.head_candidates = hr.candidate_count;
        rec.tail_rank = tr.rank;
        rec.tail_candidates = tr.candidate_count;
        report.records[i] = rec;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (threads <= 1) {
    worker(0, split.test.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (split.test.size() + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      size_t begin = w * chunk;
      size_t end = std::min(begin + chunk, split.test.size());
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  // Aggregate ranks, overall and per relation.
  struct RankBuckets {
    std::vector<double> pooled, head, tail;
  };
  RankBuckets overall;
  std::map<std::string, RankBuckets> by_relation;
  for (const auto& rec : report.records) {
    const std::string& rel_name = schema.relation(rec.triple.rel).name;
    for (RankBuckets* b : {&overall, &by_relation[rel_name]}) {
      b->pooled.push_back(rec.head_rank);
      b->pooled.push_back(rec.tail_rank);
      b->head.push_back(rec.head_rank);
      b->tail.push_back(rec.tail_rank);
    }
  }

  fill_metric_block(report.overall.pooled, overall.pooled, config.ks);
  fill_metric_block(report.overall.head, overall.head, config.ks);
  fill_metric_block(report.overall.tail, overall.tail, config.ks);
  for (auto& [rel, buckets] : by_relation) {
    RelationReport& rr = report.per_relation[rel];
    fill_metric_block(rr.pooled, buckets.pooled, config.ks);
    fill_metric_block(rr.head, buckets.head, config.ks);
    fill_metric_block(rr.tail, buckets.tail, config.ks);
  }

  // Classification: test positives vs test negatives.
  if (split.test_neg.empty()) {
    report.classification_skipped = true;
    return report;
  }
  std::vector<TripleKey> cls_batch;
  std::vector<bool> cls_labels;
  for (const auto& t : split.test) {
    cls_batch.push_back(TripleKey{t.head, t.rel, t.tail});
    cls_labels.push_back(true);
  }
  for (const auto& t : split.test_neg) {
    cls_batch.push_back(TripleKey{t.head, t.rel, t.tail});
    cls_labels.push_back(false);
  }
  std::vector<double> cls_scores;
  scorer.score_batch(cls_batch, cls_scores);
  if (cls_scores.size() != cls_batch.size())
    throw DataError("scorer returned a wrong-sized classification batch");
  std::vector<LabeledScore> labeled(cls_batch.size());
  std::map<std::string, std::vector<LabeledScore>> labeled_by_rel;
  for (size_t i = 0; i < cls_batch.size(); ++i) {
    if (!std::isfinite(cls_scores[i])) throw DataError("scorer returned a non-finite score");
    labeled[i] = {static_cast<bool>(cls_labels[i]), cls_scores[i]};
    labeled_by_rel[schema.relation(cls_batch[i].rel).name].push_back(labeled[i]);
  }
  fill_classification(report.overall.classification, labeled);
  for (auto& [rel, ls] : labeled_by_rel)
    fill_classification(report.per_relation[rel].classification, ls);

  return report;
}

namespace {

std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_blocks(std::ostream& out, const std::string& rel, const RelationReport& rr) {
  const std::pair<const char*, const MetricBlock*> sides[3] = {
      {"ALL", &rr.pooled}, {"head", &rr.head}, {"tail", &rr.tail}};
  for (const auto& [side, block] : sides) {
    for (const auto& [k, v] : block->hits)
      out << "hits@" << k << '\t' << rel << '\t' << side << '\t' << fmt_value(v) << '\n';
    if (block->queries > 0)
      out << "mrr\t" << rel << '\t' << side << '\t' << fmt_value(block->mrr) << '\n';
    out << "queries\t" << rel << '\t' << side << '\t' << block->queries << '\n';
  }
  if (rr.classification.present) {
    out << "roc_auc\t" << rel << "\tALL\t" << fmt_value(rr.classification.roc_auc) << '\n';
    out << "pr_auc\t" << rel << "\tALL\t" << fmt_value(rr.classification.pr_auc) << '\n';
  }
  out << "positives\t" << rel << "\tALL\t" << rr.classification.positives << '\n';
  out << "negatives\t" << rel << "\tALL\t" << rr.classification.negatives << '\n';
}

}  // namespace

void write_eval_report(std::ostream& out, const EvalReport& report) {
  write_blocks(out, "ALL", report.overall);
  for (const auto& [rel, rr] : report.per_relation) write_blocks(out, rel, rr);
  out << "test_triples\tALL\tALL\t" << report.test_triples << '\n';
  out << "test_negatives\tALL\tALL\t" << report.negative_count << '\n';
  if (report.classification_skipped) out << "classification_skipped\tALL\tALL\t1\n";
}

void write_rank_records(std::ostream& out, const EvalReport& report, const Graph& g) {
  const RelationSchema& schema = g.schema();
  const EntityTable& entities = g.entities();
  for (const auto& rec : report.records) {
    out << entities.name(rec.triple.head, schema) << '\t' << schema.relation(rec.triple.rel).name
        << '\t' << entities.name(rec.triple.tail, schema) << '\t' << fmt_value(rec.head_rank)
        << '\t' << rec.head_candidates << '\t' << fmt_value(rec.tail_rank) << '\t'
        << rec.tail_candidates << '\n';
  }
}

}  // namespace kgbench
