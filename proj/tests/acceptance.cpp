// Acceptance suite: one pass/fail line per criterion, exit 0 only when all
// pass. argv[1] = kgbench CLI binary, argv[2] = const_scorer binary.

#include <sys/resource.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <sstream>
#include <vector>

#include "kgbench/embed.hpp"
#include "kgbench/errors.hpp"
#include "kgbench/external_scorer.hpp"
#include "kgbench/ingest.hpp"
#include "kgbench/metrics.hpp"
#include "kgbench/split.hpp"
#include "kgbench/synthetic.hpp"
#include "test_support.hpp"

using namespace kgbench;
namespace fs = std::filesystem;

namespace {

std::string g_kgbench;
std::string g_const_scorer;
fs::path g_scratch;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double peak_rss_gb() {
  struct rusage ru;
  getrusage(RUSAGE_SELF, &ru);
  return static_cast<double>(ru.ru_maxrss) / (1024.0 * 1024.0);  // KiB on Linux
}

int run_command(const std::string& cmd) {
  int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Failure {
  std::string detail;
};

using CriterionFn = std::function<std::string()>;  // returns detail, throws Failure

bool run_criterion(int number, const std::string& name, const CriterionFn& fn) {
  try {
    std::string detail = fn();
    std::printf("[PASS] %d. %s%s%s\n", number, name.c_str(), detail.empty() ? "" : " -- ",
                detail.c_str());
    return true;
  } catch (const Failure& f) {
    std::printf("[FAIL] %d. %s -- %s\n", number, name.c_str(), f.detail.c_str());
    return false;
  } catch (const std::exception& e) {
    std::printf("[FAIL] %d. %s -- unexpected error: %s\n", number, name.c_str(), e.what());
    return false;
  }
}

void require(bool cond, const std::string& detail) {
  if (!cond) throw Failure{detail};
}

// ---------------------------------------------------------------------------
// 1. Leakage suite

std::string criterion_leakage() {
  auto t0 = std::chrono::steady_clock::now();
  size_t cases = 0, checked_triples = 0;
  for (uint64_t seed = 0; cases < 110; ++seed) {
    auto fc = kgbench::testing::make_fuzz_case(seed, 2000, seed % 4 == 0 ? 0.1 : 0.0);
    if (fc.graph->positive_count() < 2) continue;

    // Every third case gets explicit symmetric reverses (adversarial).
    std::shared_ptr<Graph> graph = fc.graph;
    if (seed % 3 == 0) {
      std::vector<Triple> positives, negatives;
      for (const auto& t : graph->triples())
        (t.polarity == Polarity::positive ? positives : negatives).push_back(t);
      positives = make_directed(positives, *fc.schema);
      positives.insert(positives.end(), negatives.begin(), negatives.end());
      graph = std::make_shared<Graph>(
          Graph::assemble(positives, *fc.schema, graph->entities()));
    }

    SplitSpec spec;
    spec.seed = seed * 1337 + 17;
    spec.mode = (seed % 2 == 0) ? SplitMode::random : SplitMode::time_slice;
    Split split;
    std::optional<Graph> merged_holder;  // keeps the merged graph alive (time-slice)
    const Graph* universe = graph.get();
    if (seed % 2 == 0) {
      split = random_split(*graph, spec);
    } else {
      // Time slice: old = first half of the positives, new = all.
      std::vector<Triple> all(graph->triples().begin(), graph->triples().end());
      std::vector<Triple> old_part(all.begin(), all.begin() + all.size() / 2);
      EntityTable table = graph->entities();
      Graph g_old = Graph::assemble(old_part, *fc.schema, table);
      if (g_old.positive_count() == 0) continue;
      Graph g_new = Graph::assemble(all, *fc.schema, table);
      TimeSliceSplit ts = time_slice_split(g_old, g_new, spec);
      merged_holder = std::move(ts.merged);
      split = std::move(ts.split);
      universe = &*merged_holder;
    }
    cases++;

    // Independent re-check: fresh index, fresh entity set.
    TripleSet train_index;
    std::unordered_set<EntityIdx> train_entities;
    for (const auto& t : split.train) {
      train_index.insert(t);
      train_entities.insert(t.head);
      train_entities.insert(t.tail);
    }
    for (const std::vector<Triple>* part : {&split.valid, &split.test}) {
      for (const auto& t : *part) {
        checked_triples++;
        require(is_trivially_inferable(TripleKey{t.head, t.rel, t.tail}, train_index,
                                       *fc.schema) == Inferable::none,
                "seed " + std::to_string(seed) + ": inferable triple escaped into valid/test");
        require(train_entities.count(t.head) == 1 && train_entities.count(t.tail) == 1,
                "seed " + std::to_string(seed) + ": uncovered entity escaped into valid/test");
      }
    }
    // Negatives must avoid the positive graph and respect typing.
    for (const std::vector<Triple>* part : {&split.train_neg, &split.valid_neg, &split.test_neg})
      for (const auto& n : *part) {
        require(!universe->has_positive_sym_aware(n.head, n.rel, n.tail),
                "seed " + std::to_string(seed) + ": negative collides with a positive");
      }
  }
  double dt = seconds_since(t0);
  require(dt < 60.0, "runtime " + std::to_string(dt) + "s exceeds 60s");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu cases, %zu screened triples, %.1fs", cases,
                checked_triples, dt);
  return buf;
}

// ---------------------------------------------------------------------------
// 2. Metric oracles

double brute_roc(const std::vector<LabeledScore>& s) {
  double num = 0;
  size_t pairs = 0;
  for (const auto& p : s) {
    if (!p.positive) continue;
    for (const auto& n : s) {
      if (n.positive) continue;
      pairs++;
      if (p.score > n.score)
        num += 1.0;
      else if (p.score == n.score)
        num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

double brute_ap(const std::vector<LabeledScore>& s) {
  std::vector<double> thresholds;
  for (const auto& x : s) thresholds.push_back(x.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  size_t n_pos = 0;
  for (const auto& x : s) n_pos += x.positive;
  double ap = 0, prev_recall = 0;
  for (double thr : thresholds) {
    size_t tp = 0, taken = 0;
    for (const auto& x : s)
      if (x.score >= thr) {
        taken++;
        tp += x.positive;
      }
    double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    ap += (recall - prev_recall) * (static_cast<double>(tp) / static_cast<double>(taken));
    prev_recall = recall;
  }
  return ap;
}

std::string criterion_metric_oracles() {
  double worst_roc = 0, worst_pr = 0;
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const size_t n = 2 + rng.below(199);
    std::vector<LabeledScore> scores(n);
    bool has_pos = false, has_neg = false;
    for (auto& s : scores) {
      s.positive = rng.coin();
      s.score = (seed % 3 == 0) ? rng.uniform01()
                                : static_cast<double>(rng.below(10)) / 5.0;  // deliberate ties
      (s.positive ? has_pos : has_neg) = true;
    }
    if (!has_pos) scores[0].positive = true;
    if (!has_neg) scores[n - 1].positive = false;
    worst_roc = std::max(worst_roc, std::abs(roc_auc(scores) - brute_roc(scores)));
    worst_pr = std::max(worst_pr, std::abs(pr_auc(scores) - brute_ap(scores)));
  }
  require(worst_roc <= 1e-12, "roc_auc deviates from the pairwise oracle by " +
                                  std::to_string(worst_roc));
  require(worst_pr <= 1e-12,
          "pr_auc deviates from the average-precision oracle by " + std::to_string(worst_pr));

  // Exhaustive small cases for hits@k and MRR against hand enumeration.
  const std::vector<double> values = {1, 2, 3, 5, 11};
  std::vector<std::vector<double>> lists;
  for (double a : values) {
    lists.push_back({a});
    for (double b : values) {
      lists.push_back({a, b});
      for (double c : values) lists.push_back({a, b, c});
    }
  }
  for (const auto& ranks : lists) {
    for (int k : {1, 3, 10}) {
      size_t count = 0;
      for (double r : ranks)
        if (r <= k) count++;
      double oracle = static_cast<double>(count) / static_cast<double>(ranks.size());
      require(hits_at_k(ranks, k) == oracle, "hits@k mismatch on an enumerated case");
    }
    double sum = 0;
    for (double r : ranks) sum += 1.0 / r;
    require(mean_reciprocal_rank(ranks) == sum / static_cast<double>(ranks.size()),
            "MRR mismatch on an enumerated case");
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "1000 labeled sets, %zu enumerated rank lists, max dev %.1e",
                lists.size(), std::max(worst_roc, worst_pr));
  return buf;
}

// ---------------------------------------------------------------------------
// 3. Ranking correctness

class SeededScorer : public Scorer {
 public:
  SeededScorer(uint64_t seed, int quantize_levels) : seed_(seed), levels_(quantize_levels) {}
  void score_batch(std::span<const TripleKey> triples, std::vector<double>& out) override {
    HashRandomScorer inner(seed_);
    inner.score_batch(triples, out);
    if (levels_ > 0)
      for (double& s : out) s = std::floor(s * levels_) / levels_;
  }

 private:
  uint64_t seed_;
  int levels_;
};

std::string criterion_ranking() {
  size_t tie_free = 0, tied = 0, filtered_checks = 0;
  for (uint64_t seed = 0; seed < 60; ++seed) {
    auto fc = kgbench::testing::make_fuzz_case(seed, 120);
    const Graph& g = *fc.graph;
    if (g.entities().size() > 50 || g.positive_count() < 3) continue;
    const RelationSchema& schema = *fc.schema;

    SplitSpec spec;
    spec.seed = seed + 5;
    Split split = random_split(g, spec);
    if (split.test.empty()) continue;
    TripleSet known;
    std::vector<const Triple*> known_list;
    for (const std::vector<Triple>* part : {&split.train, &split.valid, &split.test})
      for (const auto& t : *part) {
        known.insert(t);
        known_list.push_back(&t);
      }

    for (int mode = 0; mode < 2; ++mode) {
      SeededScorer scorer(seed * 3 + mode, mode == 0 ? 0 : 4);
      for (const auto& t : split.test) {
        for (Side side : {Side::head, Side::tail}) {
          RankResult got = rank_entity(scorer, t, side, g, known);

          // Brute force: linear-scan filtering, full sort, permutation
          // averaging over the tied block.
          const RelationDef& def = schema.relation(t.rel);
          const EntityIdx true_entity = side == Side::head ? t.head : t.tail;
          auto candidates = g.entities_of_type(side == Side::head ? def.domain : def.range);
          std::vector<TripleKey> kept;
          for (EntityIdx c : candidates) {
            TripleKey corrupted = side == Side::head ? TripleKey{c, t.rel, t.tail}
                                                     : TripleKey{t.head, t.rel, c};
            if (c != true_entity) {
              bool known_pos = false;
              for (const Triple* p : known_list) {
                bool direct = p->head == corrupted.head && p->rel == corrupted.rel &&
                              p->tail == corrupted.tail;
                bool reversed = schema.relation(p->rel).symmetric && p->head == corrupted.tail &&
                                p->rel == corrupted.rel && p->tail == corrupted.head;
                if (direct || reversed) {
                  known_pos = true;
                  break;
                }
              }
              if (known_pos) continue;
            }
            kept.push_back(corrupted);
          }
          std::vector<double> scores;
          scorer.score_batch(kept, scores);
          double true_score = 0;
          for (size_t i = 0; i < kept.size(); ++i) {
            EntityIdx c = side == Side::head ? kept[i].head : kept[i].tail;
            if (c == true_entity) true_score = scores[i];
          }
          size_t greater = 0, equal_other = 0;
          for (size_t i = 0; i < kept.size(); ++i) {
            EntityIdx c = side == Side::head ? kept[i].head : kept[i].tail;
            if (scores[i] > true_score)
              greater++;
            else if (scores[i] == true_score && c != true_entity)
              equal_other++;
          }
          require(got.candidate_count == kept.size(),
                  "filtered candidate count mismatch (seed " + std::to_string(seed) + ")");
          filtered_checks++;

          if (equal_other == 0) {
            // Tie-free: the rank from fully sorting the scores.
            std::vector<double> sorted = scores;
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
            size_t pos =
                std::find(sorted.begin(), sorted.end(), true_score) - sorted.begin();
            require(got.rank == static_cast<double>(pos + 1),
                    "tie-free rank disagrees with full sorting");
            tie_free++;
          } else if (equal_other <= 6) {
            // Permutation average over the tied block.
            std::vector<int> block(equal_other + 1, 0);
            block[0] = 1;
            std::sort(block.begin(), block.end());
            double rank_sum = 0;
            size_t perms = 0;
            do {
              size_t pos = std::find(block.begin(), block.end(), 1) - block.begin();
              rank_sum += static_cast<double>(greater + pos + 1);
              perms++;
            } while (std::next_permutation(block.begin(), block.end()));
            require(std::abs(got.rank - rank_sum / static_cast<double>(perms)) <= 1e-12,
                    "tied rank disagrees with the permutation average");
            tied++;
          }
        }
      }
    }
  }
  require(tie_free > 200, "too few tie-free instances exercised");
  require(tied > 50, "too few tied instances exercised");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu tie-free, %zu tied, %zu filtered-count checks", tie_free,
                tied, filtered_checks);
  return buf;
}

// ---------------------------------------------------------------------------
// 4. Gradient checks

std::string criterion_gradients() {
  double worst = 0;
  for (ModelKind kind : {ModelKind::transe, ModelKind::transr}) {
    for (int p : {1, 2}) {
      for (uint64_t restart = 0; restart < 20; ++restart) {
        Hyperparams hp;
        hp.dim = 8;
        hp.norm = p;
        hp.seed = restart * 101 + 13;
        Rng rng(restart + 555);
        std::vector<std::string> e_names, r_names;
        for (int i = 0; i < 10; ++i) e_names.push_back("e" + std::to_string(i));
        for (int i = 0; i < 3; ++i) r_names.push_back("r" + std::to_string(i));
        EmbeddingModel m = init_model(kind, e_names, r_names, hp);
        for (auto& x : m.projection) x += rng.uniform(-0.3, 0.3);

        std::vector<TripleKey> pos, neg;
        for (int i = 0; i < 8; ++i) {
          pos.push_back(TripleKey{static_cast<EntityIdx>(rng.below(10)),
                                  static_cast<RelationIdx>(rng.below(3)),
                                  static_cast<EntityIdx>(rng.below(10))});
          neg.push_back(TripleKey{static_cast<EntityIdx>(rng.below(10)),
                                  static_cast<RelationIdx>(rng.below(3)),
                                  static_cast<EntityIdx>(rng.below(10))});
        }

        ModelGradients analytic;
        batch_loss_and_gradient(m, pos, neg, hp, analytic);

        ModelGradients numeric;
        numeric.resize_like(m);
        const double h = 1e-5;
        auto sweep = [&](std::vector<double>& params, std::vector<double>& grads) {
          for (size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + h;
            double up = batch_loss(m, pos, neg, hp);
            params[i] = saved - h;
            double down = batch_loss(m, pos, neg, hp);
            params[i] = saved;
            grads[i] = (up - down) / (2 * h);
          }
        };
        sweep(m.entity, numeric.entity);
        sweep(m.relation, numeric.relation);
        sweep(m.projection, numeric.projection);

        double diff2 = 0, ref2 = 0;
        auto acc = [&](const std::vector<double>& a, const std::vector<double>& b) {
          for (size_t i = 0; i < a.size(); ++i) {
            diff2 += (a[i] - b[i]) * (a[i] - b[i]);
            ref2 += b[i] * b[i];
          }
        };
        acc(analytic.entity, numeric.entity);
        acc(analytic.relation, numeric.relation);
        acc(analytic.projection, numeric.projection);
        double rel = std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-12);
        worst = std::max(worst, rel);
        require(rel < 1e-4, "gradient mismatch " + std::to_string(rel) + " (kind " +
                                to_string(kind) + ", p=" + std::to_string(p) + ", restart " +
                                std::to_string(restart) + ")");
      }
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "80 restarts, worst relative error %.2e", worst);
  return buf;
}

// ---------------------------------------------------------------------------
// 5. Learning signal on the planted benchmark

std::string criterion_learning_signal() {
  auto t0 = std::chrono::steady_clock::now();

  SyntheticSpec spec = default_synthetic_spec();  // 300 entities, 6 relations, 3000 edges
  spec.noise_fraction = 0.1;
  spec.seed = 2024;
  SyntheticData data = generate_synthetic_data(spec);

  auto positives = make_undirected(std::move(data.triples), data.schema);
  auto negatives = infer_true_negatives(positives, data.schema);
  std::vector<Triple> all = positives;
  all.insert(all.end(), negatives.begin(), negatives.end());
  Graph g = Graph::assemble(std::move(all), data.schema, data.entities);

  SplitSpec split_spec;
  split_spec.seed = 7;
  split_spec.train_ratio = 0.85;
  split_spec.valid_ratio = 0.05;
  split_spec.test_ratio = 0.10;
  Split split = random_split(g, split_spec);
  require(!split.test.empty(), "empty test part");

  Hyperparams hp;
  hp.dim = 32;
  hp.epochs = 200;
  hp.margin = 0.5;
  hp.learning_rate = 0.5;
  hp.norm = 2;
  hp.batch_size = 32;
  hp.seed = 11;
  hp.eval_every = 20;
  hp.patience = 1000;  // run the full 200 epochs, keep the best checkpoint
  TrainResult trained = train(ModelKind::transe, split, g, hp);

  EvalConfig eval_cfg;
  ModelScorer model_scorer(trained.model, g, hp.norm);
  EvalReport model_report = evaluate(model_scorer, split, g, eval_cfg);
  HashRandomScorer random_scorer(99);
  EvalReport random_report = evaluate(random_scorer, split, g, eval_cfg);

  double model_hits = model_report.overall.pooled.hits.at(10);
  double random_hits = random_report.overall.pooled.hits.at(10);
  double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "hits@10 %.3f vs random %.3f (x%.1f), %.0fs", model_hits,
                random_hits, random_hits > 0 ? model_hits / random_hits : 0.0, dt);
  require(model_hits >= 0.5, std::string("hits@10 below 0.5: ") + buf);
  require(model_hits >= 10.0 * random_hits, std::string("hits@10 below 10x random: ") + buf);
  require(dt < 300.0, "runtime exceeds 5 minutes");
  return buf;
}

// ---------------------------------------------------------------------------
// 6. Pipeline determinism across thread settings

std::string criterion_determinism() {
  fs::path dir = g_scratch / "determinism";
  fs::create_directories(dir);
  fs::path cfg_path = dir / "run.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "stages = generate,create-graph,split,train,evaluate\n"
        << "seed = 99\n"
        << "quality = medium\n"
        << "synth.entities = 60\n"
        << "synth.edges = 150\n"
        << "model.dim = 12\n"
        << "model.epochs = 8\n"
        << "eval.dump_ranks = true\n";
  }
  fs::path out1 = dir / "run1", out2 = dir / "run2";
  std::string base = g_kgbench + " pipeline --config " + cfg_path.string();
  require(run_command("KGBENCH_THREADS=1 " + base + " --out " + out1.string() +
                      " > /dev/null 2>&1") == 0,
          "first pipeline run failed");
  require(run_command("KGBENCH_THREADS=4 " + base + " --out " + out2.string() +
                      " > /dev/null 2>&1") == 0,
          "second pipeline run failed");

  std::vector<std::string> artifacts = {
      "edges.tsv",    "schema.tsv",   "thresholds.tsv", "graph.tsv",
      "train.tsv",    "valid.tsv",    "test.tsv",       "train_neg.tsv",
      "valid_neg.tsv", "test_neg.tsv", "split_report.tsv", "model.tsv",
      "loss_curve.tsv", "report.tsv", "ranks.tsv"};
  for (const auto& f : artifacts) {
    require(fs::exists(out1 / f) && fs::exists(out2 / f), "missing artifact " + f);
    require(slurp(out1 / f) == slurp(out2 / f), "artifact differs across thread settings: " + f);
  }
  return std::to_string(artifacts.size()) + " artifacts byte-identical at threads 1 vs 4";
}

// ---------------------------------------------------------------------------
// 7. Scale smoke: 1M edges

std::string criterion_scale() {
  auto t0 = std::chrono::steady_clock::now();

  std::vector<RelationRecord> records = {
      {"interacts", "GENE", "GENE", true, "", {}, {}},
      {"expressed_in", "GENE", "ANAT", false, "", {}, {}},
      {"over_expressed_in", "GENE", "ANAT", false, "", {"expressed_in"}, {"under_expressed_in"}},
      {"under_expressed_in", "GENE", "ANAT", false, "", {"expressed_in"}, {"over_expressed_in"}},
      {"has_part", "ANAT", "ANAT", false, "part_of", {}, {}},
      {"part_of", "ANAT", "ANAT", false, "has_part", {}, {}},
  };
  RelationSchema schema = RelationSchema::validate(records);
  EntityTable table;
  const size_t per_type = 100000;
  for (NodeTypeIdx t = 0; t < schema.node_type_count(); ++t)
    for (size_t i = 0; i < per_type; ++i) table.intern(t, std::to_string(i));

  const size_t edge_count = 1000000;
  std::vector<Triple> triples;
  triples.reserve(edge_count);
  Rng rng(31);
  for (size_t i = 0; i < edge_count; ++i) {
    RelationIdx r = static_cast<RelationIdx>(rng.below(schema.relation_count()));
    const RelationDef& def = schema.relation(r);
    auto heads = table.entities_of_type(def.domain);
    auto tails = table.entities_of_type(def.range);
    Triple t;
    t.head = heads[rng.below(heads.size())];
    t.rel = r;
    t.tail = tails[rng.below(tails.size())];
    t.source = "synth";
    triples.push_back(std::move(t));
  }

  Graph g = Graph::assemble(std::move(triples), schema, std::move(table));
  SplitSpec spec;
  spec.seed = 4;
  Split split = random_split(g, spec);
  double dt = seconds_since(t0);
  double rss = peak_rss_gb();

  require(split.train.size() + split.valid.size() + split.test.size() == g.positive_count(),
          "split does not partition the graph");
  require(dt < 60.0, "assemble+split took " + std::to_string(dt) + "s (>60s)");
  require(rss < 2.0, "peak RSS " + std::to_string(rss) + " GB (>2GB)");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu edges in %.1fs, peak RSS %.2f GB", g.triples().size(),
                dt, rss);
  return buf;
}

// ---------------------------------------------------------------------------
// 8. Scorer protocol conformance

std::string criterion_protocol() {
  // A small graph with several relations and enough entities for ranking.
  RelationSchema schema = kgbench::testing::base_schema();
  kgbench::testing::GraphBuilder gb(schema);
  Rng rng(41);
  for (int i = 0; i < 50; ++i)
    gb.add("GENE", "g" + std::to_string(rng.below(8)), "assoc", "DIS",
           "d" + std::to_string(rng.below(8)));
  for (int i = 0; i < 30; ++i)
    gb.add("GENE", "g" + std::to_string(rng.below(8)), "interacts", "GENE",
           "g" + std::to_string(rng.below(8)));
  for (int i = 0; i < 20; ++i)
    gb.add("DRUG", "x" + std::to_string(rng.below(6)), "targets", "GENE",
           "g" + std::to_string(rng.below(8)));
  auto positives = make_undirected(gb.triples, schema);
  Graph g = Graph::assemble(positives, schema, gb.table);

  SplitSpec spec;
  spec.seed = 3;
  spec.train_ratio = 0.7;
  spec.valid_ratio = 0.1;
  spec.test_ratio = 0.2;
  Split split = random_split(g, spec);
  require(!split.test.empty(), "empty test part");

  // (a) constant scorer: every rank is the all-ties expectation (m+1)/2.
  {
    ExternalScorer scorer(g_const_scorer, g);
    EvalReport report = evaluate(scorer, split, g);

    TripleSet known;
    for (const std::vector<Triple>* part : {&split.train, &split.valid, &split.test})
      for (const auto& t : *part) known.insert(t);
    double expected_mrr_sum = 0;
    size_t queries = 0;
    for (size_t i = 0; i < split.test.size(); ++i) {
      const Triple& t = split.test[i];
      for (Side side : {Side::head, Side::tail}) {
        const RelationDef& def = schema.relation(t.rel);
        const EntityIdx true_entity = side == Side::head ? t.head : t.tail;
        auto candidates = g.entities_of_type(side == Side::head ? def.domain : def.range);
        size_t m = 0;
        for (EntityIdx c : candidates) {
          TripleKey corrupted = side == Side::head ? TripleKey{c, t.rel, t.tail}
                                                   : TripleKey{t.head, t.rel, c};
          if (c != true_entity && known.has_sym_aware(corrupted, schema)) continue;
          m++;
        }
        const double expected_rank = (static_cast<double>(m) + 1.0) / 2.0;
        const double got_rank =
            side == Side::head ? report.records[i].head_rank : report.records[i].tail_rank;
        require(std::abs(got_rank - expected_rank) <= 1e-9,
                "constant-scorer rank deviates from (m+1)/2");
        expected_mrr_sum += 2.0 / (static_cast<double>(m) + 1.0);
        queries++;
      }
    }
    double expected_mrr = expected_mrr_sum / static_cast<double>(queries);
    require(std::abs(report.overall.pooled.mrr - expected_mrr) <= 1e-9,
            "constant-scorer MRR deviates from the analytic expectation");
  }

  // (b) internal model in-process vs through the subprocess protocol.
  Hyperparams hp;
  hp.dim = 8;
  hp.epochs = 15;
  hp.seed = 21;
  hp.learning_rate = 0.05;
  TrainResult trained = train(ModelKind::transe, split, g, hp);
  fs::path model_path = g_scratch / "protocol_model.tsv";
  save_model_file(model_path.string(), trained.model);

  ModelScorer in_process(trained.model, g, hp.norm);
  EvalReport direct = evaluate(in_process, split, g);
  ExternalScorer through_protocol(
      g_kgbench + " score-server --model " + model_path.string() + " --norm 2", g);
  EvalReport proxied = evaluate(through_protocol, split, g);

  require(direct.records.size() == proxied.records.size(), "record count mismatch");
  for (size_t i = 0; i < direct.records.size(); ++i) {
    require(std::abs(direct.records[i].head_rank - proxied.records[i].head_rank) <= 1e-9 &&
                std::abs(direct.records[i].tail_rank - proxied.records[i].tail_rank) <= 1e-9,
            "in-process and protocol ranks differ");
  }
  require(std::abs(direct.overall.pooled.mrr - proxied.overall.pooled.mrr) <= 1e-9,
          "in-process and protocol MRR differ");
  for (int k : {1, 3, 10})
    require(std::abs(direct.overall.pooled.hits.at(k) - proxied.overall.pooled.hits.at(k)) <=
                1e-9,
            "in-process and protocol hits@k differ");
  if (direct.overall.classification.present)
    require(std::abs(direct.overall.classification.roc_auc -
                     proxied.overall.classification.roc_auc) <= 1e-9,
            "in-process and protocol ROC AUC differ");

  // (c) a scorer that answers one line short is a protocol error.
  bool protocol_error = false;
  try {
    ExternalScorer broken(g_const_scorer + " --drop-one", g);
    evaluate(broken, split, g);
  } catch (const ProtocolError&) {
    protocol_error = true;
  }
  require(protocol_error, "short-reply scorer was not flagged as a protocol violation");

  return "constant scorer, model-through-protocol and violation paths all conform";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <kgbench-binary> <const-scorer-binary>\n");
    return 2;
  }
  g_kgbench = argv[1];
  g_const_scorer = argv[2];
  g_scratch = fs::temp_directory_path() / "kgbench_acceptance";
  fs::remove_all(g_scratch);
  fs::create_directories(g_scratch);

  bool ok = true;
  ok &= run_criterion(1, "leakage-free splits on fuzzed graphs", criterion_leakage);
  ok &= run_criterion(2, "classification and ranking metric oracles", criterion_metric_oracles);
  ok &= run_criterion(3, "rank_entity vs full-sort and permutation oracles", criterion_ranking);
  ok &= run_criterion(4, "analytic gradients vs central finite differences",
                      criterion_gradients);
  ok &= run_criterion(5, "learning signal on the planted benchmark",
                      criterion_learning_signal);
  ok &= run_criterion(6, "byte-identical pipeline across thread settings",
                      criterion_determinism);
  ok &= run_criterion(7, "million-edge assemble and split within budget", criterion_scale);
  ok &= run_criterion(8, "external scorer protocol conformance", criterion_protocol);

  fs::remove_all(g_scratch);
  std::printf("%s\n", ok ? "ACCEPTANCE: all criteria passed" : "ACCEPTANCE: FAILURES PRESENT");
  return ok ? 0 : 1;
}
