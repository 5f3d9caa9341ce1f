#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <unordered_set>

#include "kgbench/errors.hpp"
#include "kgbench/ingest.hpp"
#include "kgbench/split.hpp"
#include "test_support.hpp"

using namespace kgbench;
using kgbench::testing::GraphBuilder;

namespace {

SplitSpec spec_with_seed(uint64_t seed, SplitMode mode = SplitMode::random) {
  SplitSpec spec;
  spec.seed = seed;
  spec.mode = mode;
  return spec;
}

std::set<std::string> part_keys(const std::vector<Triple>& part) {
  std::set<std::string> s;
  for (const auto& t : part)
    s.insert(std::to_string(t.head) + "/" + std::to_string(t.rel) + "/" + std::to_string(t.tail));
  return s;
}

void check_no_leakage(const Split& split, const Graph& g) {
  const RelationSchema& schema = g.schema();
  TripleSet train_index;
  std::unordered_set<EntityIdx> train_entities;
  for (const auto& t : split.train) {
    train_index.insert(t);
    train_entities.insert(t.head);
    train_entities.insert(t.tail);
  }
  for (const std::vector<Triple>* part : {&split.valid, &split.test}) {
    for (const auto& t : *part) {
      CHECK(is_trivially_inferable(TripleKey{t.head, t.rel, t.tail}, train_index, schema) ==
            Inferable::none);
      CHECK(train_entities.count(t.head) == 1);
      CHECK(train_entities.count(t.tail) == 1);
    }
  }
}

void check_negatives(const Split& split, const Graph& g) {
  const std::vector<Triple>* negs[3] = {&split.train_neg, &split.valid_neg, &split.test_neg};
  for (const auto* part : negs) {
    for (const auto& n : *part) {
      CHECK_FALSE(g.has_positive_sym_aware(n.head, n.rel, n.tail));
      const RelationDef& def = g.schema().relation(n.rel);
      CHECK(g.entities().type_of(n.head) == def.domain);
      CHECK(g.entities().type_of(n.tail) == def.range);
    }
  }
}

}  // namespace

TEST_CASE("split spec validation") {
  SplitSpec spec;
  spec.train_ratio = 0.5;
  CHECK_THROWS_AS(spec.check(), ConfigError);  // does not sum to 1
  spec.train_ratio = 0.9;
  CHECK_NOTHROW(spec.check());
  spec.negative_ratio = 0;
  CHECK_THROWS_AS(spec.check(), ConfigError);
}

TEST_CASE("random_split on a 1-triple graph puts it in train") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  gb.add("GENE", "a", "assoc", "DIS", "d");
  Graph g = gb.build();
  Split split = random_split(g, spec_with_seed(3));
  CHECK(split.train.size() == 1);
  CHECK(split.valid.empty());
  CHECK(split.test.empty());
}

TEST_CASE("random_split rejects an empty graph") {
  RelationSchema schema = testing::base_schema();
  EntityTable table;
  Graph g = Graph::assemble({}, schema, table);
  CHECK_THROWS_AS(random_split(g, spec_with_seed(1)), DataError);
}

TEST_CASE("random_split partitions the positives") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    auto fc = kgbench::testing::make_fuzz_case(seed, 400, 0.1);
    if (fc.graph->positive_count() == 0) continue;
    Split split = random_split(*fc.graph, spec_with_seed(seed * 13 + 1));

    auto train = part_keys(split.train), valid = part_keys(split.valid),
         test = part_keys(split.test);
    CHECK(split.train.size() + split.valid.size() + split.test.size() ==
          fc.graph->positive_count());
    CHECK(train.size() == split.train.size());  // no duplicates within a part
    for (const auto& k : valid) CHECK(train.count(k) == 0);
    for (const auto& k : test) {
      CHECK(train.count(k) == 0);
      CHECK(valid.count(k) == 0);
    }
    std::set<std::string> all = train;
    all.insert(valid.begin(), valid.end());
    all.insert(test.begin(), test.end());
    size_t positives = 0;
    for (const auto& t : fc.graph->triples())
      if (t.polarity == Polarity::positive) {
        positives++;
        CHECK(all.count(std::to_string(t.head) + "/" + std::to_string(t.rel) + "/" +
                        std::to_string(t.tail)) == 1);
      }
    CHECK(all.size() == positives);

    check_no_leakage(split, *fc.graph);
    check_negatives(split, *fc.graph);
    CHECK(split.report.repair_iterations <= fc.graph->positive_count() + 1);
  }
}

TEST_CASE("random_split repairs an adversarial all-reversed symmetric graph") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  Rng rng(99);
  for (int i = 0; i < 120; ++i) {
    int a = static_cast<int>(rng.below(18));
    int b = static_cast<int>(rng.below(18));
    if (a == b) continue;
    gb.add("GENE", "g" + std::to_string(a), "interacts", "GENE", "g" + std::to_string(b));
  }
  auto directed = make_directed(gb.triples, schema);  // every edge's reverse present
  Graph g = Graph::assemble(directed, schema, gb.table);
  Split split = random_split(g, spec_with_seed(5));
  check_no_leakage(split, g);
  size_t moved = 0;
  for (const auto& [reason, n] : split.report.moved) moved += n;
  CHECK(moved > 0);
}

TEST_CASE("random_split warns when the test ratio is zero") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  for (int i = 0; i < 10; ++i)
    gb.add("GENE", "g" + std::to_string(i), "assoc", "DIS", "d" + std::to_string(i));
  Graph g = gb.build();
  SplitSpec spec = spec_with_seed(2);
  spec.train_ratio = 0.9;
  spec.valid_ratio = 0.1;
  spec.test_ratio = 0.0;
  Split split = random_split(g, spec);
  CHECK_FALSE(split.report.warnings.empty());
}

TEST_CASE("random_split is deterministic") {
  auto fc = kgbench::testing::make_fuzz_case(11, 300, 0.1);
  Split a = random_split(*fc.graph, spec_with_seed(42));
  Split b = random_split(*fc.graph, spec_with_seed(42));
  std::ostringstream sa, sb;
  write_split_report(sa, a.report);
  write_split_report(sb, b.report);
  CHECK(sa.str() == sb.str());
  CHECK(part_keys(a.train) == part_keys(b.train));
  CHECK(part_keys(a.valid) == part_keys(b.valid));
  CHECK(part_keys(a.test) == part_keys(b.test));
  CHECK(part_keys(a.train_neg) == part_keys(b.train_neg));
  CHECK(part_keys(a.valid_neg) == part_keys(b.valid_neg));
  CHECK(part_keys(a.test_neg) == part_keys(b.test_neg));

  Split c = random_split(*fc.graph, spec_with_seed(43));
  CHECK(part_keys(a.train) != part_keys(c.train));  // seed actually matters
}

TEST_CASE("time_slice_split") {
  RelationSchema schema = testing::base_schema();
  auto ts_spec = [](uint64_t seed) { return spec_with_seed(seed, SplitMode::time_slice); };

  auto build_old = [&](GraphBuilder& gb) {
    gb.add("GENE", "a", "assoc", "DIS", "d1");
    gb.add("GENE", "b", "assoc", "DIS", "d2");
    gb.add("GENE", "a", "interacts", "GENE", "b");
    gb.add("DRUG", "x", "targets", "GENE", "a");
  };

  SUBCASE("identical snapshots leave valid and test empty") {
    GraphBuilder g1(schema), g2(schema);
    build_old(g1);
    build_old(g2);
    TimeSliceSplit ts = time_slice_split(g1.build(), g2.build(), ts_spec(1));
    CHECK(ts.split.valid.empty());
    CHECK(ts.split.test.empty());
    CHECK(ts.split.train.size() == 4);
    CHECK(ts.split.report.dropped.empty());
  }
  SUBCASE("one new edge between known entities becomes the single candidate") {
    GraphBuilder g1(schema), g2(schema);
    build_old(g1);
    build_old(g2);
    g2.add("GENE", "b", "assoc", "DIS", "d1");
    TimeSliceSplit ts = time_slice_split(g1.build(), g2.build(), ts_spec(1));
    CHECK(ts.split.valid.size() + ts.split.test.size() == 1);
  }
  SUBCASE("an edge touching a brand-new entity is dropped and counted") {
    GraphBuilder g1(schema), g2(schema);
    build_old(g1);
    build_old(g2);
    g2.add("GENE", "NEW", "assoc", "DIS", "d1");
    TimeSliceSplit ts = time_slice_split(g1.build(), g2.build(), ts_spec(1));
    CHECK(ts.split.valid.size() + ts.split.test.size() == 0);
    CHECK(ts.split.report.dropped.at("unseen_entity") == 1);
  }
  SUBCASE("an inferable new edge is dropped with its reason") {
    GraphBuilder g1(schema), g2(schema);
    build_old(g1);
    build_old(g2);
    g2.add("GENE", "b", "interacts", "GENE", "a");  // reverse of an old symmetric edge
    TimeSliceSplit ts = time_slice_split(g1.build(), g2.build(), ts_spec(1));
    CHECK(ts.split.report.dropped.at("reverse_symmetric") == 1);
  }
  SUBCASE("empty old graph is an error") {
    GraphBuilder g1(schema), g2(schema);
    build_old(g2);
    CHECK_THROWS_AS(time_slice_split(g1.build(), g2.build(), ts_spec(1)), DataError);
  }
  SUBCASE("snapshots must share one schema object") {
    RelationSchema other = testing::base_schema();
    GraphBuilder g1(schema), g2(other);
    build_old(g1);
    build_old(g2);
    CHECK_THROWS_AS(time_slice_split(g1.build(), g2.build(), ts_spec(1)), DataError);
  }
  SUBCASE("leakage and coverage hold on fuzzed snapshot pairs") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      auto fc = kgbench::testing::make_fuzz_case(seed, 300);
      // Old snapshot = a prefix of the triples; new = everything.
      std::vector<Triple> all(fc.graph->triples().begin(), fc.graph->triples().end());
      if (all.size() < 4) continue;
      std::vector<Triple> old_part(all.begin(), all.begin() + all.size() / 2);
      EntityTable table = fc.graph->entities();
      Graph g_old = Graph::assemble(old_part, *fc.schema, table);
      Graph g_new = Graph::assemble(all, *fc.schema, table);
      if (g_old.positive_count() == 0) continue;
      TimeSliceSplit ts = time_slice_split(g_old, g_new, ts_spec(seed));
      check_no_leakage(ts.split, ts.merged);
      check_negatives(ts.split, ts.merged);
    }
  }
}

TEST_CASE("sample_typed_corruption enumerates only valid corruptions") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  EntityIdx a = gb.entity("GENE", "A");
  EntityIdx b = gb.entity("GENE", "B");
  EntityIdx d = gb.entity("DIS", "D");
  EntityIdx e = gb.entity("DIS", "E");
  gb.add("GENE", "A", "assoc", "DIS", "D");
  Graph g = gb.build();
  const Triple& pos = g.triples()[0];

  // Over many seeds the only reachable corruptions are (B, assoc, D) for the
  // head slot and (A, assoc, E) for the tail slot.
  std::set<std::pair<EntityIdx, EntityIdx>> seen;
  for (uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed);
    auto cand = sample_typed_corruption(rng, pos, g, 100);
    REQUIRE(cand.has_value());
    seen.insert({cand->head, cand->tail});
    CHECK(cand->rel == pos.rel);
    CHECK(cand->polarity == Polarity::negative);
  }
  std::set<std::pair<EntityIdx, EntityIdx>> expected = {{b, d}, {a, e}};
  CHECK(seen == expected);
}

TEST_CASE("sample_negatives fills the quota exactly with ample entities") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  for (int i = 0; i < 100; ++i)
    gb.add("GENE", "g" + std::to_string(i), "assoc", "DIS", "d" + std::to_string(i));
  Graph g = gb.build();

  Split split;
  split.train.assign(g.triples().begin(), g.triples().end());
  SplitSpec spec = spec_with_seed(7);
  sample_negatives(split, g, spec);
  CHECK(split.train_neg.size() == 100);
  CHECK(split.report.negatives[0].sampled == 100);
  check_negatives(split, g);
}

TEST_CASE("negative quota scales with the ratio and rounds up") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  for (int i = 0; i < 7; ++i)
    gb.add("GENE", "g" + std::to_string(i), "assoc", "DIS", "d" + std::to_string(i));
  Graph g = gb.build();
  Split split;
  split.train.assign(g.triples().begin(), g.triples().end());
  SplitSpec spec = spec_with_seed(7);
  spec.negative_ratio = 0.5;  // ceil(3.5) = 4
  sample_negatives(split, g, spec);
  CHECK(split.train_neg.size() == 4);
}

TEST_CASE("a disjointness-inferred true negative follows its generating positive's part") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  gb.add("GENE", "g", "over_expressed_in", "ANAT", "t");
  for (int i = 0; i < 6; ++i)  // padding so corruption has somewhere to go
    gb.add("GENE", "p" + std::to_string(i), "expressed_in", "ANAT",
           "a" + std::to_string(i));
  auto inferred = infer_true_negatives(gb.triples, schema);
  REQUIRE(inferred.size() == 1);
  std::vector<Triple> all = gb.triples;
  all.insert(all.end(), inferred.begin(), inferred.end());
  Graph g = Graph::assemble(all, schema, gb.table);

  // Parts fixed by hand: the generating positive sits in test.
  Split split;
  for (const auto& t : g.triples()) {
    if (t.polarity != Polarity::positive) continue;
    if (g.schema().relation(t.rel).name == "over_expressed_in")
      split.test.push_back(t);
    else
      split.train.push_back(t);
  }
  sample_negatives(split, g, spec_with_seed(3));
  REQUIRE(split.report.negatives[2].true_assigned == 1);
  bool found = false;
  for (const auto& n : split.test_neg)
    found |= g.schema().relation(n.rel).name == "under_expressed_in";
  CHECK(found);
  // The true negative precedes any sampled one in the part.
  CHECK(split.test_neg.size() >= 1);
}

TEST_CASE("source-provided true negatives go to train") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  gb.add("GENE", "a", "assoc", "DIS", "d1");
  gb.add("GENE", "b", "assoc", "DIS", "d2", Polarity::negative);
  Graph g = gb.build();
  Split split;
  for (const auto& t : g.triples())
    if (t.polarity == Polarity::positive) split.test.push_back(t);
  sample_negatives(split, g, spec_with_seed(1));
  CHECK(split.report.negatives[0].true_assigned == 1);
  REQUIRE(split.train_neg.size() == 1);
  CHECK(split.train_neg[0].polarity == Polarity::negative);
}

TEST_CASE("corruption exhaustion is reported, never an infinite loop") {
  RelationSchema schema = testing::base_schema();
  GraphBuilder gb(schema);
  // Single GENE and single DIS entity: every corruption reproduces the
  // positive itself.
  gb.add("GENE", "only", "assoc", "DIS", "only");
  Graph g = gb.build();
  Split split;
  split.train.assign(g.triples().begin(), g.triples().end());
  SplitSpec spec = spec_with_seed(1);
  sample_negatives(split, g, spec);
  CHECK(split.train_neg.empty());
  CHECK(split.report.negatives[0].skipped >= 1);
  CHECK_FALSE(split.report.warnings.empty());
}

TEST_CASE("split files round trip against the graph") {
  auto fc = kgbench::testing::make_fuzz_case(17, 200, 0.1);
  if (fc.graph->positive_count() == 0) return;
  Split split = random_split(*fc.graph, spec_with_seed(5));

  namespace fs = std::filesystem;
  std::string dir = (fs::temp_directory_path() / "kgbench_split_test").string();
  fs::create_directories(dir);
  write_split_files(dir, split, *fc.graph);

  auto train = read_split_part(dir + "/train.tsv", *fc.graph, Polarity::positive);
  auto test_neg = read_split_part(dir + "/test_neg.tsv", *fc.graph, Polarity::negative);
  CHECK(part_keys(train) == part_keys(split.train));
  CHECK(part_keys(test_neg) == part_keys(split.test_neg));
  fs::remove_all(dir);
}
