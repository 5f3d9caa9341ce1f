#include "kgbench/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "kgbench/embed.hpp"
#include "kgbench/errors.hpp"
#include "kgbench/external_scorer.hpp"
#include "kgbench/ingest.hpp"
#include "kgbench/metrics.hpp"
#include "kgbench/split.hpp"
#include "kgbench/synthetic.hpp"

namespace fs = std::filesystem;

namespace kgbench {

const std::vector<std::string> Pipeline::kDefaultStages = {"create-graph", "split", "train",
                                                           "evaluate"};

namespace {

const std::vector<std::string> kKnownKeys = {
    "stages", "edges", "edges_old", "edges_new", "schema", "thresholds",
    "graph", "graph_old", "graph_new",
    "quality", "direction", "exclude_sources", "exclude_relations",
    "split.mode", "split.train", "split.valid", "split.test",
    "split.negative_ratio", "split.max_corruption_attempts",
    "seed", "threads", "out",
    "model", "model.dim", "model.margin", "model.lr", "model.norm",
    "model.epochs", "model.batch_size", "model.eval_every", "model.patience",
    "eval.ks", "eval.filtered", "eval.typed_candidates", "eval.dump_ranks",
    "eval.scorer", "eval.scorer_command",
    "synth.schema", "synth.latent_dim", "synth.noise", "synth.entities", "synth.edges",
};
const std::vector<std::string> kKnownPrefixes = {"synth.entities.", "synth.edges."};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t pos = s.find(',', start);
    std::string item = (pos == std::string::npos) ? s.substr(start)
                                                  : s.substr(start, pos - start);
    // trim
    size_t b = item.find_first_not_of(" \t");
    if (b != std::string::npos) {
      size_t e = item.find_last_not_of(" \t");
      out.push_back(item.substr(b, e - b + 1));
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::set<std::string> split_set(const std::string& s) {
  auto v = split_list(s);
  return {v.begin(), v.end()};
}

SplitSpec read_split_spec(const Config& cfg) {
  SplitSpec spec;
  std::string mode = cfg.get_or("split.mode", "random");
  if (mode == "random")
    spec.mode = SplitMode::random;
  else if (mode == "time_slice")
    spec.mode = SplitMode::time_slice;
  else
    throw ConfigError("split.mode must be random or time_slice");
  spec.train_ratio = cfg.get_double("split.train", 0.9);
  spec.valid_ratio = cfg.get_double("split.valid", 0.05);
  spec.test_ratio = cfg.get_double("split.test", 0.05);
  spec.negative_ratio = cfg.get_double("split.negative_ratio", 1.0);
  spec.max_corruption_attempts = cfg.get_int("split.max_corruption_attempts", 100);
  spec.seed = cfg.get_uint64("seed", 0);
  spec.check();
  return spec;
}

Hyperparams read_hyperparams(const Config& cfg) {
  Hyperparams hp;
  hp.dim = cfg.get_int("model.dim", 100);
  hp.margin = cfg.get_double("model.margin", 1.0);
  hp.learning_rate = cfg.get_double("model.lr", 0.01);
  hp.norm = cfg.get_int("model.norm", 2);
  hp.epochs = cfg.get_int("model.epochs", 100);
  hp.batch_size = cfg.get_int("model.batch_size", 128);
  hp.eval_every = cfg.get_int("model.eval_every", 10);
  hp.patience = cfg.get_int("model.patience", 3);
  hp.seed = cfg.get_uint64("seed", 0);
  hp.check();
  return hp;
}

void write_ingest_report(const std::string& path, const IngestReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "lines_read\t" << report.lines_read << '\n';
  out << "triples_parsed\t" << report.triples_parsed << '\n';
  out << "parse_errors\t" << report.errors.size() << '\n';
  for (const auto& e : report.errors) out << "parse_error\t" << e.reason << '\n';
  for (const auto& [filter, n] : report.dropped) out << "dropped." << filter << '\t' << n << '\n';
  out << "duplicates_merged\t" << report.duplicates_merged << '\n';
  out << "true_negatives_inferred\t" << report.true_negatives_inferred << '\n';
  out << "conflicts\t" << report.conflicts << '\n';
  for (const auto& n : report.notes) out << "note\t" << n << '\n';
}

}  // namespace

int resolve_threads(const Config& cfg) {
  const char* env = std::getenv("KGBENCH_THREADS");
  int env_threads = 0;
  if (env && *env) env_threads = std::max(1, std::atoi(env));
  int threads = cfg.get_int("threads", env_threads > 0 ? env_threads : 1);
  if (env_threads > 0) threads = std::min(threads, env_threads);
  return std::max(1, threads);
}

Pipeline::Pipeline(Config config, std::string out_dir)
    : cfg_(std::move(config)), out_(std::move(out_dir)) {
  cfg_.check_known(kKnownKeys, kKnownPrefixes);
  if (out_.empty()) out_ = cfg_.get_or("out", "out");
  threads_ = resolve_threads(cfg_);
  fs::create_directories(out_);
}

std::string Pipeline::input_path(const std::string& key, const std::string& fallback_name) const {
  return cfg_.get_or(key, out_path(fallback_name));
}

void Pipeline::require_file(const std::string& path, const std::string& what) const {
  if (!fs::exists(path)) throw ConfigError(what + " file does not exist: " + path);
}

void Pipeline::echo_resolved_config() const {
  std::map<std::string, std::string> resolved = cfg_.values();
  auto put_default = [&](const std::string& k, const std::string& v) {
    if (!resolved.count(k)) resolved[k] = v;
  };
  put_default("stages", "create-graph,split,train,evaluate");
  put_default("quality", "all");
  put_default("direction", "undirected");
  put_default("exclude_sources", "");
  put_default("exclude_relations", "");
  put_default("split.mode", "random");
  put_default("split.train", "0.9");
  put_default("split.valid", "0.05");
  put_default("split.test", "0.05");
  put_default("split.negative_ratio", "1.0");
  put_default("split.max_corruption_attempts", "100");
  put_default("seed", "0");
  put_default("model", "transe");
  put_default("model.dim", "100");
  put_default("model.margin", "1.0");
  put_default("model.lr", "0.01");
  put_default("model.norm", "2");
  put_default("model.epochs", "100");
  put_default("model.batch_size", "128");
  put_default("model.eval_every", "10");
  put_default("model.patience", "3");
  put_default("eval.ks", "1,3,10");
  put_default("eval.filtered", "true");
  put_default("eval.typed_candidates", "true");
  put_default("eval.dump_ranks", "false");
  put_default("eval.scorer", "internal");
  resolved["out"] = out_;
  resolved["threads"] = std::to_string(threads_);
  std::ofstream out(out_path("config_resolved.cfg"), std::ios::binary);
  if (!out) throw DataError("cannot write resolved config");
  write_config(out, resolved);
}

void Pipeline::generate() {
  SyntheticSpec spec;
  if (auto schema_path = cfg_.get("synth.schema")) {
    require_file(*schema_path, "synthetic schema");
    std::ifstream in(*schema_path);
    spec.relations = read_schema_records(in, *schema_path);
  } else {
    spec = default_synthetic_spec();
  }
  spec.latent_dim = cfg_.get_int("synth.latent_dim", spec.latent_dim);
  spec.noise_fraction = cfg_.get_double("synth.noise", spec.noise_fraction);
  spec.seed = cfg_.get_uint64("seed", 0);

  // Per-type and per-relation overrides; a custom schema starts from the
  // defaults 150 entities / 500 edges.
  if (cfg_.get("synth.schema")) {
    spec.entities_per_type.clear();
    spec.edges_per_relation.clear();
    std::set<std::string> types;
    for (const auto& r : spec.relations) {
      types.insert(r.domain);
      types.insert(r.range);
    }
    for (const auto& t : types) spec.entities_per_type[t] = 150;
    for (const auto& r : spec.relations) spec.edges_per_relation[r.name] = 500;
  }
  size_t default_entities = cfg_.get_uint64("synth.entities", 0);
  if (default_entities > 0)
    for (auto& [type, n] : spec.entities_per_type) n = default_entities;
  size_t default_edges = cfg_.get_uint64("synth.edges", 0);
  if (default_edges > 0)
    for (auto& [rel, n] : spec.edges_per_relation) n = default_edges;
  for (const auto& [type, count] : cfg_.with_prefix("synth.entities.")) {
    if (!spec.entities_per_type.count(type))
      throw ConfigError("synth.entities." + type + ": unknown node type");
    spec.entities_per_type[type] = std::strtoull(count.c_str(), nullptr, 10);
  }
  for (const auto& [rel, count] : cfg_.with_prefix("synth.edges.")) {
    if (!spec.edges_per_relation.count(rel))
      throw ConfigError("synth.edges." + rel + ": unknown relation");
    spec.edges_per_relation[rel] = std::strtoull(count.c_str(), nullptr, 10);
  }

  write_synthetic_files(spec, out_);
}

namespace {

// Shared by the single-graph and time-slice variants of create-graph.
Graph build_graph(const std::string& edges_path, const RelationSchema& schema,
                  const Config& cfg, IngestReport& report) {
  QualitySetting quality;
  quality.level = parse_quality_level(cfg.get_or("quality", "all"));
  if (quality.level != QualityLevel::all) {
    auto thresholds = cfg.get("thresholds");
    if (!thresholds)
      throw ConfigError("quality filtering requires the 'thresholds' config key");
    quality.thresholds = load_threshold_file(*thresholds);
    quality.check();
  }

  std::ifstream in(edges_path);
  if (!in) throw DataError("cannot open edges file: " + edges_path);
  EntityTable entities;
  auto triples = parse_edges(in, schema, entities, report, edges_path);
  triples = apply_quality_filter(std::move(triples), quality, report);
  triples = filter_sources_and_relations(std::move(triples),
                                         split_set(cfg.get_or("exclude_sources", "")),
                                         split_set(cfg.get_or("exclude_relations", "")), schema,
                                         report);

  std::vector<Triple> positives, negatives;
  for (auto& t : triples)
    (t.polarity == Polarity::positive ? positives : negatives).push_back(std::move(t));

  const std::string direction = cfg.get_or("direction", "undirected");
  if (direction == "undirected")
    positives = make_undirected(std::move(positives), schema);
  else if (direction == "directed")
    positives = make_directed(std::move(positives), schema);
  else
    throw ConfigError("direction must be directed or undirected");

  std::vector<DisjointConflict> conflicts;
  auto inferred = infer_true_negatives(positives, schema, &conflicts);
  report.true_negatives_inferred += inferred.size();
  report.conflicts += conflicts.size();
  negatives.insert(negatives.end(), std::make_move_iterator(inferred.begin()),
                   std::make_move_iterator(inferred.end()));

  return assemble_graph(std::move(positives), std::move(negatives), schema, std::move(entities),
                        report);
}

}  // namespace

void Pipeline::create_graph() {
  const std::string schema_path = cfg_.get_or("schema", "");
  if (schema_path.empty()) throw ConfigError("config key 'schema' is required");
  require_file(schema_path, "schema");
  RelationSchema schema = load_schema_file(schema_path);
  if (auto thr = cfg_.get("thresholds")) require_file(*thr, "thresholds");

  const bool time_slice = cfg_.get_or("split.mode", "random") == "time_slice";
  if (time_slice) {
    for (const char* key : {"edges_old", "edges_new"})
      if (!cfg_.has(key))
        throw ConfigError(std::string("time-slice mode requires config key '") + key + "'");
    for (const auto& [key, out_name] :
         std::vector<std::pair<std::string, std::string>>{{"edges_old", "graph_old.tsv"},
                                                          {"edges_new", "graph_new.tsv"}}) {
      const std::string edges = *cfg_.get(key);
      require_file(edges, key);
      IngestReport report;
      Graph g = build_graph(edges, schema, cfg_, report);
      write_graph_file(out_path(out_name), g);
      write_ingest_report(out_path("ingest_report_" + key.substr(6) + ".tsv"), report);
    }
    return;
  }

  const std::string edges = cfg_.get_or("edges", "");
  if (edges.empty()) throw ConfigError("config key 'edges' is required");
  require_file(edges, "edges");
  IngestReport report;
  Graph g = build_graph(edges, schema, cfg_, report);
  write_graph_file(out_path("graph.tsv"), g);
  std::ofstream stats(out_path("graph_stats.tsv"), std::ios::binary);
  write_stats(stats, g.stats());
  write_ingest_report(out_path("ingest_report.tsv"), report);
}

void Pipeline::split() {
  const std::string schema_path = cfg_.get_or("schema", "");
  if (schema_path.empty()) throw ConfigError("config key 'schema' is required");
  require_file(schema_path, "schema");
  RelationSchema schema = load_schema_file(schema_path);
  SplitSpec spec = read_split_spec(cfg_);

  if (spec.mode == SplitMode::time_slice) {
    const std::string old_path = input_path("graph_old", "graph_old.tsv");
    const std::string new_path = input_path("graph_new", "graph_new.tsv");
    require_file(old_path, "old graph");
    require_file(new_path, "new graph");
    IngestReport r1, r2;
    Graph g_old = load_graph_file(old_path, schema, r1);
    Graph g_new = load_graph_file(new_path, schema, r2);
    TimeSliceSplit ts = time_slice_split(g_old, g_new, spec);
    // Later stages read the merged snapshot uniformly as graph.tsv.
    write_graph_file(out_path("graph.tsv"), ts.merged);
    write_split_files(out_, ts.split, ts.merged);
    return;
  }

  const std::string graph_path = input_path("graph", "graph.tsv");
  require_file(graph_path, "graph");
  IngestReport report;
  Graph g = load_graph_file(graph_path, schema, report);
  Split split = random_split(g, spec);
  write_split_files(out_, split, g);
}

namespace {

struct LoadedSplit {
  Graph graph;
  Split split;
};

LoadedSplit load_graph_and_split(const Config& cfg, const RelationSchema& schema,
                                 const std::string& out_dir, bool with_negatives) {
  IngestReport report;
  const std::string graph_path = cfg.get_or("graph", out_dir + "/graph.tsv");
  if (!fs::exists(graph_path))
    throw ConfigError("graph file does not exist: " + graph_path);
  LoadedSplit ls{load_graph_file(graph_path, schema, report), {}};
  ls.split.train = read_split_part(out_dir + "/train.tsv", ls.graph, Polarity::positive);
  ls.split.valid = read_split_part(out_dir + "/valid.tsv", ls.graph, Polarity::positive);
  ls.split.test = read_split_part(out_dir + "/test.tsv", ls.graph, Polarity::positive);
  if (with_negatives) {
    ls.split.train_neg = read_split_part(out_dir + "/train_neg.tsv", ls.graph, Polarity::negative);
    ls.split.valid_neg = read_split_part(out_dir + "/valid_neg.tsv", ls.graph, Polarity::negative);
    ls.split.test_neg = read_split_part(out_dir + "/test_neg.tsv", ls.graph, Polarity::negative);
  }
  return ls;
}

}  // namespace

void Pipeline::train() {
  const std::string schema_path = cfg_.get_or("schema", "");
  if (schema_path.empty()) throw ConfigError("config key 'schema' is required");
  require_file(schema_path, "schema");
  RelationSchema schema = load_schema_file(schema_path);
  for (const char* f : {"/train.tsv", "/valid.tsv", "/test.tsv"})
    require_file(out_ + f, "split");

  LoadedSplit ls = load_graph_and_split(cfg_, schema, out_, false);
  Hyperparams hp = read_hyperparams(cfg_);
  ModelKind kind = parse_model_kind(cfg_.get_or("model", "transe"));

  TrainResult result = kgbench::train(kind, ls.split, ls.graph, hp);
  save_model_file(out_path("model.tsv"), result.model);

  std::ofstream loss(out_path("loss_curve.tsv"), std::ios::binary);
  if (!loss) throw DataError("cannot write loss curve");
  char buf[40];
  for (size_t i = 0; i < result.losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", result.losses[i]);
    loss << i << '\t' << buf << '\n';
  }
  if (result.best_epoch >= 0) {
    std::snprintf(buf, sizeof(buf), "%.17g", result.best_valid_mrr);
    loss << "# best_epoch\t" << result.best_epoch << "\tvalid_mrr\t" << buf << '\n';
  }
}

void Pipeline::evaluate() {
  const std::string schema_path = cfg_.get_or("schema", "");
  if (schema_path.empty()) throw ConfigError("config key 'schema' is required");
  require_file(schema_path, "schema");
  RelationSchema schema = load_schema_file(schema_path);
  for (const char* f :
       {"/train.tsv", "/valid.tsv", "/test.tsv", "/train_neg.tsv", "/valid_neg.tsv",
        "/test_neg.tsv"})
    require_file(out_ + f, "split");

  LoadedSplit ls = load_graph_and_split(cfg_, schema, out_, true);

  EvalConfig eval_cfg;
  eval_cfg.ks.clear();
  for (const auto& k : split_list(cfg_.get_or("eval.ks", "1,3,10")))
    eval_cfg.ks.push_back(std::atoi(k.c_str()));
  if (eval_cfg.ks.empty()) throw ConfigError("eval.ks must name at least one k");
  eval_cfg.rank.filtered = cfg_.get_bool("eval.filtered", true);
  eval_cfg.rank.typed_candidates = cfg_.get_bool("eval.typed_candidates", true);
  eval_cfg.threads = threads_;

  EvalReport report;
  const std::string scorer_kind = cfg_.get_or("eval.scorer", "internal");
  if (scorer_kind == "internal") {
    const std::string model_path = out_path("model.tsv");
    require_file(model_path, "model");
    EmbeddingModel model = load_model_file(model_path);
    ModelScorer scorer(model, ls.graph, cfg_.get_int("model.norm", 2));
    report = kgbench::evaluate(scorer, ls.split, ls.graph, eval_cfg);
  } else if (scorer_kind == "external") {
    const std::string command = cfg_.get_or("eval.scorer_command", "");
    if (command.empty())
      throw ConfigError("eval.scorer=external requires eval.scorer_command");
    // One subprocess, sequential batches.
    eval_cfg.threads = 1;
    ExternalScorer scorer(command, ls.graph);
    report = kgbench::evaluate(scorer, ls.split, ls.graph, eval_cfg);
  } else {
    throw ConfigError("eval.scorer must be internal or external");
  }

  std::ofstream rep(out_path("report.tsv"), std::ios::binary);
  if (!rep) throw DataError("cannot write report.tsv");
  write_eval_report(rep, report);
  if (cfg_.get_bool("eval.dump_ranks", false)) {
    std::ofstream ranks(out_path("ranks.tsv"), std::ios::binary);
    write_rank_records(ranks, report, ls.graph);
  }
}

void Pipeline::run(const std::vector<std::string>& stages) {
  echo_resolved_config();
  std::vector<std::string> order = stages;
  if (order.empty()) {
    std::string def;
    for (const auto& s : kDefaultStages) def += (def.empty() ? "" : ",") + s;
    order = split_list(cfg_.get_or("stages", def));
  }
  // Honor pipeline order regardless of listing order.
  const std::vector<std::string> canonical = {"generate", "create-graph", "split", "train",
                                              "evaluate"};
  for (const auto& s : order)
    if (std::find(canonical.begin(), canonical.end(), s) == canonical.end())
      throw ConfigError("unknown stage '" + s + "'");
  for (const auto& stage : canonical) {
    if (std::find(order.begin(), order.end(), stage) == order.end()) continue;
    if (stage == "generate") {
      generate();
      // Generated files feed create-graph unless explicitly overridden.
      if (!cfg_.has("edges")) cfg_.set("edges", out_path("edges.tsv"));
      if (!cfg_.has("schema")) cfg_.set("schema", out_path("schema.tsv"));
      if (!cfg_.has("thresholds")) cfg_.set("thresholds", out_path("thresholds.tsv"));
    } else if (stage == "create-graph") {
      create_graph();
    } else if (stage == "split") {
      split();
    } else if (stage == "train") {
      train();
    } else if (stage == "evaluate") {
      evaluate();
    }
  }
}

}  // namespace kgbench
