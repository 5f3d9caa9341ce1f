#include <cstdio>
#include <iostream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>

#include "kgbench/config.hpp"
#include "kgbench/embed.hpp"
#include "kgbench/errors.hpp"
#include "kgbench/external_scorer.hpp"
#include "kgbench/pipeline.hpp"

using namespace kgbench;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string quality;
  std::string direction;
  int64_t seed = -1;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("--config", flags.config_path, "path to a key=value config file");
  if (config_required) opt->required();
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config 'out')");
  cmd->add_option("--seed", flags.seed, "seed override")->check(CLI::NonNegativeNumber);
  cmd->add_option("--quality", flags.quality, "quality level override")
      ->check(CLI::IsMember({"high", "medium", "low", "all"}));
  cmd->add_flag_callback("--directed", [&flags]() { flags.direction = "directed"; },
                         "directed graph variant");
  cmd->add_flag_callback("--undirected", [&flags]() { flags.direction = "undirected"; },
                         "undirected graph variant");
  cmd->add_option("--threads", flags.threads, "worker count (capped by KGBENCH_THREADS)");
}

Pipeline make_pipeline(const CommonFlags& flags) {
  Config cfg = flags.config_path.empty() ? Config() : Config::load(flags.config_path);
  if (flags.seed >= 0) cfg.set("seed", std::to_string(flags.seed));
  if (!flags.quality.empty()) cfg.set("quality", flags.quality);
  if (!flags.direction.empty()) cfg.set("direction", flags.direction);
  if (flags.threads > 0) cfg.set("threads", std::to_string(flags.threads));
  std::string out = !flags.out_dir.empty() ? flags.out_dir : cfg.get_or("out", "out");
  return Pipeline(std::move(cfg), out);
}

// Serves an embedding model over the line protocol on stdin/stdout; the
// in-process counterpart of an external scorer.
int run_score_server(const std::string& model_path, int norm) {
  EmbeddingModel model = load_model_file(model_path);
  std::unordered_map<std::string, uint32_t> entity_rows, relation_rows;
  for (uint32_t i = 0; i < model.entity_count(); ++i)
    entity_rows.emplace(model.entity_names[i], i);
  for (uint32_t i = 0; i < model.relation_count(); ++i)
    relation_rows.emplace(model.relation_names[i], i);

  std::string line;
  if (!std::getline(std::cin, line)) return 3;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kScorerHandshake) {
    std::cerr << "score-server: bad handshake\n";
    return 3;
  }
  std::cout << kScorerHandshake << "\n" << std::flush;

  char buf[40];
  while (std::getline(std::cin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == kScorerBatchEnd) {
      std::cout << std::flush;
      continue;
    }
    size_t t1 = line.find('\t');
    size_t t2 = (t1 == std::string::npos) ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      std::cerr << "score-server: malformed triple line\n";
      return 2;
    }
    auto h = entity_rows.find(line.substr(0, t1));
    auto r = relation_rows.find(line.substr(t1 + 1, t2 - t1 - 1));
    auto t = entity_rows.find(line.substr(t2 + 1));
    if (h == entity_rows.end() || r == relation_rows.end() || t == entity_rows.end()) {
      std::cerr << "score-server: unknown entity or relation in '" << line << "'\n";
      return 2;
    }
    std::snprintf(buf, sizeof(buf), "%.17g",
                  model.score(h->second, r->second, t->second, norm));
    std::cout << buf << '\n';
  }
  std::cout << std::flush;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgbench: knowledge-graph link prediction benchmark toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string model_path;
  int server_norm = 2;

  auto* cmd_generate = app.add_subcommand("generate", "generate a synthetic corpus");
  add_common(cmd_generate, flags, false);
  auto* cmd_create = app.add_subcommand("create-graph", "build the filtered benchmark graph");
  add_common(cmd_create, flags);
  auto* cmd_split = app.add_subcommand("split", "produce leakage-free train/valid/test splits");
  add_common(cmd_split, flags);
  auto* cmd_train = app.add_subcommand("train", "train an embedding baseline");
  add_common(cmd_train, flags);
  auto* cmd_eval = app.add_subcommand("evaluate", "rank and score the test set");
  add_common(cmd_eval, flags);
  auto* cmd_pipe = app.add_subcommand("pipeline", "run the configured stages in order");
  add_common(cmd_pipe, flags);
  auto* cmd_server =
      app.add_subcommand("score-server", "serve a saved model over the scorer line protocol");
  cmd_server->add_option("--model", model_path, "model file")->required();
  cmd_server->add_option("--norm", server_norm, "score norm p")
      ->check(CLI::IsMember({1, 2}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_server->parsed()) return run_score_server(model_path, server_norm);
    Pipeline pipeline = make_pipeline(flags);
    if (cmd_generate->parsed()) pipeline.run({"generate"});
    if (cmd_create->parsed()) pipeline.run({"create-graph"});
    if (cmd_split->parsed()) pipeline.run({"split"});
    if (cmd_train->parsed()) pipeline.run({"train"});
    if (cmd_eval->parsed()) pipeline.run({"evaluate"});
    if (cmd_pipe->parsed()) pipeline.run({});
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
