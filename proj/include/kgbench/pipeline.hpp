#pragma once

#include <string>
#include <vector>

#include "kgbench/config.hpp"

namespace kgbench {

// Stage orchestration. Stages communicate only through files under the
// output directory, so each stage is independently re-runnable and rerunning
// with unchanged inputs reproduces byte-identical outputs:
//   generate      -> edges.tsv schema.tsv thresholds.tsv
//   create-graph  -> graph.tsv (graph_old/new.tsv in time-slice mode),
//                    graph_stats.tsv, ingest_report.tsv
//   split         -> train/valid/test(.neg).tsv, split_report.tsv
//                    (+ merged graph.tsv in time-slice mode)
//   train         -> model.tsv, loss_curve.tsv
//   evaluate      -> report.tsv (+ ranks.tsv)
class Pipeline {
 public:
  Pipeline(Config config, std::string out_dir);

  void generate();
  void create_graph();
  void split();
  void train();
  void evaluate();

  // Runs the listed stages in pipeline order. Writes the resolved-config
  // echo first.
  void run(const std::vector<std::string>& stages);

  static const std::vector<std::string> kDefaultStages;

  int threads() const { return threads_; }

 private:
  void echo_resolved_config() const;
  std::string out_path(const std::string& name) const { return out_ + "/" + name; }
  std::string input_path(const std::string& key, const std::string& fallback_name) const;
  void require_file(const std::string& path, const std::string& what) const;

  Config cfg_;
  std::string out_;
  int threads_ = 1;
};

// Effective worker count: config/flag value capped by KGBENCH_THREADS when
// that is set; KGBENCH_THREADS alone raises the default.
int resolve_threads(const Config& cfg);

}  // namespace kgbench
