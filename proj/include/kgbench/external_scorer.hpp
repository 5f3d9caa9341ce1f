#pragma once

#include <mutex>
#include <string>

#include "kgbench/graph.hpp"
#include "kgbench/metrics.hpp"

namespace kgbench {

// Line-oriented bidirectional child process (POSIX pipes, /bin/sh -c).
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void write_all(std::string_view data);  // throws ProtocolError on broken pipe
  bool read_line(std::string& line);      // false on EOF; strips trailing \n / \r\n
  void close_stdin();
  int wait();  // reaps the child, returns exit code (-signal when killed)

 private:
  int pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string read_buffer_;
  bool eof_ = false;
};

// Scorer protocol, version 1. Handshake: the harness sends "##PROTO 1" and
// the scorer echoes it. Per batch the harness writes one "head<TAB>relation
// <TAB>tail" line per triple followed by "##END_BATCH"; the scorer replies
// exactly one decimal score per triple line, in order, then flushes.
// Early exit, a wrong response count or a non-numeric line raise
// ProtocolError naming the batch. Exactly one subprocess per evaluation run;
// batches are serialized through a mutex.
class ExternalScorer : public Scorer {
 public:
  ExternalScorer(const std::string& command, const Graph& g);
  void score_batch(std::span<const TripleKey> triples, std::vector<double>& out) override;

 private:
  Subprocess process_;
  const Graph* graph_;
  size_t batch_count_ = 0;
  std::mutex mutex_;
};

inline constexpr const char* kScorerHandshake = "##PROTO 1";
inline constexpr const char* kScorerBatchEnd = "##END_BATCH";

}  // namespace kgbench
