#include "kgbench/external_scorer.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "kgbench/errors.hpp"

namespace kgbench {

Subprocess::Subprocess(const std::string& command) {
  int to_child[2], from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0)
    throw ProtocolError("cannot create pipes for scorer subprocess");
  pid_ = fork();
  if (pid_ < 0) throw ProtocolError("cannot fork scorer subprocess");
  if (pid_ == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  stdin_fd_ = to_child[1];
  stdout_fd_ = from_child[0];
}

Subprocess::~Subprocess() {
  close_stdin();
  if (stdout_fd_ >= 0) close(stdout_fd_);
  if (pid_ > 0) waitpid(pid_, nullptr, 0);
}

void Subprocess::write_all(std::string_view data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(stdin_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("write to scorer failed: ") + std::strerror(errno));
    }
    off += static_cast<size_t>(n);
  }
}

bool Subprocess::read_line(std::string& line) {
  while (true) {
    size_t nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    if (eof_) {
      if (read_buffer_.empty()) return false;
      line = std::move(read_buffer_);
      read_buffer_.clear();
      return true;
    }
    char buf[4096];
    ssize_t n = ::read(stdout_fd_, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("read from scorer failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      eof_ = true;
      continue;
    }
    read_buffer_.append(buf, static_cast<size_t>(n));
  }
}

void Subprocess::close_stdin() {
  if (stdin_fd_ >= 0) {
    close(stdin_fd_);
    stdin_fd_ = -1;
  }
}

int Subprocess::wait() {
  if (pid_ <= 0) return -1;
  int status = 0;
  waitpid(pid_, &status, 0);
  pid_ = -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return -WTERMSIG(status);
  return -1;
}

ExternalScorer::ExternalScorer(const std::string& command, const Graph& g)
    : process_(command), graph_(&g) {
  process_.write_all(std::string(kScorerHandshake) + "\n");
  std::string reply;
  if (!process_.read_line(reply))
    throw ProtocolError("scorer exited before completing the handshake");
  if (reply != kScorerHandshake)
    throw ProtocolError("scorer handshake mismatch: expected '" +
                        std::string(kScorerHandshake) + "', got '" + reply + "'");
}

void ExternalScorer::score_batch(std::span<const TripleKey> triples, std::vector<double>& out) {
  std::lock_guard<std::mutex> lock(mutex_);
  const size_t batch = batch_count_++;
  const RelationSchema& schema = graph_->schema();
  const EntityTable& entities = graph_->entities();

  std::string payload;
  payload.reserve(triples.size() * 32);
  for (const auto& k : triples) {
    payload += entities.name(k.head, schema);
    payload += '\t';
    payload += schema.relation(k.rel).name;
    payload += '\t';
    payload += entities.name(k.tail, schema);
    payload += '\n';
  }
  payload += kScorerBatchEnd;
  payload += '\n';

  // The writer runs on its own thread so a scorer that streams responses
  // line-by-line cannot deadlock against a full pipe.
  std::exception_ptr write_error;
  std::thread writer([&]() {
    try {
      process_.write_all(payload);
    } catch (...) {
      write_error = std::current_exception();
    }
  });

  out.resize(triples.size());
  std::string line;
  for (size_t i = 0; i < triples.size(); ++i) {
    if (!process_.read_line(line)) {
      writer.join();
      throw ProtocolError("batch " + std::to_string(batch) + ": scorer exited after " +
                          std::to_string(i) + " of " + std::to_string(triples.size()) +
                          " responses");
    }
    char* end = nullptr;
    double v = std::strtod(line.c_str(), &end);
    if (line.empty() || end != line.c_str() + line.size()) {
      writer.join();
      throw ProtocolError("batch " + std::to_string(batch) + ": non-numeric response line '" +
                          line + "'");
    }
    out[i] = v;
  }
  writer.join();
  if (write_error) std::rethrow_exception(write_error);
}

}  // namespace kgbench
