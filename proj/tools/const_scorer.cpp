// Reference scorer for protocol conformance tests: echoes the handshake and
// replies 0.0 to every triple line. With ties everywhere, expected-rank MRR
// has a closed form per candidate-set size, which the acceptance suite
// checks. --drop-one answers every batch one line short, for exercising the
// harness's protocol-violation path.
#include <cstring>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  const bool drop_one = argc > 1 && std::strcmp(argv[1], "--drop-one") == 0;

  std::string line;
  if (!std::getline(std::cin, line)) return 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "##PROTO 1") {
    std::cerr << "const_scorer: unexpected handshake '" << line << "'\n";
    return 1;
  }
  std::cout << "##PROTO 1\n" << std::flush;

  size_t batch_lines = 0;
  while (std::getline(std::cin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "##END_BATCH") {
      size_t replies = batch_lines - (drop_one && batch_lines > 0 ? 1 : 0);
      for (size_t i = 0; i < replies; ++i) std::cout << "0.0\n";
      std::cout << std::flush;
      if (drop_one) return 0;  // short reply then exit: a broken scorer
      batch_lines = 0;
      continue;
    }
    ++batch_lines;
  }
  return 0;
}
