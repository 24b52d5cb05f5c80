#pragma once

#include <string>
#include <vector>

namespace fracpme::cli {

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir = "out";
  int jobs = 1;
  std::vector<std::string> overrides;  // section.key=value
};

const std::vector<std::string>& commands();

// Runs one command and writes its artifacts. Returns the exit code:
// 0 ok, 2 config/usage, 3 precondition or numerical failure, 4 I/O, 1 other.
// On failure only error.json is written to the output directory.
int execute(const Invocation& inv);

// argv front end (CLI11).
int main(int argc, char** argv);

}  // namespace fracpme::cli
