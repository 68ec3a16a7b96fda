// Runs every acceptance criterion and prints one PASS/FAIL line each.

#include <cstdio>
#include <filesystem>

#include <fmt/format.h>

#include "ghsim/verify/acceptance.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path workdir =
      argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::temp_directory_path() / "ghsim-acceptance";
  int failed = 0;
  for (const auto& c : ghsim::verify::acceptance_criteria(workdir)) {
    const auto r = c.run();
    fmt::print("{}\n", ghsim::verify::format_result(r));
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  fmt::print("{} of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
