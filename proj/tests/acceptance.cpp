// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <cstdio>
#include <cstring>

#include "dtdft/verify.hpp"

int main(int argc, char** argv) {
  bool concurrent = true;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--serial") == 0) concurrent = false;
  const auto report = dtdft::verify::run_all(concurrent);
  for (const auto& c : report.criteria) std::printf("%s\n", dtdft::verify::format_line(c).c_str());
  std::printf("%s\n", report.all_passed() ? "ALL PASS" : "FAILURES");
  return report.all_passed() ? 0 : 1;
}
