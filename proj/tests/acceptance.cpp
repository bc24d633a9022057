// Runs the twelve acceptance criteria and prints one PASS/FAIL line each.
// Exit status is 0 only when every criterion passes.
#include <cstdio>
#include <cstdlib>

#include "kahler/checks.hpp"

int main(int argc, char** argv) {
  kahler::checks::SuiteConfig config;
  if (argc > 1) config.seed = std::strtoull(argv[1], nullptr, 10);
  const auto criteria = kahler::checks::run_all(config);
  bool all = true;
  for (const auto& c : criteria) {
    const bool ok = c.pass();
    all = all && ok;
    std::printf("%s [%2d] %s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str());
    for (const auto& v : c.verdicts) {
      std::printf("       %-4s %s: measured %.6g, expected %.6g, tolerance %.3g\n", v.pass ? "ok" : "bad", v.check.c_str(),
                  v.measured, v.expected, v.tolerance);
    }
  }
  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
