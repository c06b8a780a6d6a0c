// Runs acceptance suites and prints one PASS/FAIL line per criterion.
// Usage: acceptance [suite ...] [--threads N] [--out DIR]
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "grand/acceptance.hpp"

int main(int argc, char** argv) {
  grand::AcceptanceOptions options;
  std::vector<std::string> suites;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--threads" && k + 1 < argc) {
      options.threads = std::atoi(argv[++k]);
    } else if (arg == "--out" && k + 1 < argc) {
      options.output_dir = argv[++k];
    } else {
      suites.push_back(arg);
    }
  }
  if (suites.empty()) suites.push_back("all");
  bool ok = true;
  for (const auto& suite : suites) {
    try {
      const auto report = grand::run_acceptance(suite, options);
      std::cout << report.text();
      ok = ok && report.passed();
    } catch (const grand::Error& e) {
      std::cerr << "acceptance: " << e.what() << '\n';
      return 2;
    }
  }
  return ok ? 0 : 1;
}
