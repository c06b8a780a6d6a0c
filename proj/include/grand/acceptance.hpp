#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grand/error.hpp"
#include "grand/model.hpp"

namespace grand {

// Built-in models used by the acceptance suites (the files under models/).
std::vector<std::string> acceptance_model_names();
std::string_view acceptance_model_text(std::string_view name);
PackingModel acceptance_model(std::string_view name);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;

  bool passed() const;
  // One "PASS"/"FAIL" line per criterion, then warnings.
  std::string text() const;
  std::string json() const;
};

struct AcceptanceOptions {
  int threads = 1;
  // Study CSVs are written here when set.
  std::optional<std::filesystem::path> output_dir;
};

// poisson, erlang, theorem1, theorem2, fluid, lyapunov, product-form,
// stability, pull, conjectures, all.
const std::vector<std::string>& acceptance_suites();

// Throws Error(InvalidArgument) for an unknown suite name.
AcceptanceReport run_acceptance(std::string_view suite, const AcceptanceOptions& options = {});

}  // namespace grand
