#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grand/fluid.hpp"
#include "grand/model.hpp"
#include "grand/optimize.hpp"
#include "grand/simulator.hpp"

namespace grand {

// Shortest text that round-trips the double exactly; "nan", "inf", "-inf".
std::string format_double(double v);

// Comment lines start with '#' and precede the header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void comment(std::string line) { comments_.push_back(std::move(line)); }
  void row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string str() const;
  // Writes atomically enough for CLI use; throws Error(Io).
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> comments_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string join_doubles(const std::vector<double>& values, char sep = ' ');

CsvTable run_statistics_csv(const PackingModel& model, const RunStatistics& stats);
CsvTable trajectory_csv(const PackingModel& model, const Trajectory& trajectory);
CsvTable product_form_csv(const PackingModel& model, const ProductFormSolution& sol);
CsvTable lp_csv(const PackingModel& model, const LpSolution& lp);
CsvTable feasibility_csv(const PackingModel& model, const FeasibilityReport& report);
CsvTable alpha_sweep_csv(const PackingModel& model, const AlphaSweep& sweep);

// Reads a state over K from a CSV whose header names columns `x:<label>`
// (as written by trajectory_csv); the last data row is used.
std::vector<double> read_state_csv(const PackingModel& model, const std::filesystem::path& path);

}  // namespace grand
