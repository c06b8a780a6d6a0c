#include "grand/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "grand/error.hpp"

namespace grand {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double>& values, char sep) {
  std::string out;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j) out += sep;
    out += format_double(values[j]);
  }
  return out;
}

void CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    fail(ErrorCode::InvalidArgument, "csv row width does not match the header");
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  auto cell = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  std::ostringstream os;
  for (const auto& c : comments_) os << "# " << c << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) os << (j ? "," : "") << cell(cells[j]);
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << str();
  if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

CsvTable run_statistics_csv(const PackingModel& model, const RunStatistics& stats) {
  const auto& set = model.configs();
  CsvTable t({"quantity", "value", "stderr"});
  t.comment("policy=" + std::string(to_string(stats.policy)) + " r=" + format_double(stats.r) +
            " horizon=" + format_double(stats.horizon) + " warmup=" + format_double(stats.warmup) +
            " batches=" + std::to_string(stats.batches) + " seed=" + std::to_string(stats.seed));
  for (const auto& w : stats.warnings) t.comment("warning: " + w);
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    t.row({"x:" + model.label(nz[p]), format_double(stats.x_mean[p]),
           format_double(stats.x_stderr[p])});
  }
  for (std::size_t i = 0; i < stats.y_mean.size(); ++i) {
    t.row({"y:" + model.type_names()[i], format_double(stats.y_mean[i]),
           format_double(stats.y_stderr[i])});
  }
  t.row({"z", format_double(stats.z_mean), format_double(stats.z_stderr)});
  for (std::size_t i = 0; i < stats.blocking.size(); ++i) {
    t.row({"blocking:" + model.type_names()[i], format_double(stats.blocking[i]),
           format_double(stats.blocking_stderr[i])});
  }
  t.row({"pull_rate", format_double(stats.pull_rate), ""});
  return t;
}

CsvTable trajectory_csv(const PackingModel& model, const Trajectory& traj) {
  const auto& set = model.configs();
  std::vector<std::string> header{"t"};
  for (std::size_t bar : set.nonzero()) header.push_back("x:" + model.label(bar));
  for (const auto& n : model.type_names()) header.push_back("y:" + n);
  header.insert(header.end(), {"z", "L", "Xi"});
  CsvTable t(header);
  t.comment(std::string("mode=") + to_string(traj.mode) +
            " max_step_clip=" + format_double(traj.max_step_clip));
  for (const auto& s : traj.samples) {
    std::vector<std::string> r{format_double(s.t)};
    for (double v : s.x) r.push_back(format_double(v));
    for (double v : s.y) r.push_back(format_double(v));
    r.push_back(format_double(s.z));
    r.push_back(format_double(s.lyapunov));
    r.push_back(format_double(s.xi));
    t.row(std::move(r));
  }
  return t;
}

CsvTable product_form_csv(const PackingModel& model, const ProductFormSolution& sol) {
  const auto& set = model.configs();
  CsvTable t({"kind", "name", "value"});
  t.comment(std::string("product form, mode=") + to_string(sol.mode) +
            " residual=" + format_double(sol.residual) +
            " iterations=" + std::to_string(sol.iterations));
  for (std::size_t bar = 0; bar < set.size_bar(); ++bar) {
    if (set.is_zero(bar) && sol.mode == FluidMode::Infinite) continue;
    t.row({"x", model.label(bar), format_double(sol.xbar[bar])});
  }
  for (std::size_t i = 0; i < sol.nu.size(); ++i) {
    t.row({"nu", model.type_names()[i], format_double(sol.nu[i])});
  }
  for (std::size_t s = 0; s < sol.beta.size(); ++s) {
    t.row({"beta", model.server_names()[s], format_double(sol.beta[s])});
  }
  for (std::size_t s = 0; s < sol.a.size(); ++s) {
    t.row({"a", model.server_names()[s], format_double(sol.a[s])});
  }
  return t;
}

CsvTable lp_csv(const PackingModel& model, const LpSolution& lp) {
  const auto& set = model.configs();
  CsvTable t({"kind", "name", "value", "reduced_cost"});
  t.comment("lp value=" + format_double(lp.value) + " kkt=" + (lp.kkt.ok() ? "ok" : "violated"));
  t.comment("kkt primal=" + format_double(lp.kkt.primal_residual) +
            " dual_negativity=" + format_double(lp.kkt.dual_negativity) +
            " dual_violation=" + format_double(lp.kkt.dual_violation) +
            " slackness=" + format_double(lp.kkt.slackness));
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    t.row({"x", model.label(nz[p]), format_double(lp.x_star[p]),
           format_double(lp.kkt.entries[p].reduced_cost)});
  }
  for (std::size_t i = 0; i < lp.eta.size(); ++i) {
    t.row({"eta", model.type_names()[i], format_double(lp.eta[i]), ""});
  }
  t.row({"value", "", format_double(lp.value), ""});
  return t;
}

CsvTable feasibility_csv(const PackingModel& model, const FeasibilityReport& rep) {
  CsvTable t({"quantity", "value"});
  t.comment(rep.explanation);
  t.row({"ok", rep.ok ? "1" : "0"});
  t.row({"empty", rep.empty ? "1" : "0"});
  t.row({"slack", format_double(rep.slack)});
  std::string binding;
  for (int s : rep.binding) {
    if (!binding.empty()) binding += ' ';
    binding += model.server_names()[static_cast<std::size_t>(s)];
  }
  t.row({"binding", binding});
  return t;
}

CsvTable alpha_sweep_csv(const PackingModel& model, const AlphaSweep& sweep) {
  const auto& set = model.configs();
  std::vector<std::string> header{"alpha", "cost", "gap", "kkt_residual", "dual_negativity",
                                  "dual_violation", "slackness"};
  for (const auto& n : model.type_names()) header.push_back("eta_hat:" + n);
  for (std::size_t bar : set.nonzero()) header.push_back("x:" + model.label(bar));
  CsvTable t(header);
  t.comment("lp value=" + format_double(sweep.lp.value) + " x_star=" + join_doubles(sweep.lp.x_star) +
            " eta=" + join_doubles(sweep.lp.eta));
  for (const auto& r : sweep.rows) {
    std::vector<std::string> cells{format_double(r.alpha),        format_double(r.cost),
                                   format_double(r.gap),          format_double(r.kkt_residual),
                                   format_double(r.dual_negativity), format_double(r.dual_violation),
                                   format_double(r.slackness)};
    for (double v : r.eta_hat) cells.push_back(format_double(v));
    for (double v : r.x) cells.push_back(format_double(v));
    t.row(std::move(cells));
  }
  return t;
}

std::vector<double> read_state_csv(const PackingModel& model, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open state file " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    cells.push_back(cur);
    return cells;
  };
  std::string line;
  std::vector<std::string> header, last;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
    } else {
      last = split(line);
    }
  }
  if (last.empty()) fail(ErrorCode::Parse, path.string() + ": no data rows");
  if (last.size() != header.size()) fail(ErrorCode::Parse, path.string() + ": ragged last row");
  const auto& set = model.configs();
  std::vector<double> x;
  for (std::size_t bar : set.nonzero()) {
    const std::string want = "x:" + model.label(bar);
    auto it = std::find(header.begin(), header.end(), want);
    if (it == header.end()) fail(ErrorCode::Parse, path.string() + ": missing column " + want);
    const std::string& cell = last[static_cast<std::size_t>(it - header.begin())];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
      fail(ErrorCode::Parse, path.string() + ": bad number `" + cell + "` in " + want);
    }
    x.push_back(v);
  }
  return x;
}

}  // namespace grand
