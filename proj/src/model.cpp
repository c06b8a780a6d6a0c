#include "grand/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "grand/error.hpp"

namespace grand {

namespace {

std::string counts_text(const Configuration& k) {
  std::ostringstream os;
  os << "s" << (k.server_type + 1) << "(";
  for (std::size_t i = 0; i < k.counts.size(); ++i) {
    if (i) os << ' ';
    os << k.counts[i];
  }
  os << ')';
  return os.str();
}

void require_positive(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      std::ostringstream os;
      os << what << "[" << i + 1 << "] must be finite and > 0 (got " << v[i]
         << ")";
      fail(ErrorCode::Model, os.str());
    }
  }
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << " has " << got << " entries, expected " << want;
    fail(ErrorCode::Model, os.str());
  }
}

}  // namespace

bool Configuration::is_zero() const {
  return std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; });
}

int Configuration::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0);
}

std::string ValidationReport::describe() const {
  std::ostringstream os;
  for (const auto& msg : structural) os << "invalid configuration: " << msg << '\n';
  for (const auto& v : violations) {
    os << "not downward closed: " << counts_text(v.config) << " present but "
       << counts_text(v.missing) << " missing\n";
  }
  for (int i : unservable_types) {
    os << "customer type " << i + 1 << " fits into no server type\n";
  }
  return os.str();
}

ValidationReport validate_monotone(int num_types, int num_server_types,
                                   const std::vector<Configuration>& configs) {
  ValidationReport report;
  std::set<Configuration> present;
  for (const auto& k : configs) {
    if (k.server_type < 0 || k.server_type >= num_server_types) {
      report.structural.push_back(counts_text(k) + ": server type out of range");
      continue;
    }
    if (static_cast<int>(k.counts.size()) != num_types) {
      report.structural.push_back(counts_text(k) + ": wrong number of counts");
      continue;
    }
    if (std::any_of(k.counts.begin(), k.counts.end(), [](int c) { return c < 0; })) {
      report.structural.push_back(counts_text(k) + ": negative count");
      continue;
    }
    present.insert(k);
  }
  for (int s = 0; s < num_server_types; ++s) {
    present.insert(Configuration{s, std::vector<int>(static_cast<std::size_t>(num_types), 0)});
  }

  // Every k' <= k must be present; enumerate the whole box below k.
  std::set<std::pair<Configuration, Configuration>> seen;
  for (const auto& k : present) {
    Configuration probe{k.server_type, std::vector<int>(k.counts.size(), 0)};
    std::function<void(std::size_t)> walk = [&](std::size_t i) {
      if (i == probe.counts.size()) {
        if (!present.contains(probe) && seen.insert({k, probe}).second) {
          report.violations.push_back({k, probe});
        }
        return;
      }
      for (int c = 0; c <= k.counts[i]; ++c) {
        probe.counts[i] = c;
        walk(i + 1);
      }
      probe.counts[i] = 0;
    };
    walk(0);
  }

  for (int i = 0; i < num_types; ++i) {
    bool servable = false;
    for (int s = 0; s < num_server_types && !servable; ++s) {
      Configuration e{s, std::vector<int>(static_cast<std::size_t>(num_types), 0)};
      e.counts[static_cast<std::size_t>(i)] = 1;
      servable = present.contains(e);
    }
    if (!servable) report.unservable_types.push_back(i);
  }
  return report;
}

ConfigurationSet::ConfigurationSet(int num_types, int num_server_types,
                                   std::vector<Configuration> configs,
                                   std::size_t cap)
    : num_types_(num_types), num_server_types_(num_server_types) {
  if (num_types < 1) fail(ErrorCode::Model, "need at least one customer type");
  if (num_server_types < 1) fail(ErrorCode::Model, "need at least one server type");

  std::set<Configuration> unique;
  for (auto& k : configs) {
    if (!unique.insert(k).second) {
      fail(ErrorCode::Model, "duplicate configuration " + counts_text(k));
    }
  }
  const ValidationReport report = validate_monotone(num_types, num_server_types, configs);
  if (!report.ok()) fail(ErrorCode::Model, report.describe());

  for (int s = 0; s < num_server_types; ++s) {
    unique.insert(Configuration{s, std::vector<int>(ni(), 0)});
  }
  if (unique.size() > cap) {
    std::ostringstream os;
    os << "configuration set has " << unique.size()
       << " entries, more than the cap of " << cap;
    fail(ErrorCode::UnboundedSet, os.str());
  }

  // std::set iteration is the canonical order; zero configurations come first
  // within each server type.
  all_.assign(unique.begin(), unique.end());
  const std::size_t n = all_.size();
  position_.assign(n, kNone);
  zero_.assign(static_cast<std::size_t>(num_server_types), kNone);
  for (std::size_t b = 0; b < n; ++b) {
    index_.emplace(all_[b], b);
    if (all_[b].is_zero()) {
      zero_[static_cast<std::size_t>(all_[b].server_type)] = b;
    } else {
      position_[b] = nonzero_.size();
      nonzero_.push_back(b);
    }
  }

  up_.assign(n * ni(), kNone);
  down_.assign(n * ni(), kNone);
  c_.assign(n, 1.0);
  log_c_.assign(n, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    Configuration probe = all_[b];
    for (int i = 0; i < num_types; ++i) {
      auto& c = probe.counts[ui(i)];
      ++c;
      up_[b * ni() + ui(i)] = find(probe);
      c -= 2;
      if (c >= 0) down_[b * ni() + ui(i)] = find(probe);
      ++c;
      c_[b] *= std::tgamma(c + 1.0);
      log_c_[b] += std::lgamma(c + 1.0);
    }
  }

  edges_ = build_edges(*this);
  edges_by_type_.assign(ni(), {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    edges_by_type_[ui(edges_[e].type)].push_back(e);
  }
  accepting_.assign(ni(), {});
  containing_.assign(ni(), {});
  servers_for_.assign(ni(), {});
  for (std::size_t b = 0; b < n; ++b) {
    for (int i = 0; i < num_types; ++i) {
      if (up(b, i) != kNone) accepting_[ui(i)].push_back(b);
      if (all_[b].counts[ui(i)] >= 1) containing_[ui(i)].push_back(b);
    }
  }
  for (int i = 0; i < num_types; ++i) {
    for (int s = 0; s < num_server_types; ++s) {
      if (up(zero(s), i) != kNone) servers_for_[ui(i)].push_back(s);
    }
  }
}

std::size_t ConfigurationSet::find(const Configuration& k) const {
  auto it = index_.find(k);
  return it == index_.end() ? kNone : it->second;
}

std::vector<Edge> build_edges(const ConfigurationSet& set) {
  std::vector<Edge> edges;
  for (std::size_t b : set.nonzero()) {
    for (int i = 0; i < set.num_types(); ++i) {
      if (set.count(b, i) >= 1) edges.push_back({b, i, set.down(b, i)});
    }
  }
  return edges;
}

std::vector<Configuration> enumerate_vector_packing(
    const std::vector<std::vector<double>>& resources,
    const std::vector<std::vector<double>>& requirements, std::size_t cap) {
  if (resources.empty()) fail(ErrorCode::Model, "no server types given");
  if (requirements.empty()) fail(ErrorCode::Model, "no customer types given");
  const std::size_t dim = resources.front().size();
  for (const auto& r : resources) {
    require_size(r.size(), dim, "resource vector");
    for (double v : r) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::Model, "resources must be finite and >= 0");
    }
  }
  for (std::size_t i = 0; i < requirements.size(); ++i) {
    require_size(requirements[i].size(), dim, "requirement vector");
    bool positive = false;
    for (double v : requirements[i]) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::Model, "requirements must be finite and >= 0");
      positive = positive || v > 0.0;
    }
    if (!positive) {
      fail(ErrorCode::UnboundedSet,
           "customer type " + std::to_string(i + 1) +
               " has no positive requirement; it fits into a server unboundedly often");
    }
  }

  // Small slack so that exact decimal capacities (0.1 + 0.2 <= 0.3) fit.
  constexpr double kSlack = 1e-9;
  std::vector<Configuration> out;
  const std::size_t types = requirements.size();
  for (std::size_t s = 0; s < resources.size(); ++s) {
    std::vector<int> counts(types, 0);
    std::vector<double> used(dim, 0.0);
    std::function<void(std::size_t)> walk = [&](std::size_t i) {
      if (i == types) {
        if (std::any_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) {
          out.push_back(Configuration{static_cast<int>(s), counts});
          if (out.size() + resources.size() > cap) {
            fail(ErrorCode::UnboundedSet,
                 "vector packing enumeration exceeds the configuration cap of " +
                     std::to_string(cap));
          }
        }
        return;
      }
      const std::vector<double> saved = used;
      for (int c = 0;; ++c) {
        bool fits = true;
        for (std::size_t d = 0; d < dim; ++d) {
          if (used[d] > resources[s][d] * (1.0 + kSlack) + kSlack) fits = false;
        }
        if (!fits) break;
        counts[i] = c;
        walk(i + 1);
        for (std::size_t d = 0; d < dim; ++d) used[d] += requirements[i][d];
      }
      counts[i] = 0;
      used = saved;
    };
    walk(0);
  }
  return out;
}

ConfigurationSet generate_vector_packing(
    const std::vector<std::vector<double>>& resources,
    const std::vector<std::vector<double>>& requirements, std::size_t cap) {
  auto configs = enumerate_vector_packing(resources, requirements, cap);
  return ConfigurationSet(static_cast<int>(requirements.size()),
                          static_cast<int>(resources.size()), std::move(configs), cap);
}

PackingModel::PackingModel(ModelDefinition def) : original_(def) {
  const int num_types = static_cast<int>(def.lambda.size());
  int num_servers = static_cast<int>(def.server_names.size());
  if (num_servers == 0) {
    for (const auto& k : def.configs) num_servers = std::max(num_servers, k.server_type + 1);
  }
  configs_ = ConfigurationSet(num_types, num_servers, def.configs, def.config_cap);

  const auto ni = static_cast<std::size_t>(num_types);
  const auto ns = static_cast<std::size_t>(num_servers);
  require_size(def.mu.size(), ni, "mu");
  require_positive(def.lambda, "lambda");
  require_positive(def.mu, "mu");
  if (def.gamma.empty()) def.gamma.assign(ns, 1.0);
  require_size(def.gamma.size(), ns, "gamma");
  require_positive(def.gamma, "gamma");
  if (def.a) {
    require_size(def.a->size(), ns, "a");
    require_positive(*def.a, "a");
  }
  if (def.alpha && !(*def.alpha > 0.0 && *def.alpha < 1.0)) {
    fail(ErrorCode::Model, "alpha must lie in (0, 1)");
  }
  if (def.a && def.alpha) fail(ErrorCode::Model, "give either a or alpha, not both");
  if (def.p && !(*def.p > 0.0 && *def.p < 1.0)) {
    fail(ErrorCode::Model, "p must lie in (0, 1)");
  }
  if (def.h) {
    require_size(def.h->size(), ns, "h");
    require_positive(*def.h, "h");
  }

  type_names_ = def.type_names;
  if (type_names_.empty()) {
    for (int i = 0; i < num_types; ++i) type_names_.push_back("t" + std::to_string(i + 1));
  }
  require_size(type_names_.size(), ni, "type names");
  server_names_ = def.server_names;
  if (server_names_.empty()) {
    for (int s = 0; s < num_servers; ++s) server_names_.push_back("s" + std::to_string(s + 1));
  }

  mu_ = def.mu;
  double rho_sum = 0.0;
  for (std::size_t i = 0; i < ni; ++i) rho_sum += def.lambda[i] / def.mu[i];
  rate_scale_ = rho_sum;
  lambda_.resize(ni);
  rho_.resize(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    lambda_[i] = def.lambda[i] / rho_sum;
    rho_[i] = lambda_[i] / mu_[i];
  }
  gamma_scale_ = def.gamma[0];
  gamma_.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) gamma_[s] = def.gamma[s] / gamma_scale_;
  gamma_[0] = 1.0;

  if (def.a) {
    a_ = def.a;
  } else if (def.alpha) {
    std::vector<double> a(ns);
    for (std::size_t s = 0; s < ns; ++s) a[s] = std::pow(*def.alpha, gamma_[s]);
    a_ = std::move(a);
  }
  if (def.h) {
    std::vector<double> h(ns);
    for (std::size_t s = 0; s < ns; ++s) h[s] = (*def.h)[s] / rho_sum;
    h_ = std::move(h);
  }
  p_ = def.p;
}

const std::vector<double>& PackingModel::a() const {
  if (!a_) fail(ErrorCode::InvalidArgument, "model defines no GRAND(aZ) parameters ([grand] a or alpha)");
  return *a_;
}

const std::vector<double>& PackingModel::h() const {
  if (!h_) fail(ErrorCode::InvalidArgument, "model defines no finite pools ([pools] h)");
  return *h_;
}

std::string PackingModel::label(std::size_t bar) const {
  const Configuration& k = configs_.config(bar);
  std::ostringstream os;
  os << server_names_[static_cast<std::size_t>(k.server_type)] << '(';
  for (std::size_t i = 0; i < k.counts.size(); ++i) {
    if (i) os << ' ';
    os << k.counts[i];
  }
  os << ')';
  return os.str();
}

ModelDefinition PackingModel::normalized_definition() const {
  ModelDefinition def;
  def.type_names = type_names_;
  def.server_names = server_names_;
  for (std::size_t b : configs_.nonzero()) def.configs.push_back(configs_.config(b));
  def.lambda = lambda_;
  def.mu = mu_;
  def.gamma = gamma_;
  def.a = a_;
  def.p = p_;
  def.h = h_;
  def.config_cap = original_.config_cap;
  return def;
}

}  // namespace grand
