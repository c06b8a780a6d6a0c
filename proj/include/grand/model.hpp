#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grand {

inline constexpr std::size_t kNone = static_cast<std::size_t>(-1);
inline constexpr std::size_t kDefaultConfigCap = 10000;

// A server configuration (k_1..k_I; s). Ordering is the canonical one used
// for every vector over configurations: server type first, then counts
// lexicographically.
struct Configuration {
  int server_type = 0;
  std::vector<int> counts;

  bool is_zero() const;
  int total() const;

  friend auto operator<=>(const Configuration&, const Configuration&) = default;
  friend bool operator==(const Configuration&, const Configuration&) = default;
};

// Edge (k, i): the transition between k - e_i and k for customer type i.
// Both endpoints are indices into the full configuration list K-bar.
struct Edge {
  std::size_t config;
  int type;
  std::size_t source;
};

struct MonotoneViolation {
  Configuration config;
  Configuration missing;
};

struct ValidationReport {
  std::vector<MonotoneViolation> violations;
  std::vector<int> unservable_types;
  std::vector<std::string> structural;  // negative counts, bad server index, ...

  bool ok() const {
    return violations.empty() && unservable_types.empty() && structural.empty();
  }
  std::string describe() const;
};

// Checks downward closure and that every customer type fits alone into at
// least one server type. Zero configurations are implied and need not be
// listed. Every missing predecessor of every listed configuration is reported.
ValidationReport validate_monotone(int num_types, int num_server_types,
                                   const std::vector<Configuration>& configs);

class ConfigurationSet {
 public:
  ConfigurationSet() = default;
  // Throws Error(Model) carrying the validation report when the list is not a
  // monotone, servable family; Error(UnboundedSet) when it exceeds `cap`.
  ConfigurationSet(int num_types, int num_server_types,
                   std::vector<Configuration> configs,
                   std::size_t cap = kDefaultConfigCap);

  int num_types() const { return num_types_; }
  int num_server_types() const { return num_server_types_; }

  // K-bar (including one zero configuration per server type).
  std::size_t size_bar() const { return all_.size(); }
  // K (nonzero configurations only).
  std::size_t size() const { return nonzero_.size(); }

  const Configuration& config(std::size_t bar) const { return all_[bar]; }
  std::span<const Configuration> all() const { return all_; }
  std::size_t zero(int s) const { return zero_[static_cast<std::size_t>(s)]; }
  bool is_zero(std::size_t bar) const { return position_[bar] == kNone; }
  int server_type(std::size_t bar) const { return all_[bar].server_type; }
  int count(std::size_t bar, int i) const {
    return all_[bar].counts[static_cast<std::size_t>(i)];
  }

  // Bar indices of the nonzero configurations in canonical order.
  std::span<const std::size_t> nonzero() const { return nonzero_; }
  // Position of a bar index inside nonzero(), or kNone for zero configs.
  std::size_t position(std::size_t bar) const { return position_[bar]; }

  // k + e_i / k - e_i as bar indices, kNone if outside K-bar.
  std::size_t up(std::size_t bar, int i) const { return up_[bar * ni() + ui(i)]; }
  std::size_t down(std::size_t bar, int i) const {
    return down_[bar * ni() + ui(i)];
  }
  std::size_t find(const Configuration& k) const;

  std::span<const Edge> edges() const { return edges_; }
  // Edges (k, i) for a fixed type i, in canonical order.
  std::span<const std::size_t> edges_of_type(int i) const {
    return edges_by_type_[ui(i)];
  }
  // Bar indices k (zero configs included) with k + e_i in K.
  std::span<const std::size_t> accepting(int i) const { return accepting_[ui(i)]; }
  // Nonzero bar indices with k_i >= 1.
  std::span<const std::size_t> containing(int i) const {
    return containing_[ui(i)];
  }
  // Server types s with e_i in K^s, ascending.
  std::span<const int> servers_for(int i) const { return servers_for_[ui(i)]; }

  // c_k = prod_i k_i!
  double factorial_product(std::size_t bar) const { return c_[bar]; }
  double log_factorial_product(std::size_t bar) const { return log_c_[bar]; }

 private:
  std::size_t ni() const { return static_cast<std::size_t>(num_types_); }
  static std::size_t ui(int i) { return static_cast<std::size_t>(i); }

  int num_types_ = 0;
  int num_server_types_ = 0;
  std::vector<Configuration> all_;
  std::map<Configuration, std::size_t> index_;
  std::vector<std::size_t> zero_;
  std::vector<std::size_t> nonzero_;
  std::vector<std::size_t> position_;
  std::vector<std::size_t> up_;
  std::vector<std::size_t> down_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> edges_by_type_;
  std::vector<std::vector<std::size_t>> accepting_;
  std::vector<std::vector<std::size_t>> containing_;
  std::vector<std::vector<int>> servers_for_;
  std::vector<double> c_;
  std::vector<double> log_c_;
};

// M = {(k, i) : k in K, k_i >= 1}, ordered by server type, counts, then i.
std::vector<Edge> build_edges(const ConfigurationSet& set);

// All integer k with sum_i k_i req_i <= res_s componentwise, per server type.
// Throws Error(UnboundedSet) if some type has no positive requirement or the
// enumeration exceeds `cap`.
std::vector<Configuration> enumerate_vector_packing(
    const std::vector<std::vector<double>>& resources_per_server_type,
    const std::vector<std::vector<double>>& requirements_per_customer_type,
    std::size_t cap = kDefaultConfigCap);

ConfigurationSet generate_vector_packing(
    const std::vector<std::vector<double>>& resources_per_server_type,
    const std::vector<std::vector<double>>& requirements_per_customer_type,
    std::size_t cap = kDefaultConfigCap);

// Raw, user-facing model parameters before normalization.
struct ModelDefinition {
  std::vector<std::string> type_names;
  std::vector<std::string> server_names;
  std::vector<Configuration> configs;  // nonzero configurations
  std::vector<double> lambda;
  std::vector<double> mu;
  std::vector<double> gamma;                // empty: all ones
  std::optional<std::vector<double>> a;     // GRAND(aZ) parameters
  std::optional<double> alpha;              // a_s = alpha^gamma_s (normalized gamma)
  std::optional<double> p;                  // GRAND(Z^p) exponent
  std::optional<std::vector<double>> h;     // finite pools per unit r
  std::size_t config_cap = kDefaultConfigCap;
};

// Immutable, validated and normalized model: sum_i rho_i = 1, gamma_1 = 1.
// Arrival rates and pool sizes are divided by the original sum of rho; the
// scaling parameter r is multiplied by it (`rate_scale`), so that
// lambda_i * r_effective is the physical arrival rate.
class PackingModel {
 public:
  explicit PackingModel(ModelDefinition def);

  int num_types() const { return configs_.num_types(); }
  int num_server_types() const { return configs_.num_server_types(); }
  const ConfigurationSet& configs() const { return configs_; }

  const std::vector<double>& lambda() const { return lambda_; }
  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& rho() const { return rho_; }
  const std::vector<double>& gamma() const { return gamma_; }
  bool has_a() const { return a_.has_value(); }
  const std::vector<double>& a() const;
  bool has_pools() const { return h_.has_value(); }
  const std::vector<double>& h() const;
  std::optional<double> p() const { return p_; }

  double rate_scale() const { return rate_scale_; }
  double gamma_scale() const { return gamma_scale_; }
  double effective_r(double r) const { return r * rate_scale_; }

  const std::vector<std::string>& type_names() const { return type_names_; }
  const std::vector<std::string>& server_names() const { return server_names_; }
  // "name(k1 k2 ...)"
  std::string label(std::size_t bar) const;

  // The definition as given, and an equivalent already-normalized definition.
  const ModelDefinition& original() const { return original_; }
  ModelDefinition normalized_definition() const;

 private:
  ModelDefinition original_;
  ConfigurationSet configs_;
  std::vector<std::string> type_names_;
  std::vector<std::string> server_names_;
  std::vector<double> lambda_, mu_, rho_, gamma_;
  std::optional<std::vector<double>> a_;
  std::optional<std::vector<double>> h_;
  std::optional<double> p_;
  double rate_scale_ = 1.0;
  double gamma_scale_ = 1.0;
};

}  // namespace grand
