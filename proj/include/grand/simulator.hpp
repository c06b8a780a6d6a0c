#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grand/model.hpp"
#include "grand/rng.hpp"

namespace grand {

enum class Policy { GrandAZ, GrandZp, GrandF };

Policy parse_policy(std::string_view name);  // grand-az | grand-zp | grand-f
const char* to_string(Policy policy);
inline bool is_finite(Policy policy) { return policy == Policy::GrandF; }

// Integer server counts. `x` is indexed by K-bar position; entries of zero
// configurations stay 0 because zero-server numbers are policy-derived.
struct SystemState {
  std::vector<std::int64_t> x;
  std::vector<std::int64_t> y;         // Y_i
  std::int64_t z = 0;                  // Z
  std::vector<std::int64_t> occupied;  // sum over K^s of X_k, per server type
  std::vector<std::int64_t> open;      // occupied servers that can take type i

  static SystemState empty(const ConfigurationSet& set);
  // Builds a state from counts over K (canonical order) and derives totals.
  static SystemState from_counts(const ConfigurationSet& set,
                                 const std::vector<std::int64_t>& counts_over_k);
};

struct Assignment {
  std::size_t from = kNone;  // configuration joined (zero config for an empty server)
  std::size_t to = kNone;    // from + e_i
  bool blocked = false;
  bool fallback = false;  // no available server; placed into the fallback server type
};

struct EventRecord {
  enum class Kind { Arrival, Departure } kind = Kind::Arrival;
  int type = 0;
  std::size_t from = kNone;
  std::size_t to = kNone;
  std::size_t edge = kNone;  // index into ConfigurationSet::edges()
  bool blocked = false;
  bool fallback = false;
  double elapsed = 0.0;
};

// One continuous-time Markov chain trajectory. Not thread-safe, but owns no
// shared mutable state and may be moved between threads.
class Simulator {
 public:
  // `r` is the declared scaling parameter; arrivals occur at lambda_i *
  // model.effective_r(r) and pools hold round(h_s * effective_r) servers.
  Simulator(const PackingModel& model, Policy policy, double r, std::uint64_t seed);

  const PackingModel& model() const { return *model_; }
  Policy policy() const { return policy_; }
  double r() const { return r_; }
  double effective_r() const { return r_eff_; }
  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  const std::vector<std::int64_t>& pools() const { return pools_; }
  bool pools_integral() const { return pools_integral_; }

  const SystemState& state() const { return state_; }
  void set_state(SystemState state);

  // X_{0^s} under the policy for the current state.
  std::int64_t zero_servers(int s) const;
  // X_(i), zero-servers of compatible types counted with multiplicity.
  std::int64_t available(int i) const;
  double total_rate() const;
  // Holding time before the next event; step() will consume exactly this.
  double next_holding_time() const;

  // Placement rules. `u` is a uniform in [0, 1) selecting among the X_(i)
  // available servers in canonical configuration order.
  Assignment place_grand_az(int i, double u) const;
  Assignment place_grand_zp(int i, double u) const;
  Assignment place_grand_f(int i, double u) const;
  Assignment place(int i, double u) const;

  EventRecord step();

  // Recomputes all derived totals and policy constraints; throws on mismatch.
  void check_invariants() const;

  const std::vector<std::int64_t>& edge_arrivals() const { return edge_arrivals_; }
  const std::vector<std::int64_t>& edge_departures() const { return edge_departures_; }
  const std::vector<std::int64_t>& arrivals() const { return arrivals_; }
  const std::vector<std::int64_t>& blocked() const { return blocked_; }
  std::int64_t pull_messages() const { return pull_messages_; }

 private:
  Assignment choose(int i, double u, bool finite) const;
  void add_server(std::size_t bar, std::int64_t delta);

  const PackingModel* model_;
  Policy policy_;
  double r_;
  double r_eff_;
  std::vector<double> arrival_rates_;
  std::vector<std::int64_t> pools_;
  bool pools_integral_ = true;
  std::vector<int> fallback_;
  std::vector<std::size_t> edge_of_;  // [bar * I + i] -> edge index
  StreamRng clock_;
  StreamRng choice_;
  StreamRng placement_;
  SystemState state_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
  std::uint64_t arrival_draws_ = 0;
  std::vector<std::int64_t> edge_arrivals_;
  std::vector<std::int64_t> edge_departures_;
  std::vector<std::int64_t> arrivals_;
  std::vector<std::int64_t> blocked_;
  std::int64_t pull_messages_ = 0;
};

struct RunOptions {
  Policy policy = Policy::GrandAZ;
  double r = 1.0;
  double horizon = 1000.0;
  std::optional<double> warmup;  // default 20% of horizon
  std::uint64_t seed = 1;
  int batches = 20;
  // 0 selects the build default: every event in debug builds, every 10^4
  // events otherwise.
  std::uint64_t check_every = 0;
};

struct RunStatistics {
  Policy policy = Policy::GrandAZ;
  double r = 0.0;
  double effective_r = 0.0;
  double horizon = 0.0;
  double warmup = 0.0;
  int batches = 0;
  std::uint64_t seed = 0;
  std::uint64_t events = 0;
  std::vector<std::uint64_t> batch_events;

  // Time averages over [warmup, horizon] with batch-means standard errors.
  // Vectors over K are in canonical order; x is fluid scaled (X / r_eff).
  std::vector<double> x_mean, x_stderr;
  std::vector<double> y_mean, y_stderr;          // fluid scaled
  std::vector<double> y_count_mean, y_count_var;  // Y_i, unscaled
  double z_mean = 0.0, z_stderr = 0.0;            // fluid scaled
  double z_count_mean = 0.0, z_count_var = 0.0;

  // Measurement window counters.
  std::vector<std::int64_t> window_arrivals, window_blocked;
  std::vector<double> blocking, blocking_stderr;
  std::int64_t window_accepted = 0;
  std::int64_t window_pull_messages = 0;
  double pull_rate = 0.0;  // pull messages per accepted customer

  // Whole-run counters and boundary states, for flow-balance checks.
  std::vector<std::int64_t> edge_arrivals, edge_departures;
  std::vector<std::int64_t> initial_counts, final_counts;  // over K
  std::vector<std::int64_t> pools;                         // GRAND-F only
  std::vector<std::string> warnings;
};

// Deterministic in (model, options). Throws Error(InvalidArgument) on bad
// options, Error(InsufficientData) if a batch saw no events.
RunStatistics run(const PackingModel& model, const RunOptions& options);

// Same, starting from a given state (counts over K) instead of empty.
RunStatistics run_from(const PackingModel& model, const RunOptions& options,
                       const std::vector<std::int64_t>& initial_counts);

}  // namespace grand
