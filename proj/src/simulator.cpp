#include "grand/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grand/error.hpp"

namespace grand {

namespace {

// ceil() that ignores representation noise such as 0.2 * 50 = 10.000000000000002.
std::int64_t ceil_count(double v) {
  if (!(v > 0.0)) return 0;
  return static_cast<std::int64_t>(std::ceil(v - 1e-9 * std::max(1.0, v)));
}

std::int64_t pick(double u, std::int64_t total) {
  auto m = static_cast<std::int64_t>(u * static_cast<double>(total));
  return std::clamp<std::int64_t>(m, 0, total - 1);
}

}  // namespace

Policy parse_policy(std::string_view name) {
  if (name == "grand-az") return Policy::GrandAZ;
  if (name == "grand-zp") return Policy::GrandZp;
  if (name == "grand-f") return Policy::GrandF;
  fail(ErrorCode::InvalidArgument,
       "unknown policy `" + std::string(name) + "` (expected grand-az, grand-zp or grand-f)");
}

const char* to_string(Policy policy) {
  switch (policy) {
    case Policy::GrandAZ: return "grand-az";
    case Policy::GrandZp: return "grand-zp";
    case Policy::GrandF: return "grand-f";
  }
  return "?";
}

SystemState SystemState::empty(const ConfigurationSet& set) {
  SystemState s;
  s.x.assign(set.size_bar(), 0);
  s.y.assign(static_cast<std::size_t>(set.num_types()), 0);
  s.occupied.assign(static_cast<std::size_t>(set.num_server_types()), 0);
  s.open.assign(static_cast<std::size_t>(set.num_types()), 0);
  return s;
}

SystemState SystemState::from_counts(const ConfigurationSet& set,
                                     const std::vector<std::int64_t>& counts) {
  if (counts.size() != set.size()) {
    fail(ErrorCode::InvalidArgument, "state has " + std::to_string(counts.size()) +
                                         " counts, model has " + std::to_string(set.size()) +
                                         " configurations");
  }
  SystemState s = empty(set);
  for (std::size_t pos = 0; pos < counts.size(); ++pos) {
    const std::size_t b = set.nonzero()[pos];
    const std::int64_t n = counts[pos];
    if (n < 0) fail(ErrorCode::InvalidArgument, "negative server count in state");
    s.x[b] = n;
    s.occupied[static_cast<std::size_t>(set.server_type(b))] += n;
    for (int i = 0; i < set.num_types(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      s.y[ii] += n * set.count(b, i);
      if (set.up(b, i) != kNone) s.open[ii] += n;
    }
  }
  for (auto v : s.y) s.z += v;
  return s;
}

Simulator::Simulator(const PackingModel& model, Policy policy, double r, std::uint64_t seed)
    : model_(&model),
      policy_(policy),
      r_(r),
      r_eff_(model.effective_r(r)),
      clock_(seed, Stream::EventClock),
      choice_(seed, Stream::EventChoice),
      placement_(seed, Stream::Placement) {
  if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorCode::InvalidArgument, "r must be positive");
  const auto& set = model.configs();
  if (policy == Policy::GrandAZ) (void)model.a();
  if (policy == Policy::GrandZp && !model.p()) {
    fail(ErrorCode::InvalidArgument, "grand-zp requires [grand] p in (0, 1)");
  }
  if (policy == Policy::GrandF) {
    const auto& h = model.h();
    for (double hs : h) {
      const double target = hs * r_eff_;
      const double rounded = std::round(target);
      if (std::abs(target - rounded) > 1e-9 * std::max(1.0, target)) pools_integral_ = false;
      pools_.push_back(static_cast<std::int64_t>(rounded));
    }
  }
  for (double l : model.lambda()) arrival_rates_.push_back(l * r_eff_);
  for (int i = 0; i < model.num_types(); ++i) {
    fallback_.push_back(set.servers_for(i).front());
  }
  state_ = SystemState::empty(set);
  edge_of_.assign(set.size_bar() * static_cast<std::size_t>(model.num_types()), kNone);
  for (std::size_t e = 0; e < set.edges().size(); ++e) {
    const Edge& edge = set.edges()[e];
    edge_of_[edge.config * static_cast<std::size_t>(model.num_types()) +
             static_cast<std::size_t>(edge.type)] = e;
  }
  edge_arrivals_.assign(set.edges().size(), 0);
  edge_departures_.assign(set.edges().size(), 0);
  arrivals_.assign(static_cast<std::size_t>(model.num_types()), 0);
  blocked_.assign(static_cast<std::size_t>(model.num_types()), 0);
}

void Simulator::set_state(SystemState state) {
  state_ = std::move(state);
  check_invariants();
}

std::int64_t Simulator::zero_servers(int s) const {
  const auto ss = static_cast<std::size_t>(s);
  switch (policy_) {
    case Policy::GrandAZ:
      return ceil_count(model_->a()[ss] * static_cast<double>(state_.z));
    case Policy::GrandZp: {
      if (state_.z == 0) return 0;
      const double exponent = (*model_->p() - 1.0) * model_->gamma()[ss] + 1.0;
      return ceil_count(std::pow(static_cast<double>(state_.z), exponent));
    }
    case Policy::GrandF:
      return pools_[ss] - state_.occupied[ss];
  }
  return 0;
}

std::int64_t Simulator::available(int i) const {
  std::int64_t total = state_.open[static_cast<std::size_t>(i)];
  for (int s : model_->configs().servers_for(i)) total += zero_servers(s);
  return total;
}

double Simulator::total_rate() const {
  double rate = 0.0;
  for (std::size_t i = 0; i < arrival_rates_.size(); ++i) {
    rate += arrival_rates_[i] + model_->mu()[i] * static_cast<double>(state_.y[i]);
  }
  return rate;
}

double Simulator::next_holding_time() const {
  return -std::log1p(-clock_.uniforms(events_)[0]) / total_rate();
}

Assignment Simulator::choose(int i, double u, bool finite) const {
  const auto& set = model_->configs();
  Assignment out;
  const std::int64_t total = available(i);
  if (total == 0) {
    if (finite) {
      out.blocked = true;
      return out;
    }
    out.fallback = true;
    out.from = set.zero(fallback_[static_cast<std::size_t>(i)]);
    out.to = set.up(out.from, i);
    return out;
  }
  std::int64_t m = pick(u, total);
  const auto candidates = set.accepting(i);
  for (std::size_t b : candidates) {
    const std::int64_t n =
        set.is_zero(b) ? zero_servers(set.server_type(b)) : state_.x[b];
    if (m < n) {
      out.from = b;
      out.to = set.up(b, i);
      return out;
    }
    m -= n;
  }
  fail(ErrorCode::InvalidArgument, "availability count out of sync with state");
}

Assignment Simulator::place_grand_az(int i, double u) const {
  if (policy_ != Policy::GrandAZ) fail(ErrorCode::InvalidArgument, "simulator policy is not grand-az");
  return choose(i, u, false);
}

Assignment Simulator::place_grand_zp(int i, double u) const {
  if (policy_ != Policy::GrandZp) fail(ErrorCode::InvalidArgument, "simulator policy is not grand-zp");
  return choose(i, u, false);
}

Assignment Simulator::place_grand_f(int i, double u) const {
  if (policy_ != Policy::GrandF) fail(ErrorCode::InvalidArgument, "simulator policy is not grand-f");
  return choose(i, u, true);
}

Assignment Simulator::place(int i, double u) const { return choose(i, u, is_finite(policy_)); }

void Simulator::add_server(std::size_t bar, std::int64_t delta) {
  const auto& set = model_->configs();
  if (set.is_zero(bar)) return;
  state_.x[bar] += delta;
  state_.occupied[static_cast<std::size_t>(set.server_type(bar))] += delta;
  for (int i = 0; i < set.num_types(); ++i) {
    if (set.up(bar, i) != kNone) state_.open[static_cast<std::size_t>(i)] += delta;
  }
}

EventRecord Simulator::step() {
  const auto& set = model_->configs();
  const double rate = total_rate();
  const auto u_choice = choice_.uniforms(events_);
  EventRecord ev;
  ev.elapsed = next_holding_time();

  // Arrivals first, then departures, each in type order. The choice depends
  // only on (Y, rates), so Y paths coincide across placement policies.
  double target = u_choice[0] * rate;
  int chosen = -1;
  bool arrival = true;
  const int types = model_->num_types();
  for (int i = 0; i < types && chosen < 0; ++i) {
    target -= arrival_rates_[static_cast<std::size_t>(i)];
    if (target < 0.0) chosen = i;
  }
  if (chosen < 0) {
    arrival = false;
    for (int i = 0; i < types && chosen < 0; ++i) {
      const double dep = model_->mu()[static_cast<std::size_t>(i)] *
                         static_cast<double>(state_.y[static_cast<std::size_t>(i)]);
      target -= dep;
      if (target < 0.0 && dep > 0.0) chosen = i;
    }
    if (chosen < 0) {
      // Rounding at the upper end: take the last type with customers present.
      for (int i = types - 1; i >= 0 && chosen < 0; --i) {
        if (state_.y[static_cast<std::size_t>(i)] > 0) chosen = i;
      }
      if (chosen < 0) {
        arrival = true;
        chosen = types - 1;
      }
    }
  }

  ev.type = chosen;
  const auto ci = static_cast<std::size_t>(chosen);
  if (arrival) {
    ev.kind = EventRecord::Kind::Arrival;
    const double u = placement_.uniforms(arrival_draws_++)[0];
    const Assignment a = place(chosen, u);
    ++arrivals_[ci];
    ev.blocked = a.blocked;
    ev.fallback = a.fallback;
    if (a.blocked) {
      ++blocked_[ci];
    } else {
      add_server(a.from, -1);
      add_server(a.to, +1);
      ++state_.y[ci];
      ++state_.z;
      ev.from = a.from;
      ev.to = a.to;
      ev.edge = edge_of_[a.to * set.num_types() + ci];
      ++edge_arrivals_[ev.edge];
      if (is_finite(policy_)) ++pull_messages_;
    }
  } else {
    ev.kind = EventRecord::Kind::Departure;
    std::int64_t m = pick(u_choice[1], state_.y[ci]);
    for (std::size_t b : set.containing(chosen)) {
      const std::int64_t w = set.count(b, chosen) * state_.x[b];
      if (m < w) {
        ev.from = b;
        break;
      }
      m -= w;
    }
    if (ev.from == kNone) fail(ErrorCode::InvalidArgument, "customer count out of sync with state");
    ev.to = set.down(ev.from, chosen);
    add_server(ev.from, -1);
    add_server(ev.to, +1);
    --state_.y[ci];
    --state_.z;
    ev.edge = edge_of_[ev.from * set.num_types() + ci];
    ++edge_departures_[ev.edge];
    if (is_finite(policy_)) ++pull_messages_;
  }
  time_ += ev.elapsed;
  ++events_;
  return ev;
}

void Simulator::check_invariants() const {
  const auto& set = model_->configs();
  if (state_.x.size() != set.size_bar()) fail(ErrorCode::InvalidArgument, "state size mismatch");
  std::vector<std::int64_t> counts;
  for (std::size_t b : set.nonzero()) {
    if (state_.x[b] < 0) fail(ErrorCode::InvalidArgument, "negative server count " + model_->label(b));
    counts.push_back(state_.x[b]);
  }
  for (int s = 0; s < set.num_server_types(); ++s) {
    if (state_.x[set.zero(s)] != 0) fail(ErrorCode::InvalidArgument, "zero configuration entry must stay 0");
  }
  const SystemState fresh = SystemState::from_counts(set, counts);
  if (fresh.y != state_.y || fresh.z != state_.z || fresh.occupied != state_.occupied ||
      fresh.open != state_.open) {
    fail(ErrorCode::InvalidArgument, "derived totals out of sync with server counts");
  }
  if (is_finite(policy_)) {
    for (std::size_t s = 0; s < pools_.size(); ++s) {
      if (state_.occupied[s] > pools_[s]) {
        fail(ErrorCode::InvalidArgument, "pool " + model_->server_names()[s] + " over capacity");
      }
    }
  }
}

namespace {

struct Accumulator {
  double warmup, horizon, batch_len;
  int batches;
  std::size_t nk, ni;
  std::vector<double> x, y;        // [batch][k], [batch][i]
  std::vector<double> z;           // [batch]
  std::vector<double> y_sq;        // [i], whole window
  double z_sq = 0.0;

  int batch_of(double t) const {
    auto b = static_cast<int>((t - warmup) / batch_len);
    return std::clamp(b, 0, batches - 1);
  }

  void add(double t0, double t1, const Simulator& sim) {
    t0 = std::max(t0, warmup);
    t1 = std::min(t1, horizon);
    if (t1 <= t0) return;
    const auto& set = sim.model().configs();
    const auto& st = sim.state();
    while (t0 < t1) {
      const int b = batch_of(t0);
      const double end = b == batches - 1 ? t1 : std::min(t1, warmup + (b + 1) * batch_len);
      const double len = end - t0;
      if (len <= 0.0) break;
      const auto ub = static_cast<std::size_t>(b);
      for (std::size_t pos = 0; pos < nk; ++pos) {
        x[ub * nk + pos] += len * static_cast<double>(st.x[set.nonzero()[pos]]);
      }
      for (std::size_t i = 0; i < ni; ++i) {
        const auto yi = static_cast<double>(st.y[i]);
        y[ub * ni + i] += len * yi;
        y_sq[i] += len * yi * yi;
      }
      z[ub] += len * static_cast<double>(st.z);
      z_sq += len * static_cast<double>(st.z) * static_cast<double>(st.z);
      t0 = end;
    }
  }
};

void mean_and_stderr(const std::vector<double>& batch_values, double& mean, double& se) {
  const auto n = static_cast<double>(batch_values.size());
  mean = 0.0;
  for (double v : batch_values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  se = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace

RunStatistics run_from(const PackingModel& model, const RunOptions& opt,
                       const std::vector<std::int64_t>& initial_counts) {
  const double warmup = opt.warmup.value_or(0.2 * opt.horizon);
  if (!(opt.horizon > 0.0) || !std::isfinite(opt.horizon)) {
    fail(ErrorCode::InvalidArgument, "horizon must be positive");
  }
  if (!(warmup >= 0.0) || !(opt.horizon > warmup)) {
    fail(ErrorCode::InvalidArgument, "need horizon > warmup >= 0");
  }
  if (opt.batches < 2) fail(ErrorCode::InvalidArgument, "need at least 2 batches");

  const auto& set = model.configs();
  Simulator sim(model, opt.policy, opt.r, opt.seed);
  sim.set_state(SystemState::from_counts(set, initial_counts));

  RunStatistics st;
  st.policy = opt.policy;
  st.r = opt.r;
  st.effective_r = sim.effective_r();
  st.horizon = opt.horizon;
  st.warmup = warmup;
  st.batches = opt.batches;
  st.seed = opt.seed;
  st.initial_counts = initial_counts;
  st.pools = sim.pools();
  if (!sim.pools_integral()) {
    std::ostringstream os;
    os << "h_s * r is not integral for some pool; pool sizes rounded to";
    for (auto p : sim.pools()) os << ' ' << p;
    st.warnings.push_back(os.str());
  }

  const std::size_t nk = set.size();
  const auto ni = static_cast<std::size_t>(model.num_types());
  const auto nb = static_cast<std::size_t>(opt.batches);
  Accumulator acc{warmup, opt.horizon, (opt.horizon - warmup) / opt.batches, opt.batches,
                  nk, ni, std::vector<double>(nb * nk, 0.0), std::vector<double>(nb * ni, 0.0),
                  std::vector<double>(nb, 0.0), std::vector<double>(ni, 0.0)};

  std::vector<std::int64_t> batch_arrivals(nb * ni, 0), batch_blocked(nb * ni, 0);
  st.batch_events.assign(nb, 0);
  st.window_arrivals.assign(ni, 0);
  st.window_blocked.assign(ni, 0);

#ifdef NDEBUG
  const std::uint64_t check_every = opt.check_every ? opt.check_every : 10000;
#else
  const std::uint64_t check_every = opt.check_every ? opt.check_every : 1;
#endif

  std::int64_t pulls_at_warmup = -1;
  std::int64_t pulls_before = 0;
  while (true) {
    const double t = sim.time();
    const double dt = sim.next_holding_time();
    if (t + dt > opt.horizon) {
      acc.add(t, opt.horizon, sim);
      break;
    }
    acc.add(t, t + dt, sim);
    pulls_before = sim.pull_messages();
    const EventRecord ev = sim.step();
    const double te = sim.time();
    if (te > warmup) {
      if (pulls_at_warmup < 0) pulls_at_warmup = pulls_before;
      const auto b = static_cast<std::size_t>(acc.batch_of(te));
      ++st.batch_events[b];
      if (ev.kind == EventRecord::Kind::Arrival) {
        const auto i = static_cast<std::size_t>(ev.type);
        ++batch_arrivals[b * ni + i];
        ++st.window_arrivals[i];
        if (ev.blocked) {
          ++batch_blocked[b * ni + i];
          ++st.window_blocked[i];
        } else {
          ++st.window_accepted;
        }
      }
    }
    if (sim.events() % check_every == 0) sim.check_invariants();
  }
  sim.check_invariants();
  if (pulls_at_warmup < 0) pulls_at_warmup = sim.pull_messages();

  for (std::size_t b = 0; b < nb; ++b) {
    if (st.batch_events[b] == 0) {
      fail(ErrorCode::InsufficientData,
           "batch " + std::to_string(b + 1) + " of " + std::to_string(nb) +
               " contains no events; increase the horizon or r");
    }
  }

  const double r_eff = sim.effective_r();
  const double blen = acc.batch_len;
  std::vector<double> vals(nb);
  st.x_mean.resize(nk);
  st.x_stderr.resize(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    for (std::size_t b = 0; b < nb; ++b) vals[b] = acc.x[b * nk + k] / blen / r_eff;
    mean_and_stderr(vals, st.x_mean[k], st.x_stderr[k]);
  }
  const double window = opt.horizon - warmup;
  st.y_mean.resize(ni);
  st.y_stderr.resize(ni);
  st.y_count_mean.resize(ni);
  st.y_count_var.resize(ni);
  st.blocking.assign(ni, 0.0);
  st.blocking_stderr.assign(ni, 0.0);
  for (std::size_t i = 0; i < ni; ++i) {
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      vals[b] = acc.y[b * ni + i] / blen / r_eff;
      total += acc.y[b * ni + i];
    }
    mean_and_stderr(vals, st.y_mean[i], st.y_stderr[i]);
    st.y_count_mean[i] = total / window;
    st.y_count_var[i] = acc.y_sq[i] / window - st.y_count_mean[i] * st.y_count_mean[i];

    if (st.window_arrivals[i] > 0) {
      st.blocking[i] = static_cast<double>(st.window_blocked[i]) /
                       static_cast<double>(st.window_arrivals[i]);
    }
    std::vector<double> ratios;
    for (std::size_t b = 0; b < nb; ++b) {
      if (batch_arrivals[b * ni + i] > 0) {
        ratios.push_back(static_cast<double>(batch_blocked[b * ni + i]) /
                         static_cast<double>(batch_arrivals[b * ni + i]));
      }
    }
    if (ratios.size() >= 2) {
      double unused = 0.0;
      mean_and_stderr(ratios, unused, st.blocking_stderr[i]);
    }
  }
  double z_total = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    vals[b] = acc.z[b] / blen / r_eff;
    z_total += acc.z[b];
  }
  mean_and_stderr(vals, st.z_mean, st.z_stderr);
  st.z_count_mean = z_total / window;
  st.z_count_var = acc.z_sq / window - st.z_count_mean * st.z_count_mean;

  st.window_pull_messages = sim.pull_messages() - pulls_at_warmup;
  if (st.window_accepted > 0) {
    st.pull_rate = static_cast<double>(st.window_pull_messages) /
                   static_cast<double>(st.window_accepted);
  }
  st.events = sim.events();
  st.edge_arrivals = sim.edge_arrivals();
  st.edge_departures = sim.edge_departures();
  for (std::size_t b : set.nonzero()) st.final_counts.push_back(sim.state().x[b]);
  return st;
}

RunStatistics run(const PackingModel& model, const RunOptions& options) {
  return run_from(model, options, std::vector<std::int64_t>(model.configs().size(), 0));
}

}  // namespace grand
