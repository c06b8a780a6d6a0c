#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "grand/model.hpp"

namespace grand {

enum class FluidMode { Infinite, Finite };

FluidMode parse_fluid_mode(std::string_view name);  // inf | fin
const char* to_string(FluidMode mode);

// A point x over K together with the quantities derived from it.
struct FluidState {
  std::vector<double> x;             // over K
  std::vector<double> xbar;          // over K-bar; zero configs filled per mode
  std::vector<double> y;             // y_i
  double z = 0.0;
  std::vector<double> availability;  // x_(i)
};

struct FluidRates {
  std::vector<double> v;        // arrival rate per edge
  std::vector<double> w;        // departure rate per edge
  std::vector<double> blocked;  // blocked fluid per type (finite mode)
};

struct FluidRhs {
  std::vector<double> dx;  // over K
  FluidRates rates;
};

// Fluid dynamics of either system. Infinite mode counts x_{0^s} = a_s z
// zero-servers; finite mode has x_{0^s} = h_s - sum_{K^s} x_k idle servers.
class FluidSystem {
 public:
  static FluidSystem infinite(const PackingModel& model, std::vector<double> a);
  static FluidSystem infinite(const PackingModel& model) { return infinite(model, model.a()); }
  static FluidSystem finite(const PackingModel& model);
  static FluidSystem of(const PackingModel& model, FluidMode mode);

  FluidMode mode() const { return mode_; }
  const PackingModel& model() const { return *model_; }
  const std::vector<double>& a() const { return a_; }

  // Validates x (nonnegative; inside the pool box in finite mode).
  FluidState evaluate(std::span<const double> x) const;
  FluidRhs rhs(std::span<const double> x) const;
  double lyapunov(std::span<const double> x) const;
  double drift(std::span<const double> x) const;

  // Without validation; used between integrator stages.
  FluidRhs rhs_unchecked(std::span<const double> x) const;

 private:
  FluidSystem(const PackingModel& model, FluidMode mode, std::vector<double> a)
      : model_(&model), mode_(mode), a_(std::move(a)) {}
  FluidState derive(std::span<const double> x) const;

  const PackingModel* model_;
  FluidMode mode_;
  std::vector<double> a_;
};

// Throws Error(DegenerateAvailability) if x_(i) = 0 for some type.
FluidRhs fluid_rhs_infinite(const PackingModel& model, const std::vector<double>& a,
                            std::span<const double> x);
FluidRhs fluid_rhs_finite(const PackingModel& model, std::span<const double> x);

// sum over K^s of x_k log(x_k c_k / (e a_s)), with 0 log 0 = 0.
double lyapunov_infinite(const PackingModel& model, const std::vector<double>& a,
                         std::span<const double> x);
// sum over K-bar of x_k log(x_k c_k / e); `xbar` includes the zero configs.
double lyapunov_finite(const PackingModel& model, std::span<const double> xbar);
// x over K -> xbar over K-bar with x_{0^s} = h_s - sum_{K^s} x_k.
std::vector<double> expand_finite(const PackingModel& model, std::span<const double> x);

// Paired-edge form of d/dt L along the fluid dynamics. Returns -infinity when
// some x_k = 0 on K. Infinite mode requires y = rho (x in X) and evaluates the
// zero configurations at x_{0^s} = a_s; finite mode requires all x_{0^s} > 0.
// Throws Error(Domain) outside those regions. On y = rho the result equals d/dt L
// along the dynamics in both modes.
double drift_xi(const FluidSystem& system, std::span<const double> x);

struct TrajectorySample {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> y;
  double z = 0.0;
  double lyapunov = 0.0;
  double xi = 0.0;  // NaN where drift_xi is outside its domain
};

struct Trajectory {
  FluidMode mode = FluidMode::Infinite;
  std::vector<TrajectorySample> samples;
  double max_step_clip = 0.0;
  double total_clip = 0.0;
};

struct IntegrateOptions {
  double t_end = 10.0;
  double dt = 1e-3;
  std::size_t sample_every = 1;  // steps between samples; t = 0 and t_end always kept
  double clip_tolerance = 1e-6;  // per step, else Error(StepSize)
};

// Classical fixed-step RK4 with negative components clipped to 0.
Trajectory integrate(const FluidSystem& system, std::span<const double> x0,
                     const IntegrateOptions& options);

// Advances x by one RK4 step (with clipping); returns the clipped mass.
double rk4_step(const FluidSystem& system, std::vector<double>& x, double dt);

// Euclidean projection onto the nonnegative orthant (infinite mode) or onto
// X-box = {x >= 0, sum_{K^s} x_k <= h_s} (finite mode).
std::vector<double> project_feasible(const FluidSystem& system, std::span<const double> x);

// center + perturbation of Euclidean norm eps * |center| in a uniformly random
// direction, then projected.
std::vector<double> perturb(const FluidSystem& system, std::span<const double> center,
                            double relative_eps, std::uint64_t seed);

}  // namespace grand
