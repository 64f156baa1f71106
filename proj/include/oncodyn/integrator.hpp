#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "oncodyn/numerics.hpp"

namespace oncodyn {

/// Autonomous vector field x' = f(x).
using VectorField = std::function<Vec3(const Vec3&)>;

struct IntegratorSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 1'000'000;

  void validate() const;
};

/// Accepted integrator steps with cubic Hermite dense output between them.
/// Times are strictly increasing (a single sample is allowed for an empty
/// interval).
class Trajectory {
 public:
  struct Sample {
    double t;
    Vec3 x;
    Vec3 dxdt;
  };

  Trajectory() = default;
  explicit Trajectory(std::vector<Sample> samples);

  [[nodiscard]] const std::vector<Sample>& samples() const { return samples_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] double t_first() const { return samples_.front().t; }
  [[nodiscard]] double t_last() const { return samples_.back().t; }
  [[nodiscard]] const Vec3& final_state() const { return samples_.back().x; }

  /// Dense output; throws InvalidArgument outside [t_first, t_last].
  [[nodiscard]] Vec3 at(double t) const;

  /// Concatenates a trajectory ending at time s with one starting at s.
  static Trajectory join(const Trajectory& before, const Trajectory& after);

 private:
  std::vector<Sample> samples_;
};

/// Dormand-Prince 5(4) with error-per-step control. Steps are shortened so
/// that every time in `stops` inside (t0, t_end) is hit exactly. Requires
/// t_end >= t0.
///
/// Throws StepLimitExceeded when max_steps is exhausted or the step size falls
/// below 1e-14 times the interval length, and NonFiniteDerivative when the
/// field returns NaN/Inf.
Trajectory integrate(const VectorField& rhs, const Vec3& v0, double t0, double t_end,
                     const IntegratorSettings& settings = {},
                     std::span<const double> stops = {});

/// Integrates from t0 back to t_begin <= t0. The result is ordered in
/// increasing time and ends at (t0, v0).
Trajectory integrate_backward(const VectorField& rhs, const Vec3& v0, double t0,
                              double t_begin, const IntegratorSettings& settings = {},
                              std::span<const double> stops = {});

}  // namespace oncodyn
