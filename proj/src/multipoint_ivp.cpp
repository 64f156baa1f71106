#include "oncodyn/multipoint_ivp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oncodyn/sampling.hpp"

namespace oncodyn {

void MultipointCondition::validate() const {
  if (alphas.size() != phase_times.size()) {
    throw Error(ErrorCode::InvalidArgument, "alphas and phase_times differ in length");
  }
  if (!std::isfinite(t0) || !x0.finite()) {
    throw Error(ErrorCode::InvalidArgument, "t0 and x0 must be finite");
  }
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be > 0");
  for (std::size_t k = 0; k < phase_times.size(); ++k) {
    if (!alphas[k].finite() || !std::isfinite(phase_times[k])) {
      throw Error(ErrorCode::InvalidArgument, "non-finite multipoint coefficient or time");
    }
    if (!(std::abs(phase_times[k] - t0) < delta)) {
      throw Error(ErrorCode::InvalidArgument,
                  "phase time " + std::to_string(phase_times[k]) + " outside |t - t0| < delta");
    }
  }
}

double MultipointCondition::earliest_time() const {
  double lo = t0;
  for (double t : phase_times) lo = std::min(lo, t);
  return lo;
}

void FixedPointSettings::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "fixed-point tol must be > 0");
  if (max_iter <= 0) throw Error(ErrorCode::InvalidArgument, "max_iter must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "damping must lie in (0, 1]");
  }
  if (initial_guess && !initial_guess->finite()) {
    throw Error(ErrorCode::InvalidArgument, "initial guess must be finite");
  }
  integrator.validate();
}

namespace {

// Flow from (t0, v) covering [t_lo, t_hi]; every phase time is a stored sample.
Trajectory flow(const VectorField& f, const Vec3& v, double t0, double t_lo, double t_hi,
                const std::vector<double>& stops, const IntegratorSettings& settings) {
  Trajectory fwd = integrate(f, v, t0, t_hi, settings, stops);
  if (t_lo < t0) {
    Trajectory bwd = integrate_backward(f, v, t0, t_lo, settings, stops);
    return Trajectory::join(bwd, fwd);
  }
  return fwd;
}

Vec3 condition_image(const MultipointCondition& cond, const Trajectory& traj) {
  Vec3 g = cond.x0;
  for (std::size_t k = 0; k < cond.size(); ++k) {
    g += hadamard(cond.alphas[k], traj.at(cond.phase_times[k]));
  }
  return g;
}

double latest_phase_time(const MultipointCondition& cond) {
  double hi = cond.t0;
  for (double t : cond.phase_times) hi = std::max(hi, t);
  return hi;
}

void check_horizon(const MultipointCondition& cond, double t_end) {
  if (!(t_end > cond.t0)) throw Error(ErrorCode::InvalidArgument, "t_end must exceed t0");
  if (latest_phase_time(cond) > t_end) {
    throw Error(ErrorCode::InvalidArgument, "phase time beyond t_end");
  }
}

}  // namespace

MultipointSolution solve_multipoint(const VectorField& f, const MultipointCondition& cond,
                                    double t_end, const FixedPointSettings& settings) {
  cond.validate();
  settings.validate();
  check_horizon(cond, t_end);

  const double t_lo = cond.earliest_time();
  const double t_hi = latest_phase_time(cond);
  const double d = settings.damping;

  Vec3 v = settings.initial_guess.value_or(cond.x0);
  double prev_diff = -1.0;
  double estimate = 0.0;
  int expanding = 0;
  int iterations = 0;
  bool converged = false;
  while (iterations < settings.max_iter) {
    ++iterations;
    const Trajectory traj = flow(f, v, cond.t0, t_lo, t_hi, cond.phase_times, settings.integrator);
    const Vec3 g = condition_image(cond, traj);
    const Vec3 next = d == 1.0 ? g : (1.0 - d) * v + d * g;
    if (!next.finite() || next.norm_inf() > 1e12) {
      throw Error(ErrorCode::NoContraction,
                  "multipoint iterates diverge at iteration " + std::to_string(iterations));
    }
    const double diff = (next - v).norm_inf();
    v = next;
    if (diff < settings.tol) {
      converged = true;
      break;
    }
    if (prev_diff > 0.0) {
      estimate = diff / prev_diff;
      expanding = estimate >= 1.0 ? expanding + 1 : 0;
      if (expanding >= 5) {
        throw Error(ErrorCode::NoContraction,
                    "contraction estimate " + std::to_string(estimate) +
                        " >= 1 for 5 consecutive iterations");
      }
    }
    prev_diff = diff;
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence, "multipoint iteration did not converge in " +
                                              std::to_string(settings.max_iter) + " iterations");
  }

  MultipointSolution sol;
  sol.v0 = v;
  sol.iterations = iterations;
  sol.contraction_estimate = estimate;
  const Trajectory at_phases =
      flow(f, v, cond.t0, t_lo, t_hi, cond.phase_times, settings.integrator);
  sol.residual = (v - condition_image(cond, at_phases)).norm_inf();
  sol.trajectory = flow(f, v, cond.t0, t_lo, t_end, {}, settings.integrator);
  if (v.min_component() < 0.0) {
    sol.warnings.emplace_back("NegativeEffectiveState: effective initial state has a negative component");
  }
  return sol;
}

MultipointSolution solve_multipoint(const RateModel& model, const MultipointCondition& cond,
                                    double t_end, const FixedPointSettings& settings) {
  return solve_multipoint(as_vector_field(model), cond, t_end, settings);
}

double residual(const VectorField& f, const MultipointCondition& cond, const Vec3& v0,
                double t_end, const IntegratorSettings& settings) {
  cond.validate();
  check_horizon(cond, t_end);
  const Trajectory traj =
      flow(f, v0, cond.t0, cond.earliest_time(), latest_phase_time(cond), cond.phase_times, settings);
  return (v0 - condition_image(cond, traj)).norm_inf();
}

double residual(const RateModel& model, const MultipointCondition& cond, const Vec3& v0,
                double t_end, const IntegratorSettings& settings) {
  return residual(as_vector_field(model), cond, v0, t_end, settings);
}

ContractionDiagnostics contraction_diagnostics(const VectorField& f, const JacobianField& jac,
                                               const MultipointCondition& cond,
                                               double ball_radius, int samples,
                                               std::uint64_t seed) {
  cond.validate();
  if (!(ball_radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball_radius must be > 0");
  if (samples < 0) throw Error(ErrorCode::InvalidArgument, "samples must be >= 0");

  ContractionDiagnostics out;
  out.center = cond.x0;
  for (const Vec3& a : cond.alphas) out.center += hadamard(a, cond.x0);

  auto visit = [&](const Vec3& x) {
    out.M_hat = std::max(out.M_hat, f(x).norm_inf());
    out.L_hat = std::max(out.L_hat, jac(x).norm_inf());
  };
  visit(out.center);
  const Halton3 halton(substream_seed(seed, "contraction"));
  for (int i = 0; i < samples; ++i) {
    visit(out.center + ball_radius * ball_point(halton.point(static_cast<std::uint64_t>(i))));
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  const double by_m = out.M_hat > 0.0 ? ball_radius / out.M_hat : inf;
  const double by_l = out.L_hat > 0.0 ? 1.0 / out.L_hat : inf;
  out.eta_bound = std::min(by_m, by_l);
  return out;
}

ContractionDiagnostics contraction_diagnostics(const RateModel& model,
                                               const MultipointCondition& cond,
                                               double ball_radius, int samples,
                                               std::uint64_t seed) {
  return contraction_diagnostics(
      as_vector_field(model), [&model](const Vec3& x) { return jacobian(model, x); }, cond,
      ball_radius, samples, seed);
}

}  // namespace oncodyn
