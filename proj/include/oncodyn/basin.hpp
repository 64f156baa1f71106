#pragma once

// Certified basin-of-attraction estimates: the largest sampled ball around
// xbar on which V decreases, the sublevel set {V <= C} inside it, and Monte
// Carlo confirmation that trajectories started there converge.

#include <cstdint>
#include <optional>
#include <vector>

#include "oncodyn/integrator.hpp"
#include "oncodyn/lyapunov.hpp"
#include "oncodyn/multipoint_ivp.hpp"

namespace oncodyn {

struct SamplingPlan {
  std::uint64_t seed = 0;
  int n_samples = 1000;
  double horizon = 200.0;
  double convergence_radius = 1e-4;
  /// A run is counted as escaped once |x - xbar| exceeds this multiple of the
  /// largest starting distance in the sample set; otherwise it is undecided.
  double escape_multiplier = 10.0;
  int threads = 1;
  /// Number of leading sample trajectories returned for export.
  int keep_trajectories = 0;
  IntegratorSettings integrator;

  void validate() const;
};

struct BasinCertificate {
  LyapunovCertificate cert;
  double ball_radius_r = 0.0;
  double level_C = 0.0;
  int mc_total = 0;
  int mc_converged = 0;
  int mc_escaped_or_undecided = 0;
  int mc_escaped = 0;  // subset of mc_escaped_or_undecided
  std::vector<Trajectory> trajectories;

  [[nodiscard]] bool valid() const { return mc_total > 0 && mc_escaped_or_undecided == 0; }
};

/// Largest r in (0, r_max] (40 bisection steps) such that
/// v_dot < -eps_decay * V at `n_shell_samples` quasi-random points of
/// {x >= 0 : 0 < |x - xbar| <= r}. Throws NoPositiveRadius.
double verified_decrease_radius(const VectorField& f, const LyapunovCertificate& cert,
                                double r_max, int n_shell_samples, std::uint64_t seed,
                                double eps_decay = 1e-9);
double verified_decrease_radius(const RateModel& model, const LyapunovCertificate& cert,
                                double r_max, int n_shell_samples, std::uint64_t seed,
                                double eps_decay = 1e-9);

/// (1 - margin) * lambda_min * r^2
double level_from_radius(const LyapunovCertificate& cert, double r, double margin = 0.01);

/// Quasi-uniform samples of {x >= 0 : V(x) <= C}. C == 0 returns xbar
/// repeated. Throws EmptyRegion when the acceptance rate drops below 1e-4.
std::vector<Vec3> sample_sublevel(const LyapunovCertificate& cert, double C,
                                  const SamplingPlan& plan);

/// Outcome of one start integrated to the plan horizon.
enum class RunOutcome { Converged, Escaped, Undecided };

RunOutcome check_convergence(const VectorField& f, const LyapunovCertificate& cert,
                             const Vec3& start, const SamplingPlan& plan, double escape_radius,
                             Trajectory* keep = nullptr);

/// Integrates every sample of {V <= C} and tallies the outcomes. Results do
/// not depend on plan.threads.
BasinCertificate monte_carlo_verify(const VectorField& f, const LyapunovCertificate& cert,
                                    double C, const SamplingPlan& plan);
BasinCertificate monte_carlo_verify(const RateModel& model, const LyapunovCertificate& cert,
                                    double C, const SamplingPlan& plan);

struct MultipointProbeTallies {
  int total = 0;
  int in_level = 0;  // effective state v0 stayed in {V <= C}
  int in_level_converged = 0;
  int left_level = 0;
  int negative_effective = 0;  // v0 had a negative component; excluded
  int no_contraction = 0;
  int failed = 0;  // other solver failures
};

/// For each sample p of {V <= C}: x0 = p, solve the multipoint problem with
/// the template's coefficients and phase times, then check convergence from
/// the effective state when it remains in the sublevel set.
MultipointProbeTallies multipoint_basin_probe(const VectorField& f,
                                              const MultipointCondition& cond_template,
                                              const LyapunovCertificate& cert, double C,
                                              const SamplingPlan& plan,
                                              const FixedPointSettings& fp = {});
MultipointProbeTallies multipoint_basin_probe(const RateModel& model,
                                              const MultipointCondition& cond_template,
                                              const LyapunovCertificate& cert, double C,
                                              const SamplingPlan& plan,
                                              const FixedPointSettings& fp = {});

}  // namespace oncodyn
