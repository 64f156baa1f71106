#pragma once

// Multipoint initial-value problem
//
//   x(t0) = x0 + sum_k alpha_k (*) x(t_k),   |t_k - t0| < delta
//
// where (*) is the componentwise product. The effective initial state
// v0 = x(t0) is found by damped Picard iteration on v0 through the flow map.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oncodyn/integrator.hpp"
#include "oncodyn/numerics.hpp"
#include "oncodyn/tumor_model.hpp"

namespace oncodyn {

using JacobianField = std::function<Mat3(const Vec3&)>;

struct MultipointCondition {
  double t0 = 0.0;
  Vec3 x0;
  std::vector<Vec3> alphas;  // one coefficient vector per phase time
  std::vector<double> phase_times;
  double delta = 1.0;

  /// Throws InvalidArgument on size mismatch, delta <= 0, non-finite data or
  /// a phase time outside the open window |t - t0| < delta.
  void validate() const;
  [[nodiscard]] std::size_t size() const { return phase_times.size(); }
  [[nodiscard]] double earliest_time() const;
};

struct FixedPointSettings {
  double tol = 1e-10;
  int max_iter = 100;
  double damping = 1.0;
  std::optional<Vec3> initial_guess;  // defaults to x0
  IntegratorSettings integrator;

  void validate() const;
};

struct MultipointSolution {
  Vec3 v0;
  Trajectory trajectory;  // covers [min(t0, t_k), t_end]
  double residual = 0.0;
  int iterations = 0;
  double contraction_estimate = 0.0;
  std::vector<std::string> warnings;
};

/// Throws NoContraction when the iterates diverge (non-finite, norm > 1e12) or
/// the successive-difference ratio stays >= 1 for 5 iterations in a row, and
/// NoConvergence when max_iter is exhausted while still contracting.
MultipointSolution solve_multipoint(const VectorField& f, const MultipointCondition& cond,
                                    double t_end, const FixedPointSettings& settings = {});
MultipointSolution solve_multipoint(const RateModel& model, const MultipointCondition& cond,
                                    double t_end, const FixedPointSettings& settings = {});

/// ||v0 - x0 - sum_k alpha_k (*) Phi(t_k; v0)||_inf with a fresh integration.
double residual(const VectorField& f, const MultipointCondition& cond, const Vec3& v0,
                double t_end, const IntegratorSettings& settings = {});
double residual(const RateModel& model, const MultipointCondition& cond, const Vec3& v0,
                double t_end, const IntegratorSettings& settings = {});

struct ContractionDiagnostics {
  Vec3 center;
  double M_hat = 0.0;  // max ||f||_inf over the sampled ball
  double L_hat = 0.0;  // max ||J||_inf over the sampled ball
  double eta_bound = 0.0;  // min(r / M_hat, 1 / L_hat); +inf when both vanish
};

/// Samples the Euclidean ball of radius `ball_radius` around
/// x0 + sum_k alpha_k (*) x0 (the first Picard iterate with a frozen flow).
ContractionDiagnostics contraction_diagnostics(const VectorField& f, const JacobianField& jac,
                                               const MultipointCondition& cond,
                                               double ball_radius, int samples,
                                               std::uint64_t seed = 0);
ContractionDiagnostics contraction_diagnostics(const RateModel& model,
                                               const MultipointCondition& cond,
                                               double ball_radius, int samples,
                                               std::uint64_t seed = 0);

}  // namespace oncodyn
