#pragma once

// Equilibria of the tumor / host / immune model and their local stability.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oncodyn/integrator.hpp"
#include "oncodyn/numerics.hpp"
#include "oncodyn/tumor_model.hpp"

namespace oncodyn {

enum class EquilibriumKind {
  Death,        // (0, 0, 0)
  TumorOnly,    // (x1, 0, 0)
  Healthy,      // (0, x2, 0)
  TumorImmune,  // (x1, 0, x3)
  TumorHost,    // (x1, x2, 0)
  HostImmune,   // (0, x2, x3)
  Interior,
  Numerical,
};

std::string_view to_string(EquilibriumKind kind);

struct Equilibrium {
  Vec3 point;
  EquilibriumKind kind = EquilibriumKind::Numerical;
  double rhs_norm = 0.0;
};

/// Nonnegative equilibria of the concrete model in closed form: the origin,
/// the two logistic points, tumor-immune points from the quadratic isocline
/// and the tumor-host point of the 2x2 linear isocline system when it is
/// nonsingular with a positive solution.
std::vector<Equilibrium> closed_form_equilibria(const ModelParams& params,
                                                H2Sign h2_sign = H2Sign::GeneralMinus);

/// Zero pattern of `x` (components below `zero_tol` in magnitude count as zero).
EquilibriumKind kind_from_pattern(const Vec3& x, double zero_tol = 1e-8);

/// Newton refinement on the right-hand side. Throws NoConvergence or
/// SingularJacobian; the message carries the guess.
Equilibrium refine_equilibrium(const RateModel& model, const Vec3& guess, double tol = 1e-12,
                               int max_iter = 50);

enum class EigenClass { Stable, Unstable, Marginal };
enum class CriterionVerdict { StableByCriterion, UnstableByCriterion, Inconclusive };

std::string_view to_string(EigenClass c);
std::string_view to_string(CriterionVerdict v);

/// Stable iff every real part < -1e-9, Unstable iff some real part > 1e-9.
EigenClass classify_eigenvalues(const std::array<Complex, 3>& eig, double band = 1e-9);

struct CriterionResult {
  CriterionVerdict verdict = CriterionVerdict::Inconclusive;
  std::string test;    // which sufficient test was applied
  std::string clause;  // which clause fired, or why it was inconclusive
};

// Sufficient conditions from the literature, evaluated verbatim on the
// Jacobian entries m_ij = J(i, j).

/// Diagonal test at the origin: all m_ii < 0 stable, all m_ii > 0 unstable.
CriterionResult diagonal_sign_test(const Mat3& j);

/// Block test with the symmetrized 2x2 block: requires m12^2 <= m11 m22;
/// stable if m33 < 0 and m11 + m22 < 0, unstable if m33 > 0 or
/// m33 (m11 + m22) < 0.
CriterionResult symmetric_block_test(const Mat3& j);

/// Same as symmetric_block_test but with the hypothesis m12 m21 <= m11 m22.
CriterionResult general_block_test(const Mat3& j);

/// Tumor-immune cubic test: trace < 0, m13 m31 m22 > -m12^2 m33 and
/// m11 m33 + m11 m22 + m22 m33 > m12^2 + m13 m31 imply stability.
CriterionResult tumor_immune_cubic_test(const Mat3& j);

/// Test associated with the zero pattern of an equilibrium kind.
CriterionResult sufficient_criterion(const Mat3& j, EquilibriumKind kind);

struct StabilityReport {
  Equilibrium equilibrium;
  Mat3 jacobian;
  std::array<Complex, 3> eigenvalues{};
  EigenClass eig_class = EigenClass::Marginal;
  CriterionResult criterion;
  bool agreement = true;  // true when the criterion is inconclusive or matches
};

StabilityReport classify(const RateModel& model, const Equilibrium& eq);

struct ProbeResult {
  int starts = 0;
  int converged = 0;  // final distance below converge_tol
  int escaped = 0;    // left the escape radius at some accepted step
  double max_final_distance = 0.0;
};

/// Integrates `n` starts drawn uniformly from the ball of `radius` around
/// `point`; components where `point` is zero are reflected to stay >= 0.
ProbeResult simulation_probe(const RateModel& model, const Vec3& point, int n, double radius,
                             double horizon, std::uint64_t seed, double converge_tol = 1e-6,
                             double escape_radius = 1e-2, const IntegratorSettings& settings = {});

}  // namespace oncodyn
