#pragma once

// Quadratic Lyapunov certificates V(x) = (x - xbar)^T P (x - xbar) with
// P A + A^T P = -I for the Jacobian A at an equilibrium xbar.

#include <vector>

#include "oncodyn/equilibrium.hpp"
#include "oncodyn/integrator.hpp"
#include "oncodyn/numerics.hpp"
#include "oncodyn/tumor_model.hpp"

namespace oncodyn {

/// Solves the 6x6 linear system for the entries of P. Throws
/// SingularLyapunov when lambda_i + lambda_j vanishes for an eigenvalue pair
/// of A or the system is numerically singular.
SymMat3 solve_lyapunov(const Mat3& a);

/// Frobenius norm of P A + A^T P + I.
double lyapunov_residual(const SymMat3& p, const Mat3& a);

/// Zero patterns for which the literature prints closed-form solutions.
enum class ClosedFormPattern {
  Death,        // zeros at (1,3), (2,1), (2,3), (3,2)
  TumorOnly,    // zeros at (1,3), (2,3), (3,2)
  TumorImmune,  // zeros at (2,3), (3,2)
};

/// Evaluates the printed closed-form entries verbatim, typos included.
/// Throws PatternMismatch when A does not have the structural zeros and
/// DivisionByZero when a printed denominator vanishes.
SymMat3 closed_form_p(const Mat3& a, ClosedFormPattern pattern);

struct Definiteness {
  bool pd_sylvester = false;
  /// p_ii > 0, 4 p12^2 <= p11 p22, 4 p13^2 <= p11 p33, 4 p23^2 <= p22 p33.
  bool pd_completed_square = false;
  double lambda_min = 0.0;
};

Definiteness positive_definite(const SymMat3& p);

struct LyapunovCertificate {
  Equilibrium equilibrium;
  Mat3 a;
  SymMat3 p;
  double residual = 0.0;
  double lambda_min = 0.0;
  bool pd_sylvester = false;
  bool pd_completed_square = false;

  [[nodiscard]] const Vec3& center() const { return equilibrium.point; }
};

/// Certificate from a given linearization.
LyapunovCertificate make_certificate(const Equilibrium& eq, const Mat3& a);
/// Certificate from the model Jacobian at the equilibrium.
LyapunovCertificate make_certificate(const RateModel& model, const Equilibrium& eq);

double v_value(const LyapunovCertificate& cert, const Vec3& x);

/// 2 (x - xbar)^T P f(x) with the full nonlinear field.
double v_dot(const VectorField& f, const LyapunovCertificate& cert, const Vec3& x);
double v_dot(const RateModel& model, const LyapunovCertificate& cert, const Vec3& x);

struct Box3 {
  Vec3 lo;
  Vec3 hi;
};

struct DecreaseReport {
  bool all_nonincreasing = true;
  Vec3 worst_point;
  double worst_value = 0.0;  // largest sampled v_dot
  int points = 0;
  /// Lattice points where the sign-based sufficient conditions hold:
  /// (P (x - xbar))_i >= 0 and f_i(x) <= 0 for every i.
  int sufficient_points = 0;
  /// Points among those where v_dot is nevertheless positive; must be empty.
  std::vector<Vec3> sufficient_violations;
};

DecreaseReport decrease_region_check(const VectorField& f, const LyapunovCertificate& cert,
                                     const Box3& region, int grid_n);
DecreaseReport decrease_region_check(const RateModel& model, const LyapunovCertificate& cert,
                                     const Box3& region, int grid_n);

}  // namespace oncodyn
