#pragma once

// Three-population tumor / host / immune model
//
//   x1' = B1(x1)     - D1(x1, x2) - h1(x1, x3)
//   x2' = B2(x2)     - D2(x2)     - h2(x1, x2)
//   x3' = B3(x1, x3) - D3(x3)     - h3(x1, x3)
//
// with x1 tumor, x2 healthy host and x3 effector immune densities. Each rate
// term carries its analytic partial derivatives so that the Jacobian is exact.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "oncodyn/integrator.hpp"
#include "oncodyn/numerics.hpp"

namespace oncodyn {

/// Rate term of one variable with its derivative.
struct UnaryRate {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

/// Rate term of two variables (u, w) with both partial derivatives.
struct BinaryRate {
  std::function<double(double, double)> value;
  std::function<double(double, double)> d_first;
  std::function<double(double, double)> d_second;
};

/// General rate-function model. Argument order of the binary terms:
/// D1(x1, x2), h1(x1, x3), h2(x1, x2), B3(x1, x3), h3(x1, x3).
struct RateModel {
  UnaryRate B1, B2, D2, D3;
  BinaryRate D1, h1, h2, B3, h3;
};

/// Sign convention for the tumor-on-host term in the concrete model. The
/// general model subtracts h2; PrintedPlus reproduces the printed "+a21 x1 x2".
enum class H2Sign { GeneralMinus, PrintedPlus };

struct ModelParams {
  double r1 = 1.5, r2 = 1.0, r3 = 4.5;
  double k1 = 1.0, k2 = 1.0, k3 = 1.0;
  double a12 = 1.0, a13 = 2.5, a21 = 1.5, a31 = 0.2;
  double d3 = 0.5;

  /// Throws InvalidArgument unless every parameter is finite and > 0.
  void validate() const;
  /// Non-fatal findings, e.g. r1 <= r2.
  [[nodiscard]] std::vector<std::string> warnings() const;
};

/// Logistic / mass-action / saturating instance of the general model.
RateModel concrete_model(const ModelParams& params, H2Sign h2_sign = H2Sign::GeneralMinus);

/// Right-hand side; throws NonFiniteDerivative on NaN/Inf.
Vec3 eval_rhs(const RateModel& model, const Vec3& x);

/// Exact Jacobian. Entries (2,3) and (3,2) are structurally zero.
Mat3 jacobian(const RateModel& model, const Vec3& x);

/// Trace of the Jacobian.
double divergence(const RateModel& model, const Vec3& x);

VectorField as_vector_field(const RateModel& model);

struct DerivativeMismatch {
  std::string term;
  Vec3 point;
  double analytic;
  double numeric;
};

/// Compares each derivative callback against central differences (step
/// 1e-6 scaled). Returns every mismatch above `rel_tol` relative error.
std::vector<DerivativeMismatch> validate_rate_model(const RateModel& model,
                                                   const std::vector<Vec3>& points,
                                                   double rel_tol = 1e-6);

/// Upper corner of the box O_K = [0,K1] x [0,K2] x [0,K3].
struct InvariantBox {
  double K1 = 1.0, K2 = 1.0, K3 = 1.0;
  void validate() const;
};

struct StructuralItem {
  std::string description;
  bool passed = true;
  bool evaluated = false;  // false when no lattice point lies in the item's domain
  double worst_violation = 0.0;
  Vec3 witness;
};

struct StructuralClause {
  int number = 0;
  std::string summary;
  bool passed = true;
  double worst_violation = 0.0;
  Vec3 witness;
  std::vector<StructuralItem> items;
};

/// Sampled check of the structural hypotheses on the model over O_K. Clauses
/// are grouped by content: (1) growth/death of x1, x2; (2) h1, h3; (3) h2;
/// (4) immune stimulation B3; (5) immune death D3; (6) box boundary and
/// dissipativity, including negative divergence on the lattice.
struct StructuralReport {
  std::array<StructuralClause, 6> clauses;
  double divergence_max = 0.0;
  Vec3 divergence_argmax;
  int grid_n = 0;
  InvariantBox box;

  [[nodiscard]] bool all_passed() const;
};

StructuralReport verify_structural(const RateModel& model, const InvariantBox& box, int grid_n);

/// Integrates every start to `horizon` and returns the smallest component
/// seen at accepted steps and at step midpoints of the dense output.
double positivity_trajectory_check(const RateModel& model, const std::vector<Vec3>& starts,
                                   double horizon, const IntegratorSettings& settings = {});

}  // namespace oncodyn
