#include "oncodyn/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "oncodyn/sampling.hpp"

namespace oncodyn {

std::string_view to_string(EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::Death: return "Death";
    case EquilibriumKind::TumorOnly: return "TumorOnly";
    case EquilibriumKind::Healthy: return "Healthy";
    case EquilibriumKind::TumorImmune: return "TumorImmune";
    case EquilibriumKind::TumorHost: return "TumorHost";
    case EquilibriumKind::HostImmune: return "HostImmune";
    case EquilibriumKind::Interior: return "Interior";
    case EquilibriumKind::Numerical: return "Numerical";
  }
  return "Unknown";
}

std::string_view to_string(EigenClass c) {
  switch (c) {
    case EigenClass::Stable: return "Stable";
    case EigenClass::Unstable: return "Unstable";
    case EigenClass::Marginal: return "Marginal";
  }
  return "Unknown";
}

std::string_view to_string(CriterionVerdict v) {
  switch (v) {
    case CriterionVerdict::StableByCriterion: return "StableByCriterion";
    case CriterionVerdict::UnstableByCriterion: return "UnstableByCriterion";
    case CriterionVerdict::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

namespace {

Equilibrium make_equilibrium(const RateModel& model, const Vec3& x, EquilibriumKind kind) {
  return {x, kind, eval_rhs(model, x).norm_inf()};
}

}  // namespace

std::vector<Equilibrium> closed_form_equilibria(const ModelParams& p, H2Sign h2_sign) {
  const RateModel model = concrete_model(p, h2_sign);
  std::vector<Equilibrium> out;
  out.push_back(make_equilibrium(model, {0.0, 0.0, 0.0}, EquilibriumKind::Death));
  out.push_back(make_equilibrium(model, {p.k1, 0.0, 0.0}, EquilibriumKind::TumorOnly));
  out.push_back(make_equilibrium(model, {0.0, p.k2, 0.0}, EquilibriumKind::Healthy));

  // x3 > 0 requires r3 x1 / (x1 + k3) = d3 + a31 x1.
  for (double x1 : quadratic_roots(p.a31, p.a31 * p.k3 + p.d3 - p.r3, p.d3 * p.k3)) {
    if (!(x1 > 0.0)) continue;
    const double x3 = p.r1 * (1.0 - x1 / p.k1) / p.a13;
    if (!(x3 > 0.0)) continue;
    out.push_back(make_equilibrium(model, {x1, 0.0, x3}, EquilibriumKind::TumorImmune));
  }

  // x3 = 0, x1, x2 > 0:  (r1/k1) x1 + a12 x2 = r1,  s a21 x1 + (r2/k2) x2 = r2
  // with s = +1 when h2 is subtracted.
  const double s = h2_sign == H2Sign::GeneralMinus ? 1.0 : -1.0;
  const double m11 = p.r1 / p.k1, m12 = p.a12, m21 = s * p.a21, m22 = p.r2 / p.k2;
  const double det = m11 * m22 - m12 * m21;
  const double scale = std::max(std::abs(m11 * m22), std::abs(m12 * m21));
  if (std::abs(det) > 1e-12 * scale) {
    const double x1 = (p.r1 * m22 - m12 * p.r2) / det;
    const double x2 = (m11 * p.r2 - m21 * p.r1) / det;
    if (x1 > 0.0 && x2 > 0.0) {
      out.push_back(make_equilibrium(model, {x1, x2, 0.0}, EquilibriumKind::TumorHost));
    }
  }
  // With x1 = 0 the immune equation reduces to -d3 x3, so no HostImmune point
  // exists for this model.
  return out;
}

EquilibriumKind kind_from_pattern(const Vec3& x, double zero_tol) {
  if (x.min_component() < -zero_tol) return EquilibriumKind::Numerical;
  const bool z1 = std::abs(x[0]) <= zero_tol;
  const bool z2 = std::abs(x[1]) <= zero_tol;
  const bool z3 = std::abs(x[2]) <= zero_tol;
  if (z1 && z2 && z3) return EquilibriumKind::Death;
  if (!z1 && z2 && z3) return EquilibriumKind::TumorOnly;
  if (z1 && !z2 && z3) return EquilibriumKind::Healthy;
  if (!z1 && z2 && !z3) return EquilibriumKind::TumorImmune;
  if (!z1 && !z2 && z3) return EquilibriumKind::TumorHost;
  if (z1 && !z2 && !z3) return EquilibriumKind::HostImmune;
  if (!z1 && !z2 && !z3) return EquilibriumKind::Interior;
  return EquilibriumKind::Numerical;
}

Equilibrium refine_equilibrium(const RateModel& model, const Vec3& guess, double tol,
                               int max_iter) {
  if (!guess.finite()) throw Error(ErrorCode::InvalidArgument, "guess must be finite");
  auto as_vec = [](std::span<const double> x) { return Vec3{x[0], x[1], x[2]}; };
  const VectorFunction f = [&](std::span<const double> x) {
    const Vec3 r = eval_rhs(model, as_vec(x));
    return std::vector<double>{r[0], r[1], r[2]};
  };
  const MatrixFunction jac = [&](std::span<const double> x) {
    const Mat3 j = jacobian(model, as_vec(x));
    DenseMatrix m(3);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) m(r, c) = j(r, c);
    return m;
  };
  NewtonResult res;
  try {
    res = newton_solve(f, jac, {guess[0], guess[1], guess[2]}, tol, max_iter);
  } catch (const Error& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " (guess %.17g, %.17g, %.17g)", guess[0], guess[1], guess[2]);
    throw Error(e.code(), e.what() + std::string(buf));
  }
  const Vec3 x = as_vec(res.x);
  return make_equilibrium(model, x, kind_from_pattern(x));
}

EigenClass classify_eigenvalues(const std::array<Complex, 3>& eig, double band) {
  bool all_negative = true;
  for (const Complex& l : eig) {
    if (l.real() > band) return EigenClass::Unstable;
    if (!(l.real() < -band)) all_negative = false;
  }
  return all_negative ? EigenClass::Stable : EigenClass::Marginal;
}

CriterionResult diagonal_sign_test(const Mat3& j) {
  CriterionResult r{CriterionVerdict::Inconclusive, "diagonal_sign", ""};
  const double a = j(0, 0), b = j(1, 1), c = j(2, 2);
  if (a < 0 && b < 0 && c < 0) {
    r.verdict = CriterionVerdict::StableByCriterion;
    r.clause = "all diagonal entries negative";
  } else if (a > 0 && b > 0 && c > 0) {
    r.verdict = CriterionVerdict::UnstableByCriterion;
    r.clause = "all diagonal entries positive";
  } else {
    r.clause = "diagonal entries of mixed sign";
  }
  return r;
}

namespace {

CriterionResult block_test(const Mat3& j, bool symmetrized) {
  CriterionResult r{CriterionVerdict::Inconclusive,
                    symmetrized ? "symmetric_block" : "general_block", ""};
  const double m11 = j(0, 0), m12 = j(0, 1), m21 = j(1, 0), m22 = j(1, 1), m33 = j(2, 2);
  const double coupling = symmetrized ? m12 * m12 : m12 * m21;
  if (!(coupling <= m11 * m22)) {
    r.clause = symmetrized ? "hypothesis m12^2 <= m11 m22 fails"
                           : "hypothesis m12 m21 <= m11 m22 fails";
    return r;
  }
  const double s = m11 + m22;
  if (m33 < 0 && s < 0) {
    r.verdict = CriterionVerdict::StableByCriterion;
    r.clause = "m33 < 0 and m11 + m22 < 0";
  } else if (m33 > 0) {
    r.verdict = CriterionVerdict::UnstableByCriterion;
    r.clause = "m33 > 0";
  } else if (m33 * s < 0) {
    r.verdict = CriterionVerdict::UnstableByCriterion;
    r.clause = "m33 (m11 + m22) < 0";
  } else {
    r.clause = "no clause applies";
  }
  return r;
}

}  // namespace

CriterionResult symmetric_block_test(const Mat3& j) { return block_test(j, true); }

CriterionResult general_block_test(const Mat3& j) { return block_test(j, false); }

CriterionResult tumor_immune_cubic_test(const Mat3& j) {
  CriterionResult r{CriterionVerdict::Inconclusive, "tumor_immune_cubic", ""};
  const double d11 = j(0, 0), d12 = j(0, 1), d13 = j(0, 2), d22 = j(1, 1), d31 = j(2, 0),
               d33 = j(2, 2);
  const bool trace_neg = d11 + d22 + d33 < 0;
  const bool product = d13 * d31 * d22 > -d12 * d12 * d33;
  const bool pairwise = d11 * d33 + d11 * d22 + d22 * d33 > d12 * d12 + d13 * d31;
  if (trace_neg && product && pairwise) {
    r.verdict = CriterionVerdict::StableByCriterion;
    r.clause = "trace, product and pairwise-product inequalities hold";
  } else {
    r.clause = !trace_neg ? "trace not negative"
               : !product ? "product inequality fails"
                          : "pairwise-product inequality fails";
  }
  return r;
}

CriterionResult sufficient_criterion(const Mat3& j, EquilibriumKind kind) {
  switch (kind) {
    case EquilibriumKind::Death: return diagonal_sign_test(j);
    case EquilibriumKind::TumorOnly:
    case EquilibriumKind::Healthy:
    case EquilibriumKind::TumorHost: return symmetric_block_test(j);
    case EquilibriumKind::TumorImmune: return tumor_immune_cubic_test(j);
    case EquilibriumKind::HostImmune: return general_block_test(j);
    case EquilibriumKind::Interior:
    case EquilibriumKind::Numerical: break;
  }
  return {CriterionVerdict::Inconclusive, "none", "no sufficient test for this zero pattern"};
}

StabilityReport classify(const RateModel& model, const Equilibrium& eq) {
  StabilityReport r;
  r.equilibrium = eq;
  r.jacobian = jacobian(model, eq.point);
  r.eigenvalues = eigenvalues_3x3(r.jacobian);
  r.eig_class = classify_eigenvalues(r.eigenvalues);
  r.criterion = sufficient_criterion(r.jacobian, eq.kind);
  switch (r.criterion.verdict) {
    case CriterionVerdict::Inconclusive: r.agreement = true; break;
    case CriterionVerdict::StableByCriterion: r.agreement = r.eig_class == EigenClass::Stable; break;
    case CriterionVerdict::UnstableByCriterion:
      r.agreement = r.eig_class == EigenClass::Unstable;
      break;
  }
  return r;
}

ProbeResult simulation_probe(const RateModel& model, const Vec3& point, int n, double radius,
                             double horizon, std::uint64_t seed, double converge_tol,
                             double escape_radius, const IntegratorSettings& settings) {
  if (n <= 0 || !(radius > 0.0) || !(horizon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "probe needs n > 0, radius > 0 and horizon > 0");
  }
  Rng rng(substream_seed(seed, "stability-probes"));
  const VectorField f = as_vector_field(model);
  ProbeResult out;
  out.starts = n;
  for (int i = 0; i < n; ++i) {
    const std::array<double, 3> u{rng.uniform(), rng.uniform(), rng.uniform()};
    Vec3 d = radius * ball_point(u);
    for (std::size_t c = 0; c < 3; ++c) {
      if (point[c] == 0.0) d[c] = std::abs(d[c]);
    }
    const Trajectory traj = integrate(f, point + d, 0.0, horizon, settings);
    bool escaped = false;
    for (const auto& s : traj.samples()) {
      if ((s.x - point).norm2() > escape_radius) escaped = true;
    }
    const double final_distance = (traj.final_state() - point).norm2();
    out.max_final_distance = std::max(out.max_final_distance, final_distance);
    if (escaped) ++out.escaped;
    if (final_distance < converge_tol) ++out.converged;
  }
  return out;
}

}  // namespace oncodyn
