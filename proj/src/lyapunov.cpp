#include "oncodyn/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace oncodyn {

namespace {

// (i, j) position of each unknown in (p11, p12, p13, p22, p23, p33).
constexpr std::array<std::pair<std::size_t, std::size_t>, 6> kSlots{
    {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

Mat3 lyapunov_operator(const Mat3& p, const Mat3& a) { return p * a + a.transpose() * p; }

}  // namespace

SymMat3 solve_lyapunov(const Mat3& a) {
  if (!a.finite()) throw Error(ErrorCode::InvalidArgument, "matrix must be finite");
  const double scale = 1.0 + a.norm_inf();
  const auto eig = eigenvalues_3x3(a);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i; j < 3; ++j) {
      if (std::abs(eig[i] + eig[j]) <= 1e-12 * scale) {
        throw Error(ErrorCode::SingularLyapunov, "eigenvalue pair sums to zero");
      }
    }
  }

  // Column u holds the operator applied to the u-th symmetric basis matrix.
  DenseMatrix m(6);
  for (std::size_t u = 0; u < 6; ++u) {
    std::array<double, 6> e{};
    e[u] = 1.0;
    const Mat3 image = lyapunov_operator(SymMat3::from_entries(e).to_mat(), a);
    for (std::size_t r = 0; r < 6; ++r) m(r, u) = image(kSlots[r].first, kSlots[r].second);
  }
  std::array<double, 6> rhs{};
  for (std::size_t r = 0; r < 6; ++r) rhs[r] = kSlots[r].first == kSlots[r].second ? -1.0 : 0.0;

  std::vector<double> sol;
  try {
    sol = solve_linear(m, rhs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularMatrix) throw;
    throw Error(ErrorCode::SingularLyapunov, "Lyapunov system is singular");
  }
  std::array<double, 6> entries{};
  std::copy(sol.begin(), sol.end(), entries.begin());
  return SymMat3::from_entries(entries);
}

double lyapunov_residual(const SymMat3& p, const Mat3& a) {
  return (lyapunov_operator(p.to_mat(), a) + Mat3::identity()).norm_frobenius();
}

namespace {

void require_zeros(const Mat3& a, std::initializer_list<std::pair<int, int>> cells) {
  for (auto [i, j] : cells) {
    if (a(i - 1, j - 1) != 0.0) {
      throw Error(ErrorCode::PatternMismatch,
                  "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is not zero");
    }
  }
}

// `degree` is the polynomial degree of the denominator in the entries of A.
double divide(double num, double den, double norm, int degree, const char* what) {
  const double scale = std::pow(std::max(norm, 1e-300), degree);
  if (den == 0.0 || std::abs(den) <= 1e-13 * scale) {
    throw Error(ErrorCode::DivisionByZero, std::string("denominator ") + what + " vanishes");
  }
  return num / den;
}

double det4(std::array<std::array<double, 4>, 4> m) {
  double det = 1.0;
  for (std::size_t c = 0; c < 4; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < 4; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (m[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < 4; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return det;
}

SymMat3 closed_form_death(const Mat3& a) {
  require_zeros(a, {{1, 3}, {2, 1}, {2, 3}, {3, 2}});
  const double n = a.norm_inf();
  const double a11 = a(0, 0), a12 = a(0, 1), a22 = a(1, 1), a31 = a(2, 0), a33 = a(2, 2);
  SymMat3 p;
  p.p33 = divide(-1.0, 2.0 * a33, n, 1, "a33");
  p.p13 = divide(a31, 2.0 * (a11 + a33) * a33, n, 2, "(a11 + a33) a33");
  p.p11 = divide(-(0.5 + a31 * p.p13), a11, n, 1, "a11");
  p.p23 = divide(-a12 * p.p13, a22 + a33, n, 1, "a22 + a33");
  p.p12 = divide(-(a12 * p.p11 + a31 * p.p23), a11 + a22, n, 1, "a11 + a22");
  p.p22 = divide(-(-(0.5 + a12 * p.p12)), a22, n, 1, "a22");
  return p;
}

SymMat3 closed_form_tumor_only(const Mat3& a) {
  require_zeros(a, {{1, 3}, {2, 3}, {3, 2}});
  const double n = a.norm_inf();
  const double b11 = a(0, 0), b12 = a(0, 1), b21 = a(1, 0), b22 = a(1, 1), b31 = a(2, 0),
               b33 = a(2, 2);
  const double d = (b11 + b33) * (b22 + b33) - b12 * b21;
  const double D = b11 * b22 * (b11 + b22) - b11 * b12 * b21 - b11 * b22 * b12;
  SymMat3 p;
  p.p33 = divide(-1.0, 2.0 * b33, n, 1, "b33");
  const double d1 = divide(-b21 * b31, 2.0 * b33, n, 1, "b33");
  const double d2 = divide(b31, 2.0 * b33, n, 1, "b33") * (b11 + b33);
  p.p13 = divide(d1, d, n, 2, "d");
  p.p23 = divide(d2, d, n, 2, "d");
  const double q = 0.5 + b31 * p.p13;
  const double D1 = -0.5 * b21 * b21 + b22 * (b11 + b22) * q + q * b12 * b21 +
                    b21 * b22 * b31 * p.p23;
  const double D2 = 0.5 * b11 * b21 + b12 * b22 * q - b11 * b22 * b31 * p.p23;
  const double D3 = b11 * b12 * b31 * p.p23 + 0.5 * b12 * b21 - 0.5 * b11 * (b11 + b22) -
                    b12 * b12 * q;
  p.p11 = divide(D1, D, n, 3, "D");
  p.p12 = divide(D2, D, n, 3, "D");
  p.p22 = divide(D3, D, n, 3, "D");
  return p;
}

SymMat3 closed_form_tumor_immune(const Mat3& a) {
  require_zeros(a, {{2, 3}, {3, 2}});
  const double n = a.norm_inf();
  const double d11 = a(0, 0), d12 = a(0, 1), d13 = a(0, 2), d21 = a(1, 0), d22 = a(1, 1),
               d31 = a(2, 0), d33 = a(2, 2);
  const double d0 = d22 + d11 - divide(d12 * d21, d22, n, 1, "d22");
  const double g2 = divide(d12, 2.0 * d22, n, 1, "d22");
  const double g3 = divide(d13, 2.0 * d33, n, 1, "d33");
  const double s = d22 + d33;
  const double D = det4({{{2 * d11, 2 * d21, 2 * d31, 0},
                          {d21, d0, 0, d31},
                          {0, d13, d12, s},
                          {0, d13, d12, s}}});
  const double D1 = det4({{{-1, 2 * d21, 2 * d31, 0},
                           {g2, d0, 0, d31},
                           {g3, d13, d12, s},
                           {0, d13, d12, s}}});
  const double D2 = det4({{{2 * d11, -1, 2 * d31, 0},
                           {d21, g2, 0, d31},
                           {0, g3, d12, s},
                           {0, 0, d12, s}}});
  const double D3 = det4({{{2 * d11, 2 * d21, -1, 0},
                           {d21, d0, g2, d31},
                           {0, d13, g3, s},
                           {0, d13, 0, s}}});
  const double D4 = det4({{{2 * d11, 2 * d21, 2 * d31, -1},
                           {d21, d0, 0, g2},
                           {0, d13, d12, g3},
                           {0, d13, d12, 0}}});
  SymMat3 p;
  p.p11 = divide(D1, D, n, 4, "D");
  p.p12 = divide(D2, D, n, 4, "D");
  p.p13 = divide(D3, D, n, 4, "D");
  p.p23 = divide(D4, D, n, 4, "D");
  p.p22 = -divide(0.5 + d12 * p.p12, d22, n, 1, "d22");
  p.p33 = -divide(0.5 + d13 * p.p13, d33, n, 1, "d33");
  return p;
}

}  // namespace

SymMat3 closed_form_p(const Mat3& a, ClosedFormPattern pattern) {
  if (!a.finite()) throw Error(ErrorCode::InvalidArgument, "matrix must be finite");
  switch (pattern) {
    case ClosedFormPattern::Death: return closed_form_death(a);
    case ClosedFormPattern::TumorOnly: return closed_form_tumor_only(a);
    case ClosedFormPattern::TumorImmune: return closed_form_tumor_immune(a);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown pattern");
}

Definiteness positive_definite(const SymMat3& p) {
  Definiteness d;
  const double m2 = p.p11 * p.p22 - p.p12 * p.p12;
  d.pd_sylvester = p.p11 > 0.0 && m2 > 0.0 && p.to_mat().det() > 0.0;
  d.pd_completed_square = p.p11 > 0.0 && p.p22 > 0.0 && p.p33 > 0.0 &&
                          4.0 * p.p12 * p.p12 <= p.p11 * p.p22 &&
                          4.0 * p.p13 * p.p13 <= p.p11 * p.p33 &&
                          4.0 * p.p23 * p.p23 <= p.p22 * p.p33;
  d.lambda_min = symmetric_eigenvalues(p)[0];
  return d;
}

LyapunovCertificate make_certificate(const Equilibrium& eq, const Mat3& a) {
  LyapunovCertificate c;
  c.equilibrium = eq;
  c.a = a;
  c.p = solve_lyapunov(a);
  c.residual = lyapunov_residual(c.p, a);
  const Definiteness d = positive_definite(c.p);
  c.lambda_min = d.lambda_min;
  c.pd_sylvester = d.pd_sylvester;
  c.pd_completed_square = d.pd_completed_square;
  return c;
}

LyapunovCertificate make_certificate(const RateModel& model, const Equilibrium& eq) {
  return make_certificate(eq, jacobian(model, eq.point));
}

double v_value(const LyapunovCertificate& cert, const Vec3& x) {
  return cert.p.quadratic_form(x - cert.center());
}

double v_dot(const VectorField& f, const LyapunovCertificate& cert, const Vec3& x) {
  const Vec3 dx = x - cert.center();
  return 2.0 * dot(cert.p.to_mat() * dx, f(x));
}

double v_dot(const RateModel& model, const LyapunovCertificate& cert, const Vec3& x) {
  return v_dot(as_vector_field(model), cert, x);
}

DecreaseReport decrease_region_check(const VectorField& f, const LyapunovCertificate& cert,
                                     const Box3& region, int grid_n) {
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be >= 2");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(region.lo[i] <= region.hi[i])) {
      throw Error(ErrorCode::InvalidArgument, "region lower corner exceeds upper corner");
    }
  }
  const Mat3 pm = cert.p.to_mat();
  DecreaseReport rep;
  rep.worst_value = -std::numeric_limits<double>::infinity();
  auto coord = [&](std::size_t axis, int i) {
    if (i == grid_n - 1) return region.hi[axis];
    return region.lo[axis] + (region.hi[axis] - region.lo[axis]) * i / (grid_n - 1);
  };
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      for (int k = 0; k < grid_n; ++k) {
        const Vec3 x{coord(0, i), coord(1, j), coord(2, k)};
        const Vec3 fx = f(x);
        const Vec3 w = pm * (x - cert.center());
        const double vd = 2.0 * dot(w, fx);
        ++rep.points;
        if (vd > rep.worst_value) {
          rep.worst_value = vd;
          rep.worst_point = x;
        }
        if (vd > 0.0) rep.all_nonincreasing = false;
        const bool sufficient = w[0] >= 0 && w[1] >= 0 && w[2] >= 0 && fx[0] <= 0 &&
                                fx[1] <= 0 && fx[2] <= 0;
        if (sufficient) {
          ++rep.sufficient_points;
          if (vd > 0.0) rep.sufficient_violations.push_back(x);
        }
      }
    }
  }
  return rep;
}

DecreaseReport decrease_region_check(const RateModel& model, const LyapunovCertificate& cert,
                                     const Box3& region, int grid_n) {
  return decrease_region_check(as_vector_field(model), cert, region, grid_n);
}

}  // namespace oncodyn
