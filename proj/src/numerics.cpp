#include "oncodyn/numerics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

namespace oncodyn {

Vec3 Vec3::checked(double a, double b, double c) {
  Vec3 out(a, b, c);
  if (!out.finite()) {
    throw Error(ErrorCode::InvalidArgument, "vector component is not finite");
  }
  return out;
}

double Vec3::norm_inf() const {
  return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
}

double Vec3::norm2() const { return std::sqrt(dot(*this, *this)); }

double Vec3::min_component() const { return std::min({v[0], v[1], v[2]}); }

Vec3& Vec3::operator+=(const Vec3& o) {
  for (std::size_t i = 0; i < 3; ++i) v[i] += o.v[i];
  return *this;
}

Vec3& Vec3::operator-=(const Vec3& o) {
  for (std::size_t i = 0; i < 3; ++i) v[i] -= o.v[i];
  return *this;
}

Vec3& Vec3::operator*=(double s) {
  for (auto& c : v) c *= s;
  return *this;
}

Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
Vec3 operator*(double s, Vec3 a) { return a *= s; }
Vec3 operator*(Vec3 a, double s) { return a *= s; }

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

Vec3 hadamard(const Vec3& a, const Vec3& b) {
  return {a[0] * b[0], a[1] * b[1], a[2] * b[2]};
}

// ---------------------------------------------------------------------------
// Mat3

Mat3 Mat3::identity() { return diag(1.0, 1.0, 1.0); }

Mat3 Mat3::diag(double d0, double d1, double d2) {
  Mat3 m;
  m(0, 0) = d0;
  m(1, 1) = d1;
  m(2, 2) = d2;
  return m;
}

Mat3 Mat3::from_rows(const std::array<std::array<double, 3>, 3>& rows) {
  Mat3 m;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = rows[i][j];
  return m;
}

Mat3 Mat3::transpose() const {
  Mat3 t;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Mat3::trace() const { return a[0] + a[4] + a[8]; }

double Mat3::det() const {
  const auto& m = *this;
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

double Mat3::norm_inf() const {
  double best = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 3; ++j) row += std::abs((*this)(i, j));
    best = std::max(best, row);
  }
  return best;
}

double Mat3::norm_frobenius() const {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

bool Mat3::finite() const {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

Mat3 operator*(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += x(i, k) * y(k, j);
      r(i, j) = s;
    }
  return r;
}

Mat3 operator+(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.a[i] = x.a[i] + y.a[i];
  return r;
}

Mat3 operator-(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.a[i] = x.a[i] - y.a[i];
  return r;
}

Mat3 operator*(double s, const Mat3& x) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.a[i] = s * x.a[i];
  return r;
}

Vec3 operator*(const Mat3& m, const Vec3& x) {
  return {m(0, 0) * x[0] + m(0, 1) * x[1] + m(0, 2) * x[2],
          m(1, 0) * x[0] + m(1, 1) * x[1] + m(1, 2) * x[2],
          m(2, 0) * x[0] + m(2, 1) * x[1] + m(2, 2) * x[2]};
}

// ---------------------------------------------------------------------------
// SymMat3

double SymMat3::operator()(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (i == 0) return j == 0 ? p11 : (j == 1 ? p12 : p13);
  if (i == 1) return j == 1 ? p22 : p23;
  return p33;
}

Mat3 SymMat3::to_mat() const {
  return Mat3::from_rows({{{p11, p12, p13}, {p12, p22, p23}, {p13, p23, p33}}});
}

std::array<double, 6> SymMat3::entries() const { return {p11, p12, p13, p22, p23, p33}; }

SymMat3 SymMat3::from_entries(const std::array<double, 6>& e) {
  return {e[0], e[1], e[2], e[3], e[4], e[5]};
}

double SymMat3::quadratic_form(const Vec3& x) const {
  return p11 * x[0] * x[0] + p22 * x[1] * x[1] + p33 * x[2] * x[2] +
         2.0 * (p12 * x[0] * x[1] + p13 * x[0] * x[2] + p23 * x[1] * x[2]);
}

// ---------------------------------------------------------------------------
// Eigenvalues

Complex CharPoly::operator()(Complex z) const { return ((z + c2) * z + c1) * z + c0; }

Complex CharPoly::derivative(Complex z) const { return (3.0 * z + 2.0 * c2) * z + c1; }

CharPoly characteristic_polynomial(const Mat3& m) {
  const double minors = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) +
                        (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) +
                        (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1));
  return {-m.trace(), minors, -m.det()};
}

namespace {

void sort_roots(std::array<Complex, 3>& r) {
  std::sort(r.begin(), r.end(), [](const Complex& x, const Complex& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
}

// Eigenvalues of [[a, b], [c, d]].
std::array<Complex, 2> eigenvalues_2x2(double a, double b, double c, double d) {
  const double mean = 0.5 * (a + d);
  const double half_diff = 0.5 * (a - d);
  const double disc = half_diff * half_diff + b * c;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    const double big = mean + std::copysign(s, mean);
    const double det = a * d - b * c;
    const double small = big != 0.0 ? det / big : mean - std::copysign(s, mean);
    return {Complex(big, 0.0), Complex(small, 0.0)};
  }
  const double s = std::sqrt(-disc);
  return {Complex(mean, s), Complex(mean, -s)};
}

std::array<Complex, 3> cardano(const CharPoly& cp) {
  const double c2 = cp.c2, c1 = cp.c1, c0 = cp.c0;
  const double shift = c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double half_q = 0.5 * q;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  std::array<Complex, 3> y;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double big = -std::copysign(std::cbrt(std::abs(half_q) + sq), q);
    const double other = big != 0.0 ? -third_p / big : 0.0;
    const double re = -0.5 * (big + other);
    const double im = 0.5 * std::sqrt(3.0) * (big - other);
    y = {Complex(big + other, 0.0), Complex(re, im), Complex(re, -im)};
  } else if (p == 0.0) {
    y = {Complex(0.0), Complex(0.0), Complex(0.0)};
  } else {
    const double r = std::sqrt(-third_p);
    const double cos_theta = std::clamp(-half_q / (r * r * r), -1.0, 1.0);
    const double theta = std::acos(cos_theta);
    for (int k = 0; k < 3; ++k) {
      y[static_cast<std::size_t>(k)] =
          Complex(2.0 * r * std::cos((theta + 2.0 * std::numbers::pi * k) / 3.0), 0.0);
    }
  }
  for (auto& z : y) z -= shift;

  // One polish step per root, kept only if it lowers the residual.
  for (auto& z : y) {
    const Complex dp = cp.derivative(z);
    if (std::abs(dp) == 0.0) continue;
    Complex candidate = z - cp(z) / dp;
    if (z.imag() == 0.0) candidate = Complex(candidate.real(), 0.0);
    if (std::abs(cp(candidate)) < std::abs(cp(z))) z = candidate;
  }
  // Complex roots of a real polynomial come in conjugate pairs.
  if (y[1].imag() != 0.0) {
    const Complex mid = 0.5 * (y[1] + std::conj(y[2]));
    y[1] = mid;
    y[2] = std::conj(mid);
  }
  return y;
}

}  // namespace

std::array<Complex, 3> eigenvalues_3x3(const Mat3& m) {
  if (!m.finite()) throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");

  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t j = (i + 1) % 3;
    const std::size_t k = (i + 2) % 3;
    const bool row_free = m(i, j) == 0.0 && m(i, k) == 0.0;
    const bool col_free = m(j, i) == 0.0 && m(k, i) == 0.0;
    if (row_free || col_free) {
      const auto sub = eigenvalues_2x2(m(j, j), m(j, k), m(k, j), m(k, k));
      std::array<Complex, 3> r{Complex(m(i, i), 0.0), sub[0], sub[1]};
      sort_roots(r);
      return r;
    }
  }
  auto r = cardano(characteristic_polynomial(m));
  sort_roots(r);
  return r;
}

std::array<double, 3> symmetric_eigenvalues(const SymMat3& s) {
  // Trigonometric solution for real symmetric 3x3 matrices.
  const double off = s.p12 * s.p12 + s.p13 * s.p13 + s.p23 * s.p23;
  std::array<double, 3> ev;
  if (off == 0.0) {
    ev = {s.p11, s.p22, s.p33};
  } else {
    const double q = (s.p11 + s.p22 + s.p33) / 3.0;
    const double b11 = s.p11 - q, b22 = s.p22 - q, b33 = s.p33 - q;
    const double p2 = b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * off;
    const double p = std::sqrt(p2 / 6.0);
    const SymMat3 b{b11 / p, s.p12 / p, s.p13 / p, b22 / p, s.p23 / p, b33 / p};
    const double r = std::clamp(0.5 * b.to_mat().det(), -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    ev = {e1, 3.0 * q - e1 - e3, e3};
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

// ---------------------------------------------------------------------------
// Linear systems

DenseMatrix DenseMatrix::identity(std::size_t size) {
  DenseMatrix m(size);
  for (std::size_t i = 0; i < size; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> DenseMatrix::apply(std::span<const double> x) const {
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += (*this)(i, j) * x[j];
  return y;
}

std::vector<double> solve_linear(const DenseMatrix& m, std::span<const double> rhs) {
  const std::size_t n = m.n;
  if (n == 0 || n > kMaxDenseSize || rhs.size() != n || m.a.size() != n * n) {
    throw Error(ErrorCode::InvalidArgument,
                "solve_linear expects a square system of size 1..6");
  }
  double scale = 0.0;
  for (double v : m.a) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite matrix entry");
    scale = std::max(scale, std::abs(v));
  }
  const double threshold = 1e-13 * scale;

  DenseMatrix a = m;
  std::vector<double> b(rhs.begin(), rhs.end());
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (scale == 0.0 || std::abs(a(pivot, col)) < threshold) {
      throw Error(ErrorCode::SingularMatrix, "pivot below threshold in column " + std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      if (factor == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= factor * a(col, j);
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
    x[ii] = s / a(ii, ii);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Newton

namespace {
double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
}  // namespace

NewtonResult newton_solve(const VectorFunction& f, const MatrixFunction& jac,
                          std::vector<double> guess, double tol, int max_iter) {
  if (!(tol > 0.0) || max_iter < 0) {
    throw Error(ErrorCode::InvalidArgument, "newton_solve needs tol > 0 and max_iter >= 0");
  }
  NewtonResult out;
  out.x = std::move(guess);
  std::vector<double> fx = f(out.x);
  out.residual = inf_norm(fx);
  while (!(out.residual < tol)) {
    if (!std::isfinite(out.residual)) {
      throw Error(ErrorCode::NoConvergence, "residual became non-finite");
    }
    if (out.iterations >= max_iter) {
      throw Error(ErrorCode::NoConvergence,
                  "residual " + std::to_string(out.residual) + " after " +
                      std::to_string(out.iterations) + " iterations");
    }
    for (double& v : fx) v = -v;
    std::vector<double> step;
    try {
      step = solve_linear(jac(out.x), fx);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularMatrix) {
        throw Error(ErrorCode::SingularJacobian, e.what());
      }
      throw;
    }
    for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] += step[i];
    ++out.iterations;
    fx = f(out.x);
    out.residual = inf_norm(fx);
  }
  return out;
}

std::vector<double> quadratic_roots(double a, double b, double c) {
  if (a == 0.0 && b == 0.0 && c == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "all quadratic coefficients are zero");
  }
  if (a == 0.0) {
    if (b == 0.0) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1, r2;
  if (q == 0.0) {
    r1 = r2 = 0.0;
  } else {
    r1 = q / a;
    r2 = c / q;
  }
  if (r1 > r2) std::swap(r1, r2);
  return {r1, r2};
}

}  // namespace oncodyn
