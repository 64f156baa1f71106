#pragma once

// Small dense kernels used throughout the library: fixed-size 3-vectors and
// 3x3 matrices, closed-form eigenvalues, pivoted Gaussian elimination for
// systems up to 6x6, Newton iteration and stable quadratic roots.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "oncodyn/errors.hpp"

namespace oncodyn {

struct Vec3 {
  std::array<double, 3> v{0.0, 0.0, 0.0};

  constexpr Vec3() = default;
  constexpr Vec3(double a, double b, double c) : v{a, b, c} {}

  /// Builds a vector from user data; throws InvalidArgument on NaN/Inf.
  static Vec3 checked(double a, double b, double c);

  constexpr double& operator[](std::size_t i) { return v[i]; }
  constexpr double operator[](std::size_t i) const { return v[i]; }

  [[nodiscard]] bool finite() const {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
  }
  [[nodiscard]] double norm_inf() const;
  [[nodiscard]] double norm2() const;
  [[nodiscard]] double min_component() const;

  Vec3& operator+=(const Vec3& o);
  Vec3& operator-=(const Vec3& o);
  Vec3& operator*=(double s);

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

Vec3 operator+(Vec3 a, const Vec3& b);
Vec3 operator-(Vec3 a, const Vec3& b);
Vec3 operator*(double s, Vec3 a);
Vec3 operator*(Vec3 a, double s);
double dot(const Vec3& a, const Vec3& b);
/// Componentwise product.
Vec3 hadamard(const Vec3& a, const Vec3& b);

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> a{};

  static Mat3 identity();
  static Mat3 diag(double d0, double d1, double d2);
  static Mat3 from_rows(const std::array<std::array<double, 3>, 3>& rows);

  constexpr double& operator()(std::size_t i, std::size_t j) { return a[3 * i + j]; }
  constexpr double operator()(std::size_t i, std::size_t j) const { return a[3 * i + j]; }

  [[nodiscard]] Mat3 transpose() const;
  [[nodiscard]] double trace() const;
  [[nodiscard]] double det() const;
  [[nodiscard]] double norm_inf() const;
  [[nodiscard]] double norm_frobenius() const;
  [[nodiscard]] bool finite() const;

  friend bool operator==(const Mat3&, const Mat3&) = default;
};

Mat3 operator*(const Mat3& x, const Mat3& y);
Mat3 operator+(const Mat3& x, const Mat3& y);
Mat3 operator-(const Mat3& x, const Mat3& y);
Mat3 operator*(double s, const Mat3& x);
Vec3 operator*(const Mat3& m, const Vec3& x);

/// Symmetric 3x3 matrix stored as its six independent entries.
struct SymMat3 {
  double p11 = 0, p12 = 0, p13 = 0, p22 = 0, p23 = 0, p33 = 0;

  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const;
  [[nodiscard]] Mat3 to_mat() const;
  /// Entries in the order (p11, p12, p13, p22, p23, p33).
  [[nodiscard]] std::array<double, 6> entries() const;
  static SymMat3 from_entries(const std::array<double, 6>& e);
  /// x^T P x
  [[nodiscard]] double quadratic_form(const Vec3& x) const;
};

using Complex = std::complex<double>;

/// Monic characteristic polynomial lambda^3 + c2 lambda^2 + c1 lambda + c0 of A.
struct CharPoly {
  double c2 = 0, c1 = 0, c0 = 0;
  [[nodiscard]] Complex operator()(Complex z) const;
  [[nodiscard]] Complex derivative(Complex z) const;
};

CharPoly characteristic_polynomial(const Mat3& m);

/// Roots of det(A - lambda I). Block-reducible matrices are split so that
/// eigenvalues sitting on the diagonal come out exactly; otherwise Cardano
/// with one Newton polish per root. Sorted by real part, then imaginary part.
std::array<Complex, 3> eigenvalues_3x3(const Mat3& m);

/// Real eigenvalues of a symmetric matrix, ascending.
std::array<double, 3> symmetric_eigenvalues(const SymMat3& p);

/// Dense square matrix for the small linear systems (n <= 6).
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> a;  // row-major n*n

  explicit DenseMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}
  static DenseMatrix identity(std::size_t size);

  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
};

inline constexpr std::size_t kMaxDenseSize = 6;

/// Partial-pivot Gaussian elimination. Throws SingularMatrix when a pivot is
/// below 1e-13 times the largest matrix entry.
std::vector<double> solve_linear(const DenseMatrix& m, std::span<const double> rhs);

using VectorFunction = std::function<std::vector<double>(std::span<const double>)>;
using MatrixFunction = std::function<DenseMatrix(std::span<const double>)>;

struct NewtonResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;
};

/// Undamped Newton iteration until ||f(x)||_inf < tol. Throws NoConvergence or
/// SingularJacobian.
NewtonResult newton_solve(const VectorFunction& f, const MatrixFunction& jac,
                          std::vector<double> guess, double tol, int max_iter);

/// Real roots of a x^2 + b x + c, ascending; empty when the discriminant is
/// negative. Degenerates to the linear root when a == 0.
std::vector<double> quadratic_roots(double a, double b, double c);

}  // namespace oncodyn
