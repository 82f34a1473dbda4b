#pragma once

// Dense linear algebra, deterministic randomness and a damped least-squares
// solver. Everything is double precision.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace jagged {

/// Dense real vector. Values built from external data are validated
/// (dimension >= 1, every entry finite); arithmetic results are not
/// re-validated, callers that need the guarantee use `all_finite()`.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::vector<double> entries);
  Vector(std::initializer_list<double> entries);

  static Vector zeros(std::size_t d);
  static Vector unit(std::size_t d, std::size_t k);
  static Vector filled(std::size_t d, double value);

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t k) const { return data_[k]; }
  double& operator[](std::size_t k) { return data_[k]; }

  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& entries() const noexcept { return data_; }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s) noexcept;
  /// this += s * x
  Vector& axpy(double s, const Vector& x);

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  struct Unchecked {};
  Vector(std::vector<double> entries, Unchecked) : data_(std::move(entries)) {}

  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double s, Vector a);
Vector operator*(Vector a, double s);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double max_abs(const Vector& a);
double sum(const Vector& a);

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  const std::vector<double>& entries() const noexcept { return data_; }

  Vector multiply(const Vector& x) const;            // A x
  Vector transpose_multiply(const Vector& y) const;  // A^T y
  Matrix gram() const;                                // A^T A
  Matrix transpose() const;
  bool is_symmetric(double rel_tol = 1e-12) const;
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Counter-based generator: output k is SplitMix64's finaliser applied to
/// seed + (k + 1) * 0x9E3779B97F4A7C15. Normals use Box-Muller on pairs of
/// 53-bit uniforms, both outputs of a pair are consumed in order.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  double normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Vector gaussian_vector(SeededRng& rng, std::size_t d);

struct LeastSquaresResult {
  Vector coefficients;
  Vector residual;
};

/// Minimises ||sum_j a_j columns[j] - target|| through the normal equations
/// with Tikhonov damping 1e-12 * max(1, max_j ||columns[j]||^2), followed by
/// one refinement step on the undamped equations. Rank deficiency resolves to
/// the minimum-norm coefficients.
LeastSquaresResult least_squares(std::span<const Vector> columns, const Vector& target);

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration from a fixed pseudo-random start, relative tolerance 1e-8.
double largest_eigenvalue_psd(const Matrix& m);

/// Spectral norm ||M||_2 = sqrt(lambda_max(M^T M)).
double spectral_norm(const Matrix& m);

}  // namespace jagged
