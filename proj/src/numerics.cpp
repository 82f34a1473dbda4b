#include "jagged/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "jagged/errors.hpp"

namespace jagged {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw UsageError(std::string(op) + ": dimension mismatch (" + std::to_string(a) +
                     " vs " + std::to_string(b) + ")");
  }
}

// In-place Cholesky factorisation of a symmetric positive definite matrix
// stored row-major; the lower triangle holds L on return.
void cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
    // Damping keeps the matrix positive definite; roundoff can still eat it.
    diag = std::max(diag, std::numeric_limits<double>::min());
    const double ljj = std::sqrt(diag);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
}

std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                   std::vector<double> rhs) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * rhs[k];
    rhs[i] = s / l[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = rhs[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * rhs[k];
    rhs[ii] = s / l[ii * n + ii];
  }
  return rhs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vector

Vector::Vector(std::vector<double> entries) : data_(std::move(entries)) {
  if (data_.empty()) throw UsageError("Vector: dimension must be >= 1");
  if (!all_finite()) throw UsageError("Vector: entries must be finite");
}

Vector::Vector(std::initializer_list<double> entries)
    : Vector(std::vector<double>(entries)) {}

Vector Vector::zeros(std::size_t d) { return filled(d, 0.0); }

Vector Vector::unit(std::size_t d, std::size_t k) {
  if (k >= d) throw UsageError("Vector::unit: index out of range");
  Vector v = zeros(d);
  v.data_[k] = 1.0;
  return v;
}

Vector Vector::filled(std::size_t d, double value) {
  if (d == 0) throw UsageError("Vector: dimension must be >= 1");
  return Vector(std::vector<double>(d, value), Unchecked{});
}

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_size(size(), other.size(), "Vector +=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_size(size(), other.size(), "Vector -=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Vector& Vector::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Vector& Vector::axpy(double s, const Vector& x) {
  require_same_size(size(), x.size(), "Vector axpy");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * x.data_[k];
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) { return a *= -1.0; }
Vector operator*(double s, Vector a) { return a *= s; }
Vector operator*(Vector a, double s) { return a *= s; }

double dot(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(const Vector& a) {
  // Scaled accumulation so huge or tiny entries neither overflow nor vanish.
  const double scale = max_abs(a);
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double x : a) {
    const double y = x / scale;
    s += y * y;
  }
  return scale * std::sqrt(s);
}

double max_abs(const Vector& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double sum(const Vector& a) {
  double s = 0.0;
  for (double x : a) s += x;
  return s;
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw UsageError("Matrix: shape must be at least 1x1");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (rows == 0 || cols == 0) throw UsageError("Matrix: shape must be at least 1x1");
  if (data_.size() != rows * cols) throw UsageError("Matrix: entry count does not match shape");
  if (!all_finite()) throw UsageError("Matrix: entries must be finite");
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw UsageError("Matrix: empty rows");
  const std::size_t c = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * c);
  for (const auto& r : rows) {
    if (r.size() != c) throw UsageError("Matrix: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector Matrix::multiply(const Vector& x) const {
  require_same_size(cols_, x.size(), "Matrix::multiply");
  Vector y = Vector::zeros(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    const double* row_ptr = data_.data() + r * cols_;
    for (std::size_t c = 0; c < cols_; ++c) s += row_ptr[c] * x[c];
    y[r] = s;
  }
  return y;
}

Vector Matrix::transpose_multiply(const Vector& y) const {
  require_same_size(rows_, y.size(), "Matrix::transpose_multiply");
  Vector x = Vector::zeros(cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double yr = y[r];
    const double* row_ptr = data_.data() + r * cols_;
    for (std::size_t c = 0; c < cols_; ++c) x[c] += row_ptr[c] * yr;
  }
  return x;
}

Matrix Matrix::gram() const {
  Matrix g(cols_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* row_ptr = data_.data() + r * cols_;
    for (std::size_t i = 0; i < cols_; ++i) {
      const double ri = row_ptr[i];
      if (ri == 0.0) continue;
      for (std::size_t j = i; j < cols_; ++j) g(i, j) += ri * row_ptr[j];
    }
  }
  for (std::size_t i = 0; i < cols_; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::is_symmetric(double rel_tol) const {
  if (rows_ != cols_) return false;
  double scale = 0.0;
  for (double x : data_) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if (std::abs((*this)(i, j) - (*this)(j, i)) > rel_tol * scale) return false;
  return true;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// SeededRng

std::uint64_t SeededRng::next_u64() noexcept {
  ++counter_;
  std::uint64_t z = seed_ + counter_ * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SeededRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(next_u64() % span);
}

double SeededRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

Vector gaussian_vector(SeededRng& rng, std::size_t d) {
  if (d == 0) throw UsageError("gaussian_vector: d must be >= 1");
  Vector v = Vector::zeros(d);
  for (std::size_t k = 0; k < d; ++k) v[k] = rng.normal();
  return v;
}

// ---------------------------------------------------------------------------
// Least squares

LeastSquaresResult least_squares(std::span<const Vector> columns, const Vector& target) {
  if (columns.empty()) throw UsageError("least_squares: no columns");
  const std::size_t m = columns.size();
  for (const Vector& c : columns) require_same_size(c.size(), target.size(), "least_squares");

  std::vector<double> gram(m * m);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double gij = dot(columns[i], columns[j]);
      gram[i * m + j] = gij;
      gram[j * m + i] = gij;
    }
    max_diag = std::max(max_diag, gram[i * m + i]);
  }
  const double damping = 1e-12 * std::max(1.0, max_diag);
  std::vector<double> factor = gram;
  for (std::size_t i = 0; i < m; ++i) factor[i * m + i] += damping;
  cholesky(factor, m);

  auto reassemble = [&](const std::vector<double>& a) {
    Vector r = target;
    for (std::size_t j = 0; j < m; ++j) r.axpy(-a[j], columns[j]);
    return r;
  };

  std::vector<double> rhs(m);
  for (std::size_t j = 0; j < m; ++j) rhs[j] = dot(columns[j], target);
  std::vector<double> a = cholesky_solve(factor, m, rhs);

  // One refinement step against the undamped equations removes the damping
  // bias on well-conditioned columns; C^T r has no null-space component, so
  // collinear sets keep the minimum-norm solution.
  Vector r = reassemble(a);
  std::vector<double> correction(m);
  for (std::size_t j = 0; j < m; ++j) correction[j] = dot(columns[j], r);
  const std::vector<double> delta = cholesky_solve(factor, m, std::move(correction));
  for (std::size_t j = 0; j < m; ++j) a[j] += delta[j];
  r = reassemble(a);

  Vector coeffs = Vector::zeros(m);
  for (std::size_t j = 0; j < m; ++j) coeffs[j] = a[j];
  return {std::move(coeffs), std::move(r)};
}

// ---------------------------------------------------------------------------
// Spectra

double largest_eigenvalue_psd(const Matrix& m) {
  if (m.rows() != m.cols()) throw UsageError("largest_eigenvalue_psd: matrix must be square");
  const std::size_t n = m.rows();
  SeededRng rng(0x5EEDC0FFEEULL);
  Vector x = gaussian_vector(rng, n);
  x *= 1.0 / norm(x);
  double lambda = 0.0;
  constexpr int kMaxIterations = 20000;
  for (int it = 0; it < kMaxIterations; ++it) {
    Vector y = m.multiply(x);
    const double ny = norm(y);
    if (ny == 0.0) return 0.0;
    const double next = dot(x, y);
    x = std::move(y);
    x *= 1.0 / ny;
    // Stopping well below the 1e-8 target absorbs slow convergence when the
    // two leading eigenvalues are close.
    if (it > 0 && std::abs(next - lambda) <= 1e-13 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

double spectral_norm(const Matrix& m) {
  return std::sqrt(std::max(0.0, largest_eigenvalue_psd(m.gram())));
}

}  // namespace jagged
