#include "scone/matrix.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

#include "scone/error.hpp"

namespace scone {

namespace memory {
namespace {
std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
}  // namespace

std::size_t live_bytes() noexcept { return g_live.load(std::memory_order_relaxed); }
std::size_t peak_bytes() noexcept { return g_peak.load(std::memory_order_relaxed); }

std::size_t reset_peak() noexcept {
  const std::size_t live = g_live.load(std::memory_order_relaxed);
  g_peak.store(live, std::memory_order_relaxed);
  return live;
}

void on_allocate(std::size_t bytes) noexcept {
  const std::size_t now = g_live.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

void on_deallocate(std::size_t bytes) noexcept {
  g_live.fetch_sub(bytes, std::memory_order_relaxed);
}
}  // namespace memory

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}
MutMap view(Matrix& m) {
  return MutMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

// C = A B for row-major operands. Every entry is accumulated in the same
// order, ((a0 b0 + a1 b1) + a2 b2) + ..., whichever tile it falls in, so
// permuting the rows of A permutes the rows of C bit for bit. Eigen's GEMM
// does not guarantee that for rows handled by its remainder kernels.
void gemm_rows(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m) {
  constexpr std::size_t R = 4, C = 4;
  auto tail_column = [&](std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * m + j];
    c[i * m + j] = acc;
  };
  std::size_t i = 0;
  for (; i + R <= n; i += R) {
    std::size_t j = 0;
    for (; j + C <= m; j += C) {
#if defined(__GNUC__)
      // Two-lane vectors keep the 4x4 tile in registers; lanes round like scalars.
      typedef double v2 __attribute__((vector_size(16)));
      v2 acc[R][2] = {};
      for (std::size_t p = 0; p < k; ++p) {
        v2 b0, b1;
        std::memcpy(&b0, b + p * m + j, sizeof b0);
        std::memcpy(&b1, b + p * m + j + 2, sizeof b1);
        for (std::size_t r = 0; r < R; ++r) {
          const double ar = a[(i + r) * k + p];
          const v2 av = {ar, ar};
          acc[r][0] += av * b0;
          acc[r][1] += av * b1;
        }
      }
#else
      double acc[R][C] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * m + j;
        for (std::size_t r = 0; r < R; ++r) {
          const double ar = a[(i + r) * k + p];
          for (std::size_t s = 0; s < C; ++s) acc[r][s] += ar * bp[s];
        }
      }
#endif
      for (std::size_t r = 0; r < R; ++r) std::memcpy(c + (i + r) * m + j, &acc[r], C * sizeof(double));
    }
    for (; j < m; ++j)
      for (std::size_t r = 0; r < R; ++r) tail_column(i + r, j);
  }
  for (; i < n; ++i) {
    std::size_t j = 0;
    for (; j + C <= m; j += C) {
      double acc[C] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const double ar = a[i * k + p];
        for (std::size_t s = 0; s < C; ++s) acc[s] += ar * b[p * m + j + s];
      }
      std::memcpy(c + i * m + j, acc, sizeof acc);
    }
    for (; j < m; ++j) tail_column(i, j);
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_data(std::size_t rows, std::size_t cols, std::span<const double> data) {
  if (data.size() != rows * cols) {
    throw DimensionError("Matrix::from_data: " + std::to_string(data.size()) +
                         " values for a " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " matrix");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data_.begin());
  return m;
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

bool operator==(const Matrix& a, const Matrix& b) noexcept {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ &&
         std::equal(a.data_.begin(), a.data_.end(), b.data_.begin());
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  gemm_rows(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: " + a.shape_string() + "^T x " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + a.shape_string() + " x " + b.shape_string() + "^T");
  }
  Matrix out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= a.rows()) throw DimensionError("select_rows: row index out of range");
    std::memcpy(out.row(r).data(), a.row(rows[r]).data(), a.cols() * sizeof(double));
  }
  return out;
}

double sum(const Matrix& a) noexcept {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace scone
