#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace clx {

// Row-major dense matrix; a 1xN Mat doubles as a vector. Small and plain on
// purpose: everything in this project is desk scale.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  double* row(std::size_t r) { return a.data() + r * cols; }
  const double* row(std::size_t r) const { return a.data() + r * cols; }

  std::size_t size() const { return a.size(); }
  void fill(double v) { a.assign(a.size(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// [batch, steps, dim] tensor, padded; consumers mask out the padding.
struct Tensor3 {
  std::size_t b = 0, t = 0, h = 0;
  std::vector<double> a;

  Tensor3() = default;
  Tensor3(std::size_t b_, std::size_t t_, std::size_t h_)
      : b(b_), t(t_), h(h_), a(b_ * t_ * h_, 0.0) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return a[(i * t + j) * h + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return a[(i * t + j) * h + k];
  }

  double* at(std::size_t i, std::size_t j) { return a.data() + (i * t + j) * h; }
  const double* at(std::size_t i, std::size_t j) const {
    return a.data() + (i * t + j) * h;
  }

  void zero() { a.assign(a.size(), 0.0); }
};

inline double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(const double* x, std::size_t n) {
  return std::sqrt(dot(x, x, n));
}

// y += W x, W is (out x in)
inline void matvec_acc(const Mat& w, const double* x, double* y) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    y[r] += dot(w.row(r), x, w.cols);
  }
}

// y += W^T x, W is (out x in), x has length out, y has length in
inline void matvec_transpose_acc(const Mat& w, const double* x, double* y) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double xr = x[r];
    const double* wr = w.row(r);
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += xr * wr[c];
  }
}

// G += x y^T with x length rows, y length cols
inline void outer_acc(Mat& g, const double* x, const double* y) {
  for (std::size_t r = 0; r < g.rows; ++r) {
    double* gr = g.row(r);
    const double xr = x[r];
    for (std::size_t c = 0; c < g.cols; ++c) gr[c] += xr * y[c];
  }
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// In-place softmax with max subtraction; returns nothing, normalizes x.
inline void softmax_inplace(double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - m);
    z += x[i];
  }
  for (std::size_t i = 0; i < n; ++i) x[i] /= z;
}

// Chain rule through softmax: given g = softmax(z) and dL/dg, computes
// dL/dz = g .* (dg - <g, dg>).
inline void softmax_chain(const double* g, const double* dg, double* dz,
                          std::size_t n) {
  const double gdotdg = dot(g, dg, n);
  for (std::size_t i = 0; i < n; ++i) dz[i] = g[i] * (dg[i] - gdotdg);
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi eigendecomposition for symmetric matrices. Deterministic and
// plenty accurate for the 32x32 problems analysis deals with.
// Eigenvalues returned in descending order with matching eigenvector columns.
// ---------------------------------------------------------------------------

struct EigenSym {
  std::vector<double> values;  // descending
  Mat vectors;                 // column j is the eigenvector of values[j]
};

inline EigenSym jacobi_eigensym(Mat m, int max_sweeps = 64) {
  if (m.rows != m.cols) throw std::invalid_argument("jacobi: matrix not square");
  const std::size_t n = m.rows;
  Mat v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-26) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double tt =
            sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tt * tt + 1.0);
        const double s = tt * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // Sort descending by eigenvalue, stable index order on ties.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (m(order[j], order[j]) > m(order[best], order[best])) best = j;
    }
    std::swap(order[i], order[best]);
  }

  EigenSym out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = m(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

}  // namespace clx
