#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

#include "qpol/errors.hpp"

namespace qpol {

using Complex = std::complex<double>;
using Ket = std::vector<Complex>;

namespace detail {

inline bool is_finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace detail

/// Dense row-major complex matrix. Sized for the 2x2 and 4x4 Hermitian
/// work this library does; not a general linear-algebra package.
class ComplexMatrix {
 public:
  explicit ComplexMatrix(std::size_t dim)
      : dim_(dim), entries_(dim * dim, Complex{0.0, 0.0}) {
    if (dim == 0) throw BadDim("ComplexMatrix: dim must be positive");
  }

  ComplexMatrix(std::size_t dim, std::vector<Complex> entries)
      : dim_(dim), entries_(std::move(entries)) {
    if (dim == 0) throw BadDim("ComplexMatrix: dim must be positive");
    if (entries_.size() != dim * dim)
      throw BadDim("ComplexMatrix: entries length must equal dim^2");
    for (const Complex& z : entries_)
      if (!detail::is_finite(z))
        throw OutOfRange("ComplexMatrix: non-finite entry");
  }

  static ComplexMatrix identity(std::size_t dim) {
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix zero(std::size_t dim) { return ComplexMatrix(dim); }

  std::size_t dim() const { return dim_; }

  Complex& operator()(std::size_t i, std::size_t j) {
    return entries_[i * dim_ + j];
  }
  const Complex& operator()(std::size_t i, std::size_t j) const {
    return entries_[i * dim_ + j];
  }

  const std::vector<Complex>& entries() const { return entries_; }

  ComplexMatrix adjoint() const {
    ComplexMatrix out(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        out(j, i) = std::conj((*this)(i, j));
    return out;
  }

  ComplexMatrix conjugate() const {
    ComplexMatrix out(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        out(i, j) = std::conj((*this)(i, j));
    return out;
  }

  ComplexMatrix transpose() const {
    ComplexMatrix out(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  Complex trace() const {
    Complex t{0.0, 0.0};
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const Complex& z : entries_) s += std::norm(z);
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (const Complex& z : entries_) m = std::max(m, std::abs(z));
    return m;
  }

  /// Max entrywise |m - m^dagger|.
  double hermiticity_defect() const {
    double d = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return d;
  }

  bool is_hermitian(double tol = 1e-9) const {
    return hermiticity_defect() <= tol;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    require_same_dim(o);
    for (std::size_t k = 0; k < entries_.size(); ++k)
      entries_[k] += o.entries_[k];
    return *this;
  }

  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    require_same_dim(o);
    for (std::size_t k = 0; k < entries_.size(); ++k)
      entries_[k] -= o.entries_[k];
    return *this;
  }

  ComplexMatrix& operator*=(Complex s) {
    for (Complex& z : entries_) z *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
    a += b;
    return a;
  }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
    a -= b;
    return a;
  }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix m) {
    m *= s;
    return m;
  }
  friend ComplexMatrix operator*(ComplexMatrix m, Complex s) {
    m *= s;
    return m;
  }

  friend ComplexMatrix operator*(const ComplexMatrix& a,
                                 const ComplexMatrix& b) {
    a.require_same_dim(b);
    const std::size_t n = a.dim_;
    ComplexMatrix out(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const Complex aik = a(i, k);
        if (aik == Complex{0.0, 0.0}) continue;
        for (std::size_t j = 0; j < n; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

 private:
  void require_same_dim(const ComplexMatrix& o) const {
    if (dim_ != o.dim_) throw DimMismatch("ComplexMatrix: dim mismatch");
  }

  std::size_t dim_;
  std::vector<Complex> entries_;
};

inline double frobenius_distance(const ComplexMatrix& a,
                                 const ComplexMatrix& b) {
  return (a - b).frobenius_norm();
}

// ---------------------------------------------------------------------------
// Kets

inline Complex inner(const Ket& a, const Ket& b) {
  if (a.size() != b.size()) throw DimMismatch("inner: ket size mismatch");
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double ket_norm(const Ket& k) { return std::sqrt(inner(k, k).real()); }

inline Ket normalized(Ket k) {
  const double n = ket_norm(k);
  if (n < 1e-300) throw ZeroVector("normalized: zero vector");
  for (Complex& z : k) z /= n;
  return k;
}

/// |k><k| without normalization.
inline ComplexMatrix outer(const Ket& k) {
  ComplexMatrix m(k.size());
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = 0; j < k.size(); ++j)
      m(i, j) = k[i] * std::conj(k[j]);
  return m;
}

inline Ket mat_vec(const ComplexMatrix& m, const Ket& k) {
  if (m.dim() != k.size()) throw DimMismatch("mat_vec: size mismatch");
  Ket out(k.size(), Complex{0.0, 0.0});
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) out[i] += m(i, j) * k[j];
  return out;
}

inline Ket tensor(const Ket& a, const Ket& b) {
  Ket out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      out[i * b.size() + j] = a[i] * b[j];
  return out;
}

// ---------------------------------------------------------------------------
// Pauli operators

inline const ComplexMatrix& pauli_id() {
  static const ComplexMatrix m{2, {1.0, 0.0, 0.0, 1.0}};
  return m;
}

inline const ComplexMatrix& pauli_x() {
  static const ComplexMatrix m{2, {0.0, 1.0, 1.0, 0.0}};
  return m;
}

inline const ComplexMatrix& pauli_y() {
  static const ComplexMatrix m{
      2, {0.0, Complex{0.0, -1.0}, Complex{0.0, 1.0}, 0.0}};
  return m;
}

inline const ComplexMatrix& pauli_z() {
  static const ComplexMatrix m{2, {1.0, 0.0, 0.0, -1.0}};
  return m;
}

/// {I, sigma_x, sigma_y, sigma_z} in that order.
inline const ComplexMatrix& pauli(std::size_t i) {
  switch (i) {
    case 0: return pauli_id();
    case 1: return pauli_x();
    case 2: return pauli_y();
    case 3: return pauli_z();
    default: throw OutOfRange("pauli: index must be 0..3");
  }
}

// ---------------------------------------------------------------------------
// Kronecker product

/// Kronecker product; basis order is {a_i b_j} row-major, so for two qubits
/// the composite basis reads |HH>, |HV>, |VH>, |VV>.
inline ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t na = a.dim(), nb = b.dim();
  ComplexMatrix out(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < na; ++j) {
      const Complex aij = a(i, j);
      if (aij == Complex{0.0, 0.0}) continue;
      for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t l = 0; l < nb; ++l)
          out(i * nb + k, j * nb + l) = aij * b(k, l);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Partial trace

enum class Subsystem { First, Second };

/// Trace out one qubit of a two-qubit operator.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, Subsystem keep) {
  if (m.dim() != 4) throw BadDim("partial_trace: input must be 4x4");
  ComplexMatrix out(2);
  if (keep == Subsystem::First) {
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t b = 0; b < 2; ++b)
          out(a, c) += m(2 * a + b, 2 * c + b);
  } else {
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t a = 0; a < 2; ++a)
          out(b, d) += m(2 * a + b, 2 * a + d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition

struct HermitianEigenDecomposition {
  std::vector<double> eigenvalues;   // descending
  std::vector<Ket> eigenvectors;     // unit norm, same order

  ComplexMatrix reconstruct() const {
    const std::size_t n = eigenvalues.size();
    ComplexMatrix out(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Ket& v = eigenvectors[k];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          out(i, j) += eigenvalues[k] * v[i] * std::conj(v[j]);
    }
    return out;
  }
};

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Small fixed dims make a hand-rolled solver preferable to a LAPACK-class
/// dependency: deterministic sweeps, quadratic convergence, no tie-breaking
/// surprises. Eigenvalues come back descending; each eigenvector has its
/// largest-magnitude component rotated to be real and positive.
inline HermitianEigenDecomposition eig_hermitian(const ComplexMatrix& m) {
  if (!m.is_hermitian(1e-9))
    throw NotHermitian("eig_hermitian: matrix is not Hermitian within 1e-9");
  const std::size_t n = m.dim();

  // Work on the exactly-Hermitian average.
  ComplexMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));

  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale2 = std::max(a.frobenius_norm() * a.frobenius_norm(),
                                 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off2 = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off2 += 2.0 * std::norm(a(p, q));
    if (off2 <= 1e-30 * scale2) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double r = std::abs(apq);
        if (r < 1e-300) continue;
        const Complex phase = apq / r;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        const double sgn = (tau >= 0.0) ? 1.0 : -1.0;
        const double t = sgn / (std::abs(tau) + std::hypot(1.0, tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // A <- R^dagger A R with R_pp = c, R_pq = s*phase,
        // R_qp = -s*conj(phase), R_qq = c.
        for (std::size_t k = 0; k < n; ++k) {
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * std::conj(phase) * akq;
          a(k, q) = s * phase * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * phase * aqk;
          a(q, k) = s * std::conj(phase) * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();

        for (std::size_t k = 0; k < n; ++k) {
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * std::conj(phase) * vkq;
          v(k, q) = s * phase * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x,
                                                   std::size_t y) {
    return a(x, x).real() > a(y, y).real();
  });

  HermitianEigenDecomposition d;
  d.eigenvalues.reserve(n);
  d.eigenvectors.reserve(n);
  for (std::size_t col : order) {
    d.eigenvalues.push_back(a(col, col).real());
    Ket vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = v(i, col);
    // Phase convention: largest-magnitude component real and positive.
    std::size_t imax = 0;
    double amax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ai = std::abs(vec[i]);
      if (ai > amax) {
        amax = ai;
        imax = i;
      }
    }
    if (amax > 0.0) {
      const Complex ph = std::conj(vec[imax]) / amax;
      for (Complex& z : vec) z *= ph;
      vec[imax] = Complex{vec[imax].real(), 0.0};
    }
    d.eigenvectors.push_back(std::move(vec));
  }
  return d;
}

/// Hermitian PSD square root. Eigenvalues in [-1e-10, 0) clamp to zero;
/// anything more negative is rejected.
inline ComplexMatrix mat_sqrt_psd(const ComplexMatrix& m) {
  HermitianEigenDecomposition d = eig_hermitian(m);
  const std::size_t n = m.dim();
  ComplexMatrix out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double lam = d.eigenvalues[k];
    if (lam < -1e-10)
      throw NotPsd("mat_sqrt_psd: eigenvalue below -1e-10");
    lam = std::max(lam, 0.0);
    const double s = std::sqrt(lam);
    const Ket& v = d.eigenvectors[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += s * v[i] * std::conj(v[j]);
  }
  return out;
}

}  // namespace qpol
