#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpol/errors.hpp"
#include "qpol/qmat.hpp"
#include "qpol/rng.hpp"

namespace qpol {

// ---------------------------------------------------------------------------
// Polarization basis kets.
//
// Horizontal is (1,0) and vertical (0,1). Diagonal/antidiagonal are the
// +-45 degree superpositions. Circular kets follow the convention
// |R> = (|H> - i|V>)/sqrt(2), |L> = (|H> + i|V>)/sqrt(2), which places R at
// Bloch coordinate (0,-1,0) when the Bloch vector is read off as raw Pauli
// expectation values.

inline Ket ket_h() { return {1.0, 0.0}; }
inline Ket ket_v() { return {0.0, 1.0}; }
inline Ket ket_d() {
  const double s = 1.0 / std::sqrt(2.0);
  return {s, s};
}
inline Ket ket_a() {
  const double s = 1.0 / std::sqrt(2.0);
  return {s, -s};
}
inline Ket ket_r() {
  const double s = 1.0 / std::sqrt(2.0);
  return {Complex{s, 0.0}, Complex{0.0, -s}};
}
inline Ket ket_l() {
  const double s = 1.0 / std::sqrt(2.0);
  return {Complex{s, 0.0}, Complex{0.0, s}};
}

/// (|HH> + |VV>)/sqrt(2).
inline Ket ket_phi_plus() {
  const double s = 1.0 / std::sqrt(2.0);
  return {s, 0.0, 0.0, s};
}

// ---------------------------------------------------------------------------
// DensityMatrix

/// One- or two-qubit density operator. Construction validates hermiticity,
/// unit trace, and positivity, so a value of this type is always a
/// legitimate physical state.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m) : qubits_(0), matrix_(std::move(m)) {
    qubits_ = qubits_for_dim(matrix_.dim());
    if (matrix_.hermiticity_defect() > 1e-9)
      throw NotHermitian("DensityMatrix: not Hermitian within 1e-9");
    if (std::abs(matrix_.trace() - Complex{1.0, 0.0}) > 1e-9)
      throw NotPhysical("DensityMatrix: trace differs from 1 by more than 1e-9");
    const auto d = eig_hermitian(matrix_);
    if (d.eigenvalues.back() < -1e-9)
      throw NotPsd("DensityMatrix: eigenvalue below -1e-9");
  }

  /// Fast path for matrices that are physical by construction (e.g. the
  /// output of a parameterization that is positive by design). Dimension is
  /// still checked; the spectral invariants are the caller's promise.
  static DensityMatrix unchecked(ComplexMatrix m) {
    DensityMatrix out;
    out.qubits_ = qubits_for_dim(m.dim());
    out.matrix_ = std::move(m);
    return out;
  }

  std::size_t qubits() const { return qubits_; }
  std::size_t dim() const { return matrix_.dim(); }
  const ComplexMatrix& matrix() const { return matrix_; }

 private:
  DensityMatrix() : qubits_(1), matrix_(2) {}

  static std::size_t qubits_for_dim(std::size_t dim) {
    if (dim == 2) return 1;
    if (dim == 4) return 2;
    throw BadDim("DensityMatrix: dim must be 2 or 4");
  }

  std::size_t qubits_;
  ComplexMatrix matrix_;
};

/// Tangle/linear-entropy coordinates of a state, optionally labeled.
struct PlanePoint {
  double linear_entropy = 0.0;
  double tangle = 0.0;
  std::string label;
};

// ---------------------------------------------------------------------------
// State families

/// Rank-1 projector |psi><psi|; the amplitudes are renormalized.
inline DensityMatrix pure_state(const Ket& amplitudes) {
  if (amplitudes.size() != 2 && amplitudes.size() != 4)
    throw BadDim("pure_state: amplitude vector must have length 2 or 4");
  const Ket psi = normalized(amplitudes);
  return DensityMatrix::unchecked(outer(psi));
}

/// (|HH> + eps e^{i phi} |VV>)/sqrt(1 + eps^2).
inline DensityMatrix nonmax_entangled(double epsilon, double phi = 0.0) {
  if (!std::isfinite(epsilon))
    throw OutOfRange("nonmax_entangled: epsilon must be finite");
  const Complex amp = epsilon * std::exp(Complex{0.0, phi});
  return pure_state(Ket{1.0, 0.0, 0.0, amp});
}

/// p |Phi+><Phi+| + (1-p) I/4.
inline DensityMatrix werner(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw OutOfRange("werner: p must be in [0,1]");
  ComplexMatrix m = outer(ket_phi_plus());
  m *= p;
  for (std::size_t i = 0; i < 4; ++i) m(i, i) += (1.0 - p) / 4.0;
  return DensityMatrix::unchecked(std::move(m));
}

/// Maximally entangled mixed state with concurrence r. Two branches meet at
/// r = 2/3: above it the diagonal is {r/2, 1-r, 0, r/2}, below it the
/// diagonal freezes at {1/3, 1/3, 0, 1/3}; both carry |HH><VV| coherence r/2.
inline DensityMatrix mems(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw OutOfRange("mems: r must be in [0,1]");
  ComplexMatrix m(4);
  if (r >= 2.0 / 3.0) {
    m(0, 0) = r / 2.0;
    m(1, 1) = 1.0 - r;
    m(3, 3) = r / 2.0;
  } else {
    m(0, 0) = 1.0 / 3.0;
    m(1, 1) = 1.0 / 3.0;
    m(3, 3) = 1.0 / 3.0;
  }
  m(0, 3) = r / 2.0;
  m(3, 0) = r / 2.0;
  return DensityMatrix::unchecked(std::move(m));
}

/// Random full-rank state, rho = G G^dagger / Tr(G G^dagger) with G a
/// complex Gaussian matrix.
inline DensityMatrix ginibre_state(std::size_t qubits, Rng& rng) {
  if (qubits != 1 && qubits != 2)
    throw BadDim("ginibre_state: qubits must be 1 or 2");
  const std::size_t d = (qubits == 1) ? 2 : 4;
  ComplexMatrix g(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      g(i, j) = Complex{rng.normal(), rng.normal()};
  ComplexMatrix rho = g * g.adjoint();
  rho *= 1.0 / rho.trace().real();
  return DensityMatrix::unchecked(std::move(rho));
}

// ---------------------------------------------------------------------------
// Scalar metrics

inline double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

/// Linear entropy normalized to [0,1]: (d/(d-1)) (1 - Tr rho^2).
inline double linear_entropy(const DensityMatrix& rho) {
  const double d = static_cast<double>(rho.dim());
  return d / (d - 1.0) * (1.0 - purity(rho));
}

/// Von Neumann entropy in bits.
inline double vn_entropy(const DensityMatrix& rho) {
  const auto dec = eig_hermitian(rho.matrix());
  double s = 0.0;
  for (double lam : dec.eigenvalues)
    if (lam > 1e-15) s -= lam * std::log2(lam);
  return s;
}

/// Fidelity F = (Tr sqrt(sqrt(a) b sqrt(a)))^2; for a pure this reduces to
/// <psi|b|psi>, so the value reads as a probability.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw DimMismatch("fidelity: dim mismatch");
  const ComplexMatrix ra = mat_sqrt_psd(a.matrix());
  const ComplexMatrix inner = ra * b.matrix() * ra;
  // inner is PSD up to rounding; sum the square roots of its spectrum.
  const auto dec = eig_hermitian(0.5 * (inner + inner.adjoint()));
  double tr = 0.0;
  for (double lam : dec.eigenvalues) tr += std::sqrt(std::max(lam, 0.0));
  return std::max(0.0, tr * tr);
}

/// Wootters concurrence. The spin-flipped state is
/// rho~ = (sy tensor sy) rho* (sy tensor sy); the lambda_i are the square
/// roots of the eigenvalues of rho rho~, computed here through the Hermitian
/// product sqrt(rho) rho~ sqrt(rho), which has the same spectrum.
inline double concurrence(const DensityMatrix& rho) {
  if (rho.qubits() != 2) throw BadDim("concurrence: two-qubit states only");
  const ComplexMatrix yy = tensor(pauli_y(), pauli_y());
  const ComplexMatrix tilde = yy * rho.matrix().conjugate() * yy;
  const ComplexMatrix root = mat_sqrt_psd(rho.matrix());
  ComplexMatrix prod = root * tilde * root;
  prod = 0.5 * (prod + prod.adjoint());
  const auto dec = eig_hermitian(prod);
  // Rank-deficient spectra (any pure state) leave rounding residue where the
  // exact eigenvalue is zero; the square root would inflate that residue from
  // ~1e-16 to ~1e-8, so values below a relative floor count as exact zeros.
  const double floor_ =
      256.0 * std::numeric_limits<double>::epsilon() * dec.eigenvalues[0];
  std::array<double, 4> lam{};
  for (std::size_t i = 0; i < 4; ++i)
    lam[i] = dec.eigenvalues[i] <= floor_
                 ? 0.0
                 : std::sqrt(dec.eigenvalues[i]);
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

/// Tangle T = concurrence squared.
inline double tangle(const DensityMatrix& rho) {
  const double c = concurrence(rho);
  return c * c;
}

/// Pauli expectation values (Tr rho sx, Tr rho sy, Tr rho sz).
inline std::array<double, 3> bloch_vector(const DensityMatrix& rho) {
  if (rho.qubits() != 1) throw BadDim("bloch_vector: one-qubit states only");
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k)
    out[k] = (rho.matrix() * pauli(k + 1)).trace().real();
  return out;
}

// ---------------------------------------------------------------------------
// Tangle-entropy plane

/// Largest tangle any state of linear entropy s can carry. Interpolated
/// from the mems() family sampled densely in r; beyond s = 8/9 no
/// entanglement survives and the frontier is zero.
inline double mems_frontier_tangle(double s) {
  static const std::vector<std::pair<double, double>> table = [] {
    const std::size_t n = 10000;
    std::vector<std::pair<double, double>> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      // r runs 1 -> 0 so entropy runs 0 -> 8/9 ascending.
      const double r = 1.0 - static_cast<double>(i) / (n - 1);
      const double sl = (r >= 2.0 / 3.0) ? (8.0 / 3.0) * r * (1.0 - r)
                                         : 8.0 / 9.0 - (2.0 / 3.0) * r * r;
      t.emplace_back(sl, r * r);
    }
    return t;
  }();

  if (s <= table.front().first) return table.front().second;
  if (s >= table.back().first) return 0.0;
  auto hi = std::lower_bound(
      table.begin(), table.end(), s,
      [](const std::pair<double, double>& a, double v) { return a.first < v; });
  auto lo = hi - 1;
  const double w = (s - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

/// Locate a state on the tangle-entropy plane. Points must sit on or below
/// the frontier; anything farther above it than numerical tolerance means a
/// broken input and is rejected.
inline PlanePoint plane_point(const DensityMatrix& rho,
                              std::string label = {}) {
  if (rho.qubits() != 2) throw BadDim("plane_point: two-qubit states only");
  PlanePoint p;
  p.linear_entropy = std::clamp(linear_entropy(rho), 0.0, 1.0);
  p.tangle = tangle(rho);
  p.label = std::move(label);
  if (p.tangle > mems_frontier_tangle(p.linear_entropy) + 1e-6)
    throw FrontierViolation("plane_point: tangle exceeds the frontier");
  return p;
}

// ---------------------------------------------------------------------------
// Serialization

/// {"qubits": n, "matrix": [[[re,im], ...] per row]}. Doubles are emitted
/// with shortest round-trip formatting, so read-back is bit-exact.
inline nlohmann::json density_to_json(const DensityMatrix& rho) {
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t d = rho.dim();
  for (std::size_t i = 0; i < d; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < d; ++j) {
      const Complex z = rho.matrix()(i, j);
      row.push_back({z.real(), z.imag()});
    }
    rows.push_back(std::move(row));
  }
  return {{"qubits", rho.qubits()}, {"matrix", std::move(rows)}};
}

inline DensityMatrix density_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("qubits") || !j.contains("matrix"))
    throw ParseError("state document needs 'qubits' and 'matrix' fields");
  const std::size_t qubits = j.at("qubits").get<std::size_t>();
  if (qubits != 1 && qubits != 2)
    throw ParseError("state document: qubits must be 1 or 2");
  const std::size_t d = (qubits == 1) ? 2 : 4;
  const auto& rows = j.at("matrix");
  if (!rows.is_array() || rows.size() != d)
    throw ParseError("state document: matrix row count mismatch");
  ComplexMatrix m(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || row.size() != d)
      throw ParseError("state document: matrix column count mismatch");
    for (std::size_t k = 0; k < d; ++k) {
      const auto& cell = row[k];
      if (!cell.is_array() || cell.size() != 2)
        throw ParseError("state document: entries must be [re, im] pairs");
      m(i, k) = Complex{cell[0].get<double>(), cell[1].get<double>()};
    }
  }
  return DensityMatrix(std::move(m));  // full physicality validation
}

}  // namespace qpol
