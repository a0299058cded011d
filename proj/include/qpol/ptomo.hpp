#pragma once
// Single-qubit quantum processes and process tomography.
//
// A quantum process (channel) maps density matrices to possibly
// sub-normalized density matrices; the output trace is the survival
// probability, so state-dependent loss is representable. Processes are
// built from four structural primitives -- unitary rotation, dephasing
// about an axis, axis-dependent amplitude scaling, and ordered
// composition -- and are characterized by a 4x4 process matrix (chi) over
// the Pauli basis {I, sigma_x, sigma_y, sigma_z}:
//
//     E(rho) = sum_{mn} chi_mn sigma_m rho sigma_n .
//
// Two reconstruction schemes are provided. Standard process tomography
// probes the channel with the four inputs {H, V, D, R} and tomographs each
// output separately; ancilla-assisted tomography sends qubit 2 of a
// |Phi+> pair through the channel once and tomographs the joint two-qubit
// output. Both assemble chi through the Choi matrix
//
//     C = 2 (I (x) E)(|Phi+><Phi+|) = sum_ij |i><j| (x) E(|i><j|)
//
// and the fixed basis change chi_mn = <<m|C|n>>/4 with
// |m>> = (I (x) sigma_m)(|00> + |11>).

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpol/counts.hpp"
#include "qpol/errors.hpp"
#include "qpol/optics.hpp"
#include "qpol/qmat.hpp"
#include "qpol/rng.hpp"
#include "qpol/states.hpp"
#include "qpol/tomo.hpp"

namespace qpol {

// ---------------------------------------------------------------------------
// Process description

enum class ProcessKind { Unitary, Dephasing, AmplitudeScaling, Composite };

/// Structural description of a single-qubit channel. Only the fields for
/// the active kind are meaningful. All angles are in radians; the axis of
/// a dephasing or amplitude-scaling element is the linear-polarization
/// angle of its fast eigen-axis, as for the optics module's wave plates.
struct QuantumProcess {
  ProcessKind kind = ProcessKind::Unitary;
  ComplexMatrix unitary = ComplexMatrix::identity(2);      // Unitary
  double axis = 0.0;                        // Dephasing, AmplitudeScaling
  double strength = 0.0;                    // Dephasing: 0 = none, 1 = full
  double keep_fast = 1.0;                   // AmplitudeScaling amplitudes
  double keep_slow = 1.0;
  std::vector<QuantumProcess> parts;        // Composite, applied in order
};

inline QuantumProcess identity_process() { return QuantumProcess{}; }

inline QuantumProcess unitary_process(const ComplexMatrix& u) {
  if (u.dim() != 2) throw BadDim("unitary_process: expected a 2x2 matrix");
  if ((u.adjoint() * u - ComplexMatrix::identity(2)).max_abs() > 1e-9)
    throw NotPhysical("unitary_process: matrix is not unitary");
  QuantumProcess p;
  p.kind = ProcessKind::Unitary;
  p.unitary = u;
  return p;
}

inline QuantumProcess dephasing_process(double axis, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0))
    throw OutOfRange("dephasing_process: strength must lie in [0, 1]");
  QuantumProcess p;
  p.kind = ProcessKind::Dephasing;
  p.axis = axis;
  p.strength = strength;
  return p;
}

inline QuantumProcess amplitude_scaling_process(double keep_fast,
                                                double keep_slow,
                                                double axis = 0.0) {
  if (!(keep_fast >= 0.0 && keep_fast <= 1.0) ||
      !(keep_slow >= 0.0 && keep_slow <= 1.0))
    throw OutOfRange(
        "amplitude_scaling_process: amplitudes must lie in [0, 1]");
  QuantumProcess p;
  p.kind = ProcessKind::AmplitudeScaling;
  p.axis = axis;
  p.keep_fast = keep_fast;
  p.keep_slow = keep_slow;
  return p;
}

inline QuantumProcess composite_process(std::vector<QuantumProcess> parts) {
  QuantumProcess p;
  p.kind = ProcessKind::Composite;
  p.parts = std::move(parts);
  return p;
}

// ---------------------------------------------------------------------------
// Applying a process

/// Linear extension of the channel to arbitrary 2x2 matrices. Density
/// matrices map to sub-normalized density matrices; non-Hermitian inputs
/// arise when the channel acts on one block of a larger state.
inline ComplexMatrix apply_process(const QuantumProcess& p,
                                   const ComplexMatrix& x) {
  if (x.dim() != 2) throw BadDim("apply_process: expected a 2x2 matrix");
  switch (p.kind) {
    case ProcessKind::Unitary:
      return p.unitary * x * p.unitary.adjoint();
    case ProcessKind::Dephasing: {
      const auto [pf, ps] = detail::axis_projectors(p.axis);
      return (1.0 - p.strength) * x + p.strength * (pf * x * pf + ps * x * ps);
    }
    case ProcessKind::AmplitudeScaling: {
      const auto [pf, ps] = detail::axis_projectors(p.axis);
      const ComplexMatrix k = p.keep_fast * pf + p.keep_slow * ps;
      return k * x * k.adjoint();
    }
    case ProcessKind::Composite: {
      ComplexMatrix y = x;
      for (const auto& part : p.parts) y = apply_process(part, y);
      return y;
    }
  }
  throw Error("apply_process: unknown process kind");
}

inline ComplexMatrix apply_process(const QuantumProcess& p,
                                   const DensityMatrix& rho) {
  if (rho.qubits() != 1) throw BadDim("apply_process: one-qubit states only");
  return apply_process(p, rho.matrix());
}

/// (I (x) E) on a two-qubit matrix: the process acts on the second qubit,
/// the first is untouched. Works blockwise through the linear extension.
inline ComplexMatrix apply_on_second_qubit(const QuantumProcess& p,
                                           const ComplexMatrix& x) {
  if (x.dim() != 4)
    throw BadDim("apply_on_second_qubit: expected a 4x4 matrix");
  ComplexMatrix out(4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      ComplexMatrix block(2);
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t l = 0; l < 2; ++l)
          block(k, l) = x(2 * i + k, 2 * j + l);
      const ComplexMatrix mapped = apply_process(p, block);
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t l = 0; l < 2; ++l)
          out(2 * i + k, 2 * j + l) = mapped(k, l);
    }
  return out;
}

/// A channel preserves trace iff it preserves the trace of each element of
/// an operator basis; the four Paulis span all 2x2 matrices.
inline bool is_trace_preserving(const QuantumProcess& p, double tol = 1e-9) {
  for (std::size_t m = 0; m < 4; ++m) {
    const Complex tr = apply_process(p, pauli(m)).trace();
    const double want = (m == 0) ? 2.0 : 0.0;
    if (std::abs(tr.real() - want) > tol || std::abs(tr.imag()) > tol)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Process matrix (chi)

/// Chi matrix over {I, sigma_x, sigma_y, sigma_z}. For a trace-preserving
/// channel Tr chi = 1; with loss, Tr chi is the average survival
/// probability over a basis of inputs and stays below 1.
struct ProcessMatrix {
  ComplexMatrix chi{4};
  bool trace_preserving = true;
};

/// E(x) = sum_mn chi_mn sigma_m x sigma_n.
inline ComplexMatrix apply_chi(const ComplexMatrix& chi,
                               const ComplexMatrix& x) {
  if (chi.dim() != 4) throw BadDim("apply_chi: chi must be 4x4");
  if (x.dim() != 2) throw BadDim("apply_chi: expected a 2x2 matrix");
  ComplexMatrix out(2);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < 4; ++n)
      out += chi(m, n) * (pauli(m) * x * pauli(n));
  return out;
}

namespace detail {

/// |m>> = (I (x) sigma_m)(|00> + |11>); component (2i + k) is sigma_m(k, i).
inline Ket pauli_vec(std::size_t m) {
  const ComplexMatrix s = pauli(m);
  Ket v(4, Complex{0.0, 0.0});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k) v[2 * i + k] = s(k, i);
  return v;
}

/// C = sum_ij |i><j| (x) blocks[2i + j] with blocks[2i + j] = E(|i><j|).
inline ComplexMatrix choi_from_blocks(const std::vector<ComplexMatrix>& blocks) {
  ComplexMatrix c(4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const ComplexMatrix& b = blocks[2 * i + j];
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t l = 0; l < 2; ++l) c(2 * i + k, 2 * j + l) = b(k, l);
    }
  return c;
}

/// Invert the probe outputs to the Choi matrix. The four probes H, V, D, R
/// pin the channel's action on I, sigma_z (from H and V), sigma_x (from D)
/// and sigma_y (from R), which yields its action on the matrix units.
inline ComplexMatrix choi_from_probe_outputs(const ComplexMatrix& out_h,
                                             const ComplexMatrix& out_v,
                                             const ComplexMatrix& out_d,
                                             const ComplexMatrix& out_r) {
  const ComplexMatrix lam_i = out_h + out_v;
  const ComplexMatrix lam_x = 2.0 * out_d - lam_i;
  const ComplexMatrix lam_y = lam_i - 2.0 * out_r;
  const ComplexMatrix e01 = 0.5 * (lam_x + Complex{0.0, 1.0} * lam_y);
  const ComplexMatrix e10 = 0.5 * (lam_x - Complex{0.0, 1.0} * lam_y);
  return choi_from_blocks({out_h, e01, e10, out_v});
}

}  // namespace detail

/// Fixed basis change from the Choi matrix to chi over the Pauli basis:
/// chi_mn = <<m|C|n>>/4.
inline ComplexMatrix chi_from_choi(const ComplexMatrix& choi) {
  if (choi.dim() != 4) throw BadDim("chi_from_choi: Choi matrix must be 4x4");
  std::vector<Ket> vecs;
  for (std::size_t m = 0; m < 4; ++m) vecs.push_back(detail::pauli_vec(m));
  ComplexMatrix chi(4);
  for (std::size_t n = 0; n < 4; ++n) {
    const Ket col = mat_vec(choi, vecs[n]);
    for (std::size_t m = 0; m < 4; ++m) chi(m, n) = 0.25 * inner(vecs[m], col);
  }
  return chi;
}

/// Repair a noisy chi estimate: symmetrize, clamp negative eigenvalues to
/// zero, and rescale the trace to one when the channel is known to be
/// trace-preserving. A non-trace-preserving estimate is only rescaled if
/// noise pushed its trace above one (survival cannot exceed certainty).
inline ProcessMatrix project_process_matrix(const ComplexMatrix& raw,
                                            bool trace_preserving) {
  if (raw.dim() != 4)
    throw BadDim("project_process_matrix: chi must be 4x4");
  auto eg = eig_hermitian(0.5 * (raw + raw.adjoint()));
  for (double& v : eg.eigenvalues)
    if (v < 0.0) v = 0.0;
  ComplexMatrix chi = eg.reconstruct();
  const double tr = chi.trace().real();
  if (trace_preserving) {
    if (tr > 1e-300) chi = (1.0 / tr) * chi;
  } else if (tr > 1.0) {
    chi = (1.0 / tr) * chi;
  }
  ProcessMatrix out;
  out.chi = chi;
  out.trace_preserving = trace_preserving;
  return out;
}

// ---------------------------------------------------------------------------
// Tomography drivers

namespace detail {

inline constexpr std::uint64_t kQptSimBase = 0xB0;      // + probe index
inline constexpr std::uint64_t kQptFitBase = 0xC0;      // + probe index
inline constexpr std::uint64_t kQptAncillaSim = 0xB8;
inline constexpr std::uint64_t kQptAncillaFit = 0xC8;

/// Noiseless reconstruction of a (possibly sub-normalized) output from its
/// exact rates on the standard settings: least-squares inversion recovers
/// the matrix, trace included.
inline ComplexMatrix exact_reconstructed_output(const ComplexMatrix& x) {
  const std::size_t qubits = (x.dim() == 2) ? 1 : 2;
  RateData data;
  data.dim = x.dim();
  for (const auto& s : standard_set(qubits)) {
    data.projectors.push_back(s.projector);
    data.counts.push_back(trace_product(x, s.projector).real());
    data.fluxes.push_back(1.0);
  }
  return invert_rates(data);
}

/// Noisy reconstruction of a sub-normalized output at a nominal per-setting
/// flux. Counts are simulated from the exact output rates; the survival
/// probability is estimated from count sums over projector groups that add
/// to a multiple of the identity (all six settings for one qubit, the
/// {HH, HV, VH, VV} partition for two); the shape is fit by state-level
/// maximum likelihood with the flux rescaled by the estimated survival so
/// that the trace-one fit sees consistent rates.
inline ComplexMatrix reconstruct_scaled_output(const ComplexMatrix& x,
                                               double flux,
                                               std::uint64_t sim_seed,
                                               std::uint64_t fit_seed) {
  const std::size_t qubits = (x.dim() == 2) ? 1 : 2;
  const auto settings = standard_set(qubits);
  const double survival = x.trace().real();
  std::vector<CountRecord> records;
  if (survival < 1e-15) {
    for (const auto& s : settings) records.push_back({s.label, 0, flux});
  } else {
    const DensityMatrix xn = DensityMatrix::unchecked((1.0 / survival) * x);
    records = simulate_counts(xn, settings, flux * survival, sim_seed);
    for (auto& r : records) r.total_flux = flux;
  }

  double group = 0.0;
  for (const auto& r : records) {
    if (qubits == 1 || r.setting_label == "HH" || r.setting_label == "HV" ||
        r.setting_label == "VH" || r.setting_label == "VV")
      group += static_cast<double>(r.counts);
  }
  double s_hat = (qubits == 1) ? group / (3.0 * flux) : group / flux;
  if (s_hat < 1e-9) s_hat = 1e-9;

  for (auto& r : records) r.total_flux = s_hat * flux;
  MleOptions opts;
  opts.seed = fit_seed;
  const TomographyResult fit = mle(records, settings, opts);
  return s_hat * fit.estimate.matrix();
}

inline ProcessMatrix chi_from_outputs(const std::vector<ComplexMatrix>& outs,
                                      bool trace_preserving) {
  const ComplexMatrix choi =
      choi_from_probe_outputs(outs[0], outs[1], outs[2], outs[3]);
  return project_process_matrix(chi_from_choi(choi), trace_preserving);
}

inline std::array<Ket, 4> qpt_probes() {
  return {ket_h(), ket_v(), ket_d(), ket_r()};
}

}  // namespace detail

/// Standard process tomography from exact probabilities (no sampling).
inline ProcessMatrix standard_qpt_exact(const QuantumProcess& p) {
  std::vector<ComplexMatrix> outs;
  for (const Ket& probe : detail::qpt_probes())
    outs.push_back(
        detail::exact_reconstructed_output(apply_process(p, outer(probe))));
  return detail::chi_from_outputs(outs, is_trace_preserving(p));
}

/// Standard process tomography: simulate counts for the four probe outputs
/// at the given per-setting flux, tomograph each output by maximum
/// likelihood, and invert to chi.
inline ProcessMatrix standard_qpt(const QuantumProcess& p, double flux,
                                  std::uint64_t seed) {
  if (!(flux > 0.0)) throw OutOfRange("standard_qpt: flux must be positive");
  const auto probes = detail::qpt_probes();
  std::vector<ComplexMatrix> outs;
  for (std::size_t k = 0; k < probes.size(); ++k)
    outs.push_back(detail::reconstruct_scaled_output(
        apply_process(p, outer(probes[k])), flux,
        mix_seed(seed, detail::kQptSimBase + k),
        mix_seed(seed, detail::kQptFitBase + k)));
  return detail::chi_from_outputs(outs, is_trace_preserving(p));
}

/// Ancilla-assisted process tomography from exact probabilities: the joint
/// output of (I (x) E) on |Phi+> is reconstructed once and doubled into the
/// Choi matrix.
inline ProcessMatrix ancilla_qpt_exact(const QuantumProcess& p) {
  const ComplexMatrix joint =
      apply_on_second_qubit(p, outer(ket_phi_plus()));
  const ComplexMatrix est = detail::exact_reconstructed_output(joint);
  return project_process_matrix(chi_from_choi(2.0 * est),
                                is_trace_preserving(p));
}

/// Ancilla-assisted process tomography: one two-qubit tomography of the
/// joint output replaces the four probe tomographies.
inline ProcessMatrix ancilla_qpt(const QuantumProcess& p, double flux,
                                 std::uint64_t seed) {
  if (!(flux > 0.0)) throw OutOfRange("ancilla_qpt: flux must be positive");
  const ComplexMatrix joint =
      apply_on_second_qubit(p, outer(ket_phi_plus()));
  const ComplexMatrix est = detail::reconstruct_scaled_output(
      joint, flux, mix_seed(seed, detail::kQptAncillaSim),
      mix_seed(seed, detail::kQptAncillaFit));
  return project_process_matrix(chi_from_choi(2.0 * est),
                                is_trace_preserving(p));
}

// ---------------------------------------------------------------------------
// Poincare-sphere views

struct PoincareRow {
  std::string label;
  std::array<double, 3> input{};
  std::array<double, 3> output{};
  double purity = 0.0;
  double survival = 0.0;
};

struct PoincareTable {
  std::vector<PoincareRow> rows;
};

namespace detail {

struct BlochImage {
  std::array<double, 3> bloch{};
  double purity = 0.0;
  double survival = 0.0;
};

/// Normalized Bloch vector, purity and survival of a channel output;
/// a fully absorbed state maps to the origin with purity zero.
inline BlochImage transformed_bloch(const QuantumProcess& p,
                                    const DensityMatrix& rho) {
  const ComplexMatrix out = apply_process(p, rho);
  BlochImage image;
  const double survival = out.trace().real();
  if (survival < 1e-15) return image;
  const DensityMatrix on = DensityMatrix::unchecked((1.0 / survival) * out);
  image.bloch = bloch_vector(on);
  image.purity = purity(on);
  image.survival = survival;
  return image;
}

}  // namespace detail

/// Images of the six cardinal polarizations under the process. Output
/// Bloch vectors are renormalized by the survival probability, which is
/// reported separately.
inline PoincareTable poincare_table(const QuantumProcess& p) {
  const std::vector<std::pair<std::string, Ket>> cardinals{
      {"H", ket_h()}, {"V", ket_v()}, {"D", ket_d()},
      {"A", ket_a()}, {"L", ket_l()}, {"R", ket_r()}};
  PoincareTable table;
  for (const auto& [label, ket] : cardinals) {
    const DensityMatrix in = pure_state(ket);
    const detail::BlochImage image = detail::transformed_bloch(p, in);
    PoincareRow row;
    row.label = label;
    row.input = bloch_vector(in);
    row.output = image.bloch;
    row.purity = image.purity;
    row.survival = image.survival;
    table.rows.push_back(std::move(row));
  }
  return table;
}

struct MeshPoint {
  std::array<double, 3> input{};
  std::array<double, 3> output{};
};

/// Image of the pure-state sphere under the process, sampled on a lat-long
/// lattice with n latitudes and n longitudes (n^2 points).
inline std::vector<MeshPoint> sphere_mesh(const QuantumProcess& p,
                                          std::size_t n) {
  if (n < 2) throw OutOfRange("sphere_mesh: need at least two latitudes");
  std::vector<MeshPoint> points;
  points.reserve(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    const double theta = kPi * (static_cast<double>(a) + 0.5) / n;
    for (std::size_t b = 0; b < n; ++b) {
      const double phi = 2.0 * kPi * static_cast<double>(b) / n;
      const Ket ket{std::cos(theta / 2.0),
                    std::exp(Complex{0.0, phi}) * std::sin(theta / 2.0)};
      MeshPoint pt;
      pt.input = {std::sin(theta) * std::cos(phi),
                  std::sin(theta) * std::sin(phi), std::cos(theta)};
      pt.output = detail::transformed_bloch(p, pure_state(ket)).bloch;
      points.push_back(pt);
    }
  }
  return points;
}

inline std::string mesh_to_csv(const std::vector<MeshPoint>& points) {
  std::string out = "in_x,in_y,in_z,out_x,out_y,out_z\n";
  char line[256];
  for (const auto& pt : points) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  pt.input[0], pt.input[1], pt.input[2], pt.output[0],
                  pt.output[1], pt.output[2]);
    out += line;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json chi_to_json(const ProcessMatrix& pm) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < 4; ++j) {
      const Complex z = pm.chi(i, j);
      row.push_back({z.real(), z.imag()});
    }
    rows.push_back(std::move(row));
  }
  return {{"basis", {"I", "X", "Y", "Z"}},
          {"chi", std::move(rows)},
          {"trace_preserving", pm.trace_preserving}};
}

inline nlohmann::json poincare_to_json(const PoincareTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"label", r.label},
                    {"input", {r.input[0], r.input[1], r.input[2]}},
                    {"output", {r.output[0], r.output[1], r.output[2]}},
                    {"purity", r.purity},
                    {"survival", r.survival}});
  }
  return {{"rows", std::move(rows)}};
}

// ---------------------------------------------------------------------------
// Textual process descriptions
//
// Grammar (used by the command-line tools): terms joined with '+' apply in
// order. Each term is one of
//     identity
//     unitary:hwp:ANGLE_DEG | unitary:qwp:ANGLE_DEG | unitary:phase:PHASE_DEG
//     dephase:AXIS_DEG:STRENGTH
//     loss:KEEP_FAST:KEEP_SLOW[:AXIS_DEG]

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim_spaces(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_process_number(const std::string& tok,
                                   const std::string& what) {
  const std::string t = trim_spaces(tok);
  if (t.empty()) throw ParseError("process: missing " + what);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v))
    throw ParseError("process: bad " + what + " '" + tok + "'");
  return v;
}

}  // namespace detail

inline QuantumProcess parse_process(const std::string& text) {
  std::vector<QuantumProcess> parts;
  for (const std::string& term : detail::split_on(text, '+')) {
    const std::vector<std::string> f =
        detail::split_on(detail::trim_spaces(term), ':');
    const std::string head = detail::trim_spaces(f[0]);
    if (head == "identity") {
      if (f.size() != 1)
        throw ParseError("process: identity takes no parameters");
      parts.push_back(identity_process());
    } else if (head == "unitary") {
      if (f.size() != 3)
        throw ParseError("process: unitary needs an element and an angle");
      const std::string elem = detail::trim_spaces(f[1]);
      const double rad =
          deg_to_rad(detail::parse_process_number(f[2], "angle"));
      if (elem == "hwp")
        parts.push_back(unitary_process(hwp_matrix(rad)));
      else if (elem == "qwp")
        parts.push_back(unitary_process(qwp_matrix(rad)));
      else if (elem == "phase")
        parts.push_back(unitary_process(phase_plate_matrix(rad)));
      else
        throw ParseError("process: unknown unitary element '" + elem + "'");
    } else if (head == "dephase") {
      if (f.size() != 3)
        throw ParseError("process: dephase needs an axis and a strength");
      parts.push_back(
          dephasing_process(deg_to_rad(detail::parse_process_number(f[1], "axis")),
                            detail::parse_process_number(f[2], "strength")));
    } else if (head == "loss") {
      if (f.size() != 3 && f.size() != 4)
        throw ParseError(
            "process: loss needs two amplitudes and an optional axis");
      const double axis =
          (f.size() == 4)
              ? deg_to_rad(detail::parse_process_number(f[3], "axis"))
              : 0.0;
      parts.push_back(amplitude_scaling_process(
          detail::parse_process_number(f[1], "amplitude"),
          detail::parse_process_number(f[2], "amplitude"), axis));
    } else if (head.empty()) {
      throw ParseError("process: empty term in description");
    } else {
      throw ParseError("process: unknown term '" + head + "'");
    }
  }
  if (parts.size() == 1) return parts.front();
  return composite_process(std::move(parts));
}

}  // namespace qpol
