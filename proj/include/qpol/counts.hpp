#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "qpol/errors.hpp"
#include "qpol/qmat.hpp"
#include "qpol/rng.hpp"
#include "qpol/states.hpp"

namespace qpol {

// ---------------------------------------------------------------------------
// Measurement settings

/// One polarization-analysis configuration: a rank-1 projector plus a
/// relative throughput factor. The label names the analyzer basis ("DR",
/// "H", or a custom tag for adapted settings).
struct MeasurementSetting {
  std::string label;
  ComplexMatrix projector{2};
  double efficiency = 1.0;
};

/// Enforce the setting invariants: rank-1 idempotent unit-trace projector
/// and positive efficiency.
inline void validate_setting(const MeasurementSetting& s) {
  if (!(s.efficiency > 0.0))
    throw OutOfRange("setting '" + s.label + "': efficiency must be > 0");
  if (std::abs(s.projector.trace() - Complex{1.0, 0.0}) > 1e-10)
    throw NotPhysical("setting '" + s.label + "': projector trace must be 1");
  if (frobenius_distance(s.projector * s.projector, s.projector) > 1e-10)
    throw NotPhysical("setting '" + s.label + "': projector must be idempotent");
}

/// Analyzer ket for one basis letter.
inline Ket basis_ket(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'H': return ket_h();
    case 'V': return ket_v();
    case 'D': return ket_d();
    case 'A': return ket_a();
    case 'R': return ket_r();
    case 'L': return ket_l();
    default:
      throw UnknownLabel(std::string("basis letter '") + c + "' unknown");
  }
}

/// Build the projector for a one- or two-letter polarization label;
/// two letters form the product analyzer |ab><ab|.
inline MeasurementSetting setting_for_label(const std::string& label) {
  MeasurementSetting s;
  s.label = label;
  if (label.size() == 1) {
    s.projector = outer(basis_ket(label[0]));
  } else if (label.size() == 2) {
    s.projector = outer(tensor(basis_ket(label[0]), basis_ket(label[1])));
  } else {
    throw UnknownLabel("label '" + label + "' must be 1 or 2 basis letters");
  }
  return s;
}

inline std::vector<MeasurementSetting> settings_for_labels(
    const std::vector<std::string>& labels) {
  std::vector<MeasurementSetting> out;
  out.reserve(labels.size());
  for (const std::string& l : labels) out.push_back(setting_for_label(l));
  return out;
}

/// The stock tomographically complete sets: the three mutually unbiased
/// bases for one qubit, and the canonical 16-projector list for two.
inline std::vector<MeasurementSetting> standard_set(std::size_t qubits) {
  static const std::vector<std::string> one = {"H", "V", "D", "A", "R", "L"};
  static const std::vector<std::string> two = {
      "HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
      "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL"};
  if (qubits == 1) return settings_for_labels(one);
  if (qubits == 2) return settings_for_labels(two);
  throw BadDim("standard_set: qubits must be 1 or 2");
}

// ---------------------------------------------------------------------------
// Rates and simulated counting

/// Born-rule expected count: flux * efficiency * Tr(rho P), floored at zero
/// against rounding noise.
inline double expected_rate(const DensityMatrix& rho,
                            const MeasurementSetting& s, double flux) {
  if (!(flux > 0.0)) throw OutOfRange("expected_rate: flux must be > 0");
  if (rho.dim() != s.projector.dim())
    throw DimMismatch("expected_rate: state and projector dims differ");
  const double p = (rho.matrix() * s.projector).trace().real();
  return std::max(0.0, flux * s.efficiency * p);
}

/// One acquisition record. total_flux is the expected count a
/// unit-probability setting would have produced (flux folded together with
/// the setting's efficiency), which is all downstream estimation needs.
struct CountRecord {
  std::string setting_label;
  long long counts = 0;
  double total_flux = 0.0;
};

/// Poisson-sample one record per setting. Each setting draws from its own
/// substream keyed by (seed, setting index), so results do not depend on
/// evaluation order and a fixed seed reproduces exactly. dark_rate adds a
/// constant background expectation per setting.
inline std::vector<CountRecord> simulate_counts(
    const DensityMatrix& rho, const std::vector<MeasurementSetting>& settings,
    double flux, std::uint64_t seed, double dark_rate = 0.0) {
  if (!(dark_rate >= 0.0))
    throw OutOfRange("simulate_counts: dark_rate must be >= 0");
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const double lambda = expected_rate(rho, settings[i], flux) + dark_rate;
    Rng sub(mix_seed(seed, i));
    CountRecord rec;
    rec.setting_label = settings[i].label;
    rec.counts = sub.poisson(lambda);
    rec.total_flux = flux * settings[i].efficiency;
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Count file I/O
//
// UTF-8 text, one header line `label,counts,flux`, comma-separated rows.
// Lines starting with '#' are comments and may carry provenance; they are
// ignored on read. Flux round-trips via 17 significant digits.

inline std::string write_counts(const std::vector<CountRecord>& records) {
  std::string out = "label,counts,flux\n";
  char buf[64];
  for (const CountRecord& r : records) {
    out += r.setting_label;
    out += ',';
    std::snprintf(buf, sizeof buf, "%lld", r.counts);
    out += buf;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.total_flux);
    out += buf;
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace detail

inline std::vector<CountRecord> read_counts(std::string_view text) {
  std::vector<CountRecord> out;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    if (!header_seen) {
      if (line != "label,counts,flux")
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected header 'label,counts,flux'");
      header_seen = true;
      continue;
    }

    const auto fields = detail::split_fields(line);
    if (fields.size() != 3)
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 3 comma-separated fields, got " +
                       std::to_string(fields.size()));
    CountRecord rec;
    rec.setting_label = std::string(fields[0]);
    if (rec.setting_label.empty())
      throw ParseError("line " + std::to_string(line_no) +
                       ": field 'label' is empty");

    const std::string_view cf = fields[1];
    auto [cp, cerr] =
        std::from_chars(cf.data(), cf.data() + cf.size(), rec.counts);
    if (cerr != std::errc{} || cp != cf.data() + cf.size() || rec.counts < 0)
      throw ParseError("line " + std::to_string(line_no) +
                       ": field 'counts' must be a non-negative integer, got '" +
                       std::string(cf) + "'");

    const std::string flux_str(fields[2]);
    char* fend = nullptr;
    rec.total_flux = std::strtod(flux_str.c_str(), &fend);
    if (fend != flux_str.c_str() + flux_str.size() ||
        !std::isfinite(rec.total_flux) || rec.total_flux <= 0.0)
      throw ParseError("line " + std::to_string(line_no) +
                       ": field 'flux' must be a positive number, got '" +
                       flux_str + "'");
    out.push_back(std::move(rec));
  }
  if (!header_seen)
    throw ParseError("count file has no 'label,counts,flux' header");
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction design diagnostics

namespace detail {

/// Orthonormal Hermitian operator basis (normalized Pauli products).
inline std::vector<ComplexMatrix> hermitian_basis(std::size_t dim) {
  std::vector<ComplexMatrix> basis;
  if (dim == 2) {
    for (std::size_t i = 0; i < 4; ++i)
      basis.push_back((1.0 / std::sqrt(2.0)) * pauli(i));
  } else if (dim == 4) {
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        basis.push_back(0.5 * tensor(pauli(i), pauli(j)));
  } else {
    throw BadDim("hermitian_basis: dim must be 2 or 4");
  }
  return basis;
}

}  // namespace detail

/// Condition number of the linear-inversion design matrix
/// A[nu][k] = efficiency_nu Tr(P_nu Gamma_k) over the orthonormal Hermitian
/// basis: the square root of the eigenvalue spread of A^T A.
inline double condition_number(const std::vector<MeasurementSetting>& settings) {
  if (settings.empty()) throw RankDeficient("condition_number: no settings");
  const std::size_t dim = settings.front().projector.dim();
  const auto basis = detail::hermitian_basis(dim);
  const std::size_t k = basis.size();
  std::vector<std::vector<double>> a(settings.size(), std::vector<double>(k));
  for (std::size_t n = 0; n < settings.size(); ++n) {
    if (settings[n].projector.dim() != dim)
      throw DimMismatch("condition_number: mixed projector dims");
    for (std::size_t c = 0; c < k; ++c)
      a[n][c] = settings[n].efficiency *
                (settings[n].projector * basis[c]).trace().real();
  }
  // Gram matrix A^T A as a complex Hermitian matrix for the eigensolver.
  ComplexMatrix g(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < settings.size(); ++n) s += a[n][i] * a[n][j];
      g(i, j) = s;
    }
  const auto dec = eig_hermitian(g);
  const double top = dec.eigenvalues.front();
  const double bottom = dec.eigenvalues.back();
  if (bottom <= 1e-12 * std::max(top, 1e-300))
    throw RankDeficient("condition_number: settings do not span state space");
  return std::sqrt(top / bottom);
}

}  // namespace qpol
