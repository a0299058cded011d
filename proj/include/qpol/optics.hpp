#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpol/errors.hpp"
#include "qpol/qmat.hpp"
#include "qpol/states.hpp"

namespace qpol {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// ---------------------------------------------------------------------------
// Jones matrices
//
// Conventions: H/V is the computational basis (Bloch z-axis), D/A sits on x,
// R/L on y. Waveplates are parameterized by the fast-axis angle theta from
// horizontal; a quarter-wave plate retards its slow axis by +pi/2, so at
// theta = 0 it is diag(1, i). Global phases are dropped throughout.

/// Axis rotation [[cos, -sin], [sin, cos]].
inline ComplexMatrix rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return ComplexMatrix(2, {c, -s, s, c});
}

/// Half-wave plate at fast-axis angle theta: [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
inline ComplexMatrix hwp_matrix(double theta) {
  const double c = std::cos(2.0 * theta), s = std::sin(2.0 * theta);
  return ComplexMatrix(2, {c, s, s, -c});
}

/// Quarter-wave plate at fast-axis angle theta: R(t) diag(1, i) R(-t).
inline ComplexMatrix qwp_matrix(double theta) {
  const ComplexMatrix retarder(2, {1.0, 0.0, 0.0, Complex{0.0, 1.0}});
  return rotation_matrix(theta) * retarder * rotation_matrix(-theta);
}

/// Birefringent phase plate: diag(1, e^{i phi}).
inline ComplexMatrix phase_plate_matrix(double phi) {
  return ComplexMatrix(2, {1.0, 0.0, 0.0, std::exp(Complex{0.0, phi})});
}

// ---------------------------------------------------------------------------
// Optical elements

enum class OpticalKind { Hwp, Qwp, PhasePlate, Decoherer };

enum class ElementTarget { Qubit1, Qubit2, Collective };

/// One element on the bench. `angle` is the fast-axis orientation for
/// HWP/QWP/Decoherer, `phase` the retardance of a phase plate, `strength`
/// the dephasing probability of a decoherer. All angles in radians.
struct OpticalElement {
  OpticalKind kind = OpticalKind::Hwp;
  double angle = 0.0;
  double phase = 0.0;
  double strength = 0.0;
  ElementTarget target = ElementTarget::Qubit1;
};

inline OpticalElement hwp(double angle,
                          ElementTarget t = ElementTarget::Qubit1) {
  return {OpticalKind::Hwp, angle, 0.0, 0.0, t};
}
inline OpticalElement qwp(double angle,
                          ElementTarget t = ElementTarget::Qubit1) {
  return {OpticalKind::Qwp, angle, 0.0, 0.0, t};
}
inline OpticalElement phase_plate(double phi,
                                  ElementTarget t = ElementTarget::Qubit1) {
  return {OpticalKind::PhasePlate, 0.0, phi, 0.0, t};
}
inline OpticalElement decoherer(double angle, double strength,
                                ElementTarget t = ElementTarget::Qubit1) {
  return {OpticalKind::Decoherer, angle, 0.0, strength, t};
}

namespace detail {

/// Embed a single-qubit operator on the chosen qubit of a register.
inline ComplexMatrix embed(const ComplexMatrix& u, std::size_t qubits,
                           ElementTarget target) {
  if (qubits == 1) return u;
  return (target == ElementTarget::Qubit1)
             ? tensor(u, ComplexMatrix::identity(2))
             : tensor(ComplexMatrix::identity(2), u);
}

/// Fast/slow axis projectors of a birefringent element at angle theta.
inline std::pair<ComplexMatrix, ComplexMatrix> axis_projectors(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const Ket fast{c, s};
  const Ket slow{-s, c};
  return {outer(fast), outer(slow)};
}

}  // namespace detail

/// Pass a state through one element.
///
/// Waveplates and phase plates act as rho -> U rho U^dagger on the target
/// qubit. A decoherer of strength p dephases in its axis basis:
/// rho -> (1-p) rho + p (P rho P + Q rho Q). Applied collectively to a pair,
/// the delay is common-mode, so only coherences between subspaces of unequal
/// joint delay decay — the both-fast/both-slow block {|ff>, |ss>} keeps its
/// internal coherence (a decoherence-free subspace), while cross terms to
/// the mixed-delay states |fs>, |sf> are damped.
inline DensityMatrix apply_element(const DensityMatrix& rho,
                                   const OpticalElement& e) {
  if (rho.qubits() == 1 && e.target != ElementTarget::Qubit1)
    throw BadTarget("apply_element: single-qubit states only have qubit 1");
  if (e.target == ElementTarget::Collective &&
      e.kind != OpticalKind::Decoherer)
    throw BadTarget("apply_element: collective target is for decoherers");

  switch (e.kind) {
    case OpticalKind::Hwp:
    case OpticalKind::Qwp:
    case OpticalKind::PhasePlate: {
      ComplexMatrix u = (e.kind == OpticalKind::Hwp) ? hwp_matrix(e.angle)
                        : (e.kind == OpticalKind::Qwp)
                            ? qwp_matrix(e.angle)
                            : phase_plate_matrix(e.phase);
      const ComplexMatrix big = detail::embed(u, rho.qubits(), e.target);
      return DensityMatrix::unchecked(big * rho.matrix() * big.adjoint());
    }
    case OpticalKind::Decoherer: {
      const double p = e.strength;
      if (!(p >= 0.0 && p <= 1.0))
        throw OutOfRange("apply_element: decoherer strength must be in [0,1]");
      auto [pf, ps] = detail::axis_projectors(e.angle);
      std::vector<ComplexMatrix> pinch;
      if (e.target == ElementTarget::Collective) {
        pinch.push_back(tensor(pf, pf) + tensor(ps, ps));
        pinch.push_back(tensor(pf, ps));
        pinch.push_back(tensor(ps, pf));
      } else {
        pinch.push_back(detail::embed(pf, rho.qubits(), e.target));
        pinch.push_back(detail::embed(ps, rho.qubits(), e.target));
      }
      ComplexMatrix out = (1.0 - p) * rho.matrix();
      for (const ComplexMatrix& pi : pinch) out += p * (pi * rho.matrix() * pi);
      return DensityMatrix::unchecked(std::move(out));
    }
  }
  throw BadTarget("apply_element: unknown element kind");
}

// ---------------------------------------------------------------------------
// Source and pipelines

/// Two-crystal pair source: the pump angle sets the relative weight of the
/// two downconversion paths and a phase plate sets their relative phase.
struct SourceConfig {
  double pump_angle = 0.0;  // theta_p, radians
  double phase = 0.0;       // phi, radians
};

/// cos(theta_p)|HH> + e^{i phi} sin(theta_p)|VV>.
inline DensityMatrix source_state(const SourceConfig& cfg) {
  const Complex amp =
      std::sin(cfg.pump_angle) * std::exp(Complex{0.0, cfg.phase});
  Ket psi{std::cos(cfg.pump_angle), 0.0, 0.0, amp};
  return pure_state(psi);
}

/// A source followed by an ordered train of elements. An absent source
/// config means the heralded single-photon input |H>.
struct PrepPipeline {
  std::optional<SourceConfig> source;  // nullopt: single-qubit herald
  std::vector<OpticalElement> elements;
};

inline DensityMatrix run_pipeline(const PrepPipeline& p) {
  DensityMatrix rho =
      p.source ? source_state(*p.source) : pure_state(ket_h());
  for (const OpticalElement& e : p.elements) rho = apply_element(rho, e);
  return rho;
}

// ---------------------------------------------------------------------------
// Serialization (angles in degrees externally, radians internally)

inline const char* kind_name(OpticalKind k) {
  switch (k) {
    case OpticalKind::Hwp: return "hwp";
    case OpticalKind::Qwp: return "qwp";
    case OpticalKind::PhasePlate: return "phase_plate";
    case OpticalKind::Decoherer: return "decoherer";
  }
  return "?";
}

inline nlohmann::json pipeline_to_json(const PrepPipeline& p) {
  nlohmann::json j;
  if (p.source) {
    j["source"] = {{"type", "pair"},
                   {"pump_angle_deg", rad_to_deg(p.source->pump_angle)},
                   {"phase_deg", rad_to_deg(p.source->phase)}};
  } else {
    j["source"] = {{"type", "herald"}};
  }
  j["elements"] = nlohmann::json::array();
  for (const OpticalElement& e : p.elements) {
    nlohmann::json je{{"kind", kind_name(e.kind)}};
    if (e.kind == OpticalKind::PhasePlate)
      je["phase_deg"] = rad_to_deg(e.phase);
    else
      je["angle_deg"] = rad_to_deg(e.angle);
    if (e.kind == OpticalKind::Decoherer) je["strength"] = e.strength;
    if (e.target == ElementTarget::Collective)
      je["target"] = "collective";
    else
      je["target"] = (e.target == ElementTarget::Qubit1) ? 1 : 2;
    j["elements"].push_back(std::move(je));
  }
  return j;
}

inline PrepPipeline pipeline_from_json(const nlohmann::json& j) {
  PrepPipeline p;
  if (!j.is_object() || !j.contains("source"))
    throw ParseError("pipeline document needs a 'source' field");
  const auto& src = j.at("source");
  const std::string type = src.value("type", "");
  if (type == "pair") {
    SourceConfig cfg;
    cfg.pump_angle = deg_to_rad(src.value("pump_angle_deg", 0.0));
    cfg.phase = deg_to_rad(src.value("phase_deg", 0.0));
    p.source = cfg;
  } else if (type != "herald") {
    throw ParseError("pipeline source type must be 'pair' or 'herald'");
  }
  for (const auto& je : j.value("elements", nlohmann::json::array())) {
    OpticalElement e;
    const std::string kind = je.value("kind", "");
    if (kind == "hwp") e.kind = OpticalKind::Hwp;
    else if (kind == "qwp") e.kind = OpticalKind::Qwp;
    else if (kind == "phase_plate") e.kind = OpticalKind::PhasePlate;
    else if (kind == "decoherer") e.kind = OpticalKind::Decoherer;
    else throw ParseError("pipeline element kind '" + kind + "' unknown");
    e.angle = deg_to_rad(je.value("angle_deg", 0.0));
    e.phase = deg_to_rad(je.value("phase_deg", 0.0));
    e.strength = je.value("strength", 0.0);
    if (je.contains("target")) {
      const auto& t = je.at("target");
      if (t.is_string() && t.get<std::string>() == "collective")
        e.target = ElementTarget::Collective;
      else if (t.is_number_integer() && t.get<int>() == 1)
        e.target = ElementTarget::Qubit1;
      else if (t.is_number_integer() && t.get<int>() == 2)
        e.target = ElementTarget::Qubit2;
      else
        throw ParseError("pipeline element target must be 1, 2, or 'collective'");
    }
    p.elements.push_back(e);
  }
  return p;
}

}  // namespace qpol
