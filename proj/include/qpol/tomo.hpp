#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpol/counts.hpp"
#include "qpol/errors.hpp"
#include "qpol/qmat.hpp"
#include "qpol/rng.hpp"
#include "qpol/states.hpp"

namespace qpol {

// ---------------------------------------------------------------------------
// Results

enum class Method { LinearInversion, MaxLikelihood };

inline const char* method_name(Method m) {
  return m == Method::LinearInversion ? "linear_inversion" : "max_likelihood";
}

/// Output of a reconstruction. Linear inversion may return an unphysical
/// matrix (negative eigenvalues) — `physical` says so; likelihood fits are
/// positive by construction.
struct TomographyResult {
  DensityMatrix estimate = pure_state(ket_h());
  Method method = Method::LinearInversion;
  std::optional<double> neg_log_likelihood;  // set for likelihood fits
  int iterations = 0;
  bool converged = true;
  bool physical = true;
  std::optional<double> fidelity_to_target;
  // Bootstrap error bars are a schema hook only; nothing populates them.
  std::optional<double> error_bars;
};

// ---------------------------------------------------------------------------
// Aggregated rate data
//
// Reconstruction consumes (projector, counts, flux) triples. Records with
// the same label are one measurement observed repeatedly, so they aggregate
// by summed counts and summed fluxes — the Poisson sufficient statistic.
// Counts are carried as reals so exact expected rates can stand in for
// integer data in noiseless studies.

struct RateData {
  std::vector<ComplexMatrix> projectors;
  std::vector<double> counts;
  std::vector<double> fluxes;  // expected counts at unit probability
  std::size_t dim = 2;
};

inline RateData aggregate_records(const std::vector<CountRecord>& records,
                                  const std::vector<MeasurementSetting>& settings) {
  std::map<std::string, std::size_t> by_label;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    validate_setting(settings[i]);
    by_label.emplace(settings[i].label, i);
  }
  // Sums keyed (and later emitted) in label order, so the aggregate is
  // independent of the order records arrived in.
  std::map<std::string, std::pair<double, double>> sums;  // counts, flux
  for (const CountRecord& r : records) {
    if (by_label.find(r.setting_label) == by_label.end())
      throw UnknownLabel("record label '" + r.setting_label +
                         "' has no matching setting");
    if (!(r.total_flux > 0.0))
      throw OutOfRange("record '" + r.setting_label + "': flux must be > 0");
    if (r.counts < 0)
      throw OutOfRange("record '" + r.setting_label + "': negative counts");
    auto& cell = sums[r.setting_label];
    cell.first += static_cast<double>(r.counts);
    cell.second += r.total_flux;
  }
  RateData data;
  if (!settings.empty()) data.dim = settings.front().projector.dim();
  for (const auto& [label, cell] : sums) {
    const ComplexMatrix& proj = settings[by_label.at(label)].projector;
    if (proj.dim() != data.dim)
      throw DimMismatch("aggregate_records: mixed projector dimensions");
    data.projectors.push_back(proj);
    data.counts.push_back(cell.first);
    data.fluxes.push_back(cell.second);
  }
  return data;
}

/// Noiseless data: counts set to their exact expectations.
inline RateData exact_rate_data(const DensityMatrix& rho,
                                const std::vector<MeasurementSetting>& settings,
                                double flux) {
  RateData data;
  data.dim = rho.dim();
  for (const MeasurementSetting& s : settings) {
    validate_setting(s);
    data.projectors.push_back(s.projector);
    data.counts.push_back(expected_rate(rho, s, flux));
    data.fluxes.push_back(flux * s.efficiency);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Linear inversion

namespace detail {

/// Least-squares solve over the orthonormal Hermitian basis:
/// minimize sum_nu (Tr(rho P_nu) - p_nu)^2. Returns the (possibly
/// unphysical) Hermitian estimate.
inline ComplexMatrix invert_rates(const RateData& data) {
  const auto basis = hermitian_basis(data.dim);
  const std::size_t k = basis.size();
  if (data.counts.size() < k)
    throw RankDeficient("linear inversion: fewer settings than parameters");

  std::vector<std::vector<double>> a(data.counts.size(),
                                     std::vector<double>(k));
  std::vector<double> b(data.counts.size());
  for (std::size_t n = 0; n < data.counts.size(); ++n) {
    for (std::size_t c = 0; c < k; ++c)
      a[n][c] = (data.projectors[n] * basis[c]).trace().real();
    b[n] = data.counts[n] / data.fluxes[n];
  }

  // Normal equations via the Hermitian eigensolver (sizes are 4 or 16).
  ComplexMatrix g(k);
  std::vector<double> atb(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < data.counts.size(); ++n)
        s += a[n][i] * a[n][j];
      g(i, j) = s;
    }
    for (std::size_t n = 0; n < data.counts.size(); ++n)
      atb[i] += a[n][i] * b[n];
  }
  const auto dec = eig_hermitian(g);
  if (dec.eigenvalues.back() <=
      1e-12 * std::max(dec.eigenvalues.front(), 1e-300))
    throw RankDeficient("linear inversion: settings do not span state space");

  // x = G^{-1} A^T b through the spectral decomposition of G.
  std::vector<double> x(k, 0.0);
  for (std::size_t m = 0; m < k; ++m) {
    double proj = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      proj += dec.eigenvectors[m][i].real() * atb[i];
    proj /= dec.eigenvalues[m];
    for (std::size_t i = 0; i < k; ++i)
      x[i] += proj * dec.eigenvectors[m][i].real();
  }

  ComplexMatrix rho(data.dim);
  for (std::size_t c = 0; c < k; ++c) rho += Complex{x[c], 0.0} * basis[c];
  return rho;
}

}  // namespace detail

inline TomographyResult linear_inversion_on(const RateData& data) {
  ComplexMatrix rho = detail::invert_rates(data);
  TomographyResult result;
  result.method = Method::LinearInversion;
  result.iterations = 0;
  result.converged = true;
  const auto dec = eig_hermitian(rho);
  result.physical = dec.eigenvalues.back() >= -1e-9;
  result.estimate = DensityMatrix::unchecked(std::move(rho));
  return result;
}

inline TomographyResult linear_inversion(
    const std::vector<CountRecord>& records,
    const std::vector<MeasurementSetting>& settings) {
  return linear_inversion_on(aggregate_records(records, settings));
}

// ---------------------------------------------------------------------------
// Likelihood parameterization
//
// rho(t) = T^dagger T / Tr(T^dagger T) with T lower triangular: the first
// dim entries of t are the real diagonal, the rest are (re, im) pairs for
// the sub-diagonal entries in row-major order. Any parameter vector maps to
// a legitimate state, so the likelihood can be optimized unconstrained.

struct TParams {
  std::size_t dim = 2;
  std::vector<double> t;

  static std::size_t param_count(std::size_t dim) { return dim * dim; }

  static TParams zeros(std::size_t dim) {
    TParams p;
    p.dim = dim;
    p.t.assign(param_count(dim), 0.0);
    return p;
  }

  /// Lower-triangular T from the packed parameter vector.
  ComplexMatrix to_matrix() const {
    if (t.size() != param_count(dim))
      throw BadDim("TParams: wrong parameter count for dim");
    ComplexMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = t[i];
    std::size_t k = dim;
    for (std::size_t i = 1; i < dim; ++i)
      for (std::size_t j = 0; j < i; ++j) {
        m(i, j) = Complex{t[k], t[k + 1]};
        k += 2;
      }
    return m;
  }

  /// Normalized density matrix rho(t).
  ComplexMatrix to_density() const {
    const ComplexMatrix m = to_matrix();
    ComplexMatrix rho = m.adjoint() * m;
    const double tr = rho.trace().real();
    if (tr < 1e-300)
      throw ZeroVector("TParams: zero parameter vector has no state");
    rho *= 1.0 / tr;
    return rho;
  }

  /// Factor a positive-definite unit-trace matrix. Builds T bottom-up so
  /// that T^dagger T (not T T^dagger) reproduces rho.
  static TParams from_density(const ComplexMatrix& rho) {
    const std::size_t n = rho.dim();
    ComplexMatrix m(n);
    for (std::size_t kk = n; kk-- > 0;) {
      double diag2 = rho(kk, kk).real();
      for (std::size_t mm = kk + 1; mm < n; ++mm) diag2 -= std::norm(m(mm, kk));
      const double dkk = std::sqrt(std::max(diag2, 0.0));
      m(kk, kk) = std::max(dkk, 1e-150);
      for (std::size_t i = 0; i < kk; ++i) {
        Complex s = rho(i, kk);
        for (std::size_t mm = kk + 1; mm < n; ++mm)
          s -= std::conj(m(mm, i)) * m(mm, kk);
        m(kk, i) = std::conj(s / m(kk, kk).real());
      }
    }
    TParams p = zeros(n);
    for (std::size_t i = 0; i < n; ++i) p.t[i] = m(i, i).real();
    std::size_t k = n;
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) {
        p.t[k] = m(i, j).real();
        p.t[k + 1] = m(i, j).imag();
        k += 2;
      }
    return p;
  }
};

// ---------------------------------------------------------------------------
// Poisson likelihood

namespace detail {

inline constexpr double kLogFloor = 1e-12;

/// Tr(a b) without forming the product matrix.
inline Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  Complex t{0.0, 0.0};
  const std::size_t d = a.dim();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) t += a(i, j) * b(j, i);
  return t;
}

}  // namespace detail

/// Negative log-likelihood L(t) = sum_nu [lambda_nu - n_nu ln lambda_nu]
/// with lambda_nu = flux_nu Tr(rho(t) P_nu), floored inside the log so
/// zero-probability settings stay finite.
inline double nll(const TParams& t, const RateData& data) {
  const ComplexMatrix tm = t.to_matrix();
  const ComplexMatrix tt = tm.adjoint() * tm;
  const double g = tt.trace().real();
  if (g < 1e-300) throw ZeroVector("nll: zero parameter vector has no state");
  double total = 0.0;
  for (std::size_t n = 0; n < data.counts.size(); ++n) {
    const double lambda = std::max(
        0.0,
        data.fluxes[n] * detail::trace_product(tt, data.projectors[n]).real() / g);
    total += lambda -
             data.counts[n] * std::log(std::max(lambda, detail::kLogFloor));
  }
  return total;
}

/// Analytic gradient of nll with respect to the packed parameters.
inline std::vector<double> nll_gradient(const TParams& t, const RateData& data) {
  const std::size_t d = t.dim;
  const ComplexMatrix tm = t.to_matrix();
  ComplexMatrix tt = tm.adjoint() * tm;
  const double g = tt.trace().real();
  if (g < 1e-300) throw ZeroVector("nll_gradient: zero parameter vector");

  // dL = 2 Re Tr(M dT), M = (1/g)[sum_nu u_nu flux_nu P_nu
  //                              - (sum_nu u_nu lambda_nu) I] T^dagger,
  // where u_nu = dL/dlambda_nu = 1 - n_nu/lambda_nu (0 below the floor).
  ComplexMatrix weighted(d);
  double lam_weight = 0.0;
  for (std::size_t n = 0; n < data.counts.size(); ++n) {
    const ComplexMatrix& proj = data.projectors[n];
    const double lambda = std::max(
        0.0, data.fluxes[n] * detail::trace_product(tt, proj).real() / g);
    double u = 1.0;
    if (lambda > detail::kLogFloor) u -= data.counts[n] / lambda;
    const double w = u * data.fluxes[n];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) weighted(i, j) += w * proj(i, j);
    lam_weight += u * lambda;
  }
  for (std::size_t i = 0; i < d; ++i) weighted(i, i) -= lam_weight;
  const ComplexMatrix m = (1.0 / g) * (weighted * tm.adjoint());

  std::vector<double> grad(TParams::param_count(d), 0.0);
  for (std::size_t i = 0; i < d; ++i) grad[i] = 2.0 * m(i, i).real();
  std::size_t k = d;
  for (std::size_t i = 1; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      grad[k] = 2.0 * m(j, i).real();
      grad[k + 1] = -2.0 * m(j, i).imag();
      k += 2;
    }
  return grad;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

struct MleOptions {
  int max_iterations = 5000;
  double gradient_tolerance = 1e-8;
  int restarts = 3;
  std::uint64_t seed = 0;
};

/// Optimizer initialization: project the linear-inversion estimate onto the
/// strictly positive manifold (eigenvalue floor 1e-6, trace renormalized)
/// and factor it.
inline TParams init_from_inversion_on(const RateData& data) {
  ComplexMatrix raw = detail::invert_rates(data);
  raw = 0.5 * (raw + raw.adjoint());
  auto dec = eig_hermitian(raw);
  double total = 0.0;
  for (double& lam : dec.eigenvalues) {
    lam = std::max(lam, 1e-6);
    total += lam;
  }
  ComplexMatrix proj(data.dim);
  for (std::size_t m = 0; m < dec.eigenvalues.size(); ++m) {
    const double w = dec.eigenvalues[m] / total;
    const Ket& v = dec.eigenvectors[m];
    for (std::size_t i = 0; i < data.dim; ++i)
      for (std::size_t j = 0; j < data.dim; ++j)
        proj(i, j) += w * v[i] * std::conj(v[j]);
  }
  return TParams::from_density(proj);
}

inline TParams init_from_inversion(
    const std::vector<CountRecord>& records,
    const std::vector<MeasurementSetting>& settings) {
  return init_from_inversion_on(aggregate_records(records, settings));
}

namespace detail {

struct FitOutcome {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Limited-memory BFGS with Armijo backtracking. Deterministic: no
/// randomness inside; restarts supply varied starting points.
///
/// Near the optimum the objective changes by less than double rounding can
/// resolve (its magnitude grows with total counts), so the sufficient-
/// decrease test carries an explicit rounding allowance; without it the
/// line search thrashes on noise instead of letting the quasi-Newton step
/// keep contracting the gradient. A secondary stop fires when the gradient
/// norm has not made a new low for a long stretch.
inline FitOutcome minimize_nll(const TParams& start, const RateData& data,
                               const MleOptions& opts) {
  const std::size_t n = start.t.size();
  TParams cur = start;
  FitOutcome out;
  out.x = cur.t;
  double f = nll(cur, data);
  std::vector<double> g = nll_gradient(cur, data);

  std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;
  const std::size_t memory = 8;
  double lowest_g = std::numeric_limits<double>::infinity();
  int lowest_g_iter = 0;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    const double gmax = max_abs(g);
    if (gmax < opts.gradient_tolerance) {
      out.converged = true;
      break;
    }
    if (gmax < lowest_g) {
      lowest_g = gmax;
      lowest_g_iter = iter;
    } else if (iter - lowest_g_iter > 150) {
      break;  // gradient stopped contracting: at the rounding floor
    }

    // Two-loop recursion for p = -H g.
    std::vector<double> p = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      const auto& [s, y] = pairs[i];
      const double rho_i = 1.0 / dot(y, s);
      alpha[i] = rho_i * dot(s, p);
      for (std::size_t k = 0; k < n; ++k) p[k] -= alpha[i] * y[k];
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& v : p) v *= gamma;
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double rho_i = 1.0 / dot(y, s);
      const double beta = rho_i * dot(y, p);
      for (std::size_t k = 0; k < n; ++k) p[k] += (alpha[i] - beta) * s[k];
    }
    for (double& v : p) v = -v;

    double slope = dot(g, p);
    if (!(slope < 0.0)) {  // not a descent direction: reset to steepest
      pairs.clear();
      for (std::size_t k = 0; k < n; ++k) p[k] = -g[k];
      slope = dot(g, p);
      if (!(slope < 0.0)) break;  // gradient numerically zero
    }

    // Backtracking line search (Armijo with a rounding allowance).
    double step = pairs.empty() ? 1.0 / std::max(1.0, gmax) : 1.0;
    const double allowance = 1e-13 * std::max(1.0, std::abs(f));
    TParams trial = cur;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t k = 0; k < n; ++k)
        trial.t[k] = cur.t[k] + step * p[k];
      fn = nll(trial, data);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope + allowance) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!pairs.empty()) {  // drop stale curvature and retry from steepest
        pairs.clear();
        continue;
      }
      break;  // no progress possible at machine precision
    }

    std::vector<double> gn = nll_gradient(trial, data);
    std::vector<double> s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = trial.t[k] - cur.t[k];
      y[k] = gn[k] - g[k];
    }
    if (dot(s, y) > 1e-10 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y))) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (pairs.size() > memory) pairs.pop_front();
    }
    cur = trial;
    f = fn;
    g = std::move(gn);
  }
  out.iterations = iter;
  if (!out.converged && max_abs(g) < opts.gradient_tolerance)
    out.converged = true;
  out.x = cur.t;
  out.value = f;
  return out;
}

}  // namespace detail

/// Maximum-likelihood reconstruction on aggregated data. Multi-start:
/// the inversion-seeded fit plus seeded random perturbations of it; the
/// best final likelihood wins (ties to the earliest start). Deterministic
/// for fixed options.seed.
inline TomographyResult mle_on(const RateData& data,
                               const MleOptions& opts = {}) {
  TParams t0 = init_from_inversion_on(data);
  // Scale to unit trace of T^dagger T; rho(t) is scale-invariant but the
  // optimizer benefits from a consistent starting magnitude.
  const double norm0 = std::sqrt(detail::dot(t0.t, t0.t));

  detail::FitOutcome best;
  bool have_best = false;
  const int restarts = std::max(1, opts.restarts);
  for (int r = 0; r < restarts; ++r) {
    TParams start = t0;
    if (r > 0) {
      Rng rng(mix_seed(opts.seed, 0x5740000ULL + static_cast<std::uint64_t>(r)));
      const double scale =
          0.05 * norm0 / std::sqrt(static_cast<double>(start.t.size()));
      for (double& v : start.t) v += scale * rng.normal();
    }
    detail::FitOutcome fit = detail::minimize_nll(start, data, opts);
    // Likelihood differences below rounding are ties; the earliest start
    // (the inversion-seeded one) keeps them.
    const double tie =
        have_best ? 1e-9 * std::max(1.0, std::abs(best.value)) : 0.0;
    if (!have_best || fit.value < best.value - tie) {
      best = std::move(fit);
      have_best = true;
    }
  }

  TParams winner;
  winner.dim = data.dim;
  winner.t = best.x;
  TomographyResult result;
  result.method = Method::MaxLikelihood;
  result.estimate = DensityMatrix::unchecked(winner.to_density());
  result.neg_log_likelihood = best.value;
  result.iterations = best.iterations;
  result.converged = best.converged;
  result.physical = true;
  return result;
}

inline TomographyResult mle(const std::vector<CountRecord>& records,
                            const std::vector<MeasurementSetting>& settings,
                            const MleOptions& opts = {}) {
  return mle_on(aggregate_records(records, settings), opts);
}

// ---------------------------------------------------------------------------
// Adaptive measurement planning

namespace detail {

/// The two complementary single-qubit bases for an eigenbasis {v0, v1}:
/// (v0 +- v1)/sqrt(2) and (v0 +- i v1)/sqrt(2).
inline std::vector<Ket> mub_complements_1q(const Ket& v0, const Ket& v1) {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<Ket> out;
  for (const Complex w : {Complex{1.0, 0.0}, Complex{-1.0, 0.0},
                          Complex{0.0, 1.0}, Complex{0.0, -1.0}}) {
    Ket k(2);
    for (std::size_t i = 0; i < 2; ++i) k[i] = s * (v0[i] + w * v1[i]);
    out.push_back(std::move(k));
  }
  return out;
}

/// Columns of the four bases mutually unbiased to the computational basis
/// of two qubits. The first two are the +-45-degree and circular product
/// bases; the last two are the joint eigenbases of the remaining commuting
/// Pauli-product triples {XY, YZ, ZX} and {YX, ZY, XZ}, obtained from a
/// nondegenerate member combination so eigenvectors are pinned.
inline const std::vector<ComplexMatrix>& mub_complements_2q() {
  static const std::vector<ComplexMatrix> bases = [] {
    std::vector<ComplexMatrix> out;
    const double s = 1.0 / std::sqrt(2.0);
    const ComplexMatrix had(2, {s, s, s, -s});
    const ComplexMatrix circ(2, {s, s, Complex{0.0, s}, Complex{0.0, -s}});
    out.push_back(tensor(had, had));
    out.push_back(tensor(circ, circ));
    const double r2 = std::sqrt(2.0);
    const ComplexMatrix a4 =
        tensor(pauli_x(), pauli_y()) + r2 * tensor(pauli_y(), pauli_z());
    const ComplexMatrix a5 =
        tensor(pauli_y(), pauli_x()) + r2 * tensor(pauli_z(), pauli_y());
    for (const ComplexMatrix& a : {a4, a5}) {
      const auto dec = eig_hermitian(a);
      ComplexMatrix basis(4);
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < 4; ++i)
          basis(i, c) = dec.eigenvectors[c][i];
      out.push_back(std::move(basis));
    }
    return out;
  }();
  return bases;
}

}  // namespace detail

/// Stage-2 measurement plan: projectors aligned with the stage-1 estimate's
/// eigenbasis carry half or more of the budget, mutually unbiased
/// complements keep the set tomographically complete. Per-setting flux
/// allocations ride in the efficiency field and sum to the budget. A
/// featureless (degenerate-spectrum) estimate falls back to the standard
/// set with uniform weights.
inline std::vector<MeasurementSetting> adaptive_plan(
    const TomographyResult& stage1, double budget) {
  if (!stage1.physical)
    throw NotPhysical("adaptive_plan: stage-1 estimate must be physical");
  const std::size_t d = stage1.estimate.dim();
  const auto dec = eig_hermitian(stage1.estimate.matrix());

  std::vector<MeasurementSetting> plan;
  std::vector<double> weights;

  if (dec.eigenvalues.front() - dec.eigenvalues.back() < 1e-6) {
    // Nothing to adapt on.
    plan = standard_set(d == 2 ? 1 : 2);
    weights.assign(plan.size(), 1.0 / static_cast<double>(plan.size()));
  } else if (d == 2) {
    plan.reserve(6);
    for (std::size_t m = 0; m < 2; ++m) {
      MeasurementSetting s;
      s.label = "e" + std::to_string(m);
      s.projector = outer(dec.eigenvectors[m]);
      plan.push_back(std::move(s));
      weights.push_back(0.3);
    }
    const auto comps =
        detail::mub_complements_1q(dec.eigenvectors[0], dec.eigenvectors[1]);
    for (std::size_t m = 0; m < comps.size(); ++m) {
      MeasurementSetting s;
      s.label = "m" + std::to_string(m);
      s.projector = outer(comps[m]);
      plan.push_back(std::move(s));
      weights.push_back(0.1);
    }
  } else {
    // Eigenbasis projectors split half the budget; the four rotated
    // complement bases (16 projectors) split the rest.
    ComplexMatrix v(4);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 4; ++i) v(i, c) = dec.eigenvectors[c][i];
    for (std::size_t m = 0; m < 4; ++m) {
      MeasurementSetting s;
      s.label = "e" + std::to_string(m);
      s.projector = outer(dec.eigenvectors[m]);
      plan.push_back(std::move(s));
      weights.push_back(0.5 / 4.0);
    }
    std::size_t idx = 0;
    for (const ComplexMatrix& basis : detail::mub_complements_2q()) {
      const ComplexMatrix rotated = v * basis;
      for (std::size_t c = 0; c < 4; ++c) {
        Ket col(4);
        for (std::size_t i = 0; i < 4; ++i) col[i] = rotated(i, c);
        MeasurementSetting s;
        s.label = "m" + std::to_string(idx++);
        s.projector = outer(col);
        plan.push_back(std::move(s));
        weights.push_back(0.5 / 16.0);
      }
    }
  }

  if (budget < static_cast<double>(plan.size()))
    throw BudgetTooSmall("adaptive_plan: budget below one count per setting");
  for (std::size_t i = 0; i < plan.size(); ++i)
    plan[i].efficiency = weights[i] * budget;
  return plan;
}

// ---------------------------------------------------------------------------
// Simulation drivers
//
// Seed discipline: each stage derives its own substream from the master
// seed, so the standard driver and adaptive stage 1 consume identical
// randomness — split = 1.0 reproduces the standard result bit for bit.

namespace detail {
inline constexpr std::uint64_t kSimStage1 = 0xA1;
inline constexpr std::uint64_t kFitStage1 = 0xA2;
inline constexpr std::uint64_t kSimStage2 = 0xA3;
inline constexpr std::uint64_t kFitStage2 = 0xA4;
}  // namespace detail

/// Simulate the standard set at equal per-setting flux and fit.
inline TomographyResult standard_tomography(const DensityMatrix& rho_true,
                                            double flux_total,
                                            std::uint64_t seed,
                                            const MleOptions& base_opts = {}) {
  if (!(flux_total > 0.0))
    throw OutOfRange("standard_tomography: flux_total must be > 0");
  const auto settings = standard_set(rho_true.qubits());
  const double per = flux_total / static_cast<double>(settings.size());
  const auto records =
      simulate_counts(rho_true, settings, per, mix_seed(seed, detail::kSimStage1));
  MleOptions opts = base_opts;
  opts.seed = mix_seed(seed, detail::kFitStage1);
  TomographyResult result = mle(records, settings, opts);
  result.fidelity_to_target = fidelity(result.estimate, rho_true);
  return result;
}

struct AdaptiveResult {
  TomographyResult stage1;
  TomographyResult final_result;
};

/// Two-stage driver: spend `split` of the flux on a standard-set estimate,
/// plan an eigenbasis-aligned set from it, then fit stage-1 and stage-2
/// records pooled. split = 1.0 degenerates to standard_tomography.
inline AdaptiveResult adaptive_tomography(const DensityMatrix& rho_true,
                                          double flux_total, double split,
                                          std::uint64_t seed,
                                          const MleOptions& base_opts = {}) {
  if (!(split > 0.0 && split <= 1.0))
    throw OutOfRange("adaptive_tomography: split must be in (0, 1]");
  if (!(flux_total > 0.0))
    throw OutOfRange("adaptive_tomography: flux_total must be > 0");

  AdaptiveResult out;
  out.stage1 = standard_tomography(rho_true, split * flux_total, seed, base_opts);
  out.stage1.fidelity_to_target = fidelity(out.stage1.estimate, rho_true);
  if (split == 1.0) {
    out.final_result = out.stage1;
    return out;
  }

  const auto settings = standard_set(rho_true.qubits());
  const double per = split * flux_total / static_cast<double>(settings.size());
  const auto records1 = simulate_counts(rho_true, settings, per,
                                        mix_seed(seed, detail::kSimStage1));

  const double budget = (1.0 - split) * flux_total;
  const auto plan = adaptive_plan(out.stage1, budget);
  // Allocations live in the efficiency fields, so unit flux realizes them.
  const auto records2 =
      simulate_counts(rho_true, plan, 1.0, mix_seed(seed, detail::kSimStage2));

  std::vector<MeasurementSetting> pooled_settings = settings;
  for (const MeasurementSetting& s : plan) {
    const bool dup = std::any_of(
        pooled_settings.begin(), pooled_settings.end(),
        [&](const MeasurementSetting& q) { return q.label == s.label; });
    if (!dup) pooled_settings.push_back(s);
  }
  std::vector<CountRecord> pooled = records1;
  pooled.insert(pooled.end(), records2.begin(), records2.end());

  MleOptions opts = base_opts;
  opts.seed = mix_seed(seed, detail::kFitStage2);
  out.final_result = mle(pooled, pooled_settings, opts);
  out.final_result.fidelity_to_target =
      fidelity(out.final_result.estimate, rho_true);
  return out;
}

// ---------------------------------------------------------------------------
// Result serialization

inline nlohmann::json result_to_json(const TomographyResult& r) {
  nlohmann::json j;
  j["method"] = method_name(r.method);
  j["estimate"] = density_to_json(r.estimate);
  j["neg_log_likelihood"] =
      r.neg_log_likelihood ? nlohmann::json(*r.neg_log_likelihood)
                           : nlohmann::json(nullptr);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["physical"] = r.physical;
  j["fidelity_to_target"] = r.fidelity_to_target
                                ? nlohmann::json(*r.fidelity_to_target)
                                : nlohmann::json(nullptr);
  j["error_bars"] = nullptr;  // reserved for a bootstrap hook
  return j;
}

}  // namespace qpol
