#include <algorithm>
#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "qpol/counts.hpp"
#include "qpol/states.hpp"
#include "qpol/tomo.hpp"

using namespace qpol;

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ComplexMatrix diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a - b;
}

TParams random_params(std::size_t dim, Rng& rng) {
  TParams p = TParams::zeros(dim);
  for (double& v : p.t) v = rng.normal();
  for (std::size_t i = 0; i < dim; ++i) p.t[i] = std::abs(p.t[i]) + 0.2;
  return p;
}

}  // namespace

TEST_CASE("linear inversion recovers exact probabilities") {
  SECTION("single qubit, six settings") {
    const auto rho = pure_state(ket_h());
    const auto data = exact_rate_data(rho, standard_set(1), 1000.0);
    const auto result = linear_inversion_on(data);
    REQUIRE(result.method == Method::LinearInversion);
    REQUIRE(result.iterations == 0);
    REQUIRE(result.converged);
    REQUIRE(result.physical);
    REQUIRE_FALSE(result.neg_log_likelihood.has_value());
    REQUIRE(diff(result.estimate.matrix(), rho.matrix()).max_abs() < 1e-10);
  }
  SECTION("two qubits, sixteen settings") {
    const auto rho = pure_state(ket_phi_plus());
    const auto data = exact_rate_data(rho, standard_set(2), 250.0);
    const auto result = linear_inversion_on(data);
    REQUIRE(diff(result.estimate.matrix(), rho.matrix()).max_abs() < 1e-10);
    REQUIRE(result.physical);
  }
}

TEST_CASE("linear inversion is the identity map on exact data") {
  Rng rng(0xDECAF);
  for (int rep = 0; rep < 200; ++rep) {
    const int qubits = rep < 100 ? 1 : 2;
    const auto rho = ginibre_state(qubits, rng);
    const auto data = exact_rate_data(rho, standard_set(qubits), 5000.0);
    const auto result = linear_inversion_on(data);
    REQUIRE(diff(result.estimate.matrix(), rho.matrix()).max_abs() < 1e-9);
  }
}

TEST_CASE("starved counts can invert to a non-physical matrix") {
  const auto rho = pure_state(ket_phi_plus());
  const auto settings = standard_set(2);
  int flagged = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto records = simulate_counts(rho, settings, 100.0, seed);
    const auto result = linear_inversion(records, settings);
    if (!result.physical) {
      ++flagged;
      const auto dec = eig_hermitian(
          0.5 * (result.estimate.matrix() + result.estimate.matrix().adjoint()));
      REQUIRE(dec.eigenvalues.back() < -1e-9);
    }
  }
  // A pure target at flux 100 per setting sits on the state-space boundary;
  // sampling noise pushes the unconstrained estimate outside almost always.
  REQUIRE(flagged >= 10);
}

TEST_CASE("reconstruction rejects malformed inputs") {
  const auto rho = pure_state(ket_h());
  SECTION("record label absent from the settings") {
    const auto settings = standard_set(1);
    std::vector<CountRecord> records{{"Q", 10, 100.0}};
    REQUIRE_THROWS_AS(linear_inversion(records, settings), UnknownLabel);
  }
  SECTION("settings that do not span the state space") {
    const auto settings = settings_for_labels({"H", "V", "D", "A"});
    std::vector<CountRecord> records;
    for (const auto& s : settings) records.push_back({s.label, 50, 100.0});
    REQUIRE_THROWS_AS(linear_inversion(records, settings), RankDeficient);
  }
  SECTION("fewer aggregated records than parameters") {
    const auto settings = standard_set(1);
    std::vector<CountRecord> records{{"H", 90, 100.0}, {"V", 10, 100.0}};
    REQUIRE_THROWS_AS(linear_inversion(records, settings), RankDeficient);
  }
  SECTION("bad record values") {
    const auto settings = standard_set(1);
    REQUIRE_THROWS_AS(
        linear_inversion({{"H", 10, 0.0}}, settings), OutOfRange);
    REQUIRE_THROWS_AS(
        linear_inversion({{"H", -1, 100.0}}, settings), OutOfRange);
  }
}

TEST_CASE("duplicate labels aggregate by summing counts and fluxes") {
  const auto settings = standard_set(1);
  const std::vector<CountRecord> records{
      {"H", 500, 1000.0}, {"V", 0, 500.0}, {"H", 300, 1000.0}};
  const auto data = aggregate_records(records, settings);
  REQUIRE(data.counts.size() == 2);
  // Rows come out in label order: H before V.
  REQUIRE(data.counts[0] == 800.0);
  REQUIRE(data.fluxes[0] == 2000.0);
  REQUIRE(data.counts[1] == 0.0);
  REQUIRE(data.fluxes[1] == 500.0);
  REQUIRE(diff(data.projectors[0], pure_state(ket_h()).matrix()).max_abs() <
          1e-12);
}

TEST_CASE("parameter factorization round-trips") {
  Rng rng(0x7BA9);
  for (int rep = 0; rep < 20; ++rep) {
    for (const std::size_t dim : {std::size_t{2}, std::size_t{4}}) {
      const TParams p = random_params(dim, rng);
      const ComplexMatrix rho = p.to_density();
      const TParams back = TParams::from_density(rho);
      REQUIRE(back.t.size() == TParams::param_count(dim));
      REQUIRE(diff(back.to_density(), rho).max_abs() < 1e-12);
    }
  }
}

TEST_CASE("likelihood matches a hand-computed value") {
  TParams p = TParams::zeros(2);
  p.t = {1.0, 1.0, 0.0, 0.0};  // T = identity, rho = I/2
  RateData data;
  data.dim = 2;
  data.projectors = {pure_state(ket_h()).matrix(), pure_state(ket_d()).matrix()};
  data.counts = {40.0, 60.0};
  data.fluxes = {100.0, 100.0};
  const double expected =
      (50.0 - 40.0 * std::log(50.0)) + (50.0 - 60.0 * std::log(50.0));
  REQUIRE(nll(p, data) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("likelihood gradient matches central finite differences") {
  Rng rng(0x9A4D);
  for (int rep = 0; rep < 50; ++rep) {
    const int qubits = rep < 25 ? 1 : 2;
    const auto rho = ginibre_state(qubits, rng);
    const auto settings = standard_set(qubits);
    const auto records =
        simulate_counts(rho, settings, 1000.0, 0x600D + std::uint64_t(rep));
    const auto data = aggregate_records(records, settings);

    TParams p = random_params(data.dim, rng);
    const auto grad = nll_gradient(p, data);
    for (std::size_t k = 0; k < p.t.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(p.t[k]));
      TParams hi = p, lo = p;
      hi.t[k] += h;
      lo.t[k] -= h;
      const double fd = (nll(hi, data) - nll(lo, data)) / (2.0 * h);
      const double scale = std::max({1e-8, std::abs(grad[k]), std::abs(fd)});
      REQUIRE(std::abs(grad[k] - fd) / scale < 1e-5);
    }
  }
}

TEST_CASE("likelihood fit reproduces a noiseless mixed state") {
  const auto rho = mems(0.8);
  const auto data = exact_rate_data(rho, standard_set(2), 1e6);
  const auto result = mle_on(data);
  REQUIRE(result.method == Method::MaxLikelihood);
  REQUIRE(result.physical);
  REQUIRE(result.neg_log_likelihood.has_value());
  REQUIRE(fidelity(result.estimate, rho) > 1.0 - 1e-6);
}

TEST_CASE("likelihood estimates stay physical under noise") {
  Rng rng(0xF00D);
  for (int rep = 0; rep < 30; ++rep) {
    const int qubits = rep < 15 ? 1 : 2;
    const auto rho = ginibre_state(qubits, rng);
    const auto settings = standard_set(qubits);
    const auto records =
        simulate_counts(rho, settings, 1000.0, 0xBEEF + std::uint64_t(rep));
    const auto result = mle(records, settings);
    const ComplexMatrix& est = result.estimate.matrix();
    REQUIRE(est.hermiticity_defect() <= 1e-9);
    REQUIRE(std::abs(est.trace().real() - 1.0) <= 1e-9);
    const auto dec = eig_hermitian(0.5 * (est + est.adjoint()));
    REQUIRE(dec.eigenvalues.back() >= -1e-10);
  }
}

TEST_CASE("noisy Bell-state reconstruction is accurate") {
  const auto rho = pure_state(ket_phi_plus());
  const auto result = standard_tomography(rho, 16.0 * 1e4, 42);
  REQUIRE(result.fidelity_to_target.has_value());
  REQUIRE(*result.fidelity_to_target >= 0.99);
}

TEST_CASE("degenerate single-setting counts still fit a physical state") {
  // Every count on HH, zeros everywhere else. No state reproduces that
  // pattern (zeros on the diagonal-basis settings contradict a unit HH
  // probability), so the likelihood compromises — but the estimate must
  // stay physical, beat the naive HH projector in likelihood, and keep HH
  // as its dominant component.
  const auto settings = standard_set(2);
  std::vector<CountRecord> records;
  for (const auto& s : settings)
    records.push_back({s.label, s.label == "HH" ? 1000 : 0, 1000.0});
  const auto data = aggregate_records(records, settings);
  const auto result = mle(records, settings);

  const auto dec = eig_hermitian(0.5 * (result.estimate.matrix() +
                                        result.estimate.matrix().adjoint()));
  REQUIRE(dec.eigenvalues.back() >= -1e-10);

  const auto& est = result.estimate.matrix();
  for (std::size_t i = 1; i < 4; ++i)
    REQUIRE(est(0, 0).real() > est(i, i).real());

  // Likelihood of the HH projector nudged just off the boundary.
  auto hh = eig_hermitian(pure_state(tensor(ket_h(), ket_h())).matrix());
  double total = 0.0;
  for (double& lam : hh.eigenvalues) {
    lam = std::max(lam, 1e-9);
    total += lam;
  }
  ComplexMatrix reg(4);
  for (std::size_t m = 0; m < 4; ++m)
    reg += (hh.eigenvalues[m] / total) * outer(hh.eigenvectors[m]);
  REQUIRE(*result.neg_log_likelihood <
          nll(TParams::from_density(reg), data));
}

TEST_CASE("initialization projects the inversion onto positive states") {
  SECTION("noisy two-qubit data") {
    const auto rho = pure_state(ket_phi_plus());
    const auto settings = standard_set(2);
    const auto records = simulate_counts(rho, settings, 200.0, 3);
    const TParams t0 = init_from_inversion(records, settings);

    // Independent projection: hermitize, floor the spectrum, renormalize.
    const auto inv = linear_inversion(records, settings);
    const ComplexMatrix h =
        0.5 * (inv.estimate.matrix() + inv.estimate.matrix().adjoint());
    auto dec = eig_hermitian(h);
    double total = 0.0;
    for (double& lam : dec.eigenvalues) {
      lam = std::max(lam, 1e-6);
      total += lam;
    }
    ComplexMatrix proj(4);
    for (std::size_t m = 0; m < 4; ++m)
      proj += (dec.eigenvalues[m] / total) * outer(dec.eigenvectors[m]);
    REQUIRE(fidelity(DensityMatrix::unchecked(t0.to_density()),
                     DensityMatrix::unchecked(proj)) > 1.0 - 1e-9);
  }
  SECTION("rank-one inversion keeps a strictly positive floor") {
    const auto rho = pure_state(tensor(ket_h(), ket_h()));
    const auto data = exact_rate_data(rho, standard_set(2), 1000.0);
    const TParams t0 = init_from_inversion_on(data);
    const auto dec = eig_hermitian(t0.to_density());
    REQUIRE(dec.eigenvalues.back() >= 9e-7);
  }
}

TEST_CASE("median infidelity falls as flux grows") {
  const auto rho = werner(0.7);
  const auto settings = standard_set(2);
  std::vector<double> medians;
  for (const double flux : {1e2, 1e3, 1e4}) {
    std::vector<double> infidelities;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto records = simulate_counts(rho, settings, flux,
                                           mix_seed(0xC0FFEE, seed));
      MleOptions opts;
      opts.seed = mix_seed(0xFEED, seed);
      const auto result = mle(records, settings, opts);
      infidelities.push_back(1.0 - fidelity(result.estimate, rho));
    }
    medians.push_back(median_of(infidelities));
  }
  REQUIRE(medians[1] < medians[0]);
  REQUIRE(medians[2] < medians[1]);
}

TEST_CASE("adaptive plan falls back to the standard set when featureless") {
  SECTION("two qubits") {
    TomographyResult stage1;
    stage1.estimate = werner(0.0);  // maximally mixed
    const auto plan = adaptive_plan(stage1, 1600.0);
    const auto std_set = standard_set(2);
    REQUIRE(plan.size() == std_set.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
      REQUIRE(plan[i].label == std_set[i].label);
      REQUIRE(plan[i].efficiency == Catch::Approx(100.0).epsilon(1e-12));
    }
  }
  SECTION("single qubit") {
    TomographyResult stage1;
    stage1.estimate = DensityMatrix(0.5 * ComplexMatrix::identity(2));
    const auto plan = adaptive_plan(stage1, 600.0);
    REQUIRE(plan.size() == 6);
    for (const auto& s : plan)
      REQUIRE(s.efficiency == Catch::Approx(100.0).epsilon(1e-12));
  }
}

TEST_CASE("adaptive plan concentrates on the estimated eigenbasis") {
  TomographyResult stage1;
  stage1.estimate = pure_state(ket_h());
  const double budget = 1e4;
  const auto plan = adaptive_plan(stage1, budget);
  REQUIRE(plan.size() == 6);
  REQUIRE(diff(plan[0].projector, pure_state(ket_h()).matrix()).max_abs() <
          1e-9);
  REQUIRE(diff(plan[1].projector, pure_state(ket_v()).matrix()).max_abs() <
          1e-9);
  REQUIRE(plan[0].efficiency + plan[1].efficiency >= 0.5 * budget);
  double total = 0.0;
  for (const auto& s : plan) total += s.efficiency;
  REQUIRE(total == Catch::Approx(budget).epsilon(1e-12));
  REQUIRE(std::isfinite(condition_number(plan)));
}

TEST_CASE("adaptive plan spans the state space for generic estimates") {
  ComplexMatrix d(4);
  d(0, 0) = 0.4;
  d(1, 1) = 0.3;
  d(2, 2) = 0.2;
  d(3, 3) = 0.1;
  TomographyResult stage1;
  stage1.estimate = DensityMatrix(d);
  const double budget = 3200.0;
  const auto plan = adaptive_plan(stage1, budget);
  REQUIRE(plan.size() == 20);
  double total = 0.0, aligned = 0.0;
  for (const auto& s : plan) {
    validate_setting(s);
    total += s.efficiency;
    if (s.label[0] == 'e') aligned += s.efficiency;
  }
  REQUIRE(total == Catch::Approx(budget).epsilon(1e-12));
  REQUIRE(aligned >= 0.5 * budget - 1e-9);
  REQUIRE(std::isfinite(condition_number(plan)));
}

TEST_CASE("complement bases are mutually unbiased") {
  std::vector<ComplexMatrix> bases = detail::mub_complements_2q();
  bases.push_back(ComplexMatrix::identity(4));  // computational
  for (const auto& b : bases) {  // each basis is orthonormal
    const ComplexMatrix g = b.adjoint() * b;
    REQUIRE(diff(g, ComplexMatrix::identity(4)).max_abs() < 1e-9);
  }
  for (std::size_t x = 0; x < bases.size(); ++x)
    for (std::size_t y = x + 1; y < bases.size(); ++y) {
      const ComplexMatrix overlap = bases[x].adjoint() * bases[y];
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
          REQUIRE(std::norm(overlap(i, j)) == Catch::Approx(0.25).margin(1e-9));
    }
}

TEST_CASE("adaptive plan validates its inputs") {
  TomographyResult stage1;
  stage1.estimate = pure_state(ket_h());
  REQUIRE_THROWS_AS(adaptive_plan(stage1, 3.0), BudgetTooSmall);
  stage1.physical = false;
  REQUIRE_THROWS_AS(adaptive_plan(stage1, 1000.0), NotPhysical);
}

TEST_CASE("full split reproduces the standard pipeline bit for bit") {
  Rng rng(0x51);
  const auto rho = ginibre_state(2, rng);
  const auto standard = standard_tomography(rho, 1e4, 9);
  const auto adaptive = adaptive_tomography(rho, 1e4, 1.0, 9);
  REQUIRE(diff(adaptive.final_result.estimate.matrix(),
               standard.estimate.matrix())
              .max_abs() == 0.0);
  REQUIRE(*adaptive.final_result.neg_log_likelihood ==
          *standard.neg_log_likelihood);
  REQUIRE(adaptive.final_result.iterations == standard.iterations);
}

TEST_CASE("adaptive refinement improves on its own first stage") {
  const auto rho = pure_state(ket_h());
  const auto out = adaptive_tomography(rho, 1e5, 0.2, 7);
  REQUIRE(out.stage1.fidelity_to_target.has_value());
  REQUIRE(out.final_result.fidelity_to_target.has_value());
  const double infid1 = 1.0 - *out.stage1.fidelity_to_target;
  const double infid2 = 1.0 - *out.final_result.fidelity_to_target;
  REQUIRE(infid2 <= infid1);
}

TEST_CASE("record order does not change reconstructions") {
  const auto rho = pure_state(ket_phi_plus());
  const auto settings = standard_set(2);
  auto records = simulate_counts(rho, settings, 500.0, 11);
  records.push_back({"HH", 3, 50.0});  // duplicate label on top

  auto shuffled = records;
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 5, shuffled.end());

  const auto inv_a = linear_inversion(records, settings);
  const auto inv_b = linear_inversion(shuffled, settings);
  REQUIRE(diff(inv_a.estimate.matrix(), inv_b.estimate.matrix()).max_abs() <
          1e-15);

  MleOptions opts;
  opts.seed = 77;
  const auto fit_a = mle(records, settings, opts);
  const auto fit_b = mle(shuffled, settings, opts);
  REQUIRE(diff(fit_a.estimate.matrix(), fit_b.estimate.matrix()).max_abs() <
          1e-15);
}

TEST_CASE("results serialize with method names and optional fields") {
  const auto rho = pure_state(ket_h());
  const auto data = exact_rate_data(rho, standard_set(1), 1000.0);

  const auto inv = linear_inversion_on(data);
  const auto ji = result_to_json(inv);
  REQUIRE(ji.at("method") == "linear_inversion");
  REQUIRE(ji.at("neg_log_likelihood").is_null());
  REQUIRE(ji.at("fidelity_to_target").is_null());
  REQUIRE(ji.at("error_bars").is_null());
  REQUIRE(ji.at("converged").get<bool>());
  REQUIRE(ji.at("physical").get<bool>());
  const auto round = density_from_json(ji.at("estimate"));
  REQUIRE(diff(round.matrix(), inv.estimate.matrix()).max_abs() < 1e-12);

  auto fit = standard_tomography(rho, 6000.0, 21);
  const auto jf = result_to_json(fit);
  REQUIRE(jf.at("method") == "max_likelihood");
  REQUIRE(jf.at("neg_log_likelihood").is_number());
  REQUIRE(jf.at("fidelity_to_target").is_number());
  REQUIRE(jf.at("iterations").get<int>() >= 1);
}

TEST_CASE("likelihood options have documented defaults") {
  const MleOptions opts;
  REQUIRE(opts.max_iterations == 5000);
  REQUIRE(opts.gradient_tolerance == 1e-8);
  REQUIRE(opts.restarts == 3);
}
