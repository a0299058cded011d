#include <array>
#include <cmath>
#include <complex>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "qpol/states.hpp"

using qpol::Complex;
using qpol::ComplexMatrix;
using qpol::DensityMatrix;
using qpol::Ket;
using testutil::require_close;

namespace {

// Independent concurrence oracle for pure two-qubit states:
// C = |<psi| sigma_y tensor sigma_y |psi*>|.
double pure_concurrence_oracle(const Ket& psi) {
  Ket conj_psi = psi;
  for (Complex& z : conj_psi) z = std::conj(z);
  const ComplexMatrix yy = qpol::tensor(qpol::pauli_y(), qpol::pauli_y());
  return std::abs(qpol::inner(psi, qpol::mat_vec(yy, conj_psi)));
}

Ket random_pure_ket(qpol::Rng& rng, std::size_t d) {
  Ket k(d);
  for (Complex& z : k) z = Complex{rng.normal(), rng.normal()};
  return qpol::normalized(k);
}

// Random unitary: Gram-Schmidt of Gaussian columns.
ComplexMatrix random_unitary(qpol::Rng& rng, std::size_t d) {
  std::vector<Ket> cols;
  for (std::size_t c = 0; c < d; ++c) {
    Ket v(d);
    for (Complex& z : v) z = Complex{rng.normal(), rng.normal()};
    for (const Ket& prev : cols) {
      const Complex proj = qpol::inner(prev, v);
      for (std::size_t i = 0; i < d; ++i) v[i] -= proj * prev[i];
    }
    cols.push_back(qpol::normalized(v));
  }
  ComplexMatrix u(d);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t i = 0; i < d; ++i) u(i, c) = cols[c][i];
  return u;
}

DensityMatrix conjugated(const DensityMatrix& rho, const ComplexMatrix& u) {
  return DensityMatrix(u * rho.matrix() * u.adjoint());
}

}  // namespace

TEST_CASE("density matrix construction enforces physicality") {
  ComplexMatrix good(2, {0.5, 0.0, 0.0, 0.5});
  REQUIRE_NOTHROW(DensityMatrix(good));
  REQUIRE(DensityMatrix(good).qubits() == 1);

  ComplexMatrix not_herm(2, {0.5, 0.2, 0.3, 0.5});
  REQUIRE_THROWS_AS(DensityMatrix(not_herm), qpol::NotHermitian);

  ComplexMatrix bad_trace(2, {0.6, 0.0, 0.0, 0.5});
  REQUIRE_THROWS_AS(DensityMatrix(bad_trace), qpol::NotPhysical);

  ComplexMatrix neg(2, {1.2, 0.0, 0.0, -0.2});
  REQUIRE_THROWS_AS(DensityMatrix(neg), qpol::NotPsd);

  ComplexMatrix odd(3);
  odd(0, 0) = 1.0;
  REQUIRE_THROWS_AS(DensityMatrix(odd), qpol::BadDim);
}

TEST_CASE("pure states are rank-1 projectors") {
  DensityMatrix h = qpol::pure_state(qpol::ket_h());
  REQUIRE(h.matrix()(0, 0).real() == Catch::Approx(1.0));
  REQUIRE(std::abs(h.matrix()(1, 1)) < 1e-15);

  DensityMatrix d = qpol::pure_state(qpol::ket_d());
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(d.matrix()(i, j).real() == Catch::Approx(0.5));

  DensityMatrix bell = qpol::pure_state(qpol::ket_phi_plus());
  REQUIRE(bell.matrix()(0, 0).real() == Catch::Approx(0.5));
  REQUIRE(bell.matrix()(0, 3).real() == Catch::Approx(0.5));
  REQUIRE(bell.matrix()(3, 0).real() == Catch::Approx(0.5));
  REQUIRE(std::abs(bell.matrix()(1, 1)) < 1e-15);

  // Unnormalized input is renormalized.
  DensityMatrix scaled = qpol::pure_state(Ket{3.0, 0.0});
  REQUIRE(scaled.matrix()(0, 0).real() == Catch::Approx(1.0));
  REQUIRE(qpol::purity(scaled) == Catch::Approx(1.0).margin(1e-12));

  REQUIRE_THROWS_AS(qpol::pure_state(Ket{0.0, 0.0}), qpol::ZeroVector);
  REQUIRE_THROWS_AS(qpol::pure_state(Ket{1.0, 0.0, 0.0}), qpol::BadDim);
}

TEST_CASE("nonmaximally entangled family") {
  // epsilon = 0 is the product state |HH>.
  REQUIRE(qpol::tangle(qpol::nonmax_entangled(0.0)) ==
          Catch::Approx(0.0).margin(1e-12));
  // epsilon = 1 is the Bell state.
  require_close(qpol::nonmax_entangled(1.0, 0.0).matrix(),
                qpol::pure_state(qpol::ket_phi_plus()).matrix(), 1e-12);
  REQUIRE(qpol::tangle(qpol::nonmax_entangled(1.0)) ==
          Catch::Approx(1.0).margin(1e-9));

  // Pure-state concurrence in closed form: C = 2 eps / (1 + eps^2).
  for (double eps : {0.25, 0.5, 0.8}) {
    const double c_expect = 2.0 * eps / (1.0 + eps * eps);
    for (double phi : {0.0, 1.1, 3.0}) {
      DensityMatrix rho = qpol::nonmax_entangled(eps, phi);
      REQUIRE(qpol::concurrence(rho) == Catch::Approx(c_expect).margin(1e-9));
      REQUIRE(qpol::tangle(rho) ==
              Catch::Approx(c_expect * c_expect).margin(1e-9));
    }
  }
  REQUIRE(qpol::tangle(qpol::nonmax_entangled(0.5)) ==
          Catch::Approx(0.64).margin(1e-9));
}

TEST_CASE("werner family") {
  ComplexMatrix quarter = 0.25 * ComplexMatrix::identity(4);
  require_close(qpol::werner(0.0).matrix(), quarter, 1e-15);
  require_close(qpol::werner(1.0).matrix(),
                qpol::pure_state(qpol::ket_phi_plus()).matrix(), 1e-15);

  // Wootters concurrence of the Werner state: C = max(0, (3p-1)/2).
  REQUIRE(qpol::concurrence(qpol::werner(0.5)) ==
          Catch::Approx(0.25).margin(1e-9));
  REQUIRE(qpol::concurrence(qpol::werner(0.2)) ==
          Catch::Approx(0.0).margin(1e-9));
  REQUIRE(qpol::concurrence(qpol::werner(1.0)) ==
          Catch::Approx(1.0).margin(1e-9));

  REQUIRE_THROWS_AS(qpol::werner(1.5), qpol::OutOfRange);
  REQUIRE_THROWS_AS(qpol::werner(-0.1), qpol::OutOfRange);
}

TEST_CASE("mems family endpoints and crossover") {
  require_close(qpol::mems(1.0).matrix(),
                qpol::pure_state(qpol::ket_phi_plus()).matrix(), 1e-15);

  // At the branch crossover r = 2/3 the entries give
  // Tr rho^2 = 2(1/9) + (1/3)^2 + 2(1/9) = 5/9 exactly.
  DensityMatrix cross = qpol::mems(2.0 / 3.0);
  REQUIRE(qpol::purity(cross) == Catch::Approx(5.0 / 9.0).margin(1e-12));
  REQUIRE(qpol::linear_entropy(cross) ==
          Catch::Approx(16.0 / 27.0).margin(1e-12));
  REQUIRE(qpol::tangle(cross) == Catch::Approx(4.0 / 9.0).margin(1e-9));

  REQUIRE(qpol::concurrence(qpol::mems(0.9)) ==
          Catch::Approx(0.9).margin(1e-9));

  // Concurrence equals the parameter across both branches.
  for (int i = 1; i <= 10; ++i) {
    const double r = 0.1 * i;
    REQUIRE(qpol::concurrence(qpol::mems(r)) == Catch::Approx(r).margin(1e-9));
  }
  REQUIRE_THROWS_AS(qpol::mems(-0.01), qpol::OutOfRange);
  REQUIRE_THROWS_AS(qpol::mems(1.01), qpol::OutOfRange);
}

TEST_CASE("purity and entropies") {
  DensityMatrix pure = qpol::pure_state(qpol::ket_d());
  REQUIRE(qpol::purity(pure) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(qpol::linear_entropy(pure) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(qpol::vn_entropy(pure) == Catch::Approx(0.0).margin(1e-9));

  DensityMatrix mixed = qpol::werner(0.0);
  REQUIRE(qpol::purity(mixed) == Catch::Approx(0.25));
  REQUIRE(qpol::linear_entropy(mixed) == Catch::Approx(1.0));
  REQUIRE(qpol::vn_entropy(mixed) == Catch::Approx(2.0));

  // werner(0.5): Tr rho^2 = (0.5+0.125)^2 + 2*(0.125)^2 + (0.5*0.5)^2*2
  // worked entrywise: diag {0.375, 0.125, 0.125, 0.375}, corners 0.25
  // -> 2(0.375^2) + 2(0.125^2) + 2(0.25^2) = 0.4375.
  REQUIRE(qpol::purity(qpol::werner(0.5)) == Catch::Approx(0.4375));
  REQUIRE(qpol::linear_entropy(qpol::werner(0.5)) == Catch::Approx(0.75));
}

TEST_CASE("fidelity basics") {
  DensityMatrix bell = qpol::pure_state(qpol::ket_phi_plus());
  REQUIRE(qpol::fidelity(bell, bell) == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(qpol::fidelity(qpol::pure_state(qpol::ket_h()),
                         qpol::pure_state(qpol::ket_v())) ==
          Catch::Approx(0.0).margin(1e-9));

  // Pure target against the Werner mixture: <Phi+|rho_W|Phi+> = p + (1-p)/4.
  REQUIRE(qpol::fidelity(bell, qpol::werner(0.5)) ==
          Catch::Approx(0.625).margin(1e-9));

  REQUIRE_THROWS_AS(
      qpol::fidelity(bell, qpol::pure_state(qpol::ket_h())),
      qpol::DimMismatch);
}

TEST_CASE("fidelity is symmetric and bounded on random states") {
  qpol::Rng rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    DensityMatrix a = qpol::ginibre_state(2, rng);
    DensityMatrix b = qpol::ginibre_state(2, rng);
    const double fab = qpol::fidelity(a, b);
    const double fba = qpol::fidelity(b, a);
    REQUIRE(std::abs(fab - fba) < 1e-9);
    REQUIRE(fab >= 0.0);
    REQUIRE(fab <= 1.0 + 1e-9);
    // Distinct full-rank states cannot have unit fidelity.
    REQUIRE(fab < 1.0 - 1e-6);
    REQUIRE(qpol::fidelity(a, a) == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("pure-target fidelity reduces to an expectation value") {
  qpol::Rng rng(555);
  for (int rep = 0; rep < 30; ++rep) {
    const Ket psi = random_pure_ket(rng, 4);
    DensityMatrix a = qpol::pure_state(psi);
    DensityMatrix b = qpol::ginibre_state(2, rng);
    const Ket bpsi = qpol::mat_vec(b.matrix(), psi);
    const double expect = qpol::inner(psi, bpsi).real();
    REQUIRE(qpol::fidelity(a, b) == Catch::Approx(expect).margin(1e-9));
  }
}

TEST_CASE("tangle of named states") {
  REQUIRE(qpol::tangle(qpol::pure_state(qpol::ket_phi_plus())) ==
          Catch::Approx(1.0).margin(1e-9));
  // Product state |HV>.
  DensityMatrix hv = qpol::pure_state(
      qpol::tensor(qpol::ket_h(), qpol::ket_v()));
  REQUIRE(qpol::tangle(hv) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE_THROWS_AS(qpol::tangle(qpol::pure_state(qpol::ket_h())),
                    qpol::BadDim);
}

TEST_CASE("wootters concurrence matches the pure-state oracle") {
  qpol::Rng rng(31415);
  for (int rep = 0; rep < 200; ++rep) {
    const Ket psi = random_pure_ket(rng, 4);
    const double oracle = pure_concurrence_oracle(psi);
    REQUIRE(qpol::concurrence(qpol::pure_state(psi)) ==
            Catch::Approx(oracle).margin(1e-9));
  }
}

TEST_CASE("tangle is invariant under local unitaries") {
  qpol::Rng rng(90210);
  for (int rep = 0; rep < 200; ++rep) {
    DensityMatrix rho = qpol::ginibre_state(2, rng);
    const ComplexMatrix u =
        qpol::tensor(random_unitary(rng, 2), random_unitary(rng, 2));
    const double before = qpol::tangle(rho);
    const double after = qpol::tangle(conjugated(rho, u));
    REQUIRE(std::abs(before - after) < 1e-8);
  }
}

TEST_CASE("bloch vectors of the cardinal states") {
  auto bv = [](const Ket& k) { return qpol::bloch_vector(qpol::pure_state(k)); };
  std::array<double, 3> h = bv(qpol::ket_h());
  REQUIRE(h[2] == Catch::Approx(1.0));
  std::array<double, 3> v = bv(qpol::ket_v());
  REQUIRE(v[2] == Catch::Approx(-1.0));
  std::array<double, 3> d = bv(qpol::ket_d());
  REQUIRE(d[0] == Catch::Approx(1.0));
  std::array<double, 3> a = bv(qpol::ket_a());
  REQUIRE(a[0] == Catch::Approx(-1.0));
  std::array<double, 3> r = bv(qpol::ket_r());
  REQUIRE(r[1] == Catch::Approx(-1.0));
  std::array<double, 3> l = bv(qpol::ket_l());
  REQUIRE(l[1] == Catch::Approx(1.0));
}

TEST_CASE("plane points of reference states") {
  qpol::PlanePoint bell =
      qpol::plane_point(qpol::pure_state(qpol::ket_phi_plus()), "bell");
  REQUIRE(bell.linear_entropy == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(bell.tangle == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(bell.label == "bell");

  qpol::PlanePoint mixed = qpol::plane_point(qpol::werner(0.0));
  REQUIRE(mixed.linear_entropy == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(mixed.tangle == Catch::Approx(0.0).margin(1e-9));

  qpol::PlanePoint cross = qpol::plane_point(qpol::mems(2.0 / 3.0));
  REQUIRE(cross.linear_entropy == Catch::Approx(16.0 / 27.0).margin(1e-9));
  REQUIRE(cross.tangle == Catch::Approx(4.0 / 9.0).margin(1e-9));
}

TEST_CASE("frontier interpolation brackets the mems family") {
  // The frontier evaluated at a mems state's own entropy returns its tangle.
  for (double r : {0.05, 0.3, 0.666, 0.7, 0.95}) {
    DensityMatrix rho = qpol::mems(r);
    const double s = qpol::linear_entropy(rho);
    REQUIRE(qpol::mems_frontier_tangle(s) ==
            Catch::Approx(r * r).margin(1e-6));
  }
  REQUIRE(qpol::mems_frontier_tangle(0.0) == Catch::Approx(1.0));
  REQUIRE(qpol::mems_frontier_tangle(0.95) == 0.0);
  REQUIRE(qpol::mems_frontier_tangle(1.0) == 0.0);
}

TEST_CASE("random states never beat the frontier") {
  qpol::Rng rng(777);
  for (int rep = 0; rep < 1000; ++rep) {
    DensityMatrix rho = qpol::ginibre_state(2, rng);
    const double s = qpol::linear_entropy(rho);
    REQUIRE(qpol::tangle(rho) <= qpol::mems_frontier_tangle(s) + 1e-6);
    REQUIRE_NOTHROW(qpol::plane_point(rho));
  }
}

TEST_CASE("state serialization round-trips bit-exactly") {
  qpol::Rng rng(4242);
  for (int rep = 0; rep < 10; ++rep) {
    DensityMatrix rho = qpol::ginibre_state(2, rng);
    const std::string text = qpol::density_to_json(rho).dump();
    DensityMatrix back = qpol::density_from_json(nlohmann::json::parse(text));
    REQUIRE(back.qubits() == rho.qubits());
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        REQUIRE(back.matrix()(i, j) == rho.matrix()(i, j));
  }

  DensityMatrix one = qpol::ginibre_state(1, rng);
  DensityMatrix back = qpol::density_from_json(qpol::density_to_json(one));
  REQUIRE(back.qubits() == 1);
  REQUIRE(back.matrix()(0, 1) == one.matrix()(0, 1));
}

TEST_CASE("state deserialization rejects malformed documents") {
  using nlohmann::json;
  REQUIRE_THROWS_AS(qpol::density_from_json(json::array()), qpol::ParseError);
  REQUIRE_THROWS_AS(qpol::density_from_json(json{{"qubits", 3}}),
                    qpol::ParseError);
  json j = qpol::density_to_json(qpol::werner(0.3));
  j["matrix"][0].erase(3);
  REQUIRE_THROWS_AS(qpol::density_from_json(j), qpol::ParseError);
  // Structurally fine but unphysical content must also be rejected.
  json bad = qpol::density_to_json(qpol::werner(0.3));
  bad["matrix"][0][0] = {0.9, 0.0};
  REQUIRE_THROWS_AS(qpol::density_from_json(bad), qpol::Error);
}
