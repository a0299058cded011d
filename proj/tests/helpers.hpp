#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "qpol/qmat.hpp"
#include "qpol/rng.hpp"

namespace testutil {

inline void require_close(const qpol::ComplexMatrix& a,
                          const qpol::ComplexMatrix& b, double tol = 1e-10) {
  REQUIRE(a.dim() == b.dim());
  INFO("frobenius distance = " << qpol::frobenius_distance(a, b));
  REQUIRE(qpol::frobenius_distance(a, b) <= tol);
}

inline void require_close(const qpol::Ket& a, const qpol::Ket& b,
                          double tol = 1e-10) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::norm(a[i] - b[i]);
  INFO("ket distance = " << std::sqrt(d));
  REQUIRE(std::sqrt(d) <= tol);
}

inline qpol::ComplexMatrix random_hermitian(qpol::Rng& rng, std::size_t dim) {
  qpol::ComplexMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    m(i, i) = rng.normal();
    for (std::size_t j = i + 1; j < dim; ++j) {
      const qpol::Complex z{rng.normal(), rng.normal()};
      m(i, j) = z;
      m(j, i) = std::conj(z);
    }
  }
  return m;
}

inline qpol::ComplexMatrix random_psd(qpol::Rng& rng, std::size_t dim) {
  qpol::ComplexMatrix g(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      g(i, j) = qpol::Complex{rng.normal(), rng.normal()};
  return g.adjoint() * g;
}

}  // namespace testutil
