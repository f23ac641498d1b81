#pragma once

// Test-only dense reference: operators on the full 2^N space assembled from
// Pauli strings, with no use of the sector machinery under test.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <utility>

#include "model.hpp"

namespace mblw::testing {

using cplx = std::complex<double>;

/// sigma^axis on `site` applied to basis state s (bit set = up):
/// returns (coefficient, new state).
inline std::pair<cplx, std::uint32_t> pauli(std::uint32_t s, int site, int axis) {
  const bool up = (s >> site) & 1U;
  const std::uint32_t flipped = s ^ (1U << site);
  switch (axis) {
    case 0: return {1.0, flipped};
    case 1: return {up ? cplx(0, 1) : cplx(0, -1), flipped};  // Y|up> = i|down>
    default: return {up ? 1.0 : -1.0, s};
  }
}

/// Matrix of sigma_i^a sigma_j^b (or a single Pauli when j < 0).
inline Eigen::MatrixXcd pauli_string(int n, int i, int a, int j = -1, int b = 0) {
  const std::uint32_t dim = 1U << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (std::uint32_t s = 0; s < dim; ++s) {
    cplx c = 1.0;
    std::uint32_t t = s;
    if (j >= 0) {
      auto [cj, tj] = pauli(t, j, b);
      c *= cj;
      t = tj;
    }
    auto [ci, ti] = pauli(t, i, a);
    c *= ci;
    t = ti;
    m(t, s) += c;
  }
  return m;
}

inline Eigen::MatrixXcd full_hamiltonian(const ModelSpec& spec) {
  const int n = spec.n_sites;
  const std::uint32_t dim = 1U << n;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i + 1 < n; ++i)
    for (int a = 0; a < 3; ++a) h += 0.25 * spec.coupling * pauli_string(n, i, a, i + 1, a);
  for (int i = 0; i < n; ++i) h += 0.5 * spec.fields[i] * spec.coupling * pauli_string(n, i, 2);
  return h;
}

inline Eigen::VectorXcd full_neel(int n) {
  std::uint32_t s = 0;
  for (int i = 0; i < n; i += 2) s |= 1U << i;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1U << n);
  v(s) = 1.0;
  return v;
}

inline cplx expect(const Eigen::VectorXcd& psi, const Eigen::MatrixXcd& op) {
  return psi.dot(op * psi);
}

/// sigma^+ = (X + iY)/2 as a full-space matrix.
inline Eigen::MatrixXcd sigma_plus(int n, int i) {
  return 0.5 * (pauli_string(n, i, 0) + cplx(0, 1) * pauli_string(n, i, 1));
}

}  // namespace mblw::testing
