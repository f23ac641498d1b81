#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace mblw {

using cplx = std::complex<double>;

/// Number of unordered pairs i < j on n sites.
constexpr std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

/// Row-major index of the pair (i, j), i < j, in the strict upper triangle.
constexpr std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

/// One- and two-site Pauli moments at a single time.
///
///   z[i]      = <sigma_i^z>
///   zz[(i,j)] = <sigma_i^z sigma_j^z>,   i < j
///   pm[(i,j)] = <sigma_i^+ sigma_j^->,   i < j;  pm(j,i) = conj(pm(i,j))
///
/// Both backends produce this table; for DTWA the entries are averages of
/// Weyl symbols.
struct MomentTable {
  int n_sites = 0;
  std::vector<double> z;
  std::vector<double> zz;
  std::vector<cplx> pm;

  MomentTable() = default;
  explicit MomentTable(int n)
      : n_sites(n),
        z(static_cast<std::size_t>(n), 0.0),
        zz(pair_count(static_cast<std::size_t>(n)), 0.0),
        pm(pair_count(static_cast<std::size_t>(n)), cplx{}) {}

  double g_zz(std::size_t i, std::size_t j) const {
    return i < j ? zz[pair_index(n_sites, i, j)] : zz[pair_index(n_sites, j, i)];
  }
  cplx g_pm(std::size_t i, std::size_t j) const {
    return i < j ? pm[pair_index(n_sites, i, j)] : std::conj(pm[pair_index(n_sites, j, i)]);
  }
};

}  // namespace mblw
