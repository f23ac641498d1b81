#pragma once

// Exact dynamics of the Heisenberg chain in a fixed-magnetization sector.
//
// Site i (0-based) is bit i of a configuration; a set bit is spin up
// (sigma^z = +1).

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "model.hpp"
#include "moments.hpp"

namespace mblw::ed {

using State = std::uint32_t;
using Vector = Eigen::VectorXcd;
using SparseH = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class SectorBasis {
 public:
  SectorBasis(int n_sites, int n_up);

  int n_sites() const { return n_sites_; }
  int n_up() const { return n_up_; }
  std::size_t dim() const { return states_.size(); }
  State state(std::size_t k) const { return states_[k]; }
  const std::vector<State>& states() const { return states_; }

  /// Position of a configuration, or nullopt if it lies outside the sector.
  std::optional<std::size_t> find(State s) const {
    if (s >= index_.size()) return std::nullopt;
    const auto k = index_[s];
    if (k < 0) return std::nullopt;
    return static_cast<std::size_t>(k);
  }
  std::size_t index(State s) const;

 private:
  int n_sites_;
  int n_up_;
  std::vector<State> states_;
  std::vector<std::int32_t> index_;
};

struct QuantumState {
  std::shared_ptr<const SectorBasis> basis;
  Vector amplitudes;
  double time = 0.0;
};

QuantumState neel_state(const NeelSpec& neel);

/// Product state from a bit pattern (must lie in the given basis).
QuantumState basis_state(std::shared_ptr<const SectorBasis> basis, State s);

SparseH build_hamiltonian(const ModelSpec& spec, const SectorBasis& basis);

/// exp(-i H dt) in a sector. Dimensions up to `spectral_limit` use a full
/// eigendecomposition; larger ones use Lanczos steps with a residual bound.
class Propagator {
 public:
  static constexpr std::size_t kSpectralLimit = 1000;

  explicit Propagator(const SparseH& h, double tol = 1e-12,
                      std::size_t spectral_limit = kSpectralLimit);

  bool spectral() const { return spectral_; }
  std::size_t dim() const { return static_cast<std::size_t>(h_.rows()); }

  /// psi -> exp(-i H dt) psi. Throws Error(Convergence) when the Krylov
  /// step cannot reach `tol`.
  Vector apply(const Vector& psi, double dt) const;

  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  const Eigen::MatrixXd& eigenvectors() const { return evecs_; }

 private:
  Vector krylov_apply(const Vector& psi, double dt) const;

  SparseH h_;
  double tol_;
  bool spectral_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
};

QuantumState evolve_state(const QuantumState& state, const SparseH& h, double dt,
                          double tol = 1e-12);

MomentTable exact_moments(const QuantumState& state);

/// Von Neumann entropy (bits) of sites [0, cut) for 1 <= cut < N.
double half_chain_entropy(const QuantumState& state, int cut);

/// Explicit two-site reduced density matrix in the basis
/// |up up>, |up down>, |down up>, |down down> of (site i, site j).
Eigen::Matrix4cd two_site_rdm(const QuantumState& state, int i, int j);

/// <H> and total <S^z> in spin units.
double energy(const QuantumState& state, const SparseH& h);
double total_sz(const QuantumState& state);

/// Evolves the Neel state and calls fn(k, state) at every grid time k.
void for_each_grid_state(const ModelSpec& spec, const TimeGrid& grid, double tol,
                         const std::function<void(std::size_t, const QuantumState&)>& fn);

std::vector<QuantumState> evolve_on_grid(const ModelSpec& spec, const TimeGrid& grid,
                                         double tol = 1e-12);

}  // namespace mblw::ed
