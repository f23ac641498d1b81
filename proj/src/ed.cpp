#include "ed.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "error.hpp"

namespace mblw::ed {

namespace {

constexpr bool up(State s, std::size_t i) { return ((s >> i) & 1U) != 0; }
constexpr double zval(State s, std::size_t i) { return up(s, i) ? 1.0 : -1.0; }

}  // namespace

SectorBasis::SectorBasis(int n_sites, int n_up) : n_sites_(n_sites), n_up_(n_up) {
  require(n_sites >= 1 && n_sites <= 24, ErrorKind::InvalidArgument,
          "sector basis supports 1..24 sites");
  require(n_up >= 0 && n_up <= n_sites, ErrorKind::InvalidArgument, "invalid n_up");
  const State full = State{1} << n_sites;
  index_.assign(full, -1);
  for (State s = 0; s < full; ++s) {
    if (std::popcount(s) == n_up) {
      index_[s] = static_cast<std::int32_t>(states_.size());
      states_.push_back(s);
    }
  }
}

std::size_t SectorBasis::index(State s) const {
  auto k = find(s);
  require(k.has_value(), ErrorKind::InvalidArgument, "configuration outside the sector");
  return *k;
}

QuantumState basis_state(std::shared_ptr<const SectorBasis> basis, State s) {
  QuantumState psi;
  psi.amplitudes = Vector::Zero(static_cast<Eigen::Index>(basis->dim()));
  psi.amplitudes(static_cast<Eigen::Index>(basis->index(s))) = 1.0;
  psi.basis = std::move(basis);
  return psi;
}

QuantumState neel_state(const NeelSpec& neel) {
  State s = 0;
  for (int i = 0; i < neel.n_sites; i += 2) s |= State{1} << i;
  return basis_state(std::make_shared<SectorBasis>(neel.n_sites, neel.n_up()), s);
}

SparseH build_hamiltonian(const ModelSpec& spec, const SectorBasis& basis) {
  require(spec.n_sites == basis.n_sites(), ErrorKind::SizeMismatch,
          "basis and model sizes differ");
  const std::size_t n = static_cast<std::size_t>(spec.n_sites);
  const double j = spec.coupling;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(basis.dim() * n);
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const State s = basis.state(k);
    double diag = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) diag += 0.25 * j * zval(s, i) * zval(s, i + 1);
    for (std::size_t i = 0; i < n; ++i) diag += 0.5 * spec.field_energy(i) * zval(s, i);
    entries.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (up(s, i) != up(s, i + 1)) {
        const State flipped = s ^ ((State{1} << i) | (State{1} << (i + 1)));
        entries.emplace_back(static_cast<int>(k), static_cast<int>(basis.index(flipped)),
                             0.5 * j);
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  SparseH h(dim, dim);
  h.setFromTriplets(entries.begin(), entries.end());
  return h;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const SparseH& h, double tol, std::size_t spectral_limit)
    : h_(h), tol_(tol), spectral_(static_cast<std::size_t>(h.rows()) <= spectral_limit) {
  require(tol > 0.0, ErrorKind::InvalidArgument, "propagator tolerance must be positive");
  if (spectral_) {
    const Eigen::MatrixXd dense(h_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    require(es.info() == Eigen::Success, ErrorKind::Convergence,
            "Hamiltonian eigendecomposition failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
  }
}

Vector Propagator::apply(const Vector& psi, double dt) const {
  require(dt >= 0.0, ErrorKind::InvalidArgument, "time step must be non-negative");
  if (dt == 0.0) return psi;
  if (spectral_) {
    Vector c = evecs_.transpose().cast<cplx>() * psi;
    for (Eigen::Index k = 0; k < c.size(); ++k)
      c(k) *= std::polar(1.0, -evals_(k) * dt);
    return evecs_.cast<cplx>() * c;
  }
  return krylov_apply(psi, dt);
}

// Lanczos approximation of exp(-i H tau) psi with full reorthogonalization,
// substepping until the residual-based error estimate drops below tol.
Vector Propagator::krylov_apply(const Vector& psi, double dt) const {
  constexpr int kMaxDim = 40;
  const Eigen::Index n = h_.rows();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(kMaxDim, n));

  Vector v = psi;
  double remaining = dt;
  double tau = dt;
  Eigen::MatrixXcd basis(n, m_max + 1);

  while (remaining > 0.0) {
    const double beta = v.norm();
    if (beta == 0.0) return v;
    basis.col(0) = v / beta;
    std::vector<double> alpha, offdiag;
    int m = 0;
    bool breakdown = false;
    for (; m < m_max; ++m) {
      Vector w = (h_ * basis.col(m).real()).cast<cplx>() +
                 cplx(0.0, 1.0) * (h_ * basis.col(m).imag()).cast<cplx>();
      const double a = basis.col(m).dot(w).real();
      alpha.push_back(a);
      for (int pass = 0; pass < 2; ++pass)
        for (int q = 0; q <= m; ++q) w -= basis.col(q).dot(w) * basis.col(q);
      const double b = w.norm();
      offdiag.push_back(b);
      if (b < 1e-14 * std::max(1.0, std::abs(a))) {
        breakdown = true;
        ++m;
        break;
      }
      basis.col(m + 1) = w / b;
    }
    if (!breakdown) m = m_max;

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int q = 0; q < m; ++q) {
      t(q, q) = alpha[q];
      if (q + 1 < m) t(q, q + 1) = t(q + 1, q) = offdiag[q];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::MatrixXd& u = es.eigenvectors();

    tau = std::min(tau, remaining);
    Eigen::VectorXcd coeffs;
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXcd phase(m);
      for (int q = 0; q < m; ++q) phase(q) = std::polar(1.0, -es.eigenvalues()(q) * tau) * u(0, q);
      coeffs = u.cast<cplx>() * phase;
      const double err = breakdown ? 0.0 : beta * offdiag[m - 1] * std::abs(coeffs(m - 1));
      if (err <= tol_ * beta) break;
      require(attempt < 60, ErrorKind::Convergence,
              "Krylov propagation did not converge to tol " + std::to_string(tol_));
      tau *= 0.5;
    }
    v = beta * (basis.leftCols(m) * coeffs);
    remaining -= tau;
    if (remaining < 1e-15 * dt) remaining = 0.0;
  }
  return v;
}

QuantumState evolve_state(const QuantumState& state, const SparseH& h, double dt, double tol) {
  require(dt >= 0.0, ErrorKind::InvalidArgument, "time step must be non-negative");
  require(static_cast<std::size_t>(h.rows()) == state.basis->dim(), ErrorKind::SizeMismatch,
          "Hamiltonian and state dimensions differ");
  Propagator prop(h, tol);
  return QuantumState{state.basis, prop.apply(state.amplitudes, dt), state.time + dt};
}

// ---------------------------------------------------------------------------

MomentTable exact_moments(const QuantumState& state) {
  const SectorBasis& basis = *state.basis;
  const std::size_t n = static_cast<std::size_t>(basis.n_sites());
  const Vector& psi = state.amplitudes;
  MomentTable m(basis.n_sites());
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const State s = basis.state(k);
    const cplx a = psi(static_cast<Eigen::Index>(k));
    const double p = std::norm(a);
    std::size_t pair = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double zi = zval(s, i);
      m.z[i] += p * zi;
      for (std::size_t j = i + 1; j < n; ++j, ++pair) {
        m.zz[pair] += p * zi * zval(s, j);
        // sigma_i^+ sigma_j^- maps (i down, j up) to (i up, j down).
        if (!up(s, i) && up(s, j)) {
          const State t = s ^ ((State{1} << i) | (State{1} << j));
          m.pm[pair] += std::conj(psi(static_cast<Eigen::Index>(basis.index(t)))) * a;
        }
      }
    }
  }
  return m;
}

double half_chain_entropy(const QuantumState& state, int cut) {
  const SectorBasis& basis = *state.basis;
  const int n = basis.n_sites();
  require(cut >= 1 && cut < n, ErrorKind::InvalidArgument,
          "cut must satisfy 1 <= cut < N, got " + std::to_string(cut));

  const State left_mask = (State{1} << cut) - 1;
  const int n_right = n - cut;
  // Position of each left (right) configuration within its popcount class.
  auto class_positions = [](int bits) {
    std::vector<int> pos(std::size_t{1} << bits);
    std::vector<int> count(static_cast<std::size_t>(bits) + 1, 0);
    for (State s = 0; s < (State{1} << bits); ++s) pos[s] = count[std::popcount(s)]++;
    return std::make_pair(pos, count);
  };
  const auto [lpos, lcount] = class_positions(cut);
  const auto [rpos, rcount] = class_positions(n_right);

  std::vector<Eigen::MatrixXcd> blocks(static_cast<std::size_t>(cut) + 1);
  for (int k = 0; k <= cut; ++k) {
    const int rk = basis.n_up() - k;
    if (rk < 0 || rk > n_right) continue;
    blocks[k] = Eigen::MatrixXcd::Zero(lcount[k], rcount[rk]);
  }
  for (std::size_t q = 0; q < basis.dim(); ++q) {
    const State s = basis.state(q);
    const State l = s & left_mask;
    const State r = s >> cut;
    blocks[std::popcount(l)](lpos[l], rpos[r]) = state.amplitudes(static_cast<Eigen::Index>(q));
  }

  double entropy = 0.0;
  for (const auto& b : blocks) {
    if (b.size() == 0) continue;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(b);
    for (Eigen::Index q = 0; q < svd.singularValues().size(); ++q) {
      const double p = svd.singularValues()(q) * svd.singularValues()(q);
      if (p > 0.0) entropy -= p * std::log2(p);
    }
  }
  return entropy;
}

Eigen::Matrix4cd two_site_rdm(const QuantumState& state, int i, int j) {
  const SectorBasis& basis = *state.basis;
  require(i != j && i >= 0 && j >= 0 && i < basis.n_sites() && j < basis.n_sites(),
          ErrorKind::InvalidArgument, "invalid site pair");
  const State mi = State{1} << i;
  const State mj = State{1} << j;
  auto local = [&](State s) { return (up(s, i) ? 0 : 2) + (up(s, j) ? 0 : 1); };
  auto with_local = [&](State s, int a) {
    s &= ~(mi | mj);
    if ((a & 2) == 0) s |= mi;
    if ((a & 1) == 0) s |= mj;
    return s;
  };

  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const State s = basis.state(k);
    const cplx a = state.amplitudes(static_cast<Eigen::Index>(k));
    const int la = local(s);
    for (int lb = 0; lb < 4; ++lb) {
      if (auto kb = basis.find(with_local(s, lb)))
        rho(la, lb) += a * std::conj(state.amplitudes(static_cast<Eigen::Index>(*kb)));
    }
  }
  return rho;
}

double energy(const QuantumState& state, const SparseH& h) {
  const Vector& psi = state.amplitudes;
  const Vector hpsi = (h * psi.real()).cast<cplx>() + cplx(0.0, 1.0) * (h * psi.imag()).cast<cplx>();
  return psi.dot(hpsi).real();
}

double total_sz(const QuantumState& state) {
  const SectorBasis& basis = *state.basis;
  double sz = 0.0;
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const double p = std::norm(state.amplitudes(static_cast<Eigen::Index>(k)));
    sz += 0.5 * p * (2.0 * std::popcount(basis.state(k)) - basis.n_sites());
  }
  return sz;
}

void for_each_grid_state(const ModelSpec& spec, const TimeGrid& grid, double tol,
                         const std::function<void(std::size_t, const QuantumState&)>& fn) {
  spec.validate();
  const QuantumState psi0 = neel_state(NeelSpec{spec.n_sites});
  const SparseH h = build_hamiltonian(spec, *psi0.basis);
  const Propagator prop(h, tol);

  if (prop.spectral()) {
    // Project once onto the eigenbasis; every grid time is then a phase
    // rotation from t = 0, with no accumulated stepping error.
    const Eigen::VectorXcd c0 = prop.eigenvectors().transpose().cast<cplx>() * psi0.amplitudes;
    const Eigen::MatrixXcd vecs = prop.eigenvectors().cast<cplx>();
    fn(0, psi0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      Eigen::VectorXcd c = c0;
      for (Eigen::Index q = 0; q < c.size(); ++q)
        c(q) *= std::polar(1.0, -prop.eigenvalues()(q) * grid[k]);
      fn(k, QuantumState{psi0.basis, vecs * c, grid[k]});
    }
    return;
  }

  QuantumState psi = psi0;
  fn(0, psi);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    psi.amplitudes = prop.apply(psi.amplitudes, grid[k] - grid[k - 1]);
    psi.time = grid[k];
    fn(k, psi);
  }
}

std::vector<QuantumState> evolve_on_grid(const ModelSpec& spec, const TimeGrid& grid,
                                         double tol) {
  std::vector<QuantumState> out;
  out.reserve(grid.size());
  for_each_grid_state(spec, grid, tol,
                      [&](std::size_t, const QuantumState& psi) { out.push_back(psi); });
  return out;
}

}  // namespace mblw::ed
