#pragma once

// Discrete truncated Wigner sampling of the Neel state and classical
// mean-field propagation of the sampled Bloch vectors.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "integrator.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "rng.hpp"

namespace mblw {

/// Weyl symbols of the Pauli operators of every site, stored as
/// (x_0, y_0, z_0, x_1, y_1, z_1, ...).
struct BlochConfig {
  std::vector<double> r;
  double time = 0.0;

  BlochConfig() = default;
  explicit BlochConfig(int n_sites) : r(3 * static_cast<std::size_t>(n_sites), 0.0) {}

  int n_sites() const { return static_cast<int>(r.size() / 3); }
  double& at(std::size_t site, int axis) { return r[3 * site + axis]; }
  double at(std::size_t site, int axis) const { return r[3 * site + axis]; }
  double norm2(std::size_t site) const {
    const double* v = &r[3 * site];
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  }
};

/// One discrete phase point of the Neel state: z fixed by the pattern,
/// x and y independent fair +-1 coins.
BlochConfig sample_neel_phase_point(const NeelSpec& neel, Stream& stream);

/// The phase point with index `code` in [0, 4^N): bit 2i selects the sign of
/// x_i and bit 2i+1 the sign of y_i (set bit -> -1).
BlochConfig neel_phase_point(const NeelSpec& neel, std::uint64_t code);

/// dr_i/dt = B_i x r_i with B_i = (J/2)(r_{i-1} + r_{i+1}) + h_i J e_z.
void mean_field_rhs(std::span<const double> r, const ModelSpec& spec, std::span<double> drdt);
BlochConfig mean_field_rhs(const BlochConfig& config, const ModelSpec& spec);

/// E_cl = (J/4) sum_i r_i.r_{i+1} + (J/2) sum_i h_i z_i.
double classical_energy(const BlochConfig& config, const ModelSpec& spec);
double total_z(const BlochConfig& config);

/// Configurations at every grid time; the vectors are never renormalized.
std::vector<BlochConfig> integrate_trajectory(const BlochConfig& initial, const ModelSpec& spec,
                                              const TimeGrid& grid, const Tolerance& tol);

/// Running sums of one- and two-site Weyl-symbol products, one block per
/// grid time. Two accumulators over the same shape can be merged.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  MomentAccumulator(int n_sites, std::size_t n_times);

  int n_sites() const { return n_sites_; }
  std::size_t n_times() const { return n_times_; }
  std::uint64_t n_samples() const { return n_samples_; }

  /// Adds a configuration to block k. Call once per grid time per sample,
  /// then count_sample().
  void add(std::size_t k, std::span<const double> r);
  void count_sample() { ++n_samples_; }

  void merge(const MomentAccumulator& other);

  double sum_z(std::size_t k, std::size_t i) const { return block(k)[i]; }
  double sum_zz(std::size_t k, std::size_t i, std::size_t j) const;
  double sum_xx(std::size_t k, std::size_t i, std::size_t j) const;
  double sum_yy(std::size_t k, std::size_t i, std::size_t j) const;
  /// sum of x_i y_j over samples (i < j).
  double sum_xy(std::size_t k, std::size_t i, std::size_t j) const;
  /// sum of y_i x_j over samples (i < j).
  double sum_yx(std::size_t k, std::size_t i, std::size_t j) const;

  /// Sample averages at grid time k; g_pm uses the factorized symbol
  /// (x_i + i y_i)(x_j - i y_j) / 4.
  MomentTable moments(std::size_t k) const;

  bool operator==(const MomentAccumulator&) const = default;

 private:
  const double* block(std::size_t k) const { return sums_.data() + k * stride_; }
  double* block(std::size_t k) { return sums_.data() + k * stride_; }
  std::size_t offset(int which, std::size_t i, std::size_t j) const;

  int n_sites_ = 0;
  std::size_t n_times_ = 0;
  std::size_t pairs_ = 0;
  std::size_t stride_ = 0;
  std::uint64_t n_samples_ = 0;
  std::vector<double> sums_;
};

struct EnsembleOptions {
  std::uint64_t master_seed = 0;
  std::uint64_t realization = 0;
  int n_traj = 2000;
  int n_batches = 20;
  int workers = 1;
  Tolerance tol;
};

/// Trajectory t goes to batch floor(t * B / n_traj); each batch is
/// accumulated in trajectory order. The result does not depend on workers.
std::vector<MomentAccumulator> run_dtwa_batches(const ModelSpec& spec, const NeelSpec& neel,
                                                const TimeGrid& grid,
                                                const EnsembleOptions& opt);

/// Left fold of the batches in batch order.
MomentAccumulator merge_batches(std::span<const MomentAccumulator> batches);

MomentAccumulator run_dtwa_ensemble(const ModelSpec& spec, const NeelSpec& neel,
                                    const TimeGrid& grid, const EnsembleOptions& opt);

/// Exact sum over all 4^N discrete phase points (N <= 6).
MomentAccumulator enumerate_dtwa(const ModelSpec& spec, const NeelSpec& neel,
                                 const TimeGrid& grid, const Tolerance& tol, int workers = 1);

}  // namespace mblw
