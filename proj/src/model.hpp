#pragma once

#include <cstddef>
#include <vector>

#include "rng.hpp"

namespace mblw {

/// Open Heisenberg chain in a random z field,
///   H = J sum_{i<N} s_i . s_{i+1} + J sum_i h_i s_i^z,
/// with the h_i stored in units of J.
struct ModelSpec {
  int n_sites = 0;
  double coupling = 1.0;
  double disorder_strength = 0.0;
  std::vector<double> fields;

  /// Throws Error(InvalidArgument) when the invariants do not hold.
  void validate() const;

  /// h_i * J, the absolute field energy on site i (0-based).
  double field_energy(std::size_t i) const { return fields[i] * coupling; }
};

ModelSpec make_model(int n_sites, double coupling, double disorder_strength,
                     std::vector<double> fields);

/// Alternating up/down product state, site 1 up.
struct NeelSpec {
  int n_sites = 0;

  /// +1 for odd sites (1-based), -1 for even; takes a 0-based index.
  static constexpr int z_sign(std::size_t i) { return (i % 2 == 0) ? 1 : -1; }

  int n_up() const { return (n_sites + 1) / 2; }

  /// Total S^z in spin units: 0 for even N, 1/2 for odd N.
  double total_sz() const { return (n_sites % 2 == 0) ? 0.0 : 0.5; }
};

enum class Spacing { Linear, LogPlusZero };

/// Strictly increasing sample times starting at t = 0.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> points);

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t k) const { return points_[k]; }
  double back() const { return points_.back(); }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> points_;
};

/// Smallest nonzero time of the log-plus-zero grid, in units of 1/J.
inline constexpr double kLogGridTmin = 0.1;

TimeGrid make_time_grid(double t_max, int m_points, Spacing spacing);

/// N independent draws, uniform on [-h, h].
std::vector<double> sample_disorder(double h, int n_sites, Stream stream);

}  // namespace mblw
