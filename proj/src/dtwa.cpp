#include "dtwa.hpp"

#include <cmath>
#include <exception>
#include <sstream>
#include <string>

#include "error.hpp"
#include "parallel.hpp"

namespace mblw {

BlochConfig sample_neel_phase_point(const NeelSpec& neel, Stream& stream) {
  require(neel.n_sites >= 1, ErrorKind::InvalidArgument, "Neel state needs at least one site");
  BlochConfig c(neel.n_sites);
  for (std::size_t i = 0; i < static_cast<std::size_t>(neel.n_sites); ++i) {
    c.at(i, 0) = stream.next_bit() ? -1.0 : 1.0;
    c.at(i, 1) = stream.next_bit() ? -1.0 : 1.0;
    c.at(i, 2) = NeelSpec::z_sign(i);
  }
  return c;
}

BlochConfig neel_phase_point(const NeelSpec& neel, std::uint64_t code) {
  require(neel.n_sites >= 1 && neel.n_sites <= 31, ErrorKind::InvalidArgument,
          "phase point enumeration supports 1..31 sites");
  BlochConfig c(neel.n_sites);
  for (std::size_t i = 0; i < static_cast<std::size_t>(neel.n_sites); ++i) {
    c.at(i, 0) = ((code >> (2 * i)) & 1U) ? -1.0 : 1.0;
    c.at(i, 1) = ((code >> (2 * i + 1)) & 1U) ? -1.0 : 1.0;
    c.at(i, 2) = NeelSpec::z_sign(i);
  }
  return c;
}

void mean_field_rhs(std::span<const double> r, const ModelSpec& spec, std::span<double> drdt) {
  const std::size_t n = static_cast<std::size_t>(spec.n_sites);
  const double half_j = 0.5 * spec.coupling;
  for (std::size_t i = 0; i < n; ++i) {
    double bx = 0.0, by = 0.0, bz = spec.field_energy(i);
    if (i > 0) {
      bx += half_j * r[3 * i - 3];
      by += half_j * r[3 * i - 2];
      bz += half_j * r[3 * i - 1];
    }
    if (i + 1 < n) {
      bx += half_j * r[3 * i + 3];
      by += half_j * r[3 * i + 4];
      bz += half_j * r[3 * i + 5];
    }
    const double x = r[3 * i], y = r[3 * i + 1], z = r[3 * i + 2];
    drdt[3 * i] = by * z - bz * y;
    drdt[3 * i + 1] = bz * x - bx * z;
    drdt[3 * i + 2] = bx * y - by * x;
  }
}

BlochConfig mean_field_rhs(const BlochConfig& config, const ModelSpec& spec) {
  require(config.n_sites() == spec.n_sites, ErrorKind::SizeMismatch,
          "configuration has " + std::to_string(config.n_sites()) + " sites, model has " +
              std::to_string(spec.n_sites));
  BlochConfig out(spec.n_sites);
  out.time = config.time;
  mean_field_rhs(config.r, spec, out.r);
  return out;
}

double classical_energy(const BlochConfig& c, const ModelSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(spec.n_sites);
  double bonds = 0.0, field = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (int a = 0; a < 3; ++a) bonds += c.at(i, a) * c.at(i + 1, a);
  for (std::size_t i = 0; i < n; ++i) field += spec.fields[i] * c.at(i, 2);
  return 0.25 * spec.coupling * bonds + 0.5 * spec.coupling * field;
}

double total_z(const BlochConfig& c) {
  double s = 0.0;
  for (int i = 0; i < c.n_sites(); ++i) s += c.at(static_cast<std::size_t>(i), 2);
  return s;
}

std::vector<BlochConfig> integrate_trajectory(const BlochConfig& initial, const ModelSpec& spec,
                                              const TimeGrid& grid, const Tolerance& tol) {
  require(initial.n_sites() == spec.n_sites, ErrorKind::SizeMismatch,
          "initial configuration does not match the model size");
  std::vector<BlochConfig> out;
  out.reserve(grid.size());
  std::vector<double> y = initial.r;
  integrate(
      [&](std::span<const double> s, std::span<double> d) { mean_field_rhs(s, spec, d); }, y,
      grid, tol, [&](std::size_t k, std::span<const double> s) {
        BlochConfig c;
        c.r.assign(s.begin(), s.end());
        c.time = grid[k];
        out.push_back(std::move(c));
      });
  return out;
}

// ---------------------------------------------------------------------------

MomentAccumulator::MomentAccumulator(int n_sites, std::size_t n_times)
    : n_sites_(n_sites),
      n_times_(n_times),
      pairs_(pair_count(static_cast<std::size_t>(n_sites))),
      stride_(static_cast<std::size_t>(n_sites) + 5 * pair_count(static_cast<std::size_t>(n_sites))),
      sums_(n_times * stride_, 0.0) {}

// Block layout: z[N] | zz[P] | xx[P] | yy[P] | xy[P] | yx[P]
std::size_t MomentAccumulator::offset(int which, std::size_t i, std::size_t j) const {
  return static_cast<std::size_t>(n_sites_) + static_cast<std::size_t>(which) * pairs_ +
         pair_index(static_cast<std::size_t>(n_sites_), i, j);
}

void MomentAccumulator::add(std::size_t k, std::span<const double> r) {
  const std::size_t n = static_cast<std::size_t>(n_sites_);
  double* b = block(k);
  double* zz = b + n;
  double* xx = zz + pairs_;
  double* yy = xx + pairs_;
  double* xy = yy + pairs_;
  double* yx = xy + pairs_;
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = r[3 * i], yi = r[3 * i + 1], zi = r[3 * i + 2];
    b[i] += zi;
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      const double xj = r[3 * j], yj = r[3 * j + 1], zj = r[3 * j + 2];
      zz[p] += zi * zj;
      xx[p] += xi * xj;
      yy[p] += yi * yj;
      xy[p] += xi * yj;
      yx[p] += yi * xj;
    }
  }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  require(other.n_sites_ == n_sites_ && other.n_times_ == n_times_, ErrorKind::SizeMismatch,
          "cannot merge accumulators of different shape");
  for (std::size_t q = 0; q < sums_.size(); ++q) sums_[q] += other.sums_[q];
  n_samples_ += other.n_samples_;
}

double MomentAccumulator::sum_zz(std::size_t k, std::size_t i, std::size_t j) const {
  return block(k)[offset(0, i, j)];
}
double MomentAccumulator::sum_xx(std::size_t k, std::size_t i, std::size_t j) const {
  return block(k)[offset(1, i, j)];
}
double MomentAccumulator::sum_yy(std::size_t k, std::size_t i, std::size_t j) const {
  return block(k)[offset(2, i, j)];
}
double MomentAccumulator::sum_xy(std::size_t k, std::size_t i, std::size_t j) const {
  return block(k)[offset(3, i, j)];
}
double MomentAccumulator::sum_yx(std::size_t k, std::size_t i, std::size_t j) const {
  return block(k)[offset(4, i, j)];
}

MomentTable MomentAccumulator::moments(std::size_t k) const {
  require(n_samples_ > 0, ErrorKind::InvalidArgument, "accumulator holds no samples");
  const std::size_t n = static_cast<std::size_t>(n_sites_);
  const double inv = 1.0 / static_cast<double>(n_samples_);
  MomentTable m(n_sites_);
  const double* b = block(k);
  const double* zz = b + n;
  const double* xx = zz + pairs_;
  const double* yy = xx + pairs_;
  const double* xy = yy + pairs_;
  const double* yx = xy + pairs_;
  for (std::size_t i = 0; i < n; ++i) m.z[i] = b[i] * inv;
  for (std::size_t p = 0; p < pairs_; ++p) {
    m.zz[p] = zz[p] * inv;
    m.pm[p] = 0.25 * inv * cplx(xx[p] + yy[p], yx[p] - xy[p]);
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

void accumulate_trajectory(const BlochConfig& initial, const ModelSpec& spec,
                           const TimeGrid& grid, const Tolerance& tol,
                           MomentAccumulator& acc, std::vector<double>& y) {
  y = initial.r;
  integrate(
      [&](std::span<const double> s, std::span<double> d) { mean_field_rhs(s, spec, d); }, y,
      grid, tol, [&](std::size_t k, std::span<const double> s) { acc.add(k, s); });
  acc.count_sample();
}

}  // namespace

std::vector<MomentAccumulator> run_dtwa_batches(const ModelSpec& spec, const NeelSpec& neel,
                                                const TimeGrid& grid,
                                                const EnsembleOptions& opt) {
  spec.validate();
  require(neel.n_sites == spec.n_sites, ErrorKind::SizeMismatch,
          "Neel state and model sizes differ");
  require(opt.n_traj >= 2, ErrorKind::InvalidArgument, "n_traj must be at least 2");
  require(opt.n_batches >= 1, ErrorKind::InvalidArgument, "n_batches must be positive");

  const std::size_t n_traj = static_cast<std::size_t>(opt.n_traj);
  const std::size_t n_batches = std::min(static_cast<std::size_t>(opt.n_batches), n_traj);
  std::vector<MomentAccumulator> batches(n_batches,
                                         MomentAccumulator(spec.n_sites, grid.size()));

  parallel_for(n_batches, opt.workers, [&](std::size_t b) {
    // First trajectory t with floor(t * B / n) == b is ceil(b * n / B).
    const std::size_t first = (b * n_traj + n_batches - 1) / n_batches;
    const std::size_t last = ((b + 1) * n_traj + n_batches - 1) / n_batches;
    std::vector<double> y;
    for (std::size_t t = first; t < last; ++t) {
      Stream stream = Stream::trajectory(opt.master_seed, opt.realization, t);
      const BlochConfig start = sample_neel_phase_point(neel, stream);
      try {
        accumulate_trajectory(start, spec, grid, opt.tol, batches[b], y);
      } catch (const Error& e) {
        fail(e.kind(), "trajectory " + std::to_string(t) + " of realization " +
                           std::to_string(opt.realization) + " (substream " +
                           hex(Stream::trajectory(opt.master_seed, opt.realization, t).key()) +
                           ", seed " + std::to_string(opt.master_seed) + ") failed: " + e.what());
      }
    }
  });
  return batches;
}

MomentAccumulator merge_batches(std::span<const MomentAccumulator> batches) {
  require(!batches.empty(), ErrorKind::InvalidArgument, "no batches to merge");
  MomentAccumulator total = batches.front();
  for (std::size_t b = 1; b < batches.size(); ++b) total.merge(batches[b]);
  return total;
}

MomentAccumulator run_dtwa_ensemble(const ModelSpec& spec, const NeelSpec& neel,
                                    const TimeGrid& grid, const EnsembleOptions& opt) {
  const auto batches = run_dtwa_batches(spec, neel, grid, opt);
  return merge_batches(batches);
}

MomentAccumulator enumerate_dtwa(const ModelSpec& spec, const NeelSpec& neel,
                                 const TimeGrid& grid, const Tolerance& tol, int workers) {
  spec.validate();
  require(neel.n_sites == spec.n_sites, ErrorKind::SizeMismatch,
          "Neel state and model sizes differ");
  require(spec.n_sites <= 6, ErrorKind::InvalidArgument,
          "exhaustive enumeration is limited to N <= 6");

  const std::uint64_t n_points = std::uint64_t{1} << (2 * spec.n_sites);
  const std::size_t n_chunks = 16;
  std::vector<MomentAccumulator> chunks(n_chunks, MomentAccumulator(spec.n_sites, grid.size()));
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    std::vector<double> y;
    for (std::uint64_t code = c; code < n_points; code += n_chunks)
      accumulate_trajectory(neel_phase_point(neel, code), spec, grid, tol, chunks[c], y);
  });
  MomentAccumulator total(spec.n_sites, grid.size());
  for (const auto& c : chunks) total.merge(c);
  return total;
}

}  // namespace mblw
