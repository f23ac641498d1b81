#include "observables.hpp"

#include <cmath>
#include <string>

#include "ed.hpp"
#include "error.hpp"

namespace mblw {

namespace {
constexpr double stagger(std::size_t i) { return (i % 2 == 0) ? 1.0 : -1.0; }
constexpr std::size_t idx(Observable o) { return static_cast<std::size_t>(o); }
}  // namespace

double imbalance(const MomentTable& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.z.size(); ++i) s += stagger(i) * m.z[i];
  return s;
}

double qfi(const MomentTable& m) {
  const std::size_t n = static_cast<std::size_t>(m.n_sites);
  double offdiag = 0.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++p) offdiag += stagger(i) * stagger(j) * m.zz[p];
  const double mean = imbalance(m);
  return 4.0 * (2.0 * offdiag + static_cast<double>(n) - mean * mean);
}

double renyi2_pair(const MomentTable& m, int i, int j) {
  require(i != j && i >= 0 && j >= 0 && i < m.n_sites && j < m.n_sites,
          ErrorKind::InvalidArgument, "renyi2_pair needs two distinct sites");
  const auto a = static_cast<std::size_t>(i);
  const auto b = static_cast<std::size_t>(j);
  const double gz0 = m.z[a], g0z = m.z[b], gzz = m.g_zz(a, b);
  const double purity = 0.25 * (1.0 + gz0 * gz0 + g0z * g0z + gzz * gzz + 8.0 * std::norm(m.g_pm(a, b)));
  return -std::log2(purity);
}

double renyi2_average(const MomentTable& m, PairFilter filter) {
  require(m.n_sites >= 2, ErrorKind::InvalidArgument, "need at least two sites");
  double sum = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < m.n_sites; ++i) {
    for (int j = i + 1; j < m.n_sites; ++j) {
      if (filter == PairFilter::Nearest && j != i + 1) continue;
      sum += renyi2_pair(m, i, j);
      ++count;
    }
  }
  require(count > 0, ErrorKind::InvalidArgument, "empty pair set");
  return sum / static_cast<double>(count);
}

double renyi2_from_rdm(const Eigen::Matrix4cd& rho) {
  return -std::log2((rho * rho).trace().real());
}

std::string_view observable_name(Observable o) {
  switch (o) {
    case Observable::Imbalance: return "imbalance";
    case Observable::ImbalancePerN: return "imbalance_per_n";
    case Observable::Qfi: return "qfi";
    case Observable::QfiPerN: return "qfi_per_n";
    case Observable::Renyi2Avg: return "renyi2_avg";
    case Observable::S1HalfChain: return "s1_halfchain";
  }
  return "";
}

std::optional<Observable> parse_observable(std::string_view name) {
  for (auto o : kAllObservables)
    if (observable_name(o) == name) return o;
  return std::nullopt;
}

std::string_view method_name(Method m) { return m == Method::Dtwa ? "dtwa" : "ed"; }

std::optional<Method> parse_method(std::string_view name) {
  if (name == "dtwa") return Method::Dtwa;
  if (name == "ed") return Method::Ed;
  return std::nullopt;
}

ObservableSeries make_series(const TimeGrid& grid, Method method, double h, int n_sites) {
  ObservableSeries s;
  s.grid = grid;
  s.method = method;
  s.h = h;
  s.n_sites = n_sites;
  for (auto o : kAllObservables) {
    if (o == Observable::S1HalfChain && method != Method::Ed) continue;
    s.value[idx(o)].assign(grid.size(), 0.0);
    s.stderr_[idx(o)].assign(grid.size(), 0.0);
  }
  return s;
}

void set_moment_observables(ObservableSeries& s, std::size_t k, const MomentTable& m,
                            PairFilter filter) {
  const double n = static_cast<double>(m.n_sites);
  const double imb = imbalance(m);
  const double f = qfi(m);
  s.value[idx(Observable::Imbalance)][k] = imb;
  s.value[idx(Observable::ImbalancePerN)][k] = imb / n;
  s.value[idx(Observable::Qfi)][k] = f;
  s.value[idx(Observable::QfiPerN)][k] = f / n;
  s.value[idx(Observable::Renyi2Avg)][k] = renyi2_average(m, filter);
}

ObservableSeries observe_ed(const ModelSpec& spec, const TimeGrid& grid, double tol,
                            PairFilter filter) {
  ObservableSeries s = make_series(grid, Method::Ed, spec.disorder_strength, spec.n_sites);
  const int cut = spec.n_sites / 2;
  ed::for_each_grid_state(spec, grid, tol, [&](std::size_t k, const ed::QuantumState& psi) {
    set_moment_observables(s, k, ed::exact_moments(psi), filter);
    s.value[idx(Observable::S1HalfChain)][k] = ed::half_chain_entropy(psi, cut);
  });
  return s;
}

ObservableSeries observe_dtwa(std::span<const MomentAccumulator> batches, const TimeGrid& grid,
                              double h, PairFilter filter, ErrorMode mode) {
  require(!batches.empty(), ErrorKind::InvalidArgument, "no trajectory batches");
  const int n_sites = batches.front().n_sites();
  require(batches.front().n_times() == grid.size(), ErrorKind::SizeMismatch,
          "accumulator and grid sizes differ");
  const MomentAccumulator total = merge_batches(batches);

  ObservableSeries s = make_series(grid, Method::Dtwa, h, n_sites);
  const std::size_t n_b = batches.size();

  // Per-batch (or leave-one-out) replicas of every observable.
  std::vector<ObservableSeries> reps;
  if (n_b >= 2) {
    reps.reserve(n_b);
    for (std::size_t b = 0; b < n_b; ++b) {
      ObservableSeries r = make_series(grid, Method::Dtwa, h, n_sites);
      MomentAccumulator sample;
      if (mode == ErrorMode::BatchMeans) {
        sample = batches[b];
      } else {
        sample = MomentAccumulator(n_sites, grid.size());
        for (std::size_t c = 0; c < n_b; ++c)
          if (c != b) sample.merge(batches[c]);
      }
      for (std::size_t k = 0; k < grid.size(); ++k)
        set_moment_observables(r, k, sample.moments(k), filter);
      reps.push_back(std::move(r));
    }
  }

  for (std::size_t k = 0; k < grid.size(); ++k) {
    set_moment_observables(s, k, total.moments(k), filter);
    if (reps.empty()) continue;
    for (auto o : kAllObservables) {
      if (!s.has(o)) continue;
      double mean = 0.0;
      for (const auto& r : reps) mean += r.values(o)[k];
      mean /= static_cast<double>(n_b);
      double ss = 0.0;
      for (const auto& r : reps) ss += (r.values(o)[k] - mean) * (r.values(o)[k] - mean);
      const double nb = static_cast<double>(n_b);
      const double var = mode == ErrorMode::BatchMeans ? ss / (nb * (nb - 1.0))
                                                       : ss * (nb - 1.0) / nb;
      s.stderr_[idx(o)][k] = std::sqrt(var);
    }
  }
  return s;
}

ObservableSeries disorder_average(std::span<const ObservableSeries> runs) {
  require(!runs.empty(), ErrorKind::InvalidArgument, "no realizations to average");
  const ObservableSeries& first = runs.front();
  for (const auto& r : runs)
    require(r.grid == first.grid && r.method == first.method && r.n_sites == first.n_sites,
            ErrorKind::Mismatch, "realizations differ in grid, method or size");
  if (runs.size() == 1) return first;

  ObservableSeries avg = make_series(first.grid, first.method, first.h, first.n_sites);
  avg.realizations = static_cast<int>(runs.size());
  const double r_count = static_cast<double>(runs.size());
  for (auto o : kAllObservables) {
    if (!avg.has(o)) continue;
    for (std::size_t k = 0; k < first.grid.size(); ++k) {
      double mean = 0.0;
      for (const auto& r : runs) mean += r.values(o)[k];
      mean /= r_count;
      double ss = 0.0;
      for (const auto& r : runs) ss += (r.values(o)[k] - mean) * (r.values(o)[k] - mean);
      avg.value[idx(o)][k] = mean;
      avg.stderr_[idx(o)][k] = std::sqrt(ss / (r_count * (r_count - 1.0)));
    }
  }
  return avg;
}

double mse(std::span<const double> exact, std::span<const double> approx) {
  require(exact.size() == approx.size(), ErrorKind::Mismatch,
          "series lengths differ: " + std::to_string(exact.size()) + " vs " +
              std::to_string(approx.size()));
  require(!exact.empty(), ErrorKind::InvalidArgument, "mse of empty series");
  double s = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) s += (exact[k] - approx[k]) * (exact[k] - approx[k]);
  return s / static_cast<double>(exact.size());
}

std::optional<double> cvrmsd(std::span<const double> exact, std::span<const double> approx,
                             CvrmsdConvention conv) {
  const double e = mse(exact, approx);
  double fbar = 0.0;
  for (double f : exact) fbar += f;
  if (conv == CvrmsdConvention::Mean) fbar /= static_cast<double>(exact.size());
  if (fbar == 0.0) return std::nullopt;
  return std::sqrt(e) / fbar;
}

}  // namespace mblw
