#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtwa.hpp"
#include "model.hpp"
#include "moments.hpp"

namespace mblw {

/// I = sum_i (-1)^i <sigma_i^z> (0-based i, so site 1 enters with +).
double imbalance(const MomentTable& m);

/// F = 4 Var(sum_i (-1)^i sigma_i^z), assembled from the moment table. The
/// diagonal terms (sigma^z)^2 = 1 contribute N.
double qfi(const MomentTable& m);

/// F/N > 1 witnesses multipartite entanglement.
inline bool witnesses_entanglement(double f, int n_sites) { return f / n_sites > 1.0; }

/// Two-site Renyi-2 entropy in bits from the sector-restricted moment formula
///   S2 = -log2[(1 + gz0^2 + g0z^2 + gzz^2 + 8 |g+-|^2) / 4].
double renyi2_pair(const MomentTable& m, int i, int j);

enum class PairFilter { All, Nearest };

double renyi2_average(const MomentTable& m, PairFilter filter = PairFilter::All);

/// -log2 tr(rho^2) of an explicit density matrix.
double renyi2_from_rdm(const Eigen::Matrix4cd& rho);

enum class Observable { Imbalance, ImbalancePerN, Qfi, QfiPerN, Renyi2Avg, S1HalfChain };
inline constexpr std::size_t kObservableCount = 6;
inline constexpr std::array<Observable, kObservableCount> kAllObservables = {
    Observable::Imbalance, Observable::ImbalancePerN, Observable::Qfi,
    Observable::QfiPerN,   Observable::Renyi2Avg,     Observable::S1HalfChain};

std::string_view observable_name(Observable o);
std::optional<Observable> parse_observable(std::string_view name);

enum class Method { Dtwa, Ed };
std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Per-time diagnostics with standard errors (zero for a single ED run).
struct ObservableSeries {
  TimeGrid grid;
  Method method = Method::Ed;
  double h = 0.0;
  int n_sites = 0;
  int realizations = 1;
  std::array<std::vector<double>, kObservableCount> value;
  std::array<std::vector<double>, kObservableCount> stderr_;

  bool has(Observable o) const { return !value[static_cast<std::size_t>(o)].empty(); }
  const std::vector<double>& values(Observable o) const {
    return value[static_cast<std::size_t>(o)];
  }
  const std::vector<double>& errors(Observable o) const {
    return stderr_[static_cast<std::size_t>(o)];
  }
};

/// Fills I, I/N, F, F/N and the pair-averaged S2 of one time point.
void set_moment_observables(ObservableSeries& s, std::size_t k, const MomentTable& m,
                            PairFilter filter);

/// Allocates the value/error columns for the observables a method produces.
ObservableSeries make_series(const TimeGrid& grid, Method method, double h, int n_sites);

/// Exact series for one disorder realization, including the half-chain
/// entropy at cut floor(N/2).
ObservableSeries observe_ed(const ModelSpec& spec, const TimeGrid& grid, double tol,
                            PairFilter filter);

enum class ErrorMode { BatchMeans, Jackknife };

/// DTWA series from trajectory batches. Values are plug-in estimates from the
/// merged sample; errors come from the spread between batches.
ObservableSeries observe_dtwa(std::span<const MomentAccumulator> batches, const TimeGrid& grid,
                              double h, PairFilter filter,
                              ErrorMode mode = ErrorMode::BatchMeans);

/// Mean over realizations with the cross-realization standard error. A single
/// realization keeps its own errors.
ObservableSeries disorder_average(std::span<const ObservableSeries> runs);

double mse(std::span<const double> exact, std::span<const double> approx);

enum class CvrmsdConvention { Mean, Sum };

/// sqrt(MSE) / fbar; fbar is the mean (or, literally, the sum) of the exact
/// series. Undefined when fbar == 0.
std::optional<double> cvrmsd(std::span<const double> exact, std::span<const double> approx,
                             CvrmsdConvention conv = CvrmsdConvention::Mean);

}  // namespace mblw
