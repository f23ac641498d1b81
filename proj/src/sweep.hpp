#pragma once

// Disorder sweeps, result files and exact-vs-DTWA comparison.
//
// Output directory layout of a run:
//   manifest.json            config echo, disorder vectors, substreams, timings
//   raw/<method>_h<k>_r<r>.csv   one file per finished realization
//   results.csv              per-realization rows plus disorder averages

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "integrator.hpp"
#include "model.hpp"
#include "observables.hpp"

namespace mblw {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kMaxEdSites = 16;
inline constexpr int kDefaultBatches = 20;

struct GridSpec {
  double t_max = 120.0;
  int points = 201;
  Spacing spacing = Spacing::LogPlusZero;

  TimeGrid make() const { return make_time_grid(t_max, points, spacing); }
};

struct RunConfig {
  int n_sites = 12;
  double coupling = 1.0;
  std::vector<double> disorder_strengths = {0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0};
  int n_realizations = 100;
  int n_traj = 2000;
  GridSpec grid;
  std::vector<Method> backends = {Method::Ed, Method::Dtwa};
  std::uint64_t master_seed = 1;
  int workers = 0;  // 0: hardware concurrency
  std::string output_dir = "out";
  Tolerance tol;
  double krylov_tol = 1e-12;
  PairFilter pair_filter = PairFilter::All;
  CvrmsdConvention cvrmsd_convention = CvrmsdConvention::Mean;

  void validate() const;
  bool has_backend(Method m) const;
};

/// Parses a JSON config. Missing keys keep their defaults; unknown keys are
/// an Error(Config).
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& cfg);

/// ModelSpec of realization r at disorder strength h. Realization r draws the
/// same substream for every h and every backend.
ModelSpec realization_model(const RunConfig& cfg, double h, int realization);

struct SweepSummary {
  int completed = 0;
  int resumed = 0;
  int failed = 0;
};

/// Runs every (h, realization, backend) task, writing raw files as they
/// finish. Reuses raw files of an interrupted run with the same config.
SweepSummary run_sweep(const RunConfig& cfg);

// --- CSV ---------------------------------------------------------------------

struct CsvRow {
  std::string method;
  int n_sites = 0;
  double h = 0.0;
  int realization = 0;
  double t = 0.0;
  std::string observable;
  double value = 0.0;
  double stderr_ = 0.0;
};

inline constexpr const char* kResultsHeader = "method,N,h,realization,t,observable,value,stderr";
inline constexpr const char* kCompareHeader = "observable,h,mse,cvrmsd,m_points";

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

void write_series(std::ostream& os, const ObservableSeries& s, int realization);
std::vector<CsvRow> read_results(const std::filesystem::path& path);

/// Rebuilds series (one per method/h/realization) from CSV rows.
std::vector<std::pair<int, ObservableSeries>> rows_to_series(const std::vector<CsvRow>& rows);

// --- comparison --------------------------------------------------------------

struct ComparisonEntry {
  Observable observable;
  double h = 0.0;
  double mse = 0.0;
  std::optional<double> cvrmsd;
  std::size_t m_points = 0;
};

struct ComparisonReport {
  int n_sites = 0;
  std::vector<ComparisonEntry> entries;
};

/// Compares disorder-averaged series. From `exact_dir` the ed rows are used
/// (or the only method present); from `dtwa_dir` the dtwa rows (likewise).
ComparisonReport compare_runs(const std::filesystem::path& exact_dir,
                              const std::filesystem::path& dtwa_dir,
                              CvrmsdConvention conv = CvrmsdConvention::Mean);
void write_report(const ComparisonReport& report, const std::filesystem::path& out_file);

// --- enumeration ---------------------------------------------------------------

/// Exhaustive DTWA over all 4^N phase points for one disorder draw, written
/// in the results format (method dtwa, realization 0, zero errors).
ObservableSeries run_enumerate(const ModelSpec& spec, const TimeGrid& grid, const Tolerance& tol,
                               PairFilter filter);

}  // namespace mblw
