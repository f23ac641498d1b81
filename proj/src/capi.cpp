#include "mblw/mblw.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

#include "dtwa.hpp"
#include "error.hpp"
#include "model.hpp"
#include "observables.hpp"
#include "sweep.hpp"

struct mblw_model {
  mblw::ModelSpec spec;
};

struct mblw_grid {
  mblw::TimeGrid grid;
};

struct mblw_series {
  mblw::ObservableSeries series;
};

namespace {

thread_local std::string g_last_error;

mblw_status to_status(mblw::ErrorKind k) {
  using mblw::ErrorKind;
  switch (k) {
    case ErrorKind::InvalidArgument: return MBLW_ERR_INVALID_ARGUMENT;
    case ErrorKind::SizeMismatch: return MBLW_ERR_SIZE_MISMATCH;
    case ErrorKind::Integrator: return MBLW_ERR_INTEGRATOR;
    case ErrorKind::Convergence: return MBLW_ERR_CONVERGENCE;
    case ErrorKind::Io: return MBLW_ERR_IO;
    case ErrorKind::Config: return MBLW_ERR_CONFIG;
    case ErrorKind::Mismatch: return MBLW_ERR_MISMATCH;
    case ErrorKind::RunFailed: return MBLW_ERR_RUN_FAILED;
  }
  return MBLW_ERR_INTERNAL;
}

template <class Fn>
mblw_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MBLW_OK;
  } catch (const mblw::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MBLW_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MBLW_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MBLW_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MBLW_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  mblw::require(p != nullptr, mblw::ErrorKind::InvalidArgument,
                std::string(what) + " must not be NULL");
}

mblw::PairFilter to_filter(mblw_pair_filter f) {
  return f == MBLW_PAIRS_NEAREST ? mblw::PairFilter::Nearest : mblw::PairFilter::All;
}

}  // namespace

extern "C" {

const char* mblw_version(void) { return mblw::kVersion; }

const char* mblw_last_error(void) { return g_last_error.c_str(); }

const char* mblw_status_string(mblw_status status) {
  switch (status) {
    case MBLW_OK: return "ok";
    case MBLW_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MBLW_ERR_SIZE_MISMATCH: return "size mismatch";
    case MBLW_ERR_INTEGRATOR: return "integrator failure";
    case MBLW_ERR_CONVERGENCE: return "convergence failure";
    case MBLW_ERR_IO: return "i/o error";
    case MBLW_ERR_CONFIG: return "invalid config";
    case MBLW_ERR_MISMATCH: return "incompatible inputs";
    case MBLW_ERR_RUN_FAILED: return "run failed";
    case MBLW_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mblw_status mblw_model_create(int n_sites, double coupling, double disorder_strength,
                              const double* fields, mblw_model** out) {
  return guarded([&] {
    need(out, "out");
    need(fields, "fields");
    mblw::require(n_sites > 0, mblw::ErrorKind::InvalidArgument, "n_sites must be positive");
    std::vector<double> f(fields, fields + n_sites);
    *out = new mblw_model{mblw::make_model(n_sites, coupling, disorder_strength, std::move(f))};
  });
}

mblw_status mblw_model_create_random(int n_sites, double coupling, double disorder_strength,
                                     uint64_t master_seed, uint64_t realization,
                                     mblw_model** out) {
  return guarded([&] {
    need(out, "out");
    auto f = mblw::sample_disorder(disorder_strength, n_sites,
                                   mblw::Stream::disorder(master_seed, realization));
    *out = new mblw_model{mblw::make_model(n_sites, coupling, disorder_strength, std::move(f))};
  });
}

void mblw_model_destroy(mblw_model* model) { delete model; }

int mblw_model_n_sites(const mblw_model* model) { return model ? model->spec.n_sites : 0; }

mblw_status mblw_model_fields(const mblw_model* model, double* out, size_t n) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    mblw::require(n >= model->spec.fields.size(), mblw::ErrorKind::SizeMismatch,
                  "output buffer too small");
    std::copy(model->spec.fields.begin(), model->spec.fields.end(), out);
  });
}

mblw_status mblw_grid_create(double t_max, int m_points, mblw_spacing spacing, mblw_grid** out) {
  return guarded([&] {
    need(out, "out");
    const auto sp =
        spacing == MBLW_SPACING_LINEAR ? mblw::Spacing::Linear : mblw::Spacing::LogPlusZero;
    *out = new mblw_grid{mblw::make_time_grid(t_max, m_points, sp)};
  });
}

void mblw_grid_destroy(mblw_grid* grid) { delete grid; }

size_t mblw_grid_size(const mblw_grid* grid) { return grid ? grid->grid.size() : 0; }

mblw_status mblw_grid_points(const mblw_grid* grid, double* out, size_t n) {
  return guarded([&] {
    need(grid, "grid");
    need(out, "out");
    mblw::require(n >= grid->grid.size(), mblw::ErrorKind::SizeMismatch,
                  "output buffer too small");
    std::copy(grid->grid.points().begin(), grid->grid.points().end(), out);
  });
}

mblw_status mblw_run_ed(const mblw_model* model, const mblw_grid* grid, double krylov_tol,
                        mblw_pair_filter filter, mblw_series** out) {
  return guarded([&] {
    need(model, "model");
    need(grid, "grid");
    need(out, "out");
    mblw::require(model->spec.n_sites <= mblw::kMaxEdSites, mblw::ErrorKind::InvalidArgument,
                  "exact dynamics limited to N <= 16");
    *out = new mblw_series{mblw::observe_ed(model->spec, grid->grid, krylov_tol, to_filter(filter))};
  });
}

mblw_status mblw_run_dtwa(const mblw_model* model, const mblw_grid* grid, int n_traj,
                          uint64_t master_seed, uint64_t realization, int workers,
                          double rel_tol, double abs_tol, mblw_pair_filter filter,
                          mblw_series** out) {
  return guarded([&] {
    need(model, "model");
    need(grid, "grid");
    need(out, "out");
    mblw::EnsembleOptions opt;
    opt.master_seed = master_seed;
    opt.realization = realization;
    opt.n_traj = n_traj;
    opt.n_batches = mblw::kDefaultBatches;
    opt.workers = workers;
    opt.tol = {rel_tol, abs_tol};
    const auto batches =
        mblw::run_dtwa_batches(model->spec, mblw::NeelSpec{model->spec.n_sites}, grid->grid, opt);
    *out = new mblw_series{mblw::observe_dtwa(batches, grid->grid, model->spec.disorder_strength,
                                              to_filter(filter))};
  });
}

mblw_status mblw_run_enumerate(const mblw_model* model, const mblw_grid* grid, double rel_tol,
                               double abs_tol, mblw_pair_filter filter, mblw_series** out) {
  return guarded([&] {
    need(model, "model");
    need(grid, "grid");
    need(out, "out");
    *out = new mblw_series{
        mblw::run_enumerate(model->spec, grid->grid, {rel_tol, abs_tol}, to_filter(filter))};
  });
}

void mblw_series_destroy(mblw_series* series) { delete series; }

size_t mblw_series_size(const mblw_series* series) {
  return series ? series->series.grid.size() : 0;
}

int mblw_series_has(const mblw_series* series, mblw_observable obs) {
  if (!series || obs < MBLW_IMBALANCE || obs > MBLW_S1_HALFCHAIN) return 0;
  return series->series.has(static_cast<mblw::Observable>(obs)) ? 1 : 0;
}

mblw_status mblw_series_get(const mblw_series* series, mblw_observable obs, double* values,
                            double* stderrs, size_t n) {
  return guarded([&] {
    need(series, "series");
    mblw::require(mblw_series_has(series, obs) != 0, mblw::ErrorKind::InvalidArgument,
                  "observable not present in this series");
    const auto o = static_cast<mblw::Observable>(obs);
    const auto& s = series->series;
    mblw::require(n >= s.grid.size(), mblw::ErrorKind::SizeMismatch, "output buffer too small");
    if (values) std::copy(s.values(o).begin(), s.values(o).end(), values);
    if (stderrs) std::copy(s.errors(o).begin(), s.errors(o).end(), stderrs);
  });
}

mblw_status mblw_series_write_csv(const mblw_series* series, int realization, const char* path) {
  return guarded([&] {
    need(series, "series");
    need(path, "path");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    mblw::require(static_cast<bool>(os), mblw::ErrorKind::Io,
                  std::string("cannot write ") + path);
    os << mblw::kResultsHeader << '\n';
    mblw::write_series(os, series->series, realization);
    mblw::require(static_cast<bool>(os), mblw::ErrorKind::Io,
                  std::string("write failed for ") + path);
  });
}

mblw_status mblw_run_sweep_json(const char* config_json) {
  return guarded([&] {
    need(config_json, "config_json");
    mblw::run_sweep(mblw::parse_config(config_json));
  });
}

mblw_status mblw_run_sweep_file(const char* config_path) {
  return guarded([&] {
    need(config_path, "config_path");
    mblw::run_sweep(mblw::load_config(config_path));
  });
}

mblw_status mblw_config_normalize(const char* config_json, char* buf, size_t cap,
                                  size_t* needed) {
  return guarded([&] {
    need(config_json, "config_json");
    const std::string text = mblw::config_to_json(mblw::parse_config(config_json));
    if (needed) *needed = text.size() + 1;
    mblw::require(buf != nullptr && cap > text.size(), mblw::ErrorKind::InvalidArgument,
                  "buffer too small for normalized config");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

mblw_status mblw_compare(const char* exact_dir, const char* dtwa_dir, const char* out_file,
                         mblw_cvrmsd_convention convention) {
  return guarded([&] {
    need(exact_dir, "exact_dir");
    need(dtwa_dir, "dtwa_dir");
    need(out_file, "out_file");
    const auto conv = convention == MBLW_CVRMSD_SUM ? mblw::CvrmsdConvention::Sum
                                                    : mblw::CvrmsdConvention::Mean;
    mblw::write_report(mblw::compare_runs(exact_dir, dtwa_dir, conv), out_file);
  });
}

}  // extern "C"
