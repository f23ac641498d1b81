// mblw command-line front end. Talks to the library only through mblw.h.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mblw/mblw.h"

namespace {

int report(mblw_status st) {
  if (st == MBLW_OK) return 0;
  std::cerr << "mblw: " << mblw_status_string(st) << ": " << mblw_last_error() << "\n";
  return static_cast<int>(st);
}

struct RunFlags {
  std::string config;
  std::optional<int> n_sites;
  std::vector<double> h;
  std::optional<int> n_realizations;
  std::optional<int> n_traj;
  std::optional<double> t_max;
  std::optional<int> grid_points;
  std::optional<std::string> spacing;
  std::vector<std::string> backends;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

int do_run(const RunFlags& f) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!f.config.empty()) {
    std::ifstream is(f.config);
    if (!is) {
      std::cerr << "mblw: cannot read config " << f.config << "\n";
      return MBLW_ERR_IO;
    }
    try {
      cfg = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "mblw: invalid config JSON: " << e.what() << "\n";
      return MBLW_ERR_CONFIG;
    }
  }
  if (f.n_sites) cfg["n_sites"] = *f.n_sites;
  if (!f.h.empty()) cfg["disorder_strengths"] = f.h;
  if (f.n_realizations) cfg["n_realizations"] = *f.n_realizations;
  if (f.n_traj) cfg["n_traj"] = *f.n_traj;
  if (f.t_max) cfg["grid"]["t_max"] = *f.t_max;
  if (f.grid_points) cfg["grid"]["points"] = *f.grid_points;
  if (f.spacing) cfg["grid"]["spacing"] = *f.spacing;
  if (!f.backends.empty()) cfg["backends"] = f.backends;
  if (f.seed) cfg["master_seed"] = *f.seed;
  if (f.out) cfg["output_dir"] = *f.out;

  // --workers beats MBLW_WORKERS, which beats the config file.
  if (f.workers) {
    cfg["workers"] = *f.workers;
  } else if (const char* env = std::getenv("MBLW_WORKERS"); env && *env) {
    try {
      cfg["workers"] = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "mblw: MBLW_WORKERS must be an integer, got '" << env << "'\n";
      return MBLW_ERR_CONFIG;
    }
  }
  return report(mblw_run_sweep_json(cfg.dump().c_str()));
}

struct EnumFlags {
  int n_sites = 2;
  double h = 0.0;
  double coupling = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t realization = 0;
  double t_max = 10.0;
  int grid_points = 101;
  std::string spacing = "linear";
  std::string out;
};

int do_enumerate(const EnumFlags& f) {
  if (f.n_sites < 2 || f.n_sites > 3) {
    std::cerr << "mblw: enumerate supports 2 <= N <= 3\n";
    return MBLW_ERR_INVALID_ARGUMENT;
  }
  mblw_model* model = nullptr;
  mblw_grid* grid = nullptr;
  mblw_series* series = nullptr;
  const auto spacing = f.spacing == "linear" ? MBLW_SPACING_LINEAR : MBLW_SPACING_LOG_PLUS_ZERO;
  mblw_status st =
      mblw_model_create_random(f.n_sites, f.coupling, f.h, f.seed, f.realization, &model);
  if (st == MBLW_OK) st = mblw_grid_create(f.t_max, f.grid_points, spacing, &grid);
  if (st == MBLW_OK) st = mblw_run_enumerate(model, grid, 1e-10, 1e-12, MBLW_PAIRS_ALL, &series);
  if (st == MBLW_OK) st = mblw_series_write_csv(series, 0, f.out.c_str());
  mblw_series_destroy(series);
  mblw_grid_destroy(grid);
  mblw_model_destroy(model);
  return report(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical (DTWA) and exact dynamics of the random-field Heisenberg chain"};
  app.set_version_flag("--version", std::string(mblw_version()));
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run a disorder sweep");
  run->add_option("--config", rf.config, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--n-sites", rf.n_sites, "Chain length N");
  run->add_option("--h", rf.h, "Disorder strengths (in units of J)")->delimiter(',');
  run->add_option("--n-realizations", rf.n_realizations, "Disorder realizations per h");
  run->add_option("--n-traj", rf.n_traj, "DTWA trajectories per realization");
  run->add_option("--t-max", rf.t_max, "Final time (1/J)");
  run->add_option("--grid-points", rf.grid_points, "Number of grid times M");
  run->add_option("--spacing", rf.spacing, "linear | log-plus-zero")
      ->check(CLI::IsMember({"linear", "log-plus-zero"}));
  run->add_option("--backend", rf.backends, "ed and/or dtwa")
      ->delimiter(',')
      ->check(CLI::IsMember({"ed", "dtwa"}));
  run->add_option("--seed", rf.seed, "Master seed");
  run->add_option("--workers", rf.workers, "Worker threads (overrides MBLW_WORKERS)");
  run->add_option("--out", rf.out, "Output directory");

  std::string exact_dir, dtwa_dir, cmp_out, convention = "mean";
  auto* cmp = app.add_subcommand("compare", "MSE and CVRMSD between an exact and a DTWA run");
  cmp->add_option("--exact", exact_dir, "Exact run directory")->required();
  cmp->add_option("--dtwa", dtwa_dir, "DTWA run directory")->required();
  cmp->add_option("--out", cmp_out, "Comparison CSV")->required();
  cmp->add_option("--cvrmsd", convention, "Normalization of CVRMSD: mean | sum")
      ->check(CLI::IsMember({"mean", "sum"}));

  EnumFlags ef;
  auto* en = app.add_subcommand("enumerate", "Exhaustive DTWA over all phase points (N <= 3)");
  en->add_option("--n-sites", ef.n_sites, "Chain length (2 or 3)");
  en->add_option("--h", ef.h, "Disorder strength");
  en->add_option("--coupling", ef.coupling, "Coupling J");
  en->add_option("--seed", ef.seed, "Master seed of the disorder draw");
  en->add_option("--realization", ef.realization, "Realization index of the disorder draw");
  en->add_option("--t-max", ef.t_max, "Final time (1/J)");
  en->add_option("--grid-points", ef.grid_points, "Number of grid times");
  en->add_option("--spacing", ef.spacing, "linear | log-plus-zero")
      ->check(CLI::IsMember({"linear", "log-plus-zero"}));
  en->add_option("--out", ef.out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return do_run(rf);
  if (*cmp)
    return report(mblw_compare(exact_dir.c_str(), dtwa_dir.c_str(), cmp_out.c_str(),
                               convention == "sum" ? MBLW_CVRMSD_SUM : MBLW_CVRMSD_MEAN));
  if (*en) return do_enumerate(ef);
  return 1;
}
