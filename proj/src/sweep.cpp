#include "sweep.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "dtwa.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mblw {

// --- config ------------------------------------------------------------------

namespace {

std::string spacing_name(Spacing s) { return s == Spacing::Linear ? "linear" : "log-plus-zero"; }

Spacing parse_spacing(const std::string& s) {
  if (s == "linear") return Spacing::Linear;
  if (s == "log-plus-zero") return Spacing::LogPlusZero;
  fail(ErrorKind::Config, "unknown grid spacing '" + s + "'");
}

std::string pair_filter_name(PairFilter f) { return f == PairFilter::All ? "all" : "nearest"; }

PairFilter parse_pair_filter(const std::string& s) {
  if (s == "all") return PairFilter::All;
  if (s == "nearest") return PairFilter::Nearest;
  fail(ErrorKind::Config, "unknown pair_filter '" + s + "'");
}

std::string convention_name(CvrmsdConvention c) {
  return c == CvrmsdConvention::Mean ? "mean" : "sum";
}

CvrmsdConvention parse_convention(const std::string& s) {
  if (s == "mean") return CvrmsdConvention::Mean;
  if (s == "sum") return CvrmsdConvention::Sum;
  fail(ErrorKind::Config, "unknown cvrmsd_convention '" + s + "'");
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, "config key '" + key + "': " + e.what());
  }
}

json config_json(const RunConfig& c) {
  json backends = json::array();
  for (auto m : c.backends) backends.push_back(std::string(method_name(m)));
  return json{
      {"n_sites", c.n_sites},
      {"coupling", c.coupling},
      {"disorder_strengths", c.disorder_strengths},
      {"n_realizations", c.n_realizations},
      {"n_traj", c.n_traj},
      {"grid", {{"t_max", c.grid.t_max}, {"points", c.grid.points},
                {"spacing", spacing_name(c.grid.spacing)}}},
      {"backends", backends},
      {"master_seed", c.master_seed},
      {"workers", c.workers},
      {"output_dir", c.output_dir},
      {"tolerances", {{"rel", c.tol.rel}, {"abs", c.tol.abs}, {"krylov", c.krylov_tol}}},
      {"pair_filter", pair_filter_name(c.pair_filter)},
      {"cvrmsd_convention", convention_name(c.cvrmsd_convention)},
  };
}

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + tmp.string());
    os << content;
    os.flush();
    require(static_cast<bool>(os), ErrorKind::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

void RunConfig::validate() const {
  require(n_sites >= 2, ErrorKind::Config, "n_sites must be at least 2");
  require(!disorder_strengths.empty(), ErrorKind::Config, "disorder_strengths is empty");
  for (double h : disorder_strengths)
    require(h >= 0.0 && std::isfinite(h), ErrorKind::Config, "disorder strengths must be >= 0");
  require(n_realizations >= 1, ErrorKind::Config, "n_realizations must be positive");
  require(n_traj >= 2, ErrorKind::Config, "n_traj must be at least 2");
  require(grid.points >= 2 && grid.t_max > 0.0, ErrorKind::Config, "invalid grid");
  require(!backends.empty(), ErrorKind::Config, "no backends selected");
  require(workers >= 0, ErrorKind::Config, "workers must be non-negative");
  require(tol.rel > 0.0 && tol.abs > 0.0 && krylov_tol > 0.0, ErrorKind::Config,
          "tolerances must be positive");
  if (has_backend(Method::Ed))
    require(n_sites <= kMaxEdSites, ErrorKind::Config,
            "ed backend is limited to n_sites <= " + std::to_string(kMaxEdSites));
  require(!output_dir.empty(), ErrorKind::Config, "output_dir is empty");
}

bool RunConfig::has_backend(Method m) const {
  return std::find(backends.begin(), backends.end(), m) != backends.end();
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("invalid config JSON: ") + e.what());
  }
  require(j.is_object(), ErrorKind::Config, "config must be a JSON object");

  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "n_sites") c.n_sites = get_as<int>(v, key);
    else if (key == "coupling") c.coupling = get_as<double>(v, key);
    else if (key == "disorder_strengths") c.disorder_strengths = get_as<std::vector<double>>(v, key);
    else if (key == "n_realizations") c.n_realizations = get_as<int>(v, key);
    else if (key == "n_traj") c.n_traj = get_as<int>(v, key);
    else if (key == "master_seed") c.master_seed = get_as<std::uint64_t>(v, key);
    else if (key == "workers") c.workers = get_as<int>(v, key);
    else if (key == "output_dir") c.output_dir = get_as<std::string>(v, key);
    else if (key == "pair_filter") c.pair_filter = parse_pair_filter(get_as<std::string>(v, key));
    else if (key == "cvrmsd_convention")
      c.cvrmsd_convention = parse_convention(get_as<std::string>(v, key));
    else if (key == "backends") {
      c.backends.clear();
      for (const auto& name : get_as<std::vector<std::string>>(v, key)) {
        auto m = parse_method(name);
        require(m.has_value(), ErrorKind::Config, "unknown backend '" + name + "'");
        if (!c.has_backend(*m)) c.backends.push_back(*m);
      }
    } else if (key == "grid") {
      require(v.is_object(), ErrorKind::Config, "grid must be an object");
      for (const auto& [gk, gv] : v.items()) {
        if (gk == "t_max") c.grid.t_max = get_as<double>(gv, gk);
        else if (gk == "points") c.grid.points = get_as<int>(gv, gk);
        else if (gk == "spacing") c.grid.spacing = parse_spacing(get_as<std::string>(gv, gk));
        else fail(ErrorKind::Config, "unknown config key 'grid." + gk + "'");
      }
    } else if (key == "tolerances") {
      require(v.is_object(), ErrorKind::Config, "tolerances must be an object");
      for (const auto& [tk, tv] : v.items()) {
        if (tk == "rel") c.tol.rel = get_as<double>(tv, tk);
        else if (tk == "abs") c.tol.abs = get_as<double>(tv, tk);
        else if (tk == "krylov") c.krylov_tol = get_as<double>(tv, tk);
        else fail(ErrorKind::Config, "unknown config key 'tolerances." + tk + "'");
      }
    } else {
      fail(ErrorKind::Config, "unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

ModelSpec realization_model(const RunConfig& cfg, double h, int realization) {
  auto fields = sample_disorder(h, cfg.n_sites,
                                Stream::disorder(cfg.master_seed, static_cast<std::uint64_t>(realization)));
  return make_model(cfg.n_sites, cfg.coupling, h, std::move(fields));
}

// --- CSV ---------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_series(std::ostream& os, const ObservableSeries& s, int realization) {
  const std::string prefix = std::string(method_name(s.method)) + "," +
                             std::to_string(s.n_sites) + "," + format_double(s.h) + "," +
                             std::to_string(realization) + ",";
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const std::string tcol = format_double(s.grid[k]);
    for (auto o : kAllObservables) {
      if (!s.has(o)) continue;
      os << prefix << tcol << ',' << observable_name(o) << ',' << format_double(s.values(o)[k])
         << ',' << format_double(s.errors(o)[k]) << '\n';
    }
  }
}

namespace {

double parse_double(const std::string& field, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  require(res.ec == std::errc{} && res.ptr == field.data() + field.size(), ErrorKind::Io,
          "malformed number '" + field + "' in " + where);
  return v;
}

int parse_int(const std::string& field, const std::string& where) {
  int v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  require(res.ec == std::errc{} && res.ptr == field.data() + field.size(), ErrorKind::Io,
          "malformed integer '" + field + "' in " + where);
  return v;
}

}  // namespace

std::vector<CsvRow> read_results(const fs::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line == kResultsHeader, ErrorKind::Io,
          path.string() + ": unexpected header");
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    require(f.size() == 8, ErrorKind::Io, where + ": expected 8 columns");
    rows.push_back(CsvRow{f[0], parse_int(f[1], where), parse_double(f[2], where),
                          parse_int(f[3], where), parse_double(f[4], where), f[5],
                          parse_double(f[6], where), parse_double(f[7], where)});
  }
  return rows;
}

std::vector<std::pair<int, ObservableSeries>> rows_to_series(const std::vector<CsvRow>& rows) {
  struct Group {
    std::string method;
    int n_sites;
    double h;
    int realization;
    std::vector<double> times;
    std::map<double, std::size_t> time_index;
    std::map<Observable, std::map<std::size_t, std::pair<double, double>>> data;
  };
  std::vector<Group> groups;
  auto find_group = [&](const CsvRow& r) -> Group& {
    for (auto& g : groups)
      if (g.method == r.method && g.h == r.h && g.realization == r.realization &&
          g.n_sites == r.n_sites)
        return g;
    groups.push_back(Group{r.method, r.n_sites, r.h, r.realization, {}, {}, {}});
    return groups.back();
  };

  for (const auto& r : rows) {
    Group& g = find_group(r);
    auto obs = parse_observable(r.observable);
    require(obs.has_value(), ErrorKind::Io, "unknown observable '" + r.observable + "'");
    auto it = g.time_index.find(r.t);
    if (it == g.time_index.end()) {
      it = g.time_index.emplace(r.t, g.times.size()).first;
      g.times.push_back(r.t);
    }
    g.data[*obs][it->second] = {r.value, r.stderr_};
  }

  std::vector<std::pair<int, ObservableSeries>> out;
  for (auto& g : groups) {
    auto method = parse_method(g.method);
    require(method.has_value(), ErrorKind::Io, "unknown method '" + g.method + "'");
    ObservableSeries s;
    s.grid = TimeGrid(g.times);
    s.method = *method;
    s.h = g.h;
    s.n_sites = g.n_sites;
    for (const auto& [o, byt] : g.data) {
      require(byt.size() == g.times.size(), ErrorKind::Io,
              "observable " + std::string(observable_name(o)) + " is missing time points");
      auto& vals = s.value[static_cast<std::size_t>(o)];
      auto& errs = s.stderr_[static_cast<std::size_t>(o)];
      vals.resize(g.times.size());
      errs.resize(g.times.size());
      for (const auto& [k, ve] : byt) {
        vals[k] = ve.first;
        errs[k] = ve.second;
      }
    }
    out.emplace_back(g.realization, std::move(s));
  }
  return out;
}

// --- sweep -------------------------------------------------------------------

namespace {

fs::path raw_path(const fs::path& dir, Method m, std::size_t h_index, int r) {
  return dir / "raw" /
         (std::string(method_name(m)) + "_h" + std::to_string(h_index) + "_r" +
          std::to_string(r) + ".csv");
}

std::string series_csv(const ObservableSeries& s, int realization) {
  std::ostringstream os;
  os << kResultsHeader << '\n';
  write_series(os, s, realization);
  return os.str();
}

std::optional<ObservableSeries> load_raw(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  auto series = rows_to_series(read_results(path));
  require(series.size() == 1, ErrorKind::Io, path.string() + ": expected one series");
  return std::move(series.front().second);
}

}  // namespace

SweepSummary run_sweep(const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  cfg.validate();
  const fs::path out(cfg.output_dir);
  fs::create_directories(out / "raw");
  const TimeGrid grid = cfg.grid.make();
  const int workers = cfg.workers > 0 ? cfg.workers : default_workers();

  // Worker count and location do not affect results, so a restart may
  // change them.
  const fs::path manifest_path = out / "manifest.json";
  auto comparable = [](json c) {
    c.erase("workers");
    c.erase("output_dir");
    return c;
  };
  if (fs::exists(manifest_path)) {
    json old;
    try {
      old = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, "unreadable manifest in " + out.string() + ": " + e.what());
    }
    require(old.contains("config") && comparable(old["config"]) == comparable(config_json(cfg)),
            ErrorKind::Config,
            "output directory " + out.string() + " holds a run with a different config");
  }

  const std::size_t n_h = cfg.disorder_strengths.size();
  const std::size_t n_r = static_cast<std::size_t>(cfg.n_realizations);

  json manifest;
  manifest["artifact"] = "mblw";
  manifest["version"] = kVersion;
  manifest["config"] = config_json(cfg);
  manifest["substreams"] = {
      {"disorder", "splitmix(master_seed, 0, realization)"},
      {"trajectory", "splitmix(master_seed, 1, realization, trajectory)"},
      {"n_batches", kDefaultBatches}};
  json reals = json::array();
  std::vector<ModelSpec> models;
  models.reserve(n_h * n_r);
  for (std::size_t hk = 0; hk < n_h; ++hk) {
    for (std::size_t r = 0; r < n_r; ++r) {
      models.push_back(realization_model(cfg, cfg.disorder_strengths[hk], static_cast<int>(r)));
      reals.push_back({{"h", cfg.disorder_strengths[hk]},
                       {"h_index", hk},
                       {"realization", r},
                       {"disorder_substream", hex(Stream::disorder(cfg.master_seed, r).key())},
                       {"fields", models.back().fields}});
    }
  }
  manifest["realizations"] = reals;
  manifest["state"] = "running";
  atomic_write(manifest_path, manifest.dump(2) + "\n");

  // results[method][hk * n_r + r]
  std::map<Method, std::vector<std::optional<ObservableSeries>>> results;
  std::map<Method, std::vector<std::string>> status;
  for (auto m : cfg.backends) {
    results[m].resize(n_h * n_r);
    status[m].resize(n_h * n_r);
  }
  std::mutex writer;
  SweepSummary summary;
  double ed_seconds = 0.0, dtwa_seconds = 0.0;

  const std::size_t n_tasks = n_h * n_r;
  const int inner_workers =
      std::max(1, workers / static_cast<int>(std::min<std::size_t>(n_tasks, static_cast<std::size_t>(workers))));

  parallel_for(n_tasks, workers, [&](std::size_t task) {
    const std::size_t hk = task / n_r;
    const int r = static_cast<int>(task % n_r);
    const ModelSpec& spec = models[task];
    for (auto m : cfg.backends) {
      const fs::path path = raw_path(out, m, hk, r);
      if (auto done = load_raw(path)) {
        std::lock_guard lock(writer);
        results[m][task] = std::move(done);
        status[m][task] = "resumed";
        ++summary.resumed;
        continue;
      }
      const auto t0 = clock::now();
      std::optional<ObservableSeries> s;
      std::string err;
      try {
        if (m == Method::Ed) {
          s = observe_ed(spec, grid, cfg.krylov_tol, cfg.pair_filter);
        } else {
          EnsembleOptions opt;
          opt.master_seed = cfg.master_seed;
          opt.realization = static_cast<std::uint64_t>(r);
          opt.n_traj = cfg.n_traj;
          opt.n_batches = kDefaultBatches;
          opt.workers = inner_workers;
          opt.tol = cfg.tol;
          const auto batches = run_dtwa_batches(spec, NeelSpec{cfg.n_sites}, grid, opt);
          s = observe_dtwa(batches, grid, spec.disorder_strength, cfg.pair_filter);
        }
      } catch (const Error& e) {
        err = e.what();
      }
      const double secs = std::chrono::duration<double>(clock::now() - t0).count();

      std::lock_guard lock(writer);
      (m == Method::Ed ? ed_seconds : dtwa_seconds) += secs;
      if (s) {
        atomic_write(path, series_csv(*s, r));
        results[m][task] = std::move(s);
        status[m][task] = "ok";
        ++summary.completed;
      } else {
        status[m][task] = "failed: " + err;
        ++summary.failed;
      }
    }
  });

  for (std::size_t task = 0; task < n_tasks; ++task) {
    json st;
    for (auto m : cfg.backends) st[std::string(method_name(m))] = status[m][task];
    manifest["realizations"][task]["status"] = st;
  }

  // Failure policy: more than 10% failed realizations for any (h, method).
  std::string fatal;
  for (auto m : cfg.backends) {
    for (std::size_t hk = 0; hk < n_h; ++hk) {
      std::size_t failed = 0;
      for (std::size_t r = 0; r < n_r; ++r)
        if (!results[m][hk * n_r + r]) ++failed;
      if (10 * failed > n_r && fatal.empty())
        fatal = std::to_string(failed) + " of " + std::to_string(n_r) + " " +
                std::string(method_name(m)) + " realizations failed at h=" +
                format_double(cfg.disorder_strengths[hk]);
    }
  }

  if (fatal.empty()) {
    std::ostringstream csv;
    csv << kResultsHeader << '\n';
    for (std::size_t hk = 0; hk < n_h; ++hk) {
      for (auto m : cfg.backends) {
        std::vector<ObservableSeries> ok;
        for (std::size_t r = 0; r < n_r; ++r) {
          const auto& s = results[m][hk * n_r + r];
          if (!s) continue;
          write_series(csv, *s, static_cast<int>(r));
          ok.push_back(*s);
        }
        write_series(csv, disorder_average(ok), -1);
      }
    }
    atomic_write(out / "results.csv", csv.str());
  }

  manifest["state"] = fatal.empty() ? "complete" : "failed";
  if (!fatal.empty()) manifest["error"] = fatal;
  manifest["timings"] = {
      {"wall_seconds", std::chrono::duration<double>(clock::now() - t_start).count()},
      {"ed_seconds", ed_seconds},
      {"dtwa_seconds", dtwa_seconds},
      {"workers", workers}};
  manifest["summary"] = {{"completed", summary.completed},
                         {"resumed", summary.resumed},
                         {"failed", summary.failed}};
  atomic_write(manifest_path, manifest.dump(2) + "\n");

  if (!fatal.empty()) fail(ErrorKind::RunFailed, fatal);
  return summary;
}

// --- comparison --------------------------------------------------------------

namespace {

std::vector<ObservableSeries> averaged_series(const fs::path& dir, Method preferred) {
  auto all = rows_to_series(read_results(dir / "results.csv"));
  std::vector<ObservableSeries> avg;
  bool has_preferred = false;
  for (auto& [r, s] : all) {
    if (r != -1) continue;
    if (s.method == preferred) has_preferred = true;
    avg.push_back(std::move(s));
  }
  if (has_preferred) {
    std::erase_if(avg, [&](const ObservableSeries& s) { return s.method != preferred; });
  } else {
    const Method only = avg.empty() ? preferred : avg.front().method;
    for (const auto& s : avg)
      require(s.method == only, ErrorKind::Mismatch,
              dir.string() + " has neither " + std::string(method_name(preferred)) +
                  " rows nor a single method");
  }
  require(!avg.empty(), ErrorKind::Mismatch, dir.string() + " holds no averaged series");
  return avg;
}

}  // namespace

ComparisonReport compare_runs(const fs::path& exact_dir, const fs::path& dtwa_dir,
                              CvrmsdConvention conv) {
  const auto exact = averaged_series(exact_dir, Method::Ed);
  const auto approx = averaged_series(dtwa_dir, Method::Dtwa);
  require(exact.size() == approx.size(), ErrorKind::Mismatch,
          "runs cover different numbers of disorder strengths");

  ComparisonReport report;
  report.n_sites = exact.front().n_sites;
  for (const auto& f : exact) {
    auto it = std::find_if(approx.begin(), approx.end(),
                           [&](const ObservableSeries& g) { return g.h == f.h; });
    require(it != approx.end(), ErrorKind::Mismatch,
            "disorder strength h=" + format_double(f.h) + " missing from " + dtwa_dir.string());
    const ObservableSeries& g = *it;
    require(f.n_sites == g.n_sites && f.n_sites == report.n_sites, ErrorKind::Mismatch,
            "runs differ in N");
    require(f.grid == g.grid, ErrorKind::Mismatch,
            "time grids differ at h=" + format_double(f.h));
    for (auto o : kAllObservables) {
      if (!f.has(o) || !g.has(o)) continue;
      report.entries.push_back(ComparisonEntry{o, f.h, mse(f.values(o), g.values(o)),
                                               cvrmsd(f.values(o), g.values(o), conv),
                                               f.grid.size()});
    }
  }
  return report;
}

void write_report(const ComparisonReport& report, const fs::path& out_file) {
  std::ostringstream os;
  os << kCompareHeader << '\n';
  for (const auto& e : report.entries) {
    os << observable_name(e.observable) << ',' << format_double(e.h) << ','
       << format_double(e.mse) << ',' << (e.cvrmsd ? format_double(*e.cvrmsd) : "nan") << ','
       << e.m_points << '\n';
  }
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  atomic_write(out_file, os.str());
}

ObservableSeries run_enumerate(const ModelSpec& spec, const TimeGrid& grid, const Tolerance& tol,
                               PairFilter filter) {
  const MomentAccumulator acc = enumerate_dtwa(spec, NeelSpec{spec.n_sites}, grid, tol);
  ObservableSeries s = make_series(grid, Method::Dtwa, spec.disorder_strength, spec.n_sites);
  for (std::size_t k = 0; k < grid.size(); ++k) set_moment_observables(s, k, acc.moments(k), filter);
  return s;
}

}  // namespace mblw
