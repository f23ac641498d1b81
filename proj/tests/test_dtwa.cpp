#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "dtwa.hpp"
#include "error.hpp"
#include "observables.hpp"

using namespace mblw;

namespace {

ModelSpec random_model(int n, double h, std::uint64_t seed) {
  return make_model(n, 1.0, h, sample_disorder(h, n, Stream::disorder(seed, 0)));
}

std::uint64_t phase_code(const BlochConfig& c) {
  std::uint64_t code = 0;
  for (int i = 0; i < c.n_sites(); ++i) {
    if (c.at(i, 0) < 0) code |= std::uint64_t{1} << (2 * i);
    if (c.at(i, 1) < 0) code |= std::uint64_t{1} << (2 * i + 1);
  }
  return code;
}

}  // namespace

TEST_CASE("phase points: z fixed by the Neel pattern") {
  Stream s(99);
  for (int k = 0; k < 200; ++k) {
    const auto c = sample_neel_phase_point(NeelSpec{2}, s);
    CHECK(c.at(0, 2) == 1.0);
    CHECK(c.at(1, 2) == -1.0);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(c.at(i, 0)) == 1.0);
      CHECK(std::abs(c.at(i, 1)) == 1.0);
      CHECK(c.norm2(i) == 3.0);
    }
  }
}

TEST_CASE("phase points: single-spin moments over the four points") {
  double sx = 0.0, sxx = 0.0, sy = 0.0, syy = 0.0;
  for (std::uint64_t code = 0; code < 4; ++code) {
    const auto c = neel_phase_point(NeelSpec{1}, code);
    sx += c.at(0, 0);
    sxx += c.at(0, 0) * c.at(0, 0);
    sy += c.at(0, 1);
    syy += c.at(0, 1) * c.at(0, 1);
  }
  CHECK(sx / 4 == 0.0);
  CHECK(sxx / 4 == 1.0);
  CHECK(sy / 4 == 0.0);
  CHECK(syy / 4 == 1.0);
}

TEST_CASE("phase points: N=4 sampling is uniform over all 256 points") {
  const int draws = 100000;
  std::map<std::uint64_t, int> freq;
  Stream s(2024);
  for (int k = 0; k < draws; ++k) ++freq[phase_code(sample_neel_phase_point(NeelSpec{4}, s))];
  CHECK(freq.size() == 256);
  const double p = 1.0 / 256.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (const auto& [code, count] : freq) CHECK(std::abs(count - draws * p) < 5.0 * sigma);

  std::set<std::uint64_t> codes;
  for (std::uint64_t c = 0; c < 256; ++c) codes.insert(phase_code(neel_phase_point(NeelSpec{4}, c)));
  CHECK(codes.size() == 256);
}

TEST_CASE("mean-field rhs: aligned unit vectors are a fixed point") {
  const auto spec = make_model(4, 1.0, 2.0, {1.5, -2.0, 0.3, 0.0});
  BlochConfig c(4);
  for (int i = 0; i < 4; ++i) c.at(i, 2) = 1.0;
  const auto d = mean_field_rhs(c, spec);
  for (double v : d.r) CHECK(v == 0.0);
}

TEST_CASE("mean-field rhs: J = 0 leaves z components fixed") {
  const auto spec = make_model(3, 0.0, 2.0, {1.0, -0.5, 2.0});
  Stream s(5);
  const auto c = sample_neel_phase_point(NeelSpec{3}, s);
  const auto d = mean_field_rhs(c, spec);
  for (int i = 0; i < 3; ++i) CHECK(d.at(i, 2) == 0.0);
}

TEST_CASE("mean-field rhs: two-spin example and finite-difference cross-check") {
  const auto spec = make_model(2, 1.0, 0.0, {0.0, 0.0});
  BlochConfig c(2);
  c.at(0, 0) = 1.0;
  c.at(1, 2) = 1.0;
  const auto d = mean_field_rhs(c, spec);
  CHECK(d.at(0, 0) == 0.0);
  CHECK(d.at(0, 1) == 0.5);
  CHECK(d.at(0, 2) == 0.0);
  CHECK(d.at(1, 1) == -0.5);

  const double dt = 1e-4;
  const auto traj = integrate_trajectory(c, spec, TimeGrid({0.0, dt}), Tolerance{1e-12, 1e-14});
  for (std::size_t q = 0; q < c.r.size(); ++q)
    CHECK((traj[1].r[q] - c.r[q]) / dt == doctest::Approx(d.r[q]).epsilon(1e-3).scale(1.0));
}

TEST_CASE("mean-field rhs: size mismatch") {
  const auto spec = make_model(3, 1.0, 0.0, {0.0, 0.0, 0.0});
  CHECK_THROWS_AS(mean_field_rhs(BlochConfig(2), spec), Error);
}

TEST_CASE("integrator: uniform precession matches the closed form") {
  // Parallel spins feel no exchange torque, so each precesses about z at
  // angular frequency h0 J.
  const double h0 = 1.5;
  const auto spec = make_model(3, 1.0, h0, {h0, h0, h0});
  BlochConfig start(3);
  for (int i = 0; i < 3; ++i) {
    start.at(i, 0) = 0.6;
    start.at(i, 1) = -0.48;
    start.at(i, 2) = 0.64;
  }
  const auto grid = make_time_grid(10.0, 41, Spacing::Linear);
  const Tolerance tol;
  const auto traj = integrate_trajectory(start, spec, grid, tol);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // dr/dt = h0 e_z x r rotates counterclockwise about z.
    const double w = h0 * grid[k];
    for (int i = 0; i < 3; ++i) {
      const double x = std::cos(w) * start.at(i, 0) - std::sin(w) * start.at(i, 1);
      const double y = std::sin(w) * start.at(i, 0) + std::cos(w) * start.at(i, 1);
      CHECK(std::abs(traj[k].at(i, 0) - x) <= 10 * tol.rel);
      CHECK(std::abs(traj[k].at(i, 1) - y) <= 10 * tol.rel);
      CHECK(std::abs(traj[k].at(i, 2) - start.at(i, 2)) <= 10 * tol.rel);
    }
  }
}

TEST_CASE("integrator: conserved quantities of the mean-field flow") {
  const auto spec = random_model(8, 4.0, 3);
  const auto grid = make_time_grid(120.0, 61, Spacing::LogPlusZero);
  Stream s(8);
  for (int rep = 0; rep < 3; ++rep) {
    const auto start = sample_neel_phase_point(NeelSpec{8}, s);
    const auto traj = integrate_trajectory(start, spec, grid, Tolerance{});
    const double e0 = classical_energy(start, spec);
    const double z0 = total_z(start);
    for (const auto& c : traj) {
      for (int i = 0; i < 8; ++i) CHECK(std::abs(c.norm2(i) - 3.0) <= 1e-6);
      CHECK(std::abs(classical_energy(c, spec) - e0) <= 1e-6 * std::max(1.0, std::abs(e0)));
      CHECK(std::abs(total_z(c) - z0) <= 1e-6);
    }
  }
}

TEST_CASE("integrator: step-size underflow is reported with the time") {
  std::vector<double> y{1.0};
  const TimeGrid grid({0.0, 2.0});
  try {
    integrate([](std::span<const double> s, std::span<double> d) { d[0] = s[0] * s[0]; }, y, grid,
              Tolerance{}, [](std::size_t, std::span<const double>) {});
    FAIL("expected an integrator error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Integrator);
    CHECK(std::string(e.what()).find("t=") != std::string::npos);
  }
  CHECK_THROWS_AS(integrate([](auto, auto) {}, y, grid, Tolerance{0.0, 1e-10},
                            [](std::size_t, std::span<const double>) {}),
                  Error);
}

TEST_CASE("ensemble: failures carry the trajectory substream") {
  const auto spec = random_model(4, 2.0, 1);
  EnsembleOptions opt;
  opt.n_traj = 4;
  opt.n_batches = 2;
  opt.tol = Tolerance{1e-300, 1e-300};
  try {
    run_dtwa_ensemble(spec, NeelSpec{4}, make_time_grid(1.0, 3, Spacing::Linear), opt);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Integrator);
    CHECK(std::string(e.what()).find("substream") != std::string::npos);
  }
}

TEST_CASE("accumulator: t = 0 block is exact") {
  const int n = 5;
  const auto spec = random_model(n, 3.0, 2);
  EnsembleOptions opt;
  opt.n_traj = 50;
  opt.n_batches = 5;
  const auto acc = run_dtwa_ensemble(spec, NeelSpec{n}, make_time_grid(2.0, 5, Spacing::Linear), opt);
  REQUIRE(acc.n_samples() == 50);
  for (int i = 0; i < n; ++i) {
    CHECK(acc.sum_z(0, i) / 50 == NeelSpec::z_sign(i));
    for (int j = i + 1; j < n; ++j)
      CHECK(acc.sum_zz(0, i, j) / 50 == NeelSpec::z_sign(i) * NeelSpec::z_sign(j));
  }
  for (std::size_t k = 0; k < acc.n_times(); ++k) {
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(acc.sum_z(k, i)) <= 50 * std::sqrt(3.0) + 1e-9);
      for (int j = i + 1; j < n; ++j) {
        CHECK(std::abs(acc.sum_zz(k, i, j)) <= 150 + 1e-9);
        CHECK(std::abs(acc.sum_xy(k, i, j)) <= 150 + 1e-9);
      }
    }
  }
}

TEST_CASE("accumulator: merge is commutative and associative") {
  const auto spec = random_model(4, 2.0, 4);
  const auto grid = make_time_grid(5.0, 6, Spacing::Linear);
  EnsembleOptions opt;
  opt.n_traj = 30;
  opt.n_batches = 3;
  const auto b = run_dtwa_batches(spec, NeelSpec{4}, grid, opt);
  auto ab = b[0];
  ab.merge(b[1]);
  auto ba = b[1];
  ba.merge(b[0]);
  CHECK(ab == ba);

  auto left = ab;
  left.merge(b[2]);
  auto bc = b[1];
  bc.merge(b[2]);
  auto right = b[0];
  right.merge(bc);
  CHECK(left.n_samples() == right.n_samples());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto ml = left.moments(k), mr = right.moments(k);
    for (std::size_t p = 0; p < ml.zz.size(); ++p) {
      CHECK(ml.zz[p] == doctest::Approx(mr.zz[p]).epsilon(1e-12));
      CHECK(std::abs(ml.pm[p] - mr.pm[p]) < 1e-12);
    }
  }
  MomentAccumulator wrong(3, grid.size());
  CHECK_THROWS_AS(left.merge(wrong), Error);
}

TEST_CASE("ensemble: bit-identical for any worker count") {
  const auto spec = random_model(6, 3.0, 9);
  const auto grid = make_time_grid(20.0, 21, Spacing::LogPlusZero);
  EnsembleOptions opt;
  opt.master_seed = 77;
  opt.realization = 3;
  opt.n_traj = 64;
  opt.n_batches = 8;
  opt.workers = 1;
  const auto a = run_dtwa_ensemble(spec, NeelSpec{6}, grid, opt);
  opt.workers = 4;
  const auto b = run_dtwa_ensemble(spec, NeelSpec{6}, grid, opt);
  opt.workers = 8;
  const auto c = run_dtwa_ensemble(spec, NeelSpec{6}, grid, opt);
  CHECK(a == b);
  CHECK(a == c);
  CHECK_THROWS_AS([&] {
    EnsembleOptions bad = opt;
    bad.n_traj = 1;
    run_dtwa_ensemble(spec, NeelSpec{6}, grid, bad);
  }(), Error);
}

TEST_CASE("enumeration: N=2 exact limit and Monte-Carlo convergence") {
  const auto spec = make_model(2, 1.0, 0.0, {0.0, 0.0});
  const auto grid = make_time_grid(4.0, 9, Spacing::Linear);
  const auto exact = enumerate_dtwa(spec, NeelSpec{2}, grid, Tolerance{});
  REQUIRE(exact.n_samples() == 16);

  // Brute force: average the 16 trajectories by hand.
  std::vector<double> z0(grid.size(), 0.0);
  for (std::uint64_t code = 0; code < 16; ++code) {
    const auto traj = integrate_trajectory(neel_phase_point(NeelSpec{2}, code), spec, grid, Tolerance{});
    for (std::size_t k = 0; k < grid.size(); ++k) z0[k] += traj[k].at(0, 2) / 16.0;
  }
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(exact.moments(k).z[0] == doctest::Approx(z0[k]).epsilon(1e-12));

  auto mc_error = [&](int n_traj) {
    double ss = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      EnsembleOptions opt;
      opt.master_seed = seed;
      opt.n_traj = n_traj;
      const auto mc = run_dtwa_ensemble(spec, NeelSpec{2}, grid, opt);
      for (std::size_t k = 1; k < grid.size(); ++k) {
        const double d = mc.moments(k).z[0] - exact.moments(k).z[0];
        ss += d * d;
        ++count;
      }
    }
    return std::sqrt(ss / count);
  };
  const double ratio = mc_error(100) / mc_error(10000);
  CHECK(ratio > 5.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("enumeration: N=3 Monte-Carlo agrees within five standard errors") {
  const auto spec = random_model(3, 2.0, 12);
  const auto grid = make_time_grid(5.0, 11, Spacing::Linear);
  const auto exact = enumerate_dtwa(spec, NeelSpec{3}, grid, Tolerance{});
  REQUIRE(exact.n_samples() == 64);
  EnsembleOptions opt;
  opt.master_seed = 3;
  opt.n_traj = 10000;
  const auto batches = run_dtwa_batches(spec, NeelSpec{3}, grid, opt);
  const auto mc = observe_dtwa(batches, grid, 2.0, PairFilter::All);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double ie = imbalance(exact.moments(k));
    CHECK(std::abs(mc.values(Observable::Imbalance)[k] - ie) <=
          5.0 * mc.errors(Observable::Imbalance)[k] + 1e-12);
  }
  CHECK_THROWS_AS(enumerate_dtwa(random_model(7, 1.0, 1), NeelSpec{7}, grid, Tolerance{}), Error);
}
