#include <doctest.h>

#include <cmath>

#include "rdslab/cocycle.hpp"
#include "rdslab/errors.hpp"
#include "rdslab/transport.hpp"

using namespace rdslab;

TEST_CASE("full-noise stationary densities are uniform") {
  for (const std::string name : {"A", "B", "C"}) {
    const auto f = make_family(name, {});
    const int samples = 2000;
    const StationaryResult res = estimate_stationary(*f, NoiseLaw::uniform_full(), 16, samples, 1e-12);
    CHECK(res.op.max_row_sum_error() <= 1e-10);
    double total = 0.0;
    double worst = 0.0;
    for (double c : res.density.cells) {
      total += c;
      worst = std::max(worst, std::abs(c * 256 - 1.0));
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(worst <= 5.0 / std::sqrt(samples));
  }
}

TEST_CASE("ball-noise stationary density matches a long orbit histogram") {
  const auto f = make_family("C", {{"a", 0.3}});
  const NoiseLaw law = NoiseLaw::uniform_ball(0.05);
  const StationaryResult res = estimate_stationary(*f, law, 32, 4000, 1e-12);
  const UlamDensity orbit = orbit_histogram(*f, NoisePath(77, law), TorusPoint(0.3, 0.3), 10000000, 32);
  CHECK(l1_distance(res.density, orbit) <= 0.05);
  CHECK(res.density.max_density() / res.density.min_density() > 1.1);
}

TEST_CASE("non-convergence is reported") {
  const auto f = make_family("A", {});
  CHECK_THROWS_AS(estimate_stationary(*f, NoiseLaw::zero(), 16, 1000, 1e-14, 1, 1), NonConvergence);
}

TEST_CASE("sampling from densities") {
  const UlamDensity u = UlamDensity::uniform(16);
  const ParticleEnsemble e = sample_from_density(u, 100000, 5);
  CHECK(max_binomial_deviation(e, u) <= 4.0);
  CHECK(std::abs(e.total_mass() - 1.0) <= 1e-12);

  UlamDensity point;
  point.m = 16;
  point.cells.assign(256, 0.0);
  point.cells[37] = 1.0;
  const ParticleEnsemble p = sample_from_density(point, 1000, 5);
  for (const TorusPoint& x : p.points) CHECK(point.cell_of(x) == 37);

  const ParticleEnsemble again = sample_from_density(u, 100000, 5);
  CHECK(again.points == e.points);
  CHECK(again.weights == e.weights);
}

TEST_CASE("pullback push-forward") {
  const auto a = make_system_a();
  const NoisePath path(3, NoiseLaw::uniform_full());
  const UlamDensity u = UlamDensity::uniform(16);
  const ParticleEnsemble e = sample_from_density(u, 200000, 9);
  CHECK(pullback_pushforward(*a, path, e, 0).points == e.points);
  for (int n : {1, 10, 30}) {
    const ParticleEnsemble out = pullback_pushforward(*a, path, e, n);
    CHECK(out.total_mass() == e.total_mass());
    CHECK(max_binomial_deviation(out, u) <= 5.0);
    CHECK(out.provenance.depth == n);
  }
  const auto c = make_family("C", {{"a", 0.3}});
  const ParticleEnsemble par = pullback_pushforward(*c, path, e, 12, true);
  const ParticleEnsemble ser = pullback_pushforward(*c, path, e, 12, false);
  CHECK(par.points == ser.points);
  // Nesting: depth n + m equals depth m on the further-shifted path followed by depth n.
  const ParticleEnsemble deep = pullback_pushforward(*c, path, e, 12);
  const ParticleEnsemble two = pullback_pushforward(*c, path, pullback_pushforward(*c, path.shift(-5), e, 7), 5);
  CHECK(deep.points == two.points);
}

TEST_CASE("weak distance") {
  const UlamDensity u = UlamDensity::uniform(16);
  const ParticleEnsemble a = sample_from_density(u, 1000000, 1);
  const ParticleEnsemble b = sample_from_density(u, 1000000, 2);
  const ParticleEnsemble c = sample_from_density(u, 1000, 3);
  CHECK(weak_distance(a, a) == 0.0);
  CHECK(weak_distance(a, b) == weak_distance(b, a));
  CHECK(weak_distance(a, b) <= 3e-3);
  CHECK(weak_distance(a, c) <= weak_distance(a, b) + weak_distance(b, c) + 1e-15);
  CHECK(weak_distance(b, c) <= weak_distance(b, a) + weak_distance(a, c) + 1e-15);
}

TEST_CASE("deterministic reductions agree with serial references") {
  const UlamDensity u = UlamDensity::uniform(16);
  const ParticleEnsemble e = sample_from_density(u, 50000, 4);
  const auto modes = fourier_mode_bank(32);
  CHECK(modes.size() == 32);
  CHECK(modes[0] == std::array<int, 2>{0, 1});
  CHECK(modes[1] == std::array<int, 2>{1, 0});
  const auto par = kernels::fourier_moments(e.points, e.weights, modes);
  const auto ser = kernels::serial::fourier_moments(e.points, e.weights, modes);
  const auto naive = kernels::serial::fourier_moments_naive(e.points, e.weights, modes);
  CHECK(par == ser);
  for (std::size_t j = 0; j < par.size(); ++j) CHECK(std::abs(par[j] - naive[j]) <= 1e-12);

  const auto f = make_family("C", {});
  const CsrMatrix m1 = kernels::ulam_assembly(*f, NoiseLaw::uniform_ball(0.05), 16, 1000, 3);
  const CsrMatrix m2 = kernels::serial::ulam_assembly(*f, NoiseLaw::uniform_ball(0.05), 16, 1000, 3);
  CHECK(m1.row_ptr == m2.row_ptr);
  CHECK(m1.col == m2.col);
  CHECK(m1.val == m2.val);
}
