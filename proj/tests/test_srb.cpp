#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rdslab/errors.hpp"
#include "rdslab/srb.hpp"

using namespace rdslab;

namespace {

const double kLambdaA = std::log((3.0 + std::sqrt(5.0)) / 2.0);

struct Fixture {
  std::unique_ptr<MapFamily> f;
  NoisePath path;
  ChartParams params;
  UlamDensity psi = UlamDensity::uniform(32);
  Fixture(const std::string& name, std::uint64_t seed) : f(make_family(name, {})), path(seed, NoiseLaw::uniform_full()) {
    params = name == "A" ? ChartParams::defaults_for(kLambdaA) : default_chart_params(*f, path);
  }
};

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.depths = {10, 20, 30};
  cfg.search_particles = 4000;
  cfg.particles = 300000;
  cfg.levels = 3;
  cfg.wn_leaves = 12;
  cfg.min_cell_particles = 200;
  return cfg;
}

}  // namespace

TEST_CASE("source/target search") {
  SUBCASE("System A lands the ball-cover share at every depth") {
    Fixture fx("A", 3);
    ExperimentConfig cfg = small_config();
    cfg.eps_star = 0.1;
    cfg.depths = {30, 40, 50};
    cfg.search_particles = 20000;
    const SourceTarget st = find_source_target(*fx.f, fx.path, fx.psi, cfg, fx.params);
    REQUIRE(st.depths.size() == 3);
    const double h = 1.0 / 8.0;  // cover grid for ε* = 0.1
    const double expected = 0.5 * st.alpha0 * std::acos(-1.0) * 0.01 * h * h;
    for (double m : st.masses) {
      CHECK(m >= 0.8 * expected);
      CHECK(m <= 1.4 * expected);
    }
  }
  SUBCASE("a single ball covering the torus keeps all qualified mass") {
    Fixture fx("C", 4);
    ExperimentConfig cfg = small_config();
    cfg.eps_star = std::sqrt(2.0) / 2.0;
    const SourceTarget st = find_source_target(*fx.f, fx.path, fx.psi, cfg, fx.params);
    const ParticleEnsemble src = sample_source(st.p_minus, cfg.eps_star, st.alpha0,
                                               static_cast<std::size_t>(cfg.search_particles), mix64(cfg.seed * 131));
    for (std::size_t d = 0; d < st.depths.size(); ++d) {
      const auto mask = qualify_uniform(*fx.f, fx.path, src, st.l0, st.depths[d], fx.params);
      double q = 0.0;
      for (std::size_t i = 0; i < mask.size(); ++i) q += mask[i] ? src.weights[i] : 0.0;
      CHECK(st.masses[d] == doctest::Approx(q).epsilon(1e-12));
    }
  }
  SUBCASE("System C keeps one pair at all depths") {
    Fixture fx("C", 5);
    const SourceTarget st = find_source_target(*fx.f, fx.path, fx.psi, small_config(), fx.params);
    CHECK(st.depths == std::vector<int>{10, 20, 30});
    CHECK(st.c_star > 0.0);
    for (double m : st.masses) CHECK(m >= st.c_star);
  }
  SUBCASE("an unreachable density floor is reported") {
    Fixture fx("C", 6);
    ExperimentConfig cfg = small_config();
    cfg.alpha0 = 2.0;
    CHECK_THROWS_AS(find_source_target(*fx.f, fx.path, fx.psi, cfg, fx.params), NoAccumulation);
  }
}

TEST_CASE("uniformity qualification") {
  Fixture a("A", 7);
  const double l0 = auto_l0(*a.f, a.path, a.psi, 0.1, 200, 1, a.params);
  const ParticleEnsemble e = sample_from_density(a.psi, 500, 2);
  const auto all = qualify_uniform(*a.f, a.path, e, l0, 30, a.params);
  CHECK(std::count(all.begin(), all.end(), 1) == 500);

  Fixture c("C", 8);
  const ParticleEnsemble ec = sample_from_density(c.psi, 500, 3);
  const auto none = qualify_uniform(*c.f, c.path, ec, 1.0, 10, c.params);
  CHECK(std::count(none.begin(), none.end(), 1) == 0);
  const double l0c = auto_l0(*c.f, c.path, c.psi, 0.1, 1000, 4, c.params);
  const auto most = qualify_uniform(*c.f, c.path, ec, l0c, 30, c.params);
  CHECK(std::count(most.begin(), most.end(), 1) > 400);
}

TEST_CASE("finite-history qualified sets settle as the depth grows") {
  Fixture c("C", 9);
  const double l0 = auto_l0(*c.f, c.path, c.psi, 0.3, 1000, 5, c.params);
  const ParticleEnsemble e = sample_from_density(c.psi, 1500, 6);
  auto qualified = [&](int n) {
    std::vector<TorusPoint> q;
    for (const TorusPoint& x : e.points) {
      const TorusPoint back = compose_backward(*c.f, c.path, x, n);
      if (l_proxy(*c.f, c.path, back, -n, c.params) > l0) continue;
      if (l_proxy(*c.f, c.path, x, 0, c.params, -n) > l0) continue;
      q.push_back(x);
    }
    return q;
  };
  auto excess = [](const std::vector<TorusPoint>& a, const std::vector<TorusPoint>& b) {
    double worst = 0.0;
    for (const TorusPoint& x : a) {
      double best = 1.0;
      for (const TorusPoint& y : b) best = std::min(best, distance(x, y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  std::vector<double> ex;
  std::vector<std::size_t> sizes;
  for (int n : {2, 5, 10, 20}) {
    const auto qn = qualified(n);
    sizes.push_back(qn.size());
    ex.push_back(excess(qn, qualified(n + 20)));
  }
  MESSAGE("qualified counts " << sizes[0] << " " << sizes[1] << " " << sizes[2] << " " << sizes[3]
                              << ", excess over depth n+20: " << ex[0] << " " << ex[1] << " " << ex[2] << " " << ex[3]);
  CHECK(ex.back() <= ex.front());
  CHECK(ex.back() <= 0.05);
}

TEST_CASE("source disintegration") {
  Fixture a("A", 10);
  FrameOptions fo;
  fo.kind = FrameKind::Geometric;
  fo.geometric_radius = 0.05;
  const TorusPoint center(0.3, 0.6);
  const OrbitFrames fr(*a.f, a.path, center, 0, 0, 0, a.params, fo);
  const SourceFoliation one = disintegrate_source(fr.frame(0), 0.05, 0.0, 0.1, 1);
  REQUIRE(one.lines.size() == 1);
  CHECK(one.offsets[0] == 0.0);
  CHECK(one.lines[0].max_abs() == 0.0);

  const SourceFoliation fol = disintegrate_source(fr.frame(0), 0.05, 0.0, 0.1, 9);
  for (int j = 0; j < 9; ++j) {
    const TorusPoint q = fr.frame(0).from_chart(Vec2(0.01, fol.offsets[j]));
    const UGraph g = source_graph_at(*a.f, a.path, fol, q, 0, 0.02, a.params);
    CHECK(std::abs(g.slope_at_origin()) <= 1e-12);
    CHECK(g.lip < fol.K_minus);
  }

  Fixture c("C", 11);
  const OrbitFrames frc(*c.f, c.path, center, 0, 0, 0, c.params, fo);
  const SourceFoliation folc = disintegrate_source(frc.frame(0), 0.025, 0.0, 0.1, 5);
  for (int j = 0; j < 5; ++j) {
    const TorusPoint q = frc.frame(0).from_chart(Vec2(-0.01, folc.offsets[j]));
    CHECK(source_graph_at(*c.f, c.path, folc, q, 0, 0.02, c.params).lip < folc.K_minus);
  }
}

TEST_CASE("pushed stacks") {
  SUBCASE("System A pushed leaves are the unstable leaves") {
    Fixture a("A", 12);
    ExperimentConfig cfg = small_config();
    cfg.r_star = 0.09;
    cfg.depths = {30, 40, 50};
    const SourceTarget st = find_source_target(*a.f, a.path, a.psi, cfg, a.params);
    const LeafStack us = reference_u_stack(*a.f, a.path, st.p_hat, cfg.r_star, 17, 40, a.params);
    const DepthSnapshot s = srb_snapshot(*a.f, a.path, st, us, cfg, a.params, 30);
    REQUIRE(!s.wn_stack.leaves.empty());
    for (double d : s.leaf_distances) CHECK(d <= 1e-10);
    for (const Leaf& leaf : s.wn_stack.leaves) {
      for (double ld : leaf.graph.log_density) CHECK(std::abs(ld - leaf.graph.log_density[0]) <= 1e-9);
    }
  }
  SUBCASE("System C slope decay and convergence to unstable leaves") {
    Fixture c("C", 13);
    ExperimentConfig cfg = small_config();
    cfg.depths = {4, 6, 10};
    cfg.search_particles = 8000;
    const SourceTarget st = find_source_target(*c.f, c.path, c.psi, cfg, c.params);
    REQUIRE(st.depths.size() == 3);
    const LeafStack us = reference_u_stack(*c.f, c.path, st.p_hat, cfg.r_star, 17, 40, c.params);
    double prev = 1.0;
    for (int n : st.depths) {
      const DepthSnapshot s = srb_snapshot(*c.f, c.path, st, us, cfg, c.params, n);
      REQUIRE(!s.wn_stack.leaves.empty());
      double slope = 0.0, mean = 0.0;
      for (const Leaf& leaf : s.wn_stack.leaves) slope = std::max(slope, std::abs(leaf.own_slope_at_origin));
      for (double d : s.leaf_distances) mean += d / s.leaf_distances.size();
      CHECK(slope <= c.params.K0_bar * std::exp(-n * c.params.lambda() / 2.0));
      CHECK(mean < prev);
      prev = mean;
    }
  }
  SUBCASE("depth below the schedule length is rejected") {
    Fixture c("C", 14);
    const TransformSchedule sch = make_schedule(0.1, 0.1, c.params.lambda(), c.params.delta2, 0.025, 0.16);
    CHECK_THROWS_AS(build_wn_stack(*c.f, c.path, {}, sch, sch.m0 + sch.m1 - 1, TorusPoint(0.5, 0.5), 0.08, c.params),
                    ConfigError);
  }
}

TEST_CASE("nested partitions, density ratios and pipeline invariants") {
  Fixture c("C", 15);
  ExperimentConfig cfg = small_config();
  cfg.levels = 6;
  const SourceTarget st = find_source_target(*c.f, c.path, c.psi, cfg, c.params);
  const LeafStack us = reference_u_stack(*c.f, c.path, st.p_hat, cfg.r_star, 33, 40, c.params);
  const DepthSnapshot s = srb_snapshot(*c.f, c.path, st, us, cfg, c.params, 20, false);
  const NestedPartition& p = s.partition;
  REQUIRE(p.levels.size() == 7);
  CHECK(p.retained_fraction(0) == doctest::Approx(1.0));
  CHECK(p.retained_fraction(6) >= 0.5);
  for (int m = 1; m <= 6; ++m) {
    CHECK(p.retained_fraction(m) <= p.retained_fraction(m - 1) + 1e-12);
    for (const PartitionCell& cell : p.levels[m]) {
      const PartitionCell& parent = p.levels[m - 1][cell.parent];
      CHECK(cell.lo >= parent.lo);
      CHECK(cell.hi <= parent.hi);
      CHECK(cell.open_lo >= parent.open_lo);
      CHECK(cell.open_hi <= parent.open_hi);
      CHECK(cell.open_lo < cell.lo);
      CHECK(cell.open_hi > cell.hi);
    }
    for (std::size_t k = 0; k + 1 < p.levels[m].size(); ++k) CHECK(p.levels[m][k].open_hi <= p.levels[m][k + 1].open_lo);
  }
  double prod = 1.0;
  for (int m = 1; m <= 30; ++m) prod *= retention_target(m);
  CHECK(prod == doctest::Approx(0.5).epsilon(1e-8));

  for (const DensityReport& rep : s.reports) {
    CHECK(rep.A >= 1.0);
    for (const DensityRatio& r : rep.ratios) {
      CHECK(r.ratio >= 0.0);
      if (r.cube_level == 0) CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  // νⁿ(𝒮) ≥ (α0 / 6‖ψ‖∞)·c* with 𝒮 the level-M partition support.
  double retained = 0.0;
  for (const PartitionCell& cell : p.levels.back()) retained += cell.mass;
  CHECK(retained >= st.alpha0 / (6.0 * c.psi.max_density()) * st.c_star);

  // νⁿ ≤ μⁿ cellwise within sampling bands.
  ParticleEnsemble nu = sample_source(st.p_minus, cfg.eps_star, st.alpha0, 200000, 17);
  nu = pullback_pushforward(*c.f, c.path, nu, 20);
  const ParticleEnsemble mu = pullback_pushforward(*c.f, c.path, sample_from_density(c.psi, 1000000, 18), 20);
  CHECK(restriction_excess(nu, mu, 16) <= 5.0);

  const BoxSample empty;
  CHECK_THROWS_AS(build_nested_partition(us, empty, 3), MassStarvation);
}

TEST_CASE("System A conditional densities are uniform") {
  Fixture a("A", 16);
  ExperimentConfig cfg = small_config();
  cfg.r_star = 0.09;
  cfg.particles = 1000000;
  cfg.min_cell_particles = 2000;
  cfg.depths = {30, 40, 50};
  const SourceTarget st = find_source_target(*a.f, a.path, a.psi, cfg, a.params);
  const LeafStack us = reference_u_stack(*a.f, a.path, st.p_hat, cfg.r_star, 33, 40, a.params);
  const DepthSnapshot s = srb_snapshot(*a.f, a.path, st, us, cfg, a.params, 30, false);
  for (const DensityReport& rep : s.reports) {
    if (rep.cells_used == 0) continue;
    CHECK(rep.A <= 1.1);
  }
  const LeafDensityProfile prof = predicted_leaf_density(*a.f, a.path, us.leaves[5].graph, 15);
  for (double ld : prof.log_density) CHECK(std::abs(ld - prof.log_density[0]) <= 1e-12);
  CHECK(prof.lipschitz_D <= 1e-9);
}

TEST_CASE("predicted leaf densities") {
  Fixture c("C", 19);
  const LeafStack us = reference_u_stack(*c.f, c.path, TorusPoint(0.4, 0.7), 0.08, 5, 40, c.params);
  REQUIRE(us.leaves.size() == 5);
  const double d10 = predicted_leaf_density(*c.f, c.path, us.leaves[2].graph, 10).lipschitz_D;
  const double d12 = predicted_leaf_density(*c.f, c.path, us.leaves[2].graph, 12).lipschitz_D;
  const double d15 = predicted_leaf_density(*c.f, c.path, us.leaves[2].graph, 15).lipschitz_D;
  MESSAGE("D at n_trunc = 10, 12, 15: " << d10 << " " << d12 << " " << d15);
  CHECK(std::isfinite(d15));
  CHECK(std::abs(d10 - d15) <= 0.01 * d15);
  CHECK(std::abs(d12 - d15) <= 0.01 * d15);
  const LeafDensityProfile prof = predicted_leaf_density(*c.f, c.path, us.leaves[2].graph, 15);
  CHECK(prof.cdf(prof.u.back()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prof.cdf(prof.u.front()) == 0.0);
  // KS of an exact quantile sample is at most 1/n.
  std::vector<double> q;
  for (int i = 0; i < 200; ++i) {
    const double target = (i + 0.5) / 200.0;
    double lo = prof.u.front(), hi = prof.u.back();
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (prof.cdf(mid) < target ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  CHECK(ks_distance(q, prof) <= 1.0 / 200.0 + 1e-9);
}

TEST_CASE("entropy formula consistency") {
  const NoisePath path(20, NoiseLaw::uniform_full());
  const EntropyCheck a = entropy_consistency(*make_system_a(), path, TorusPoint(0.1, 0.2), 100000);
  CHECK(std::abs(a.lambda1 - kLambdaA) <= 1e-4);
  CHECK(std::abs(a.mean_log_unstable_jacobian - kLambdaA) <= 1e-4);
  const EntropyCheck t = entropy_consistency(*make_translation_family(), path, TorusPoint(0.1, 0.2), 1000);
  CHECK(t.lambda1 == 0.0);
  CHECK(t.mean_log_unstable_jacobian == 0.0);
  const EntropyCheck c = entropy_consistency(*make_family("C", {}), path, TorusPoint(0.1, 0.2), 100000);
  CHECK(std::abs(c.lambda1 - c.mean_log_unstable_jacobian) <= 1e-3);
}

TEST_CASE("good noise seeds") {
  Fixture c("C", 21);
  ExperimentConfig cfg = small_config();
  cfg.search_particles = 1000;
  const GoodSetReport rep = good_seed_fraction(*c.f, NoiseLaw::uniform_full(), c.psi, cfg, c.params, 3);
  CHECK(rep.tried == 6);
  CHECK(rep.bound == doctest::Approx(0.5));
  CHECK(rep.fraction >= rep.bound);
}

TEST_CASE("experiment configuration validation") {
  ExperimentConfig cfg;
  cfg.depths.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.depths = {10, 5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.depths = {5, 10};
  cfg.c_frak = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
