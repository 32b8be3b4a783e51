#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rdslab/manifolds.hpp"
#include "rdslab/transport.hpp"

namespace rdslab {

struct ExperimentConfig {
  double beta0 = 0.1;
  double l0 = 0.0;        ///< non-positive: choose the (1 − β0/3) quantile of l
  double eps_star = 0.025;
  double r_star = 0.08;
  double c_frak = 2.0;
  std::vector<int> depths{30, 40, 50};
  double alpha0 = 0.0;    ///< non-positive: β0 / Leb(M)
  std::int64_t particles = 3500000;
  std::uint64_t seed = 1;

  int source_candidates = 4;
  int search_particles = 20000;
  int min_retained_depths = 3;
  int stack_leaves = 33;
  int levels = 5;
  int cube_levels = 1;
  int min_cell_particles = 2000;
  int wn_leaves = 96;
  int n_past = 40;

  void validate() const;
};

struct SourceTarget {
  TorusPoint p_minus;
  TorusPoint p_hat;
  double c_star = 0.0;
  std::vector<int> depths;     ///< retained depths
  std::vector<double> masses;  ///< landed qualified mass at each retained depth
  double l0 = 0.0;
  double alpha0 = 0.0;
  int sources_tried = 0;
};

/// Chart size proxy l_raw at the orbit point p of time t (short horizon, no tempering).
double l_proxy(const MapFamily& f, const NoisePath& path, const TorusPoint& p, std::int64_t t,
               const ChartParams& params, std::optional<std::int64_t> history_start = std::nullopt);

/// (1 − β0/3) quantile of l_proxy over a stationary sample.
double auto_l0(const MapFamily& f, const NoisePath& path, const UlamDensity& stationary, double beta0,
               int samples, std::uint64_t seed, const ChartParams& params);

/// Mask of particles (given at time −n) whose l-proxy is ≤ l0 at time −n and at time 0.
std::vector<char> qualify_uniform(const MapFamily& f, const NoisePath& path, const ParticleEnsemble& at_minus_n,
                                  double l0, int n, const ChartParams& params);

/// Uniform sample of B(center, radius) carrying (α0/2)·Leb(B) in total.
ParticleEnsemble sample_source(const TorusPoint& center, double radius, double alpha0, std::size_t count,
                               std::uint64_t seed);

SourceTarget find_source_target(const MapFamily& f, const NoisePath& path, const UlamDensity& stationary,
                                const ExperimentConfig& config, const ChartParams& params);

/// Parallel-line foliation of the source ball, written in the source frame.
struct SourceFoliation {
  ChartFrame frame;
  double eps_star = 0.0;
  double K_minus = 0.0;
  std::vector<UGraph> lines;  ///< line j is v = offset_j over its chord
  std::vector<double> offsets;
};

SourceFoliation disintegrate_source(const ChartFrame& frame_at_source, double eps_star, double r_minus,
                                    double K_minus, int n_lines);

/// The foliation line through q as a graph over E^u(q) in the geometric frame at q (the h⁻_x graph).
/// Carries a zero log-density. Throws SeparationFailure if the axes at q are too far from the source axes
/// and ConeViolation if the measured Lip reaches K_minus.
UGraph source_graph_at(const MapFamily& f, const NoisePath& path, const SourceFoliation& fol, const TorusPoint& q,
                       std::int64_t t, double radius, const ChartParams& params);

/// Pushes each source graph (frames based at time −n points) to time 0 and re-graphs it over the box at x*.
LeafStack build_wn_stack(const MapFamily& f, const NoisePath& path, const std::vector<UGraph>& source_graphs,
                         const TransformSchedule& schedule, int n, const TorusPoint& x_star, double r_star,
                         const ChartParams& params);

/// Box coordinates of landed particles: u along the box axis and the transverse stack intercept.
struct BoxSample {
  std::vector<double> u;
  std::vector<double> intercept;
  std::vector<double> weight;
  std::vector<std::size_t> index;  ///< particle index in the landed ensemble
  double total_mass() const;
};

BoxSample project_to_stack(const LeafStack& u_stack, const ParticleEnsemble& landed);

struct PartitionCell {
  double lo = 0.0, hi = 0.0;          ///< compact core Δ
  double open_lo = 0.0, open_hi = 0.0;  ///< open enlargement β
  int parent = -1;
  double mass = 0.0;
  std::size_t count = 0;
};

struct NestedPartition {
  std::vector<std::vector<PartitionCell>> levels;  ///< levels[0] is the root
  std::vector<double> c;                           ///< c_m, m = 1 … M
  double root_mass = 0.0;
  double retained_fraction(int m) const;
};

/// c_m = 2^{−2^{−m}}, so that Π c_m → ½.
double retention_target(int m);

NestedPartition build_nested_partition(const LeafStack& u_stack, const BoxSample& sample, int levels);

struct DensityRatio {
  int level = 0;
  int cell = 0;
  int cube_level = 0;
  int cube = 0;
  double ratio = 0.0;       ///< νⁿ(β ∩ V_C) / νⁿ(β)
  double leb_hat = 0.0;     ///< normalized Lebesgue measure of C
  std::size_t cell_count = 0;
};

struct LeafDistortion {
  int leaf = 0;
  double intercept = 0.0;
  double log_range = 0.0;  ///< max |log ρ(p1)/ρ(p2)| over the leaf
};

struct DensityReport {
  int depth = 0;
  int level = 0;
  std::vector<DensityRatio> ratios;
  std::vector<LeafDistortion> distortion;
  std::vector<std::string> insufficient;  ///< cells below the particle floor
  double A = 1.0;
  double D_bar = 0.0;
  std::size_t cells_used = 0;
};

DensityReport conditional_density_check(const LeafStack& wn_stack, const BoxSample& sample,
                                        const NestedPartition& partition, int level, int cube_levels,
                                        int min_cell_particles);

struct LeafDensityProfile {
  std::vector<double> u;
  std::vector<double> density;  ///< w.r.t. u, integrates to 1 over the leaf
  std::vector<double> log_density;
  double lipschitz_D = 0.0;     ///< max |Δ log ρ| / distance between nodes
  double cdf(double x) const;
};

/// ρ(p) ∝ |Df^{-n}(p)·dp/du| along the leaf, from backward orbits of n_trunc steps.
LeafDensityProfile predicted_leaf_density(const MapFamily& f, const NoisePath& path, const UGraph& leaf, int n_trunc);

/// Kolmogorov–Smirnov distance between the u-values of a band and a predicted profile.
double ks_distance(std::vector<double> u, const LeafDensityProfile& profile);

struct EntropyCheck {
  double lambda1 = 0.0;
  double mean_log_unstable_jacobian = 0.0;
};

EntropyCheck entropy_consistency(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n);

/// Largest positive excess (νⁿ − μⁿ)/σ over cells of an m×m grid.
double restriction_excess(const ParticleEnsemble& nu, const ParticleEnsemble& mu, int m);

struct GoodSetReport {
  int tried = 0;
  int passed = 0;
  double fraction = 0.0;
  double bound = 0.0;  ///< (𝔠 − 1)/𝔠
};

/// Fraction of independent noise seeds whose source/target search
/// retains at least three depths.
GoodSetReport good_seed_fraction(const MapFamily& f, const NoiseLaw& law, const UlamDensity& stationary,
                                 const ExperimentConfig& config, const ChartParams& params, int base_seeds);

/// One depth of the SRB experiment.
struct DepthSnapshot {
  int depth = 0;
  ParticleEnsemble landed;  ///< restricted νⁿ particles that land in the box region
  std::vector<TorusPoint> landed_sources;  ///< their time −n positions
  BoxSample sample;
  NestedPartition partition;
  std::vector<DensityReport> reports;  ///< one per partition level 1 … M
  LeafStack wn_stack;
  std::vector<double> leaf_distances;  ///< sup distance of each Wⁿ leaf to the W^u leaf through the same point
  double pushed_mass = 0.0;
  std::size_t pushed = 0;
};

/// Stack of W^u leaves through evenly spaced points of the box cs-axis.
LeafStack reference_u_stack(const MapFamily& f, const NoisePath& path, const TorusPoint& x_star, double r_star,
                            int leaves, int n_past, const ChartParams& params);

/// Pushes νⁿ from the source ball to the box at depth n, builds the partition, density reports and Wⁿ leaves.
DepthSnapshot srb_snapshot(const MapFamily& f, const NoisePath& path, const SourceTarget& st,
                           const LeafStack& u_stack, const ExperimentConfig& config, const ChartParams& params, int n,
                           bool match_unstable = true);

struct BandCheck {
  int cell = 0;
  double lo = 0.0, hi = 0.0;  ///< core interval on the box cs-axis
  std::vector<double> u;      ///< box u-coordinates of the band's particles
  LeafDensityProfile predicted;  ///< along the W^u leaf through the band's mid-intercept
  double ks = 1.0;
};

/// KS comparison of every partition cell at `level` holding at least `min_count` particles.
std::vector<BandCheck> band_checks(const MapFamily& f, const NoisePath& path, const LeafStack& u_stack,
                                   const DepthSnapshot& snap, int level, int n_trunc, std::size_t min_count,
                                   int n_past, const ChartParams& params);

}  // namespace rdslab
