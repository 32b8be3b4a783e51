#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdslab/kernels.hpp"
#include "rdslab/map_family.hpp"
#include "rdslab/noise.hpp"

namespace rdslab {

struct Provenance {
  std::string kind = "sampled-from-density";  ///< or "pushed-forward", "source-restricted"
  int depth = 0;
  std::uint64_t seed = 0;
};

/// Weighted point cloud. Probability ensembles have total mass 1; restricted
/// ensembles (sub-measures) carry their mass explicitly.
struct ParticleEnsemble {
  std::vector<TorusPoint> points;
  std::vector<double> weights;
  Provenance provenance;

  std::size_t size() const { return points.size(); }
  double total_mass() const;
};

/// Piecewise-constant density on an m×m grid; cell (ix, iy) at index iy*m + ix holds its mass.
struct UlamDensity {
  int m = 0;
  std::vector<double> cells;

  static UlamDensity uniform(int m);
  int cell_of(const TorusPoint& p) const;
  /// Density value dμ/dLeb at p.
  double density_at(const TorusPoint& p) const { return cells[cell_of(p)] * m * m; }
  double max_density() const;
  double min_density() const;
};

struct TransferOperatorEstimate {
  int grid_size = 0;
  int noise_samples = 0;
  CsrMatrix matrix;

  double max_row_sum_error() const;
};

struct StationaryResult {
  UlamDensity density;
  TransferOperatorEstimate op;
  int iterations = 0;
  double residual = 0.0;
  double contraction_estimate = 0.0;  ///< ratio of the last two residuals
};

TransferOperatorEstimate estimate_transfer_operator(const MapFamily& f, const NoiseLaw& law, int grid_size,
                                                    int noise_samples, std::uint64_t seed);

/// Leading left fixed vector of the Ulam operator by power iteration.
StationaryResult estimate_stationary(const MapFamily& f, const NoiseLaw& law, int grid_size, int noise_samples,
                                     double tol, std::uint64_t seed = 1, int max_iter = 20000);

ParticleEnsemble sample_from_density(const UlamDensity& density, std::size_t n_particles, std::uint64_t seed);

/// Applies compose_pullback(·, n) to every particle.
ParticleEnsemble pullback_pushforward(const MapFamily& f, const NoisePath& path, const ParticleEnsemble& e, int n,
                                      bool parallel = true);

/// Mean over 64 Fourier test functions of |∫φ de1 − ∫φ de2|.
double weak_distance(const ParticleEnsemble& e1, const ParticleEnsemble& e2);
/// The 64 Fourier moments behind weak_distance.
std::vector<double> weak_signature(const ParticleEnsemble& e);
double weak_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Cell masses of the ensemble on an m×m grid.
UlamDensity ulam_projection(const ParticleEnsemble& e, int m);

/// Largest |count − expected| / binomial σ over cells, for a probability ensemble with equal weights.
double max_binomial_deviation(const ParticleEnsemble& e, const UlamDensity& reference);

/// Single long orbit histogram (for cross-checking stationary densities).
UlamDensity orbit_histogram(const MapFamily& f, const NoisePath& path, const TorusPoint& p, std::int64_t steps,
                            int m, int burn_in = 1000);

double l1_distance(const UlamDensity& a, const UlamDensity& b);

/// True when each value is below its predecessor, except that once both sit within
/// `band` × floor the sequence only has to stay inside that band.
bool decreasing_to_floor(const std::vector<double>& values, double floor, double band = 1.5);

}  // namespace rdslab
