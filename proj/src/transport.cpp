#include "rdslab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdslab/cocycle.hpp"
#include "rdslab/errors.hpp"

namespace rdslab {

namespace {
constexpr std::uint64_t kSampleStream = 0x53616d70ULL;
}

double ParticleEnsemble::total_mass() const {
  // Neumaier-compensated sum.
  double s = 0.0, c = 0.0;
  for (double w : weights) {
    const double t = s + w;
    c += std::abs(s) >= std::abs(w) ? (s - t) + w : (w - t) + s;
    s = t;
  }
  return s + c;
}

UlamDensity UlamDensity::uniform(int m) {
  UlamDensity d;
  d.m = m;
  d.cells.assign(static_cast<std::size_t>(m) * m, 1.0 / (static_cast<double>(m) * m));
  return d;
}

int UlamDensity::cell_of(const TorusPoint& p) const {
  const int ix = std::min(m - 1, static_cast<int>(p.x() * m));
  const int iy = std::min(m - 1, static_cast<int>(p.y() * m));
  return iy * m + ix;
}

double UlamDensity::max_density() const {
  return *std::max_element(cells.begin(), cells.end()) * m * m;
}

double UlamDensity::min_density() const {
  return *std::min_element(cells.begin(), cells.end()) * m * m;
}

double TransferOperatorEstimate::max_row_sum_error() const {
  double worst = 0.0;
  for (int r = 0; r < matrix.rows; ++r) {
    double s = 0.0;
    for (std::int64_t k = matrix.row_ptr[r]; k < matrix.row_ptr[r + 1]; ++k) s += matrix.val[k];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

TransferOperatorEstimate estimate_transfer_operator(const MapFamily& f, const NoiseLaw& law, int grid_size,
                                                    int noise_samples, std::uint64_t seed) {
  if (grid_size < 16) throw ConfigError("transport.grid", "grid_size must be >= 16");
  if (noise_samples < 1000) throw ConfigError("transport.noise_samples", "must be >= 1000");
  TransferOperatorEstimate op;
  op.grid_size = grid_size;
  op.noise_samples = noise_samples;
  op.matrix = kernels::ulam_assembly(f, law, grid_size, noise_samples, seed);
  return op;
}

StationaryResult estimate_stationary(const MapFamily& f, const NoiseLaw& law, int grid_size, int noise_samples,
                                     double tol, std::uint64_t seed, int max_iter) {
  StationaryResult res;
  res.op = estimate_transfer_operator(f, law, grid_size, noise_samples, seed);
  const CsrMatrix pt = transpose(res.op.matrix);
  std::vector<double> v = UlamDensity::uniform(grid_size).cells, next;
  double prev_residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    kernels::multiply(pt, v, next);
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    double residual = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] /= total;
      residual += std::abs(next[i] - v[i]);
    }
    v.swap(next);
    if (prev_residual > 0.0) res.contraction_estimate = residual / prev_residual;
    prev_residual = residual;
    res.iterations = it;
    res.residual = residual;
    if (residual < tol) break;
  }
  if (res.residual >= tol) {
    throw NonConvergence("power iteration residual " + std::to_string(res.residual) + " after " +
                         std::to_string(max_iter) + " iterations; estimated contraction ratio " +
                         std::to_string(res.contraction_estimate) + " (spectral gap ~ " +
                         std::to_string(1.0 - res.contraction_estimate) + ")");
  }
  res.density.m = grid_size;
  res.density.cells = std::move(v);
  return res;
}

ParticleEnsemble sample_from_density(const UlamDensity& density, std::size_t n_particles, std::uint64_t seed) {
  if (n_particles < 1) throw ConfigError("transport.particles", "must be >= 1");
  std::vector<double> cdf(density.cells.size());
  std::partial_sum(density.cells.begin(), density.cells.end(), cdf.begin());
  const double total = cdf.back();
  ParticleEnsemble e;
  e.points.resize(n_particles);
  e.weights.assign(n_particles, 1.0 / static_cast<double>(n_particles));
  e.provenance = {"sampled-from-density", 0, seed};
  const int m = density.m;
  const auto n = static_cast<std::int64_t>(n_particles);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = counter_uniform(seed, kSampleStream, i, 0) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    // Skip zero-mass cells that share the same cumulative value.
    std::size_t c = std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    while (density.cells[c] <= 0.0 && c > 0) --c;
    const int ix = static_cast<int>(c) % m, iy = static_cast<int>(c) / m;
    e.points[i] = TorusPoint((ix + counter_uniform(seed, kSampleStream, i, 1)) / m,
                             (iy + counter_uniform(seed, kSampleStream, i, 2)) / m);
  }
  return e;
}

ParticleEnsemble pullback_pushforward(const MapFamily& f, const NoisePath& path, const ParticleEnsemble& e, int n,
                                      bool parallel) {
  ParticleEnsemble out = e;
  if (n <= 0) return out;
  const std::vector<NoiseValue> noise = path.window(-n + 1, static_cast<std::size_t>(n));
  if (parallel) {
    kernels::push_forward(f, noise, out.points);
  } else {
    kernels::serial::push_forward(f, noise, out.points);
  }
  out.provenance.kind = e.provenance.kind == "source-restricted" ? "source-restricted" : "pushed-forward";
  out.provenance.depth = n;
  out.provenance.seed = path.seed();
  return out;
}

std::vector<double> weak_signature(const ParticleEnsemble& e) {
  if (e.size() == 0) throw ConfigError("weak_distance", "ensembles must be nonempty");
  static const auto modes = fourier_mode_bank(32);
  return kernels::fourier_moments(e.points, e.weights, modes);
}

double weak_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
  return s / static_cast<double>(a.size());
}

double weak_distance(const ParticleEnsemble& e1, const ParticleEnsemble& e2) {
  return weak_distance(weak_signature(e1), weak_signature(e2));
}

UlamDensity ulam_projection(const ParticleEnsemble& e, int m) {
  UlamDensity d;
  d.m = m;
  d.cells.assign(static_cast<std::size_t>(m) * m, 0.0);
  for (std::size_t i = 0; i < e.size(); ++i) d.cells[d.cell_of(e.points[i])] += e.weights[i];
  return d;
}

double max_binomial_deviation(const ParticleEnsemble& e, const UlamDensity& reference) {
  const UlamDensity h = ulam_projection(e, reference.m);
  const double n = static_cast<double>(e.size());
  double worst = 0.0;
  for (std::size_t c = 0; c < h.cells.size(); ++c) {
    const double p = reference.cells[c];
    if (p <= 0.0) continue;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    worst = std::max(worst, std::abs(h.cells[c] * n - n * p) / sigma);
  }
  return worst;
}

UlamDensity orbit_histogram(const MapFamily& f, const NoisePath& path, const TorusPoint& p, std::int64_t steps,
                            int m, int burn_in) {
  UlamDensity d;
  d.m = m;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(m) * m, 0);
  TorusPoint x = p;
  for (std::int64_t i = 1; i <= burn_in + steps; ++i) {
    x = f.eval(path.value(i), x);
    if (i > burn_in) ++counts[d.cell_of(x)];
  }
  d.cells.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) d.cells[c] = static_cast<double>(counts[c]) / steps;
  return d;
}

double l1_distance(const UlamDensity& a, const UlamDensity& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.cells.size(); ++c) s += std::abs(a.cells[c] - b.cells[c]);
  return s;
}

bool decreasing_to_floor(const std::vector<double>& values, double floor, double band) {
  const double cap = band * floor;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= cap && values[i - 1] <= cap) continue;
    if (!(values[i] < values[i - 1])) return false;
  }
  return true;
}

}  // namespace rdslab
