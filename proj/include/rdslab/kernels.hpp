#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rdslab/map_family.hpp"

namespace rdslab {

/// Compressed sparse row storage of a row-stochastic matrix.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<int> col;
  std::vector<double> val;
};

/// Half-plane Fourier modes k = (k1, k2) used by the weak metric.
std::vector<std::array<int, 2>> fourier_mode_bank(std::size_t count = 32);

CsrMatrix transpose(const CsrMatrix& m);

namespace kernels {

/// Particle block size for deterministic reductions.
inline constexpr std::size_t kReductionBlock = 4096;

/// Apply f_{noise[0]}, f_{noise[1]}, … to every point, OpenMP-parallel over particles.
void push_forward(const MapFamily& f, const std::vector<NoiseValue>& noise, std::vector<TorusPoint>& pts);

/// Ulam matrix for cell-then-noise sampling, OpenMP-parallel over rows.
CsrMatrix ulam_assembly(const MapFamily& f, const NoiseLaw& law, int m, int samples, std::uint64_t seed);

/// Weighted moments ∫cos(2πk·p), ∫sin(2πk·p) for each mode, interleaved (cos, sin).
/// Block partial sums are combined in block order, so the result does not depend on thread count.
std::vector<double> fourier_moments(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                                    const std::vector<std::array<int, 2>>& modes);

/// y = M x for a CSR matrix, parallel over rows (apply to Pᵀ for the left action of P).
void multiply(const CsrMatrix& m, const std::vector<double>& x, std::vector<double>& y);

namespace serial {
void push_forward(const MapFamily& f, const std::vector<NoiseValue>& noise, std::vector<TorusPoint>& pts);
CsrMatrix ulam_assembly(const MapFamily& f, const NoiseLaw& law, int m, int samples, std::uint64_t seed);
std::vector<double> fourier_moments(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                                    const std::vector<std::array<int, 2>>& modes);
/// Straightforward accumulation with direct cos/sin calls; no blocking.
std::vector<double> fourier_moments_naive(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                                          const std::vector<std::array<int, 2>>& modes);
void multiply(const CsrMatrix& m, const std::vector<double>& x, std::vector<double>& y);
}  // namespace serial

}  // namespace kernels
}  // namespace rdslab
