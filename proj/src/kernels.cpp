#include "rdslab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "rdslab/noise.hpp"

namespace rdslab {

namespace {

constexpr std::uint64_t kUlamStream = 0x556c616dULL;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int grid_cell(const TorusPoint& p, int m) {
  const int ix = std::min(m - 1, static_cast<int>(p.x() * m));
  const int iy = std::min(m - 1, static_cast<int>(p.y() * m));
  return iy * m + ix;
}

void ulam_row(const MapFamily& f, const NoiseLaw& law, int m, int samples, std::uint64_t seed, int row,
              std::vector<int>& cols, std::vector<double>& vals) {
  const int ix = row % m, iy = row / m;
  std::vector<int> hits(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const auto c = static_cast<std::uint64_t>(4 * s);
    const TorusPoint x((ix + counter_uniform(seed, kUlamStream, row, c)) / m,
                       (iy + counter_uniform(seed, kUlamStream, row, c + 1)) / m);
    const NoiseValue w = law.draw(counter_uniform(seed, kUlamStream, row, c + 2),
                                  counter_uniform(seed, kUlamStream, row, c + 3));
    hits[s] = grid_cell(f.eval(w, x), m);
  }
  std::sort(hits.begin(), hits.end());
  cols.clear();
  vals.clear();
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    cols.push_back(hits[i]);
    vals.push_back(static_cast<double>(j - i) / samples);
    i = j;
  }
}

CsrMatrix assemble_rows(std::vector<std::vector<int>>& cols, std::vector<std::vector<double>>& vals, int n) {
  CsrMatrix out;
  out.rows = out.cols = n;
  out.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int r = 0; r < n; ++r) out.row_ptr[r + 1] = out.row_ptr[r] + static_cast<std::int64_t>(cols[r].size());
  out.col.reserve(static_cast<std::size_t>(out.row_ptr[n]));
  out.val.reserve(static_cast<std::size_t>(out.row_ptr[n]));
  for (int r = 0; r < n; ++r) {
    out.col.insert(out.col.end(), cols[r].begin(), cols[r].end());
    out.val.insert(out.val.end(), vals[r].begin(), vals[r].end());
  }
  return out;
}

// Adds the (cos, sin) moments of one block into acc.
void block_moments(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                   const std::vector<std::array<int, 2>>& modes, std::size_t begin, std::size_t end,
                   double* acc) {
  int kmax = 0;
  for (const auto& k : modes) kmax = std::max({kmax, std::abs(k[0]), std::abs(k[1])});
  std::vector<std::complex<double>> px(static_cast<std::size_t>(2 * kmax + 1));
  std::vector<std::complex<double>> py(static_cast<std::size_t>(2 * kmax + 1));
  for (std::size_t i = begin; i < end; ++i) {
    const std::complex<double> ex = std::polar(1.0, kTwoPi * pts[i].x());
    const std::complex<double> ey = std::polar(1.0, kTwoPi * pts[i].y());
    px[kmax] = py[kmax] = 1.0;
    for (int k = 1; k <= kmax; ++k) {
      px[kmax + k] = px[kmax + k - 1] * ex;
      py[kmax + k] = py[kmax + k - 1] * ey;
      px[kmax - k] = std::conj(px[kmax + k]);
      py[kmax - k] = std::conj(py[kmax + k]);
    }
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const std::complex<double> z = px[kmax + modes[j][0]] * py[kmax + modes[j][1]];
      acc[2 * j] += w[i] * z.real();
      acc[2 * j + 1] += w[i] * z.imag();
    }
  }
}

std::vector<double> blocked_moments(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                                    const std::vector<std::array<int, 2>>& modes, bool parallel) {
  const std::size_t nb = (pts.size() + kernels::kReductionBlock - 1) / kernels::kReductionBlock;
  const std::size_t width = 2 * modes.size();
  std::vector<double> partial(nb * width, 0.0);
  const auto nbl = static_cast<std::int64_t>(nb);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t b = 0; b < nbl; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kernels::kReductionBlock;
    const std::size_t end = std::min(pts.size(), begin + kernels::kReductionBlock);
    block_moments(pts, w, modes, begin, end, partial.data() + static_cast<std::size_t>(b) * width);
  }
  std::vector<double> out(width, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t j = 0; j < width; ++j) out[j] += partial[b * width + j];
  }
  return out;
}

}  // namespace

std::vector<std::array<int, 2>> fourier_mode_bank(std::size_t count) {
  std::vector<std::array<int, 2>> modes;
  const int r = 8;
  for (int k1 = 0; k1 <= r; ++k1) {
    for (int k2 = -r; k2 <= r; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      modes.push_back({k1, k2});
    }
  }
  std::sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) {
    const int na = a[0] * a[0] + a[1] * a[1], nb = b[0] * b[0] + b[1] * b[1];
    if (na != nb) return na < nb;
    return a < b;
  });
  modes.resize(std::min(count, modes.size()));
  return modes;
}

CsrMatrix transpose(const CsrMatrix& m) {
  CsrMatrix t;
  t.rows = m.cols;
  t.cols = m.rows;
  t.row_ptr.assign(static_cast<std::size_t>(t.rows) + 1, 0);
  for (int c : m.col) ++t.row_ptr[c + 1];
  for (int r = 0; r < t.rows; ++r) t.row_ptr[r + 1] += t.row_ptr[r];
  t.col.resize(m.col.size());
  t.val.resize(m.val.size());
  std::vector<std::int64_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int r = 0; r < m.rows; ++r) {
    for (std::int64_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
      const std::int64_t dst = next[m.col[k]]++;
      t.col[dst] = r;
      t.val[dst] = m.val[k];
    }
  }
  return t;
}

namespace kernels {

void push_forward(const MapFamily& f, const std::vector<NoiseValue>& noise, std::vector<TorusPoint>& pts) {
  const auto n = static_cast<std::int64_t>(pts.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    TorusPoint q = pts[i];
    for (const NoiseValue& w : noise) q = f.eval(w, q);
    pts[i] = q;
  }
}

CsrMatrix ulam_assembly(const MapFamily& f, const NoiseLaw& law, int m, int samples, std::uint64_t seed) {
  const int n = m * m;
  std::vector<std::vector<int>> cols(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> vals(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) ulam_row(f, law, m, samples, seed, r, cols[r], vals[r]);
  return assemble_rows(cols, vals, n);
}

std::vector<double> fourier_moments(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                                    const std::vector<std::array<int, 2>>& modes) {
  return blocked_moments(pts, w, modes, true);
}

void multiply(const CsrMatrix& m, const std::vector<double>& x, std::vector<double>& y) {
  y.assign(static_cast<std::size_t>(m.rows), 0.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (std::int64_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) s += m.val[k] * x[m.col[k]];
    y[r] = s;
  }
}

namespace serial {

void push_forward(const MapFamily& f, const std::vector<NoiseValue>& noise, std::vector<TorusPoint>& pts) {
  for (TorusPoint& p : pts) {
    for (const NoiseValue& w : noise) p = f.eval(w, p);
  }
}

CsrMatrix ulam_assembly(const MapFamily& f, const NoiseLaw& law, int m, int samples, std::uint64_t seed) {
  const int n = m * m;
  std::vector<std::vector<int>> cols(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> vals(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) ulam_row(f, law, m, samples, seed, r, cols[r], vals[r]);
  return assemble_rows(cols, vals, n);
}

std::vector<double> fourier_moments(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                                    const std::vector<std::array<int, 2>>& modes) {
  return blocked_moments(pts, w, modes, false);
}

std::vector<double> fourier_moments_naive(const std::vector<TorusPoint>& pts, const std::vector<double>& w,
                                          const std::vector<std::array<int, 2>>& modes) {
  std::vector<double> out(2 * modes.size(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const double a = kTwoPi * (modes[j][0] * pts[i].x() + modes[j][1] * pts[i].y());
      out[2 * j] += w[i] * std::cos(a);
      out[2 * j + 1] += w[i] * std::sin(a);
    }
  }
  return out;
}

void multiply(const CsrMatrix& m, const std::vector<double>& x, std::vector<double>& y) {
  y.assign(static_cast<std::size_t>(m.rows), 0.0);
  for (int r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (std::int64_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) s += m.val[k] * x[m.col[k]];
    y[r] = s;
  }
}

}  // namespace serial
}  // namespace kernels
}  // namespace rdslab
