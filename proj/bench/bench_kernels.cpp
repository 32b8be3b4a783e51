#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <functional>

#include "rdslab/kernels.hpp"
#include "rdslab/transport.hpp"

using namespace rdslab;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %9.4f s   openmp %9.4f s   speedup %5.2fx   %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel timings"};
  std::size_t particles = 1000000;
  int steps = 20, grid = 128, samples = 200, reps = 3;
  app.add_option("--particles", particles, "particles for push-forward and moments");
  app.add_option("--steps", steps, "push-forward steps");
  app.add_option("--grid", grid, "Ulam grid size");
  app.add_option("--samples", samples, "noise samples per Ulam cell");
  app.add_option("--reps", reps, "repetitions (best time is reported)");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n", omp_get_max_threads());
  const auto f = make_family("C", {{"a", 0.3}});
  const NoisePath path(7, NoiseLaw::uniform_full());
  const std::vector<NoiseValue> noise = path.window(1, static_cast<std::size_t>(steps));
  const ParticleEnsemble e = sample_from_density(UlamDensity::uniform(64), particles, 11);

  std::vector<TorusPoint> a, b;
  const double ts = best_of(reps, [&] {
    a = e.points;
    kernels::serial::push_forward(*f, noise, a);
  });
  const double tp = best_of(reps, [&] {
    b = e.points;
    kernels::push_forward(*f, noise, b);
  });
  report("push_forward", ts, tp, a == b);

  const auto modes = fourier_mode_bank();
  std::vector<double> ms, mp, mn;
  const double tn = best_of(reps, [&] { mn = kernels::serial::fourier_moments_naive(a, e.weights, modes); });
  const double tms = best_of(reps, [&] { ms = kernels::serial::fourier_moments(a, e.weights, modes); });
  const double tmp = best_of(reps, [&] { mp = kernels::fourier_moments(a, e.weights, modes); });
  report("fourier_moments", tms, tmp, ms == mp);
  double naive_gap = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) naive_gap = std::max(naive_gap, std::abs(ms[i] - mn[i]));
  std::printf("%-22s naive  %9.4f s   blocked %8.4f s   max |diff| %.2e\n", "fourier_moments_naive", tn, tms, naive_gap);

  CsrMatrix us, up;
  const double tus = best_of(1, [&] { us = kernels::serial::ulam_assembly(*f, NoiseLaw::uniform_full(), grid, samples, 3); });
  const double tup = best_of(1, [&] { up = kernels::ulam_assembly(*f, NoiseLaw::uniform_full(), grid, samples, 3); });
  report("ulam_assembly", tus, tup, us.col == up.col && us.val == up.val && us.row_ptr == up.row_ptr);

  const CsrMatrix pt = transpose(up);
  std::vector<double> x(static_cast<std::size_t>(pt.cols), 1.0 / pt.cols), ys, yp;
  const double tvs = best_of(reps * 10, [&] { kernels::serial::multiply(pt, x, ys); });
  const double tvp = best_of(reps * 10, [&] { kernels::multiply(pt, x, yp); });
  report("csr_multiply", tvs, tvp, ys == yp);
  return 0;
}
