#include "rdslab/cocycle.hpp"

namespace rdslab {

TorusPoint compose_forward(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n) {
  TorusPoint q = p;
  for (int i = 1; i <= n; ++i) q = f.eval(path.value(i), q);
  return q;
}

TorusPoint compose_backward(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n) {
  TorusPoint q = p;
  for (int i = 0; i > -n; --i) q = f.inverse(path.value(i), q);
  return q;
}

TorusPoint compose_pullback(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n) {
  TorusPoint q = p;
  for (int i = -n + 1; i <= 0; ++i) q = f.eval(path.value(i), q);
  return q;
}

Mat2 jacobian_forward(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n) {
  Mat2 m = Mat2::Identity();
  TorusPoint q = p;
  for (int i = 1; i <= n; ++i) {
    const NoiseValue w = path.value(i);
    m = f.jacobian(w, q) * m;
    q = f.eval(w, q);
  }
  return m;
}

TorusPoint orbit_point(const MapFamily& f, const NoisePath& path, const TorusPoint& p,
                       std::int64_t t0, std::int64_t t) {
  TorusPoint q = p;
  for (std::int64_t s = t0; s < t; ++s) q = f.eval(path.value(s + 1), q);
  for (std::int64_t s = t0; s > t; --s) q = f.inverse(path.value(s), q);
  return q;
}

}  // namespace rdslab
