#include "rdslab/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rdslab/errors.hpp"

namespace rdslab {

ExponentReport lyapunov_qr(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n,
                           const QrOptions& opts) {
  if (n < 1) throw ConfigError("lyapunov.steps", "must be >= 1");
  ExponentReport rep;
  rep.n_steps = n;
  rep.transient = std::max(0, opts.transient);
  const int stride = std::max(1, n / std::max(1, opts.trace_points));

  Vec2 q1(1.0, 0.0);
  TorusPoint x = p;
  double s1 = 0.0, s2 = 0.0, sdet = 0.0;
  const int total = rep.transient + n;
  for (int i = 1; i <= total; ++i) {
    const NoiseValue w = path.value(i);
    const Mat2 J = f.jacobian(w, x);
    const double det = std::abs(J.determinant());
    if (det < 1e-14) {
      throw DegenerateJacobian("det Df = " + std::to_string(det) + " at step " + std::to_string(i));
    }
    const Vec2 z1 = J * q1;
    const double r11 = z1.norm();
    q1 = z1 / r11;
    x = f.eval(w, x);
    if (i <= rep.transient) continue;
    const double lr11 = std::log(r11);
    const double ldet = std::log(det);
    s1 += lr11;
    s2 += ldet - lr11;
    sdet += ldet;
    const int k = i - rep.transient;
    if (k % stride == 0 || k == n) {
      rep.convergence_trace.push_back({static_cast<double>(k), s1 / k, s2 / k});
    }
  }
  rep.lambda1 = s1 / n;
  rep.lambda2 = s2 / n;
  if (rep.lambda2 > rep.lambda1) std::swap(rep.lambda1, rep.lambda2);
  rep.mean_log_det = sdet / n;
  return rep;
}

Vec2 canonical_direction(const Vec2& v) {
  Vec2 u = v.normalized();
  if (u.x() < 0.0 || (u.x() == 0.0 && u.y() < 0.0)) u = -u;
  return u;
}

double line_angle(const Vec2& a, const Vec2& b) {
  const double c = std::abs(cross(a, b));
  const double d = std::abs(a.dot(b));
  return std::atan2(c, d);
}

Splitting make_splitting(const Vec2& e_u, const Vec2& e_cs) {
  Splitting s;
  s.e_u = e_u.normalized();
  s.e_cs = e_cs.normalized();
  const double sine = std::abs(cross(s.e_u, s.e_cs));
  if (sine < 1e-12) throw SeparationFailure("E^u and E^cs are numerically parallel");
  s.proj_norm_u = 1.0 / sine;
  s.proj_norm_cs = 1.0 / sine;
  return s;
}

Vec2 estimate_Eu(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n_past) {
  std::vector<TorusPoint> back(static_cast<std::size_t>(n_past) + 1);
  back[0] = p;
  for (int k = 1; k <= n_past; ++k) back[k] = f.inverse(path.value(-k + 1), back[k - 1]);
  Vec2 v = generic_seed_vector();
  for (int k = n_past; k >= 1; --k) {
    v = f.jacobian(path.value(-k + 1), back[k]) * v;
    v.normalize();
  }
  return canonical_direction(v);
}

Vec2 estimate_Ecs(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n_future) {
  Mat2 m = Mat2::Identity();
  TorusPoint x = p;
  for (int i = 1; i <= n_future; ++i) {
    const NoiseValue w = path.value(i);
    m = f.jacobian(w, x) * m;
    m /= m.cwiseAbs().maxCoeff();
    x = f.eval(w, x);
  }
  // Dominant right-singular vector of m; the contracted one is its normal.
  const Mat2 s = m.transpose() * m;
  const double theta = 0.5 * std::atan2(2.0 * s(0, 1), s(0, 0) - s(1, 1));
  return canonical_direction(Vec2(-std::sin(theta), std::cos(theta)));
}

ChartParams ChartParams::defaults_for(double lambda0) {
  ChartParams p;
  p.lambda0 = lambda0;
  p.delta0 = lambda0 / 20.0;
  p.delta2 = lambda0 / 20.0;
  return p;
}

void ChartParams::validate() const {
  if (!(lambda0 > 0.0)) throw ConfigError("chart.lambda0", "must be positive");
  if (!(delta0 > 0.0) || !(delta2 > 0.0) || !(delta1 > 0.0)) {
    throw ConfigError("chart.delta", "delta0, delta1, delta2 must be positive");
  }
  if (!(lambda() > 0.0)) throw ConfigError("chart.delta0", "lambda0 - delta0 must be positive");
  if (K0_bar > 0.1 || K0_bar <= 0.0) throw ConfigError("chart.K0_bar", "must lie in (0, 1/10]");
  if (horizon < 1 || temper_window < 0 || n_past < 1 || n_future < 1) {
    throw ConfigError("chart.horizon", "horizon, n_past, n_future must be >= 1");
  }
}

double ChartFrame::inverse_norm() const {
  return std::max(Linv.row(0).norm(), Linv.row(1).norm());
}

ChartFrame geometric_frame(const TorusPoint& base, const Splitting& split, double radius) {
  ChartFrame fr;
  fr.base = base;
  fr.split = split;
  fr.L.col(0) = split.e_u;
  fr.L.col(1) = split.e_cs;
  fr.Linv = fr.L.inverse();
  fr.l_raw = fr.inverse_norm();
  fr.l_value = std::max(1.0, fr.l_raw);
  fr.chart_radius = radius;
  return fr;
}

OrbitFrames::OrbitFrames(const MapFamily& f, const NoisePath& path, const TorusPoint& anchor,
                         std::int64_t t_anchor, std::int64_t t0, std::int64_t t1,
                         const ChartParams& params, const FrameOptions& opts)
    : path_(path), t0_(t0), t1_(t1) {
  if (t1 < t0) throw ConfigError("frames", "empty time range");
  const bool lyap = opts.kind == FrameKind::Lyapunov;
  const int N = lyap ? params.horizon : 0;
  const int W = lyap ? params.temper_window : 0;
  t_lo_ = t0 - N - W - params.n_past - 1;
  t_hi_ = t1 + N + W + params.n_future + 1;
  const auto size = static_cast<std::size_t>(t_hi_ - t_lo_ + 1);

  x_.resize(size);
  std::int64_t ta = std::clamp(t_anchor, t_lo_, t_hi_);
  const auto ia = static_cast<std::size_t>(ta - t_lo_);
  x_[ia] = orbit_point(f, path, anchor, t_anchor, ta);
  for (std::size_t i = ia + 1; i < size; ++i) {
    x_[i] = f.eval(path.value(t_lo_ + static_cast<std::int64_t>(i)), x_[i - 1]);
  }
  for (std::size_t i = ia; i-- > 0;) {
    x_[i] = f.inverse(path.value(t_lo_ + static_cast<std::int64_t>(i) + 1), x_[i + 1]);
  }

  J_.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    J_[i] = f.jacobian(path.value(t_lo_ + static_cast<std::int64_t>(i) + 1), x_[i]);
  }

  eu_.resize(size);
  const std::int64_t push_start = std::max(t_lo_, opts.history_start.value_or(t_lo_));
  for (std::size_t i = 0; i < size; ++i) {
    const std::int64_t t = t_lo_ + static_cast<std::int64_t>(i);
    eu_[i] = t <= push_start ? generic_seed_vector() : canonical_direction(J_[i - 1] * eu_[i - 1]);
  }
  ecs_.resize(size);
  ecs_[size - 1] = Vec2(0.37, -1.0).normalized();
  for (std::size_t i = size - 1; i-- > 0;) {
    ecs_[i] = canonical_direction(J_[i].inverse() * ecs_[i + 1]);
  }
  su_.resize(size);
  scs_.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    su_[i] = (J_[i] * eu_[i]).norm();
    scs_[i] = (J_[i] * ecs_[i]).norm();
  }

  const auto idx = [&](std::int64_t t) { return static_cast<std::size_t>(t - t_lo_); };
  const std::int64_t r_lo = t0 - W, r_hi = t1 + W;
  std::vector<ChartFrame> raw(static_cast<std::size_t>(r_hi - r_lo + 1));
  const double lam = params.lambda();
  for (std::int64_t t = r_lo; t <= r_hi; ++t) {
    ChartFrame fr;
    fr.base = x_[idx(t)];
    fr.split = make_splitting(eu_[idx(t)], ecs_[idx(t)]);
    if (lyap) {
      double su = 0.0, prod = 1.0;
      for (int k = 0; k <= N; ++k) {
        if (k > 0) prod /= su_[idx(t - k)];
        su += std::exp(lam * k) * prod;
      }
      double scs = 0.0;
      prod = 1.0;
      for (int k = 0; k <= N; ++k) {
        if (k > 0) prod *= scs_[idx(t + k - 1)];
        scs += std::exp(-params.delta0 * k) * prod;
      }
      fr.norm_u = su;
      fr.norm_cs = scs;
      fr.L.col(0) = 0.5 * fr.split.e_u / su;
      fr.L.col(1) = 0.5 * fr.split.e_cs / scs;
      fr.Linv = fr.L.inverse();
      double l1 = 1.0;
      for (int n = -N; n <= N; ++n) {
        l1 = std::max(l1, std::exp(-params.delta2 * std::abs(n)) * f.c2_bound(path.value(t + n + 1)));
      }
      fr.l_raw = std::max(fr.inverse_norm(), l1);
      fr.truncation_error = std::exp(-N * params.delta0) / (1.0 - std::exp(-params.delta0));
    } else {
      fr = geometric_frame(fr.base, fr.split, opts.geometric_radius);
    }
    raw[static_cast<std::size_t>(t - r_lo)] = fr;
  }

  frames_.resize(static_cast<std::size_t>(t1 - t0 + 1));
  for (std::int64_t t = t0; t <= t1; ++t) {
    ChartFrame fr = raw[static_cast<std::size_t>(t - r_lo)];
    if (lyap) {
      double l = fr.l_raw;
      for (int k = -W; k <= W; ++k) {
        l = std::max(l, std::exp(-params.delta2 * std::abs(k)) * raw[static_cast<std::size_t>(t + k - r_lo)].l_raw);
      }
      fr.l_value = std::max(1.0, l);
      fr.chart_radius = params.delta1 / fr.l_value;
    }
    frames_[static_cast<std::size_t>(t - t0)] = fr;
  }
}

ChartFrame build_chart_frame(const MapFamily& f, const NoisePath& path, const TorusPoint& p,
                             const ChartParams& params, int n_past, int n_future) {
  ChartParams q = params;
  q.n_past = n_past;
  q.n_future = n_future;
  OrbitFrames of(f, path, p, 0, 0, 0, q);
  return of.frame(0);
}

ChartParams default_chart_params(const MapFamily& f, const NoisePath& path, int n) {
  const ExponentReport rep = lyapunov_qr(f, path, TorusPoint(0.1234, 0.5678), n);
  if (!(rep.lambda1 > 0.0)) throw NumericalError("NoHyperbolicity", "top exponent is not positive");
  return ChartParams::defaults_for(rep.lambda1);
}

Vec2 ConnectingMap::eval(const Vec2& z) const {
  return dst_.Linv * displacement(dst_.base, f_->eval(w_, src_.from_chart(z)));
}

Mat2 ConnectingMap::jacobian(const Vec2& z) const {
  return dst_.Linv * f_->jacobian(w_, src_.from_chart(z)) * src_.L;
}

Vec2 ConnectingMap::inverse(const Vec2& z) const {
  return src_.Linv * displacement(src_.base, f_->inverse(w_, dst_.from_chart(z)));
}

}  // namespace rdslab
