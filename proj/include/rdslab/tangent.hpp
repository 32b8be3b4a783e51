#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "rdslab/cocycle.hpp"
#include "rdslab/map_family.hpp"

namespace rdslab {

struct ExponentReport {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int n_steps = 0;
  int transient = 0;
  double mean_log_det = 0.0;
  /// (step, running λ1, running λ2) samples.
  std::vector<std::array<double, 3>> convergence_trace;
};

struct QrOptions {
  int transient = 100;
  int trace_points = 100;
};

/// Benettin / QR estimate of both exponents along the forward orbit of p.
ExponentReport lyapunov_qr(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n,
                           const QrOptions& opts = {});

/// Fixed generic seed direction used by the E^u estimator.
inline Vec2 generic_seed_vector() { return Vec2(1.0, 0.37).normalized(); }

/// Unit vector with a canonical sign (positive x, or positive y when x vanishes).
Vec2 canonical_direction(const Vec2& v);

/// Angle in [0, π/2] between the lines spanned by a and b.
double line_angle(const Vec2& a, const Vec2& b);

struct Splitting {
  Vec2 e_u{1.0, 0.0};
  Vec2 e_cs{0.0, 1.0};
  double proj_norm_u = 1.0;
  double proj_norm_cs = 1.0;
};

Splitting make_splitting(const Vec2& e_u, const Vec2& e_cs);

/// Direction of df^{n_past}_{θ^{-n_past}ω} applied to the generic vector, along the pullback orbit of p.
Vec2 estimate_Eu(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n_past);

/// Most-contracted right-singular direction of df^{n_future}_ω at p. Reads noise 1..n_future only.
Vec2 estimate_Ecs(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n_future);

struct ChartParams {
  double lambda0 = 0.0;
  double delta0 = 0.0;
  double delta1 = 0.1;
  double delta2 = 0.0;
  int horizon = 30;
  int temper_window = 30;
  double K0_bar = 0.1;
  double r1_bar = 0.1;
  int n_past = 40;
  int n_future = 40;

  double lambda() const { return lambda0 - delta0; }
  /// δ0 = δ2 = λ0/20 and the remaining defaults above.
  static ChartParams defaults_for(double lambda0);
  void validate() const;
};

/**
 * Linear chart data at a point: Φ(z) = base + L z (mod 1).
 *
 * For Lyapunov frames L = ½[e_u/‖e_u‖'_u, e_cs/‖e_cs‖'_cs] and l_value is the
 * tempered size function. Geometric frames use unit columns and a fixed radius.
 */
struct ChartFrame {
  TorusPoint base;
  Mat2 L = Mat2::Identity();
  Mat2 Linv = Mat2::Identity();
  Splitting split;
  double l_raw = 1.0;
  double l_value = 1.0;
  double chart_radius = 0.0;
  double norm_u = 1.0;   ///< ‖e_u‖'_u
  double norm_cs = 1.0;  ///< ‖e_cs‖'_cs
  double truncation_error = 0.0;

  Vec2 to_chart(const TorusPoint& y) const { return Linv * displacement(base, y); }
  TorusPoint from_chart(const Vec2& z) const { return base + L * z; }
  /// max-row Euclidean norm of L⁻¹, i.e. the operator norm Euclidean → max.
  double inverse_norm() const;
};

/// Unit-column frame at base with the given splitting; l_value = ‖L⁻¹‖.
ChartFrame geometric_frame(const TorusPoint& base, const Splitting& split, double radius);

enum class FrameKind { Lyapunov, Geometric };

struct FrameOptions {
  FrameKind kind = FrameKind::Lyapunov;
  double geometric_radius = 0.1;
  /// E^u pushes never start before this time (finite-history estimates).
  std::optional<std::int64_t> history_start;
};

/**
 * An orbit segment with splittings and chart frames at every time in [t0, t1].
 *
 * The orbit passes through `anchor` at time t_anchor and is extended in both
 * directions by the margins that the Lyapunov sums, the tempering window and
 * the direction estimators require.
 */
class OrbitFrames {
public:
  OrbitFrames(const MapFamily& f, const NoisePath& path, const TorusPoint& anchor,
              std::int64_t t_anchor, std::int64_t t0, std::int64_t t1, const ChartParams& params,
              const FrameOptions& opts = {});

  std::int64_t t0() const { return t0_; }
  std::int64_t t1() const { return t1_; }
  const ChartFrame& frame(std::int64_t t) const { return frames_.at(static_cast<std::size_t>(t - t0_)); }
  const TorusPoint& point(std::int64_t t) const { return x_.at(static_cast<std::size_t>(t - t_lo_)); }
  /// Df_{ω_{t+1}} at the orbit point of time t.
  const Mat2& jacobian(std::int64_t t) const { return J_.at(static_cast<std::size_t>(t - t_lo_)); }
  NoiseValue noise_into(std::int64_t t) const { return path_.value(t); }
  /// |Df e_u| at time t.
  double stretch_u(std::int64_t t) const { return su_.at(static_cast<std::size_t>(t - t_lo_)); }
  double stretch_cs(std::int64_t t) const { return scs_.at(static_cast<std::size_t>(t - t_lo_)); }

private:
  NoisePath path_;
  std::int64_t t0_, t1_, t_lo_, t_hi_;
  std::vector<TorusPoint> x_;
  std::vector<Mat2> J_;
  std::vector<Vec2> eu_, ecs_;
  std::vector<double> su_, scs_;
  std::vector<ChartFrame> frames_;
};

/// Lyapunov chart frame at p (time 0).
ChartFrame build_chart_frame(const MapFamily& f, const NoisePath& path, const TorusPoint& p,
                             const ChartParams& params, int n_past, int n_future);

/// Measured top exponent and default chart parameters for a family.
ChartParams default_chart_params(const MapFamily& f, const NoisePath& path, int n = 20000);

/// A smooth map between chart coordinates.
class ChartMap {
public:
  virtual ~ChartMap() = default;
  virtual Vec2 eval(const Vec2& z) const = 0;
  virtual Mat2 jacobian(const Vec2& z) const = 0;
  virtual Vec2 inverse(const Vec2& z) const = 0;
};

class LinearChartMap : public ChartMap {
public:
  explicit LinearChartMap(const Mat2& m) : m_(m), minv_(m.inverse()) {}
  Vec2 eval(const Vec2& z) const override { return m_ * z; }
  Mat2 jacobian(const Vec2&) const override { return m_; }
  Vec2 inverse(const Vec2& z) const override { return minv_ * z; }

private:
  Mat2 m_, minv_;
};

/// f̃ = Φ_dst⁻¹ ∘ f_ω ∘ Φ_src in chart coordinates.
class ConnectingMap : public ChartMap {
public:
  ConnectingMap(const MapFamily& f, const NoiseValue& w, const ChartFrame& src, const ChartFrame& dst)
      : f_(&f), w_(w), src_(src), dst_(dst) {}
  Vec2 eval(const Vec2& z) const override;
  Mat2 jacobian(const Vec2& z) const override;
  Vec2 inverse(const Vec2& z) const override;
  const ChartFrame& src() const { return src_; }
  const ChartFrame& dst() const { return dst_; }

private:
  const MapFamily* f_;
  NoiseValue w_;
  ChartFrame src_, dst_;
};

}  // namespace rdslab
