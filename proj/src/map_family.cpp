#include "rdslab/map_family.hpp"

#include <cmath>
#include <numbers>

#include "rdslab/errors.hpp"

namespace rdslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec2 apply_cat(const Vec2& p) { return {2.0 * p.x() + p.y(), p.x() + p.y()}; }
Vec2 apply_cat_inverse(const Vec2& p) { return {p.x() - p.y(), -p.x() + 2.0 * p.y()}; }

double spectral_norm(const Mat2& m) {
  Eigen::JacobiSVD<Mat2> svd(m);
  return svd.singularValues()(0);
}

// ‖A‖₂ = ‖A⁻¹‖₂ for the cat matrix.
const double kCatNorm = (3.0 + std::sqrt(5.0)) / 2.0;

}  // namespace

Mat2 cat_matrix() {
  Mat2 m;
  m << 2.0, 1.0, 1.0, 1.0;
  return m;
}

LinearFamily::LinearFamily(std::string name, const Mat2& m)
    : name_(std::move(name)), m_(m), minv_(m.inverse()) {
  c2_ = std::max({1.0, spectral_norm(m_), spectral_norm(minv_)});
}

TorusPoint LinearFamily::eval(const NoiseValue& w, const TorusPoint& p) const {
  return TorusPoint(m_ * p.vec() + w.components);
}

TorusPoint LinearFamily::inverse(const NoiseValue& w, const TorusPoint& p) const {
  const Vec2 q(wrap_half(p.x() - w.components.x()), wrap_half(p.y() - w.components.y()));
  return TorusPoint(minv_ * q);
}

ShearFamily::ShearFamily(double eps) : eps_(eps) {
  const double d1 = (1.0 + kTwoPi * std::abs(eps)) * kCatNorm;
  const double d2 = kTwoPi * kTwoPi * std::abs(eps) * kCatNorm * kCatNorm;
  c2_ = std::max({1.0, d1, d2});
}

TorusPoint ShearFamily::eval(const NoiseValue& w, const TorusPoint& p) const {
  Vec2 q = apply_cat(p.vec());
  q.x() += eps_ * std::sin(kTwoPi * q.y());
  return TorusPoint(q + w.components);
}

TorusPoint ShearFamily::inverse(const NoiseValue& w, const TorusPoint& p) const {
  Vec2 q(p.x() - w.components.x(), p.y() - w.components.y());
  q.x() -= eps_ * std::sin(kTwoPi * q.y());
  return TorusPoint(apply_cat_inverse(wrap_half(q)));
}

Mat2 ShearFamily::jacobian(const NoiseValue&, const TorusPoint& p) const {
  const double y = p.x() + p.y();
  Mat2 dg;
  dg << 1.0, eps_ * kTwoPi * std::cos(kTwoPi * y), 0.0, 1.0;
  return dg * cat_matrix();
}

DissipativeFamily::DissipativeFamily(double a) : a_(a) {
  if (!(std::abs(a) < 1.0)) throw ConfigError("system.a", "must satisfy |a| < 1");
  const double aa = std::abs(a);
  const double d1 = std::max((1.0 + aa) * kCatNorm, kCatNorm / (1.0 - aa));
  const double d2 = std::max(kTwoPi * aa * kCatNorm * kCatNorm,
                             kTwoPi * aa / std::pow(1.0 - aa, 3) * kCatNorm);
  c2_ = std::max({1.0, d1, d2});
}

TorusPoint DissipativeFamily::eval(const NoiseValue& w, const TorusPoint& p) const {
  Vec2 q = apply_cat(p.vec());
  q.y() += a_ / kTwoPi * std::sin(kTwoPi * q.y());
  return TorusPoint(q + w.components);
}

TorusPoint DissipativeFamily::inverse(const NoiseValue& w, const TorusPoint& p) const {
  const double qx = wrap_half(p.x() - w.components.x());
  const double qy = wrap_half(p.y() - w.components.y());
  // Solve y + (a/2π) sin 2πy = qy; the left side is strictly increasing.
  double y = qy;
  for (int it = 0; it < 60; ++it) {
    const double s = std::sin(kTwoPi * y);
    const double c = std::cos(kTwoPi * y);
    const double step = (y + a_ / kTwoPi * s - qy) / (1.0 + a_ * c);
    y -= step;
    if (std::abs(step) < 1e-16) break;
  }
  return TorusPoint(apply_cat_inverse(Vec2(qx, y)));
}

Mat2 DissipativeFamily::jacobian(const NoiseValue&, const TorusPoint& p) const {
  const double y = p.x() + p.y();
  Mat2 m = cat_matrix();
  m.row(1) *= 1.0 + a_ * std::cos(kTwoPi * y);
  return m;
}

std::unique_ptr<MapFamily> make_system_a() {
  return std::make_unique<LinearFamily>("A", cat_matrix());
}

std::unique_ptr<MapFamily> make_translation_family() {
  return std::make_unique<LinearFamily>("translation", Mat2::Identity());
}

std::unique_ptr<MapFamily> make_family(const std::string& name,
                                       const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double def) {
    auto it = params.find(key);
    return it == params.end() ? def : it->second;
  };
  if (name == "A") return make_system_a();
  if (name == "B") return std::make_unique<ShearFamily>(get("epsilon", 0.1));
  if (name == "C") return std::make_unique<DissipativeFamily>(get("a", 0.3));
  if (name == "translation") return make_translation_family();
  throw ConfigError("system.name", "unknown system '" + name + "'");
}

}  // namespace rdslab
