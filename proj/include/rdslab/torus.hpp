#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace rdslab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Reduce a real number into [0, 1).
inline double mod1(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

/// Representative of v mod 1 in [-1/2, 1/2).
inline double wrap_half(double v) {
  return v - std::floor(v + 0.5);
}

inline Vec2 wrap_half(const Vec2& v) { return {wrap_half(v.x()), wrap_half(v.y())}; }

/// A point of the flat torus R^2 / Z^2 with coordinates kept in [0, 1).
class TorusPoint {
public:
  TorusPoint() = default;
  TorusPoint(double x, double y) : x_(mod1(x)), y_(mod1(y)) {}
  explicit TorusPoint(const Vec2& v) : TorusPoint(v.x(), v.y()) {}

  double x() const { return x_; }
  double y() const { return y_; }
  Vec2 vec() const { return {x_, y_}; }

  /// Point reached by moving along the displacement d.
  TorusPoint operator+(const Vec2& d) const { return {x_ + d.x(), y_ + d.y()}; }

  bool operator==(const TorusPoint&) const = default;

private:
  double x_ = 0.0;
  double y_ = 0.0;
};

/// Shortest displacement q - p on the torus, components in [-1/2, 1/2).
inline Vec2 displacement(const TorusPoint& p, const TorusPoint& q) {
  return {wrap_half(q.x() - p.x()), wrap_half(q.y() - p.y())};
}

/// Flat (Euclidean) torus distance, at most sqrt(2)/2.
inline double distance(const TorusPoint& p, const TorusPoint& q) {
  return displacement(p, q).norm();
}

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace rdslab
