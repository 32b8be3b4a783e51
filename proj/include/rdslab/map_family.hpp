#pragma once

#include <map>
#include <memory>
#include <string>

#include "rdslab/noise.hpp"
#include "rdslab/torus.hpp"

namespace rdslab {

/// An ω-parametrized family of torus diffeomorphisms f_ω.
class MapFamily {
public:
  virtual ~MapFamily() = default;

  virtual std::string name() const = 0;
  virtual int noise_dim() const { return 2; }
  virtual TorusPoint eval(const NoiseValue& w, const TorusPoint& p) const = 0;
  virtual TorusPoint inverse(const NoiseValue& w, const TorusPoint& p) const = 0;
  virtual Mat2 jacobian(const NoiseValue& w, const TorusPoint& p) const = 0;
  /// Upper bound on max(‖f_ω‖_{C²}, ‖f_ω⁻¹‖_{C²}).
  virtual double c2_bound(const NoiseValue& w) const = 0;
  /// Parameters that identify the family (echoed into manifests).
  virtual std::map<std::string, double> parameters() const { return {}; }
  /// True when every f_ω preserves Lebesgue measure.
  virtual bool volume_preserving() const { return false; }
};

/// f_ω(p) = M p + ω (mod 1) for an integer matrix M with det ±1.
class LinearFamily : public MapFamily {
public:
  LinearFamily(std::string name, const Mat2& m);
  std::string name() const override { return name_; }
  TorusPoint eval(const NoiseValue& w, const TorusPoint& p) const override;
  TorusPoint inverse(const NoiseValue& w, const TorusPoint& p) const override;
  Mat2 jacobian(const NoiseValue&, const TorusPoint&) const override { return m_; }
  double c2_bound(const NoiseValue&) const override { return c2_; }
  bool volume_preserving() const override { return true; }
  const Mat2& matrix() const { return m_; }

private:
  std::string name_;
  Mat2 m_;
  Mat2 minv_;
  double c2_;
};

/// System B: f_ω = T_ω ∘ g_ε ∘ A, g_ε(x, y) = (x + ε sin 2πy, y).
class ShearFamily : public MapFamily {
public:
  explicit ShearFamily(double eps);
  std::string name() const override { return "B"; }
  TorusPoint eval(const NoiseValue& w, const TorusPoint& p) const override;
  TorusPoint inverse(const NoiseValue& w, const TorusPoint& p) const override;
  Mat2 jacobian(const NoiseValue& w, const TorusPoint& p) const override;
  double c2_bound(const NoiseValue&) const override { return c2_; }
  std::map<std::string, double> parameters() const override { return {{"epsilon", eps_}}; }
  bool volume_preserving() const override { return true; }

private:
  double eps_;
  double c2_;
};

/// System C: f_ω = T_ω ∘ h_a ∘ A, h_a(x, y) = (x, y + (a/2π) sin 2πy), |a| < 1.
class DissipativeFamily : public MapFamily {
public:
  explicit DissipativeFamily(double a);
  std::string name() const override { return "C"; }
  TorusPoint eval(const NoiseValue& w, const TorusPoint& p) const override;
  TorusPoint inverse(const NoiseValue& w, const TorusPoint& p) const override;
  Mat2 jacobian(const NoiseValue& w, const TorusPoint& p) const override;
  double c2_bound(const NoiseValue&) const override { return c2_; }
  std::map<std::string, double> parameters() const override { return {{"a", a_}}; }
  double a() const { return a_; }

private:
  double a_;
  double c2_;
};

/// The cat matrix [[2,1],[1,1]].
Mat2 cat_matrix();

std::unique_ptr<MapFamily> make_system_a();
std::unique_ptr<MapFamily> make_translation_family();

/// Registry lookup: "A", "B" (epsilon), "C" (a), "translation".
std::unique_ptr<MapFamily> make_family(const std::string& name,
                                       const std::map<std::string, double>& params);

}  // namespace rdslab
