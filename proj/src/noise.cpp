#include "rdslab/noise.hpp"

#include <cmath>
#include <numbers>

#include "rdslab/errors.hpp"

namespace rdslab {

namespace {
constexpr std::uint64_t kNoiseStream = 0x4e6f697365ULL;
}

std::string NoiseLaw::name() const {
  switch (kind) {
    case NoiseKind::UniformFull: return "uniform_full";
    case NoiseKind::UniformBall: return "uniform_ball";
    case NoiseKind::Zero: return "zero";
  }
  return "unknown";
}

NoiseValue NoiseLaw::draw(double u1, double u2) const {
  switch (kind) {
    case NoiseKind::UniformFull: return {Vec2(u1, u2)};
    case NoiseKind::UniformBall: {
      const double r = sigma * std::sqrt(u1);
      const double a = 2.0 * std::numbers::pi * u2;
      return {Vec2(mod1(r * std::cos(a)), mod1(r * std::sin(a)))};
    }
    case NoiseKind::Zero: return {Vec2(0.0, 0.0)};
  }
  return {};
}

NoiseLaw parse_noise_law(const std::string& name, double sigma) {
  if (name == "uniform_full") return NoiseLaw::uniform_full();
  if (name == "uniform_ball") {
    if (!(sigma > 0.0) || sigma >= 0.5) throw ConfigError("system.sigma", "must lie in (0, 0.5)");
    return NoiseLaw::uniform_ball(sigma);
  }
  if (name == "zero") return NoiseLaw::zero();
  throw ConfigError("system.noise", "unknown noise law '" + name + "'");
}

NoiseValue NoisePath::value(std::int64_t i) const {
  const std::int64_t abs = i + offset_;
  std::uint64_t seed = seed_;
  if (has_past_splice_ && abs <= past_cut_) seed = past_seed_;
  if (has_future_splice_ && abs > future_cut_) seed = future_seed_;
  return law_.draw(counter_uniform(seed, kNoiseStream, abs, 0),
                   counter_uniform(seed, kNoiseStream, abs, 1));
}

NoisePath NoisePath::shift(std::int64_t k) const {
  NoisePath out = *this;
  out.offset_ += k;
  return out;
}

NoisePath NoisePath::splice_past(std::int64_t cut, std::uint64_t other_seed) const {
  NoisePath out = *this;
  out.has_past_splice_ = true;
  out.past_cut_ = cut + offset_;
  out.past_seed_ = other_seed;
  return out;
}

NoisePath NoisePath::splice_future(std::int64_t cut, std::uint64_t other_seed) const {
  NoisePath out = *this;
  out.has_future_splice_ = true;
  out.future_cut_ = cut + offset_;
  out.future_seed_ = other_seed;
  return out;
}

std::vector<NoiseValue> NoisePath::window(std::int64_t first, std::size_t count) const {
  std::vector<NoiseValue> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = value(first + static_cast<std::int64_t>(k));
  return out;
}

}  // namespace rdslab
