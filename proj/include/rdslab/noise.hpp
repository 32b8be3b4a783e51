#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rdslab/torus.hpp"

namespace rdslab {

/// Stateless 64-bit mixer (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based uniform in [0, 1): a pure function of (seed, stream, index, component).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::int64_t index,
                              std::uint64_t component) {
  std::uint64_t h = mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ static_cast<std::uint64_t>(index));
  h = mix64(h ^ (component * 0xd6e8feb86659fd93ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct NoiseValue {
  Vec2 components{0.0, 0.0};
};

enum class NoiseKind { UniformFull, UniformBall, Zero };

struct NoiseLaw {
  NoiseKind kind = NoiseKind::UniformFull;
  double sigma = 0.0;  ///< ball radius for UniformBall

  static NoiseLaw uniform_full() { return {NoiseKind::UniformFull, 0.0}; }
  static NoiseLaw uniform_ball(double sigma) { return {NoiseKind::UniformBall, sigma}; }
  static NoiseLaw zero() { return {NoiseKind::Zero, 0.0}; }

  std::string name() const;
  /// Draw a value of this law from two independent uniforms.
  NoiseValue draw(double u1, double u2) const;
};

NoiseLaw parse_noise_law(const std::string& name, double sigma);

/**
 * Two-sided i.i.d. noise sequence (ω_i), i ∈ Z, generated on demand.
 *
 * value(i) depends only on (seed, law, i) and on an optional splice: indices
 * at or below splice_at are drawn from splice_seed instead. shift(k) moves the
 * origin so that shift(k).value(i) == value(i + k).
 */
class NoisePath {
public:
  NoisePath() = default;
  NoisePath(std::uint64_t seed, NoiseLaw law) : seed_(seed), law_(law) {}

  NoiseValue value(std::int64_t i) const;
  NoisePath shift(std::int64_t k) const;
  /// Replace the past at absolute indices <= cut with the noise of another seed.
  NoisePath splice_past(std::int64_t cut, std::uint64_t other_seed) const;
  /// Replace the future at absolute indices > cut with the noise of another seed.
  NoisePath splice_future(std::int64_t cut, std::uint64_t other_seed) const;

  /// Values for indices first, first+1, ..., first+count-1.
  std::vector<NoiseValue> window(std::int64_t first, std::size_t count) const;

  std::uint64_t seed() const { return seed_; }
  const NoiseLaw& law() const { return law_; }
  std::int64_t offset() const { return offset_; }

private:
  std::uint64_t seed_ = 0;
  NoiseLaw law_{};
  std::int64_t offset_ = 0;
  bool has_past_splice_ = false;
  std::int64_t past_cut_ = 0;
  std::uint64_t past_seed_ = 0;
  bool has_future_splice_ = false;
  std::int64_t future_cut_ = 0;
  std::uint64_t future_seed_ = 0;
};

}  // namespace rdslab
