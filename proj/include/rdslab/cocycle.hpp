#pragma once

#include <cstdint>

#include "rdslab/map_family.hpp"
#include "rdslab/noise.hpp"

namespace rdslab {

/// f^n_ω(p) = f_{ω_n} ∘ ⋯ ∘ f_{ω_1}(p).
TorusPoint compose_forward(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n);

/// f^{-n}_ω(p) = f^{-1}_{ω_{-(n-1)}} ∘ ⋯ ∘ f^{-1}_{ω_0}(p), the inverse of compose_pullback.
TorusPoint compose_backward(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n);

/// f^n_{θ^{-n}ω}(p): applies f_{ω_{-n+1}}, …, f_{ω_0} in order.
TorusPoint compose_pullback(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n);

/// Product Df_{ω_n} ⋯ Df_{ω_1} along the forward orbit of p.
Mat2 jacobian_forward(const MapFamily& f, const NoisePath& path, const TorusPoint& p, int n);

/// Point at time t of the orbit through p at time t0 (forward or backward as needed).
TorusPoint orbit_point(const MapFamily& f, const NoisePath& path, const TorusPoint& p,
                       std::int64_t t0, std::int64_t t);

}  // namespace rdslab
