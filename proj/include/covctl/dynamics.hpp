#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "covctl/vec2.hpp"

namespace covctl {

struct AgentState {
  Vec2 p;  // position [m]
  Vec2 v;  // velocity [m/s]
};

struct SwarmState {
  std::vector<AgentState> agents;

  std::size_t n() const { return agents.size(); }
};

struct DynamicsConfig {
  double v_max{1.0};  // [m/s]
  double a_max{1.0};  // [m/s^2]
  double dt{0.02};    // [s]

  void validate() const {
    if (!(v_max > 0.0 && a_max > 0.0 && dt > 0.0))
      throw std::invalid_argument(
          "DynamicsConfig: v_max, a_max and dt must be strictly positive");
  }
};

/// Direction-preserving saturation: rescales vec onto the closed ball of the
/// given radius. Zero vectors pass through untouched.
inline Vec2 clamp_norm(const Vec2& vec, double max) {
  if (!(max > 0.0)) throw std::invalid_argument("clamp_norm: max must be > 0");
  const double n = vec.norm();
  if (n <= max) return vec;
  return vec * (max / n);
}

/// One semi-implicit Euler step per agent:
///   a <- clamp_norm(a, a_max); v' <- clamp_norm(v + a dt, v_max);
///   p' <- p + v' dt.
inline SwarmState integrate_step(const SwarmState& state,
                                 std::span<const Vec2> accels,
                                 const DynamicsConfig& cfg) {
  if (accels.size() != state.n())
    throw std::invalid_argument("integrate_step: one acceleration per agent");
  SwarmState next;
  next.agents.reserve(state.n());
  for (std::size_t i = 0; i < state.n(); ++i) {
    const Vec2 a = clamp_norm(accels[i], cfg.a_max);
    const Vec2 v = clamp_norm(state.agents[i].v + a * cfg.dt, cfg.v_max);
    next.agents.push_back({state.agents[i].p + v * cfg.dt, v});
  }
  return next;
}

}  // namespace covctl
