#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "covctl/dynamics.hpp"
#include "covctl/geometry.hpp"
#include "covctl/rng.hpp"
#include "covctl/vec2.hpp"

namespace covctl {

struct PotentialParams {
  double r_d;           // coverage radius [m]
  double damping{1.0};  // velocity damping of the gradient controller
};

/// Agent-domain potential as a function of the signed boundary distance sd:
/// zero while the agent stays at least r_d/2 inside, quadratic outside that
/// margin. The branch point sd = -r_d/2 belongs to the zero branch.
inline double agent_domain_potential(double sd, double r_d) {
  const double s = sd + 0.5 * r_d;
  if (s <= 0.0) return 0.0;
  return 0.5 * s * s;
}

/// Gradient of agent_domain_potential with respect to the agent position.
/// On the active branch: (sd + r_d/2) * indicator * dhat, where dhat is the
/// unit offset from the boundary projection (edge outward normal when the
/// agent sits exactly on the boundary).
inline Vec2 agent_domain_gradient(const BoundaryProjection& proj, double r_d) {
  const double sd = proj.indicator() * proj.distance;
  const double s = sd + 0.5 * r_d;
  if (s <= 0.0) return {0.0, 0.0};
  return proj.dir * (s * proj.indicator());
}

/// Inter-agent potential over the pair distance: quadratic inside the
/// interaction radius r_d, zero at and beyond it.
inline double pair_potential(double dist, double r_d) {
  if (dist >= r_d) return 0.0;
  const double s = dist - r_d;
  return 0.5 * s * s;
}

/// Deterministic unit direction for coincident agents i and j, derived by
/// hashing the unordered index pair; antisymmetric in (i, j).
inline Vec2 coincident_direction(std::size_t i, std::size_t j) {
  const std::size_t lo = i < j ? i : j;
  const std::size_t hi = i < j ? j : i;
  const std::uint64_t h = derive_seed(0x70616972ULL, lo, hi);
  const double angle = 2.0 * 3.14159265358979323846 *
                       (static_cast<double>(h >> 11) * 0x1.0p-53);
  const Vec2 u{std::cos(angle), std::sin(angle)};
  return i < j ? u : -u;
}

/// Gradient of pair_potential with respect to agent i, given p_ij = p_i - p_j.
/// Coincident agents have no defined direction; the caller supplies one
/// (see coincident_direction) and the magnitude-r_d limit value is returned.
inline Vec2 pair_gradient(const Vec2& p_ij, double r_d,
                          const Vec2& coincident_dir = Vec2{1.0, 0.0}) {
  const double dist = p_ij.norm();
  if (dist >= r_d) return {0.0, 0.0};
  if (dist <= 0.0) return coincident_dir * r_d;
  return p_ij * ((dist - r_d) / dist);
}

/// Individual potential of agent i: twice the agent-domain term plus the sum
/// of pair terms against every other agent.
inline double individual_potential(std::size_t i, const SwarmState& swarm,
                                   const Polygon& poly,
                                   const PotentialParams& params) {
  const double sd = poly.signed_distance(swarm.agents[i].p);
  double phi = 2.0 * agent_domain_potential(sd, params.r_d);
  for (std::size_t j = 0; j < swarm.n(); ++j) {
    if (j == i) continue;
    const double dist = distance(swarm.agents[i].p, swarm.agents[j].p);
    phi += pair_potential(dist, params.r_d);
  }
  return phi;
}

/// Total system potential: sum of the individual potentials, so each
/// unordered pair contributes its pair term twice.
inline double total_potential(const SwarmState& swarm, const Polygon& poly,
                              const PotentialParams& params) {
  double phi = 0.0;
  for (std::size_t i = 0; i < swarm.n(); ++i)
    phi += individual_potential(i, swarm, poly, params);
  return phi;
}

/// Gradient-descent control law, unclamped: for each agent the negative
/// gradient of its domain term (single weight) and pair terms, minus
/// velocity damping.
inline std::vector<Vec2> classical_accels(const SwarmState& swarm,
                                          const Polygon& poly,
                                          const PotentialParams& params) {
  std::vector<Vec2> accels(swarm.n());
  for (std::size_t i = 0; i < swarm.n(); ++i) {
    const BoundaryProjection proj =
        poly.project_to_boundary(swarm.agents[i].p);
    Vec2 a = -agent_domain_gradient(proj, params.r_d);
    for (std::size_t j = 0; j < swarm.n(); ++j) {
      if (j == i) continue;
      const Vec2 p_ij = swarm.agents[i].p - swarm.agents[j].p;
      a -= pair_gradient(p_ij, params.r_d, coincident_direction(i, j));
    }
    a -= swarm.agents[i].v * params.damping;
    accels[i] = a;
  }
  return accels;
}

/// The expert controller: classical_accels clamped to the actuation bound.
inline std::vector<Vec2> classical_control(const SwarmState& swarm,
                                           const Polygon& poly,
                                           const PotentialParams& params,
                                           double a_max) {
  std::vector<Vec2> accels = classical_accels(swarm, poly, params);
  for (Vec2& a : accels) a = clamp_norm(a, a_max);
  return accels;
}

}  // namespace covctl
