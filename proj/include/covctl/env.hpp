#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "covctl/dynamics.hpp"
#include "covctl/geometry.hpp"
#include "covctl/potentials.hpp"
#include "covctl/rng.hpp"

namespace covctl {

/// Size of an agent's internal state vector:
/// (p_x, p_y, v_x, v_y, dhat_x, dhat_y, ||d||, indicator).
inline constexpr std::size_t kOwnDim = 8;

/// Local observation of one agent: its internal state plus the relative
/// positions of the other agents, sorted by norm in descending order
/// (farthest first, nearest last; norm ties by ascending agent index).
struct Observation {
  std::array<double, kOwnDim> own{};
  std::vector<Vec2> others;
};

struct EnvConfig {
  Polygon poly;
  std::size_t n{1};
  DynamicsConfig dynamics{};
  double horizon{30.0};  // [s]
  double gamma{0.99};
  std::uint64_t seed{0};

  void validate() const {
    dynamics.validate();
    if (n < 1) throw std::invalid_argument("EnvConfig: n must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("EnvConfig: gamma must be in [0, 1)");
    const double steps = horizon / dynamics.dt;
    if (!(steps > 0.0) ||
        std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps))
      throw std::invalid_argument(
          "EnvConfig: horizon must be an integral number of dt steps");
  }

  std::size_t horizon_steps() const {
    return static_cast<std::size_t>(std::llround(horizon / dynamics.dt));
  }
};

struct StepResult {
  SwarmState next;
  std::vector<double> individual_rewards;
  double global_reward;
  bool done;
};

/// Analytic upper bound on the total potential over all-inside
/// configurations: every domain term is at most (r_d/2)^2/2 (agent on the
/// boundary) and every ordered pair term at most r_d^2/2 (coincident pair),
/// giving M = n r_d^2/4 + n(n-1) r_d^2/2.
inline double saturation_constant(std::size_t n, double r_d) {
  const double nd = static_cast<double>(n);
  return nd * r_d * r_d / 4.0 + nd * (nd - 1.0) * r_d * r_d / 2.0;
}

/// Internal state vector of one agent (a row of the environment state
/// matrix), derived from geometry queries.
inline std::array<double, kOwnDim> internal_state(const AgentState& agent,
                                                  const Polygon& poly) {
  const BoundaryProjection proj = poly.project_to_boundary(agent.p);
  return {agent.p.x, agent.p.y,       agent.v.x,
          agent.v.y, proj.dir.x,      proj.dir.y,
          proj.distance, proj.indicator()};
}

/// Local observation of agent i in the given swarm state.
inline Observation observe(std::size_t i, const SwarmState& swarm,
                           const Polygon& poly) {
  if (i >= swarm.n()) throw std::out_of_range("observe: bad agent index");
  Observation obs;
  obs.own = internal_state(swarm.agents[i], poly);
  obs.others.reserve(swarm.n() - 1);
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(swarm.n() - 1);
  for (std::size_t j = 0; j < swarm.n(); ++j) {
    if (j == i) continue;
    const Vec2 rel = swarm.agents[i].p - swarm.agents[j].p;
    order.emplace_back(rel.squared_norm(), j);
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
  for (const auto& [sq, j] : order)
    obs.others.push_back(swarm.agents[i].p - swarm.agents[j].p);
  return obs;
}

/// True iff every agent keeps a radius-l/2 ball inside the domain and all
/// pairwise distances are at least l (with 1e-9 slack).
inline bool is_subcover(const SwarmState& swarm, const Polygon& poly,
                        double l) {
  if (!(l > 0.0)) throw std::invalid_argument("is_subcover: l must be > 0");
  for (std::size_t i = 0; i < swarm.n(); ++i)
    if (!ball_in_domain(poly, swarm.agents[i].p, 0.5 * l)) return false;
  for (std::size_t i = 0; i < swarm.n(); ++i)
    for (std::size_t j = i + 1; j < swarm.n(); ++j)
      if (distance(swarm.agents[i].p, swarm.agents[j].p) < l - kBoundaryTol)
        return false;
  return true;
}

/// Scans a full-horizon potential trace (samples at 0, dt, ..., horizon) for
/// sustained convergence: success iff some t* < horizon exists with
/// phi(t) < threshold for every t >= t*. Returns the earliest such t*, or
/// nullopt on failure.
inline std::optional<double> success_and_convergence(
    std::span<const double> trace, double threshold, double dt,
    double horizon) {
  const std::size_t expected =
      static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
  if (trace.size() != expected)
    throw std::invalid_argument(
        "success_and_convergence: trace must cover the full horizon");
  std::size_t first_ok = trace.size();  // first index of the sustained tail
  for (std::size_t k = trace.size(); k-- > 0;) {
    if (trace[k] < threshold)
      first_ok = k;
    else
      break;
  }
  if (first_ok == trace.size()) return std::nullopt;  // never sustained
  const double t_star = static_cast<double>(first_ok) * dt;
  if (t_star >= horizon) return std::nullopt;
  return t_star;
}

/// The coverage environment: owns the domain, dynamics and episode clock.
/// Rewards are potential-shaped; an agent outside the domain receives the
/// constant -M, an inside agent the negative of its individual potential at
/// the next state. The episode never terminates early; done fires exactly
/// once when the horizon is reached.
class CoverageEnv {
 public:
  explicit CoverageEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    params_.r_d = coverage_radius(cfg_.poly, cfg_.n);
    params_.damping = 1.0;
    m_ = saturation_constant(cfg_.n, params_.r_d);
  }

  const EnvConfig& config() const { return cfg_; }
  double r_d() const { return params_.r_d; }
  double saturation() const { return m_; }
  const PotentialParams& params() const { return params_; }
  const SwarmState& state() const { return state_; }
  std::size_t steps_elapsed() const { return t_; }
  std::size_t horizon_steps() const { return cfg_.horizon_steps(); }

  /// Places the agents on a jittered horizontal line one coverage radius
  /// below the domain's bounding box, evenly spaced at r_d with uniform
  /// jitter of +-0.1 r_d per axis, all velocities zero. Jitter is redrawn
  /// (bounded retries) for any agent that would land inside the domain.
  SwarmState reset(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x72657365ULL));
    const double r_d = params_.r_d;
    const double cx = 0.5 * (cfg_.poly.bbox_min().x + cfg_.poly.bbox_max().x);
    const double y0 = cfg_.poly.bbox_min().y - r_d;
    SwarmState s;
    s.agents.resize(cfg_.n);
    for (std::size_t i = 0; i < cfg_.n; ++i) {
      const double x0 =
          cx + (static_cast<double>(i) -
                0.5 * static_cast<double>(cfg_.n - 1)) * r_d;
      Vec2 p;
      bool placed = false;
      for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        p = {x0 + rng.uniform(-0.1 * r_d, 0.1 * r_d),
             y0 + rng.uniform(-0.1 * r_d, 0.1 * r_d)};
        placed = !cfg_.poly.contains(p);
      }
      if (!placed)
        throw std::runtime_error("reset: could not place agent outside domain");
      s.agents[i] = {p, {0.0, 0.0}};
    }
    state_ = s;
    t_ = 0;
    return s;
  }

  /// Overrides the episode state (fixtures and replay).
  void set_state(const SwarmState& s) {
    if (s.n() != cfg_.n)
      throw std::invalid_argument("set_state: agent count mismatch");
    state_ = s;
    t_ = 0;
  }

  Observation observe(std::size_t i) const {
    return covctl::observe(i, state_, cfg_.poly);
  }

  double individual_reward(std::size_t i, const SwarmState& next) const {
    if (!cfg_.poly.contains(next.agents[i].p)) return -m_;
    return -individual_potential(i, next, cfg_.poly, params_);
  }

  /// Advances one control step: integrates the dynamics, then evaluates the
  /// per-agent rewards at the next state. Rewards are per-step values (not
  /// scaled by dt).
  StepResult step(std::span<const Vec2> actions) {
    if (actions.size() != cfg_.n)
      throw std::invalid_argument("step: one action per agent");
    if (t_ >= horizon_steps())
      throw std::logic_error("step: episode already finished");
    StepResult result;
    result.next = integrate_step(state_, actions, cfg_.dynamics);
    result.individual_rewards.resize(cfg_.n);
    result.global_reward = 0.0;
    for (std::size_t i = 0; i < cfg_.n; ++i) {
      result.individual_rewards[i] = individual_reward(i, result.next);
      result.global_reward += result.individual_rewards[i];
    }
    state_ = result.next;
    ++t_;
    result.done = (t_ == horizon_steps());
    return result;
  }

  double potential() const {
    return total_potential(state_, cfg_.poly, params_);
  }

 private:
  EnvConfig cfg_;
  PotentialParams params_{};
  double m_{0.0};
  SwarmState state_;
  std::size_t t_{0};
};

}  // namespace covctl
