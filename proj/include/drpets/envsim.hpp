#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace drpets {

enum class EnvKind { Pendulum, CartpoleSwingup };

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view name);

/// Pendulum: (angle, angular_velocity). Cartpole: (x, x_dot, pole_angle, pole_angular_velocity).
/// Angles are unwrapped, zero is upright.
using EnvState = Eigen::VectorXd;
/// Pendulum: (cos, sin, angular_velocity). Cartpole: (x, x_dot, cos, sin, angular_velocity).
using Observation = Eigen::VectorXd;

struct EnvParams {
    double pendulum_mass = 1.0;    // kg
    double pendulum_length = 0.5;  // m
    double pole_mass = 1.0;        // kg
    double pole_length = 0.5;      // m
    double cart_mass = 1.0;        // kg
    double gravity = 9.81;         // m/s^2
    double dt = 0.05;              // s
    double action_low = -2.0;
    double action_high = 2.0;
    double max_angular_velocity = 12.0;  // rad/s, pendulum only

    static EnvParams nominal(EnvKind kind);
    /// Throws InvalidInput on non-positive masses/lengths, dt outside (0, 0.1], or empty action range.
    void validate() const;

    double clip_action(double u) const;
};

std::size_t state_dim(EnvKind kind);
std::size_t obs_dim(EnvKind kind);

/// Positions of the (cos, sin) pair inside an observation.
struct AnglePair {
    std::size_t cos_index;
    std::size_t sin_index;
};
AnglePair angle_pair(EnvKind kind);

/// Wraps to (-pi, pi].
double wrap_angle(double theta);
/// sin/cos that are exact (0 and -1) at theta = +-pi.
double angle_sin(double theta);
double angle_cos(double theta);

/// One control period of RK4 integration (four substeps). Deterministic.
EnvState step(EnvKind kind, const EnvState& state, double action, const EnvParams& params);

double reward(EnvKind kind, const EnvState& state, double action, const EnvParams& params);
/// Same reward evaluated from an observation (what the planner sees).
double observation_reward(EnvKind kind, std::span<const double> obs, double action,
                          const EnvParams& params);
/// Lower bound of the per-step reward; used as a floor for diverged rollouts.
double min_reward(EnvKind kind, const EnvParams& params);

Observation observe(EnvKind kind, const EnvState& state);

inline constexpr double kResetNoise = 0.05;
/// Near-hanging start, deterministic per seed. `noise` is the half-width of the uniform jitter.
EnvState reset(EnvKind kind, std::uint64_t seed, double noise = kResetNoise);

/// Kinetic plus potential energy, potential measured from the hanging position.
double pendulum_energy(const EnvState& state, const EnvParams& params);

struct EpisodeRecord {
    std::vector<Observation> observations;
    std::vector<double> actions;
    std::vector<double> rewards;
    double total_reward = 0.0;
    std::uint64_t seed = 0;
};

/// Maps (current state, step index) to an action; the runner clips it to bounds.
using Policy = std::function<double(const EnvState&, std::size_t)>;

/// Throws EpisodeError carrying the step index if the policy returns a non-finite action.
EpisodeRecord run_episode(EnvKind kind, const EnvParams& params, const Policy& policy,
                          std::size_t horizon, std::uint64_t seed, double reset_noise = kResetNoise);

}  // namespace drpets
