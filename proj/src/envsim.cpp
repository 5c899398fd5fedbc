#include "drpets/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "drpets/errors.hpp"
#include "drpets/rng.hpp"

namespace drpets {

namespace {

constexpr double kPi = std::numbers::pi;

void require_finite(const EnvState& state, double action) {
    if (!state.allFinite() || !std::isfinite(action))
        throw InvalidInput("non-finite state or action");
}

// Pendulum: theta_ddot = (3g / 2l) sin(theta) + 3u / (m l^2), theta = 0 upright.
Eigen::Vector2d pendulum_rhs(const Eigen::Vector2d& x, double u, const EnvParams& p) {
    const double l = p.pendulum_length;
    const double acc = 1.5 * p.gravity / l * angle_sin(x[0]) +
                       3.0 * u / (p.pendulum_mass * l * l);
    return {x[1], acc};
}

// Uniform rod of full length L hinged on a cart, frictionless.
Eigen::Vector4d cartpole_rhs(const Eigen::Vector4d& x, double u, const EnvParams& p) {
    const double s = angle_sin(x[2]);
    const double c = angle_cos(x[2]);
    const double m = p.pole_mass;
    const double total = p.cart_mass + m;
    const double half = 0.5 * p.pole_length;
    const double temp = (u + m * half * x[3] * x[3] * s) / total;
    const double theta_acc =
        (p.gravity * s - c * temp) / (half * (4.0 / 3.0 - m * c * c / total));
    const double x_acc = temp - m * half * theta_acc * c / total;
    return {x[1], x_acc, x[3], theta_acc};
}

// A single RK4 step at dt = 0.05 drifts ~3e-4 in pendulum energy over 100 steps; four
// substeps per control period bring that to ~1e-6.
constexpr int kSubsteps = 4;

template <class Vec, class Rhs>
Vec rk4(Vec x, double dt, Rhs&& f) {
    const double h = dt / kSubsteps;
    for (int i = 0; i < kSubsteps; ++i) {
        const Vec k1 = f(x);
        const Vec k2 = f(Vec(x + 0.5 * h * k1));
        const Vec k3 = f(Vec(x + 0.5 * h * k2));
        const Vec k4 = f(Vec(x + h * k3));
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

}  // namespace

std::string_view to_string(EnvKind kind) {
    return kind == EnvKind::Pendulum ? "pendulum" : "cartpole";
}

EnvKind parse_env_kind(std::string_view name) {
    if (name == "pendulum") return EnvKind::Pendulum;
    if (name == "cartpole" || name == "cartpole_swingup") return EnvKind::CartpoleSwingup;
    throw InvalidInput("unknown environment '" + std::string(name) + "'");
}

EnvParams EnvParams::nominal(EnvKind kind) {
    EnvParams p;
    if (kind == EnvKind::CartpoleSwingup) {
        p.action_low = -10.0;
        p.action_high = 10.0;
    }
    return p;
}

void EnvParams::validate() const {
    const double positives[] = {pendulum_mass, pendulum_length, pole_mass, pole_length,
                                cart_mass, max_angular_velocity};
    for (double v : positives)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidInput("masses, lengths and velocity limits must be positive");
    if (!(dt > 0.0 && dt <= 0.1)) throw InvalidInput("dt must lie in (0, 0.1]");
    if (!(action_low < action_high)) throw InvalidInput("action_low must be below action_high");
    if (!std::isfinite(gravity)) throw InvalidInput("gravity must be finite");
}

double EnvParams::clip_action(double u) const { return std::clamp(u, action_low, action_high); }

std::size_t state_dim(EnvKind kind) { return kind == EnvKind::Pendulum ? 2 : 4; }
std::size_t obs_dim(EnvKind kind) { return kind == EnvKind::Pendulum ? 3 : 5; }

AnglePair angle_pair(EnvKind kind) {
    return kind == EnvKind::Pendulum ? AnglePair{0, 1} : AnglePair{2, 3};
}

double wrap_angle(double theta) {
    double r = std::remainder(theta, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

double angle_sin(double theta) {
    const double w = wrap_angle(theta);
    if (w > 0.5 * kPi) return std::sin(kPi - w);
    if (w < -0.5 * kPi) return -std::sin(kPi + w);
    return std::sin(w);
}

double angle_cos(double theta) {
    const double w = std::abs(wrap_angle(theta));
    if (w > 0.5 * kPi) return -std::cos(kPi - w);
    return std::cos(w);
}

EnvState step(EnvKind kind, const EnvState& state, double action, const EnvParams& params) {
    if (static_cast<std::size_t>(state.size()) != state_dim(kind))
        throw InvalidInput("state dimension mismatch");
    require_finite(state, action);
    if (kind == EnvKind::Pendulum) {
        Eigen::Vector2d next = rk4(Eigen::Vector2d(state), params.dt, [&](const Eigen::Vector2d& x) {
            return pendulum_rhs(x, action, params);
        });
        next[1] = std::clamp(next[1], -params.max_angular_velocity, params.max_angular_velocity);
        return next;
    }
    return rk4(Eigen::Vector4d(state), params.dt,
               [&](const Eigen::Vector4d& x) { return cartpole_rhs(x, action, params); });
}

namespace {

double pendulum_reward(double wrapped, double velocity, double u) {
    return -(wrapped * wrapped + 0.1 * velocity * velocity + 0.001 * u * u);
}

constexpr double kCartActionCost = 1e-3;

double cartpole_reward(double x, double c, double s, double u, double pole_length) {
    // tip = (x + L sin, L cos); upright tip = (0, L)
    const double dx = x + pole_length * s;
    const double dy = pole_length * c - pole_length;
    // length scale L and cost 1e-3: with 0.5 L and 1e-2 even an exact-model planner never swings up
    return std::exp(-(dx * dx + dy * dy) / (pole_length * pole_length)) - kCartActionCost * u * u;
}

}  // namespace

double reward(EnvKind kind, const EnvState& state, double action, const EnvParams& params) {
    require_finite(state, action);
    if (kind == EnvKind::Pendulum) return pendulum_reward(wrap_angle(state[0]), state[1], action);
    return cartpole_reward(state[0], angle_cos(state[2]), angle_sin(state[2]), action,
                           params.pole_length);
}

double observation_reward(EnvKind kind, std::span<const double> obs, double action,
                          const EnvParams& params) {
    if (kind == EnvKind::Pendulum)
        return pendulum_reward(std::atan2(obs[1], obs[0]), obs[2], action);
    return cartpole_reward(obs[0], obs[2], obs[3], action, params.pole_length);
}

double min_reward(EnvKind kind, const EnvParams& params) {
    const double u = std::max(std::abs(params.action_low), std::abs(params.action_high));
    if (kind == EnvKind::Pendulum) {
        const double v = params.max_angular_velocity;
        return -(kPi * kPi + 0.1 * v * v + 0.001 * u * u);
    }
    return -kCartActionCost * u * u;
}

Observation observe(EnvKind kind, const EnvState& state) {
    if (kind == EnvKind::Pendulum) {
        Observation o(3);
        o << angle_cos(state[0]), angle_sin(state[0]), state[1];
        return o;
    }
    Observation o(5);
    o << state[0], state[1], angle_cos(state[2]), angle_sin(state[2]), state[3];
    return o;
}

EnvState reset(EnvKind kind, std::uint64_t seed, double noise) {
    RngStream rng(derive_seed(seed, {purpose_id("reset")}));
    auto jitter = [&] { return noise > 0.0 ? rng.uniform(-noise, noise) : 0.0; };
    if (kind == EnvKind::Pendulum) {
        EnvState s(2);
        s[0] = kPi + jitter();
        s[1] = jitter();
        return s;
    }
    EnvState s(4);
    s[0] = jitter();
    s[1] = jitter();
    s[2] = kPi + jitter();
    s[3] = jitter();
    return s;
}

double pendulum_energy(const EnvState& state, const EnvParams& params) {
    const double m = params.pendulum_mass;
    const double l = params.pendulum_length;
    const double inertia = m * l * l / 3.0;
    return 0.5 * inertia * state[1] * state[1] +
           m * params.gravity * 0.5 * l * (1.0 + angle_cos(state[0]));
}

EpisodeRecord run_episode(EnvKind kind, const EnvParams& params, const Policy& policy,
                          std::size_t horizon, std::uint64_t seed, double reset_noise) {
    if (horizon == 0) throw InvalidInput("horizon must be at least 1");
    EpisodeRecord rec;
    rec.seed = seed;
    rec.observations.reserve(horizon + 1);
    rec.actions.reserve(horizon);
    rec.rewards.reserve(horizon);

    EnvState state = reset(kind, seed, reset_noise);
    rec.observations.push_back(observe(kind, state));
    for (std::size_t t = 0; t < horizon; ++t) {
        const double raw = policy(state, t);
        if (!std::isfinite(raw)) throw EpisodeError(t, "policy returned a non-finite action");
        const double u = params.clip_action(raw);
        const double r = reward(kind, state, u, params);
        state = step(kind, state, u, params);
        rec.actions.push_back(u);
        rec.rewards.push_back(r);
        rec.total_reward += r;
        rec.observations.push_back(observe(kind, state));
    }
    return rec;
}

}  // namespace drpets
