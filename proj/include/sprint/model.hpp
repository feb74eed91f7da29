#pragma once

// Planar point-mass biped: state, constants and the per-policy-step log.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <stdexcept>
#include <vector>

#include "sprint/gait_clock.hpp"

namespace sprint {

struct Vec2 {
    double x = 0.0;
    double z = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, z + o.z}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, z - o.z}; }
    Vec2 operator*(double s) const { return {x * s, z * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        z += o.z;
        return *this;
    }
    double dot(const Vec2& o) const { return x * o.x + z * o.z; }
    double norm() const { return std::hypot(x, z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(z); }

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline constexpr int kPhysicsRate = 2000;
inline constexpr int kPolicyRate = 40;
inline constexpr int kSubstepsPerPolicyStep = kPhysicsRate / kPolicyRate;
static_assert(kPhysicsRate % kPolicyRate == 0, "policy period must be a whole number of substeps");

struct ModelParams {
    double mass = 31.0;             // kg
    double rest_length = 0.9;       // m
    double leg_stiffness = 800.0;  // N/m
    double leg_damping = 200.0;    // N s/m
    double max_leg_force = 2500.0;  // N
    double gravity = 9.81;          // m/s^2
    double contact_tolerance = 1e-9;

    static constexpr double physics_dt = 1.0 / kPhysicsRate;
    static constexpr double policy_dt = 1.0 / kPolicyRate;

    double weight() const { return mass * gravity; }

    void validate() const {
        auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!pos(mass) || !pos(rest_length) || !pos(gravity) || !pos(max_leg_force))
            throw std::invalid_argument("model params: mass, rest_length, gravity, max_leg_force must be > 0");
        if (!std::isfinite(leg_stiffness) || leg_stiffness < 0.0 || !std::isfinite(leg_damping) ||
            leg_damping < 0.0)
            throw std::invalid_argument("model params: stiffness and damping must be >= 0");
    }
};

struct FootState {
    Vec2 pos;
    Vec2 vel;
    bool contact = false;
    bool swinging = false;
    double liftoff_x = 0.0;  // where the current swing started
};

struct BipedState {
    Vec2 com_pos{0.0, 0.9};
    Vec2 com_vel;
    std::array<FootState, 2> feet;
    double time = 0.0;
    Phase phase;

    bool finite() const {
        bool ok = com_pos.finite() && com_vel.finite() && std::isfinite(time);
        for (const auto& f : feet) ok = ok && f.pos.finite() && f.vel.finite();
        return ok;
    }
};

/// Leg-axis quantities for one foot relative to the point-mass hip.
struct LegGeometry {
    double length = 0.0;
    double length_rate = 0.0;  // m/s, positive when extending
    double angle = 0.0;        // rad, from vertical, positive when the foot is behind the hip
    double angle_rate = 0.0;
    Vec2 axis;                 // unit vector foot -> hip

    static LegGeometry of(const BipedState& s, int foot) {
        LegGeometry g;
        Vec2 d = s.com_pos - s.feet[foot].pos;
        Vec2 dv = s.com_vel - s.feet[foot].vel;
        g.length = d.norm();
        if (g.length > 1e-12) {
            g.axis = d * (1.0 / g.length);
            g.length_rate = d.dot(dv) / g.length;
            g.angle = std::atan2(d.x, d.z);
            g.angle_rate = (d.z * dv.x - d.x * dv.z) / (g.length * g.length);
        } else {
            g.axis = {0.0, 1.0};
        }
        return g;
    }
};

/// One policy-step sample. Forces are means over the preceding policy period,
/// so summing force * policy_dt reproduces the impulse exactly.
struct SampleRecord {
    double time = 0.0;
    double phase = 0.0;
    Vec2 com_pos;
    Vec2 com_vel;
    std::array<Vec2, 2> foot_pos;
    std::array<double, 2> grf_z{};
    std::array<double, 2> grf_x{};
    std::array<double, 2> actuator_force{};
    std::array<double, 2> leg_rate{};
    std::array<double, 2> swing_rate{};
    double cmd_speed = 0.0;
    GaitParams params;
};

struct CommandSchedule {
    // Linear ramp from `start` to `target` over `ramp_time`, then hold.
    double start = 0.0;
    double target = 0.0;
    double ramp_time = 0.0;

    static CommandSchedule constant(double v) { return {v, v, 0.0}; }

    double at(double t) const {
        if (ramp_time <= 0.0 || t >= ramp_time) return target;
        if (t <= 0.0) return start;
        return start + (target - start) * (t / ramp_time);
    }
};

struct TrajectoryLog {
    std::vector<SampleRecord> samples;
    std::uint64_t seed = 0;
    ModelParams model;
    CommandSchedule schedule;
    std::string controller;
    bool fell = false;
    std::optional<double> fall_time;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
};

}  // namespace sprint
