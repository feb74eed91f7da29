#pragma once

// 2 kHz layer of the simulator: the leg servo that tracks the 40 Hz control
// targets, unilateral ground contact, and the semi-implicit Euler step.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "sprint/gait_clock.hpp"
#include "sprint/model.hpp"

namespace sprint {

/// Axial force law evaluated at the physics rate while a foot is on the ground:
///   F = feedforward * profile / cos(leg angle) + k (set_length - L) - b dL/dt
/// The feedforward is a vertical force; dividing by the axis' vertical
/// component turns it into the axial force that delivers it.
struct StanceLaw {
    double feedforward = 0.0;   // N (vertical)
    bool sine_profile = false;  // shape feedforward by sin(pi * stance progress)
    double stiffness = 0.0;     // N/m
    double damping = 0.0;       // N s/m
    double set_length = 0.9;    // m
};

struct SwingTarget {
    double touchdown_x = 0.0;  // world x where the swing ends
    double clearance = 0.1;    // m, peak foot height
};

enum class LegDrive {
    Clock,    // swing/stance from the gait clock
    Planted,  // held on the ground
    Place,    // airborne foot moved once to swing.touchdown_x and set down
};

struct LegCommand {
    LegDrive drive = LegDrive::Clock;
    StanceLaw stance;
    SwingTarget swing;
};

/// Targets produced by a controller once per policy step.
struct ControlOutput {
    std::array<LegCommand, 2> legs;
    GaitParams params;
    bool clock_running = true;  // advance the phase at params.freq
};

inline double spring_damper_force(double stiffness, double damping, double compression,
                                  double length_rate) {
    return stiffness * compression - damping * length_rate;
}

/// Raw (unclamped below) axial leg force for a foot on the ground.
inline double stance_axial_force(const StanceLaw& law, const LegGeometry& leg, double stance_progress) {
    double shape = law.sine_profile ? std::sin(std::numbers::pi * std::clamp(stance_progress, 0.0, 1.0)) : 1.0;
    double cos_axis = std::max(leg.axis.z, 0.2);
    return law.feedforward * shape / cos_axis +
           spring_damper_force(law.stiffness, law.damping, law.set_length - leg.length, leg.length_rate);
}

struct ContactResult {
    bool contact = false;
    Vec2 grf;
    double axial_force = 0.0;
};

/// Unilateral contact on the plane z = 0. A foot is loaded only when it is on
/// the ground, commanded to stance, and the leg pushes; a tensile leg force
/// releases the contact instead of pulling on the ground.
inline ContactResult resolve_contact(const Vec2& foot_pos, const Vec2& foot_vel, FootMode commanded,
                                     double axial_force, const Vec2& leg_axis, double max_force,
                                     double tolerance = 1e-9) {
    ContactResult r;
    if (commanded != FootMode::Stance) return r;
    if (foot_pos.z > tolerance || foot_vel.z > 0.0) return r;
    if (!(axial_force >= 0.0)) return r;
    r.contact = true;
    r.axial_force = std::min(axial_force, max_force);
    r.grf = leg_axis * r.axial_force;
    r.grf.z = std::max(r.grf.z, 0.0);
    return r;
}

inline double cycloid_progress(double s) {
    s = std::clamp(s, 0.0, 1.0);
    double a = 2.0 * std::numbers::pi * s;
    return (a - std::sin(a)) / (2.0 * std::numbers::pi);
}

inline double swing_height(double s, double clearance) {
    s = std::clamp(s, 0.0, 1.0);
    return clearance * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * s));
}

/// COM update under gravity plus the summed ground reaction forces.
inline BipedState integrate_substep(const BipedState& state, const std::array<Vec2, 2>& grf,
                                    const ModelParams& model, double dt) {
    BipedState next = state;
    Vec2 accel{(grf[0].x + grf[1].x) / model.mass, (grf[0].z + grf[1].z) / model.mass - model.gravity};
    next.com_vel += accel * dt;
    next.com_pos += next.com_vel * dt;
    next.time = state.time + dt;
    return next;
}

/// True when the COM has collapsed below half the rest leg length or the
/// state is no longer finite.
inline bool detect_fall(const BipedState& state, const ModelParams& model) {
    if (!state.finite()) return true;
    return state.com_pos.z < 0.5 * model.rest_length;
}

inline double capture_offset(double forward_speed, const ModelParams& model) {
    return forward_speed * std::sqrt(model.rest_length / model.gravity);
}

struct SubstepForces {
    std::array<Vec2, 2> grf;
    std::array<double, 2> axial{};
};

/// Moves the feet to follow `cmd` and computes the contact forces for one
/// physics step. Mutates foot state (positions, contact flags) in place.
inline SubstepForces servo_legs(BipedState& state, const ControlOutput& cmd, const ModelParams& model,
                                double dt) {
    SubstepForces out;
    constexpr double kPlaceSpeed = 4.0;  // m/s, kinematic placement speed
    for (int i = 0; i < 2; ++i) {
        FootState& foot = state.feet[i];
        const LegCommand& leg = cmd.legs[i];
        Vec2 old_pos = foot.pos;
        FootMode mode = FootMode::Stance;
        double local = 0.0;
        double ratio = cmd.params.ratio;

        if (leg.drive == LegDrive::Clock) {
            local = foot_local_phase(state.phase, i);
            mode = local < ratio ? FootMode::Swing : FootMode::Stance;
            if (mode == FootMode::Swing) {
                if (!foot.swinging) {
                    foot.liftoff_x = foot.pos.x;
                    foot.swinging = true;
                }
                foot.contact = false;
                double s = local / ratio;
                double x = foot.liftoff_x + (leg.swing.touchdown_x - foot.liftoff_x) * cycloid_progress(s);
                foot.pos = {x, swing_height(s, leg.swing.clearance)};
            } else if (!foot.contact) {
                // swing finished: set the foot down where it is
                foot.pos.z = 0.0;
            }
        } else if (leg.drive == LegDrive::Place && !foot.contact && foot.pos.z > model.contact_tolerance) {
            Vec2 target{leg.swing.touchdown_x, 0.0};
            Vec2 d = target - foot.pos;
            double dist = d.norm();
            double step = kPlaceSpeed * dt;
            foot.pos = dist <= step ? target : foot.pos + d * (step / dist);
            if (foot.pos.z < 1e-9) foot.pos.z = 0.0;
        } else if (leg.drive != LegDrive::Clock && !foot.contact && foot.pos.z > model.contact_tolerance) {
            // planted command on a foot still in the air: drop it straight down
            foot.pos.z = std::max(0.0, foot.pos.z - kPlaceSpeed * dt);
        }

        if (mode == FootMode::Stance) foot.swinging = false;
        foot.vel = (foot.pos - old_pos) * (1.0 / dt);
        if (mode == FootMode::Stance && foot.pos.z <= model.contact_tolerance) {
            foot.vel.z = std::min(foot.vel.z, 0.0);
            LegGeometry g = LegGeometry::of(state, i);
            double progress = leg.drive == LegDrive::Clock ? (local - ratio) / (1.0 - ratio) : 0.0;
            double raw = stance_axial_force(leg.stance, g, progress);
            ContactResult c = resolve_contact(foot.pos, foot.vel, FootMode::Stance, raw, g.axis,
                                              model.max_leg_force, model.contact_tolerance);
            foot.contact = c.contact;
            if (c.contact) foot.vel = {0.0, 0.0};
            out.grf[i] = c.grf;
            out.axial[i] = c.axial_force;
        } else {
            foot.contact = false;
        }
    }
    return out;
}

}  // namespace sprint
