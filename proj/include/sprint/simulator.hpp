#pragma once

// Fixed-step rollout: 40 Hz controller over 2 kHz physics, one SampleRecord
// per policy step.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "sprint/controllers.hpp"
#include "sprint/model.hpp"
#include "sprint/physics.hpp"

namespace sprint {

struct InitialCondition {
    double com_height = 0.88;
    double stance_width = 0.0;    // distance between the feet, centred under the COM
    double forward_speed = 0.0;
    double noise = 0.0;           // amplitude of seeded perturbation of COM position/velocity [m, m/s]

    BipedState make(std::uint64_t seed) const {
        BipedState s;
        s.com_pos = {0.0, com_height};
        s.com_vel = {forward_speed, 0.0};
        for (int i = 0; i < 2; ++i) {
            s.feet[i].pos = {(i == kLeft ? -0.5 : 0.5) * stance_width, 0.0};
            s.feet[i].contact = true;
            s.feet[i].liftoff_x = s.feet[i].pos.x;
        }
        if (noise > 0.0) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(-noise, noise);
            s.com_pos.x += 0.1 * u(rng);
            s.com_pos.z += 0.1 * u(rng);
            s.com_vel.x += u(rng);
        }
        return s;
    }
};

class Simulator {
public:
    Simulator(ModelParams model, BipedState initial) : model_(model), state_(initial) {
        model_.validate();
        fallen_ = detect_fall(state_, model_);
    }

    /// Runs one policy period under `out` and returns the sample taken at its end.
    SampleRecord step(const ControlOutput& out, double cmd_speed) {
        if (fallen_) throw std::logic_error("step() after fall");
        if (out.clock_running) out.params.validate();
        const double dt = ModelParams::physics_dt;
        SampleRecord rec;
        for (int k = 0; k < kSubstepsPerPolicyStep; ++k) {
            SubstepForces f = servo_legs(state_, out, model_, dt);
            for (int i = 0; i < 2; ++i) {
                rec.grf_z[i] += f.grf[i].z;
                rec.grf_x[i] += f.grf[i].x;
                rec.actuator_force[i] += f.axial[i];
                double rate = LegGeometry::of(state_, i).length_rate;
                positive_work_ += std::max(0.0, f.axial[i] * rate) * dt;
            }
            state_ = integrate_substep(state_, f.grf, model_, dt);
            ++substeps_;
            state_.time = static_cast<double>(substeps_) / kPhysicsRate;
            if (out.clock_running) state_.phase = advance(state_.phase, dt, out.params.freq);
            if (detect_fall(state_, model_)) {
                fallen_ = true;
                fall_time_ = state_.time;
                break;
            }
        }
        for (int i = 0; i < 2; ++i) {
            rec.grf_z[i] /= kSubstepsPerPolicyStep;
            rec.grf_x[i] /= kSubstepsPerPolicyStep;
            rec.actuator_force[i] /= kSubstepsPerPolicyStep;
            LegGeometry g = LegGeometry::of(state_, i);
            rec.leg_rate[i] = g.length_rate;
            rec.swing_rate[i] = g.angle_rate;
            rec.foot_pos[i] = state_.feet[i].pos;
        }
        ++policy_steps_;
        rec.time = static_cast<double>(policy_steps_) / kPolicyRate;
        rec.phase = state_.phase.value();
        rec.com_pos = state_.com_pos;
        rec.com_vel = state_.com_vel;
        rec.cmd_speed = cmd_speed;
        rec.params = out.params;
        return rec;
    }

    const BipedState& state() const { return state_; }
    void set_phase(Phase p) { state_.phase = p; }
    bool fallen() const { return fallen_; }
    std::optional<double> fall_time() const { return fall_time_; }
    long policy_steps() const { return policy_steps_; }
    /// Integral of max(0, F dL/dt) over both legs since construction [J].
    double positive_work() const { return positive_work_; }
    const ModelParams& model() const { return model_; }

private:
    ModelParams model_;
    BipedState state_;
    bool fallen_ = false;
    std::optional<double> fall_time_;
    long substeps_ = 0;
    long policy_steps_ = 0;
    double positive_work_ = 0.0;
};

/// Number of policy steps covering `duration` seconds.
inline long policy_steps_for(double duration) {
    return std::lround(std::floor(duration * kPolicyRate + 1e-9));
}

inline TrajectoryLog rollout(RunningController& controller, const CommandSchedule& schedule, double duration,
                             std::uint64_t seed, const ModelParams& model, const InitialCondition& init = {},
                             Phase start_phase = Phase{}) {
    if (!(duration >= 0.0)) throw std::invalid_argument("rollout duration must be >= 0");
    TrajectoryLog log;
    log.seed = seed;
    log.model = model;
    log.schedule = schedule;
    log.controller = "running";
    BipedState s0 = init.make(seed);
    s0.phase = start_phase;
    Simulator sim(model, s0);
    long n = policy_steps_for(duration);
    log.samples.reserve(static_cast<std::size_t>(n));
    for (long k = 0; k < n && !sim.fallen(); ++k) {
        double cmd = schedule.at(static_cast<double>(k) / kPolicyRate);
        ControlOutput out = controller.step(sim.state(), cmd);
        SampleRecord rec = sim.step(out, cmd);
        if (sim.fallen()) break;
        log.samples.push_back(rec);
    }
    log.fell = sim.fallen();
    log.fall_time = sim.fall_time();
    return log;
}

inline TrajectoryLog rollout(StandingController& controller, double duration, std::uint64_t seed,
                             const ModelParams& model, const InitialCondition& init) {
    if (!(duration >= 0.0)) throw std::invalid_argument("rollout duration must be >= 0");
    TrajectoryLog log;
    log.seed = seed;
    log.model = model;
    log.controller = "standing";
    Simulator sim(model, init.make(seed));
    long n = policy_steps_for(duration);
    for (long k = 0; k < n && !sim.fallen(); ++k) {
        ControlOutput out = controller.step(sim.state());
        SampleRecord rec = sim.step(out, 0.0);
        if (sim.fallen()) break;
        log.samples.push_back(rec);
    }
    log.fell = sim.fallen();
    log.fall_time = sim.fall_time();
    return log;
}

}  // namespace sprint
