#pragma once

// Shared rollout protocol for scoring and mechanics: accelerate from the fixed
// initial state, settle, then collect a fixed window of policy steps.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "sprint/controllers.hpp"
#include "sprint/simulator.hpp"

namespace sprint {

inline constexpr int kCollectSteps = 100;
inline constexpr double kCommandAccel = 2.0;  // m/s^2, ramp used while settling

/// Policy steps allowed to reach and settle at `cmd`: 50 at rest up to 250 at 5 m/s.
inline int settle_steps(double cmd) {
    if (!(cmd >= 0.0 && cmd <= kMaxSpeedCommand))
        throw std::invalid_argument("settle_steps: command outside [0, 5] m/s");
    return 50 + static_cast<int>(std::lround(40.0 * cmd));
}

struct ProtocolRun {
    TrajectoryLog log;
    double collect_work = 0.0;  // positive leg work during the collection window [J]
    int settle = 0;

    bool fell() const { return log.fell; }
    /// Samples of the collection window; empty when the rollout fell.
    std::span<const SampleRecord> window() const {
        if (log.fell || log.samples.size() < static_cast<std::size_t>(settle + kCollectSteps)) return {};
        return std::span<const SampleRecord>(log.samples).subspan(static_cast<std::size_t>(settle), kCollectSteps);
    }
};

/// Rolls out settle_steps(cmd) + 100 policy steps at fixed gait params.
inline ProtocolRun protocol_rollout(const ModelParams& model, const ControllerGains& gains, const GaitParams& params,
                                    double cmd, std::uint64_t seed, const InitialCondition& init = {}) {
    ProtocolRun run;
    run.settle = settle_steps(cmd);
    RunningController controller(model, gains, fixed_params(params));
    CommandSchedule schedule{0.0, cmd, cmd / kCommandAccel};
    run.log.seed = seed;
    run.log.model = model;
    run.log.schedule = schedule;
    run.log.controller = "running";
    Simulator sim(model, init.make(seed));
    const int total = run.settle + kCollectSteps;
    double work_at_collect = 0.0;
    for (int k = 0; k < total && !sim.fallen(); ++k) {
        if (k == run.settle) work_at_collect = sim.positive_work();
        double c = schedule.at(static_cast<double>(k) / kPolicyRate);
        ControlOutput out = controller.step(sim.state(), c);
        SampleRecord rec = sim.step(out, c);
        if (sim.fallen()) break;
        run.log.samples.push_back(rec);
    }
    run.log.fell = sim.fallen();
    run.log.fall_time = sim.fall_time();
    run.collect_work = sim.positive_work() - work_at_collect;
    return run;
}

}  // namespace sprint
