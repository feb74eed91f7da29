#pragma once

// 100 m dash: stand at the line, accelerate, cruise, decelerate past the
// finish, and hand back to the standing controller at a foot-apex phase.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sprint/controllers.hpp"
#include "sprint/mechanics.hpp"
#include "sprint/optimizer.hpp"
#include "sprint/simulator.hpp"

namespace sprint {

enum class DashStage { StandAtLine = 1, Accelerate = 2, SteadyRun = 3, Decelerate = 4, StandStop = 5 };

inline const char* to_string(DashStage s) {
    switch (s) {
        case DashStage::StandAtLine: return "stand_at_line";
        case DashStage::Accelerate: return "accelerate";
        case DashStage::SteadyRun: return "steady_run";
        case DashStage::Decelerate: return "decelerate";
        case DashStage::StandStop: return "stand_stop";
    }
    return "?";
}

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Signed shortest distance a -> b on the unit phase circle, in [-0.5, 0.5).
inline double circular_diff(double a, double b) {
    double d = b - a;
    d -= std::floor(d + 0.5);
    return d;
}

inline double circular_distance(double a, double b) { return std::abs(circular_diff(a, b)); }

/// Median of phases that lie within half a cycle of each other.
inline double circular_median(std::span<const double> phases) {
    if (phases.empty()) throw std::invalid_argument("circular_median: empty");
    double sx = 0.0, sy = 0.0;
    for (double p : phases) {
        sx += std::cos(2.0 * std::numbers::pi * p);
        sy += std::sin(2.0 * std::numbers::pi * p);
    }
    double centre = Phase::wrap(std::atan2(sy, sx) / (2.0 * std::numbers::pi));
    std::vector<double> rel;
    for (double p : phases) rel.push_back(circular_diff(centre, p));
    return Phase::wrap(centre + median(rel));
}

/// Phases of the samples where the sign of GRF_L - GRF_R changes. Samples with
/// equal forces carry no sign and do not end a run.
inline std::vector<double> find_grf_crossings(std::span<const SampleRecord> samples) {
    std::vector<double> out;
    int last = 0;
    for (const auto& s : samples) {
        double d = s.grf_z[kLeft] - s.grf_z[kRight];
        int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sign == 0) continue;
        if (last != 0 && sign != last) out.push_back(s.phase);
        last = sign;
    }
    return out;
}

/// Splits phases into two clusters on the circle (2-means).
inline std::array<std::vector<double>, 2> cluster_two_modes(std::span<const double> phases) {
    std::array<double, 2> c{phases.empty() ? 0.0 : phases.front(), 0.0};
    c[1] = Phase::wrap(c[0] + 0.5);
    std::array<std::vector<double>, 2> groups;
    for (int iter = 0; iter < 50; ++iter) {
        groups = {};
        for (double p : phases) groups[circular_distance(p, c[0]) <= circular_distance(p, c[1]) ? 0 : 1].push_back(p);
        std::array<double, 2> next = c;
        for (int g = 0; g < 2; ++g)
            if (!groups[g].empty()) next[g] = circular_median(groups[g]);
        if (next == c) break;
        c = next;
    }
    return groups;
}

/// Median crossing phase of the mode nearer phase 0.
inline double start_phase_from_crossings(std::span<const double> crossings) {
    if (crossings.size() < 4) throw CalibrationError("too few GRF crossings to calibrate the start phase");
    auto groups = cluster_two_modes(crossings);
    if (groups[0].empty() || groups[1].empty()) return circular_median(crossings);
    double m0 = circular_median(groups[0]);
    double m1 = circular_median(groups[1]);
    return circular_distance(m0, 0.0) <= circular_distance(m1, 0.0) ? m0 : m1;
}

/// Per-foot median phase of local maxima of foot height. A flat-topped
/// maximum counts once, at the middle of the flat run.
inline std::array<double, 2> find_apex_phases(std::span<const SampleRecord> samples) {
    std::array<double, 2> out{};
    for (int foot = 0; foot < 2; ++foot) {
        std::vector<double> phases;
        auto z = [&](std::size_t k) { return samples[k].foot_pos[foot].z; };
        for (std::size_t k = 1; k + 1 < samples.size(); ++k) {
            if (!(z(k) > z(k - 1))) continue;
            std::size_t end = k;
            while (end + 1 < samples.size() && z(end + 1) == z(k)) ++end;
            if (end + 1 < samples.size() && z(end + 1) < z(k)) {
                double a = samples[k].phase;
                phases.push_back(Phase::wrap(a + 0.5 * circular_diff(a, samples[end].phase)));
            }
            k = end;
        }
        if (phases.empty()) throw CalibrationError("no foot-height maxima found for one foot");
        out[foot] = circular_median(phases);
    }
    return out;
}

inline constexpr int kCalibrationSteps = 1200;

struct PhaseCalibration {
    double start_phase = 0.0;
    std::array<double, 2> apex_phases{};
    double tolerance = 0.05;
    int crossings = 0;
    int strides = 0;  // gait cycles covered by the calibration rollout
};

/// Steps in place for 1200 policy steps and derives the transition phases.
inline PhaseCalibration calibrate(const ModelParams& model, const ControllerGains& gains, const ParamSchedule& params,
                                  std::uint64_t seed) {
    RunningController c(model, gains, params);
    TrajectoryLog log = rollout(c, CommandSchedule::constant(0.0), kCalibrationSteps * ModelParams::policy_dt, seed,
                                model);
    if (log.fell) throw CalibrationError("calibration rollout fell");
    PhaseCalibration cal;
    auto crossings = find_grf_crossings(log.samples);
    cal.crossings = static_cast<int>(crossings.size());
    cal.start_phase = start_phase_from_crossings(crossings);
    cal.apex_phases = find_apex_phases(log.samples);
    double freq = params(0.0).freq;
    cal.tolerance = 1.5 * ModelParams::policy_dt * freq;
    cal.strides = static_cast<int>(std::floor(kCalibrationSteps * ModelParams::policy_dt * freq));
    return cal;
}

inline double calibrate_start_phase(const ModelParams& model, const ControllerGains& gains,
                                    const ParamSchedule& params, std::uint64_t seed) {
    return calibrate(model, gains, params, seed).start_phase;
}

enum class StandTransition {
    Calibrated,     // apex wait and negative stop command
    ApexOnly,       // apex wait, zero stop command
    NoApexWait,     // swap on the signal, negative stop command
    ImmediateSwap,  // swap on the signal, zero stop command
};

inline const char* to_string(StandTransition t) {
    switch (t) {
        case StandTransition::Calibrated: return "calibrated";
        case StandTransition::ApexOnly: return "apex-only";
        case StandTransition::NoApexWait: return "no-apex-wait";
        case StandTransition::ImmediateSwap: return "immediate-swap";
    }
    return "?";
}

inline std::optional<StandTransition> parse_transition(const std::string& s) {
    for (auto t : {StandTransition::Calibrated, StandTransition::ApexOnly, StandTransition::NoApexWait,
                   StandTransition::ImmediateSwap})
        if (s == to_string(t)) return t;
    return std::nullopt;
}

inline bool waits_for_apex(StandTransition t) {
    return t == StandTransition::Calibrated || t == StandTransition::ApexOnly;
}

inline bool negative_stop(StandTransition t) {
    return t == StandTransition::Calibrated || t == StandTransition::NoApexWait;
}

struct DashConfig {
    double course_length = 100.0;
    double cruise_speed = 4.0;
    double stop_command = -0.1;
    double start_signal_time = 1.0;     // s of standing before the start signal
    double accel_ramp = 2.5;            // s, 0 -> cruise
    double decel_ramp = 6.0;            // s, cruise -> stop command
    double stand_signal_distance = 2.0; // m past the finish line
    double stand_signal_delay = 3.0;    // s after the decel ramp ends, before the signal
    double signal_jitter = 1.0;         // s, seeded uniform delay added to the stand signal
    double stand_verify_time = 2.0;     // s below the stand speed threshold
    double stand_speed_threshold = 0.05;
    double stand_timeout = 10.0;        // s allowed to settle after the swap
    double max_duration = 120.0;
    StandTransition transition = StandTransition::Calibrated;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(cruise_speed > 0.0 && cruise_speed <= kMaxSpeedCommand))
            throw std::invalid_argument("dash: cruise speed must be in (0, 5]");
        if (negative_stop(transition) && !(stop_command < 0.0))
            throw std::invalid_argument("dash: stop command must be negative");
        if (stop_command < kMinSpeedCommand) throw std::invalid_argument("dash: stop command below trained band");
        if (!(course_length > 0.0)) throw std::invalid_argument("dash: course length must be > 0");
    }

    /// Stop command actually sent for the configured transition variant.
    double effective_stop_command() const {
        return negative_stop(transition) ? stop_command : 0.0;
    }
};

struct DashResult {
    double official_time = 0.0;
    double avg_speed = 0.0;
    std::array<std::optional<double>, 5> stage_start;  // indexed by stage - 1
    std::optional<double> timer_start;
    std::optional<double> timer_stop;
    std::optional<double> stand_signal_time;
    std::optional<double> stand_swap_time;
    double start_phase_used = 0.0;
    std::optional<double> stand_swap_phase;
    std::vector<DashStage> stages;  // in order entered
    bool fell = false;
    DashStage fall_stage = DashStage::StandAtLine;
    bool finished = false;
    bool standing_verified = false;
    StandTransition transition = StandTransition::Calibrated;
    std::uint64_t seed = 0;

    bool success() const { return finished && standing_verified && !fell; }
};

struct DashRun {
    DashResult result;
    TrajectoryLog log;
};

/// Initial pose behind the start line: feet at x = -0.45 and -0.15, COM between.
inline InitialCondition start_line_pose(const ControllerGains& gains) {
    InitialCondition ic;
    ic.com_height = gains.stand_height;
    ic.stance_width = 0.3;
    return ic;
}

inline DashRun run_dash(const DashConfig& cfg, const PhaseCalibration& cal, const ModelParams& model,
                        const ControllerGains& gains, const ParamSchedule& params) {
    cfg.validate();
    DashRun run;
    DashResult& r = run.result;
    r.transition = cfg.transition;
    r.seed = cfg.seed;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(0.0, cfg.signal_jitter);
    const double stand_jitter = cfg.signal_jitter > 0.0 ? jitter(rng) : 0.0;

    BipedState s0 = start_line_pose(gains).make(cfg.seed);
    for (auto& f : s0.feet) f.pos.x -= 0.3;
    s0.com_pos.x -= 0.3;
    Simulator sim(model, s0);
    RunningController runner(model, gains, params);
    StandingController stander(model, gains);
    StandingController final_stander(model, gains);

    run.log.seed = cfg.seed;
    run.log.model = model;
    run.log.controller = "dash";

    DashStage stage = DashStage::StandAtLine;
    auto enter = [&](DashStage st, double t) {
        stage = st;
        r.stages.push_back(st);
        r.stage_start[static_cast<int>(st) - 1] = t;
    };
    enter(DashStage::StandAtLine, 0.0);

    const double stop_cmd = cfg.effective_stop_command();
    double run_start = 0.0;
    double decel_start = 0.0;
    double cmd = 0.0;
    bool standing = true;
    bool swapped_back = false;
    double still_since = -1.0;
    const long max_steps = policy_steps_for(cfg.max_duration);

    for (long k = 0; k < max_steps; ++k) {
        const BipedState& s = sim.state();
        double t = static_cast<double>(k) / kPolicyRate;

        // stage transitions evaluated on the state at the top of the step
        if (stage == DashStage::StandAtLine && t >= cfg.start_signal_time - 1e-12) {
            enter(DashStage::Accelerate, t);
            r.timer_start = t;
            r.start_phase_used = cal.start_phase;
            sim.set_phase(Phase(cal.start_phase));
            run_start = t;
            standing = false;
        } else if (stage == DashStage::Accelerate && t - run_start >= cfg.accel_ramp) {
            enter(DashStage::SteadyRun, t);
        }
        if ((stage == DashStage::Accelerate || stage == DashStage::SteadyRun) &&
            s.com_pos.x >= cfg.course_length) {
            r.timer_stop = t;
            r.finished = true;
            enter(DashStage::Decelerate, t);
            decel_start = t;
        }
        if (stage == DashStage::Decelerate && !r.stand_signal_time &&
            s.com_pos.x >= cfg.course_length + cfg.stand_signal_distance &&
            t - decel_start >= cfg.decel_ramp + cfg.stand_signal_delay + stand_jitter) {
            r.stand_signal_time = t;
            enter(DashStage::StandStop, t);
        }
        if (stage == DashStage::StandStop && !swapped_back) {
            bool at_apex = circular_distance(s.phase.value(), cal.apex_phases[0]) <= cal.tolerance ||
                           circular_distance(s.phase.value(), cal.apex_phases[1]) <= cal.tolerance;
            if (!waits_for_apex(cfg.transition) || at_apex) {
                swapped_back = true;
                standing = true;
                r.stand_swap_time = t;
                r.stand_swap_phase = s.phase.value();
            }
        }

        // speed command for this step
        switch (stage) {
            case DashStage::StandAtLine: cmd = 0.0; break;
            case DashStage::Accelerate:
            case DashStage::SteadyRun:
                cmd = CommandSchedule{0.0, cfg.cruise_speed, cfg.accel_ramp}.at(t - run_start);
                break;
            case DashStage::Decelerate:
            case DashStage::StandStop:
                cmd = CommandSchedule{cfg.cruise_speed, stop_cmd, cfg.decel_ramp}.at(t - decel_start);
                break;
        }

        ControlOutput out;
        if (standing && stage == DashStage::StandAtLine)
            out = stander.step(s);
        else if (standing)
            out = final_stander.step(s);
        else
            out = runner.step(s, cmd);
        SampleRecord rec = sim.step(out, standing ? 0.0 : cmd);
        if (sim.fallen()) {
            r.fell = true;
            r.fall_stage = stage;
            break;
        }
        run.log.samples.push_back(rec);

        if (swapped_back) {
            double speed = rec.com_vel.norm();
            if (speed < cfg.stand_speed_threshold) {
                if (still_since < 0.0) still_since = rec.time;
                if (rec.time - still_since >= cfg.stand_verify_time - 1e-9) {
                    r.standing_verified = true;
                    break;
                }
            } else {
                still_since = -1.0;
            }
            if (rec.time - *r.stand_swap_time > cfg.stand_timeout) break;
        }
    }
    run.log.fell = r.fell;
    run.log.fall_time = sim.fall_time();
    if (r.timer_start && r.timer_stop) {
        r.official_time = *r.timer_stop - *r.timer_start;
        r.avg_speed = cfg.course_length / r.official_time;
    }
    return run;
}

/// Runs `trials` dashes with seeds base_seed, base_seed + 1, ... Results are
/// indexed by trial regardless of thread count.
inline std::vector<DashRun> run_dash_trials(DashConfig cfg, const PhaseCalibration& cal, const ModelParams& model,
                                            const ControllerGains& gains, const ParamSchedule& params, int trials,
                                            unsigned threads = 0, bool keep_logs = false) {
    if (trials < 1) throw std::invalid_argument("dash: trials must be >= 1");
    std::vector<DashRun> runs(static_cast<std::size_t>(trials));
    const std::uint64_t base = cfg.seed;
    auto one = [&](std::size_t i) {
        DashConfig c = cfg;
        c.seed = base + i;
        runs[i] = run_dash(c, cal, model, gains, params);
        if (!keep_logs) runs[i].log.samples = {};
    };
    unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, runs.size()));
    if (n <= 1) {
        for (std::size_t i = 0; i < runs.size(); ++i) one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < runs.size(); i = next++) one(i);
            });
    }
    return runs;
}

}  // namespace sprint
