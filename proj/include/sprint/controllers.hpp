#pragma once

// Deterministic stand-ins for the running and standing policies. Both run at
// the 40 Hz policy rate and hand targets to the 2 kHz leg servo.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "sprint/gait_clock.hpp"
#include "sprint/model.hpp"
#include "sprint/physics.hpp"

namespace sprint {

inline constexpr double kMinSpeedCommand = -0.2;
inline constexpr double kMaxSpeedCommand = 5.0;

struct ControllerGains {
    double placement_gain = 0.12;      // Raibert k_v [s]
    double placement_integral_gain = 0.1;  // m of touchdown shift per metre of accumulated speed error
    double max_placement_offset = 0.45;  // m, reach limit for the touchdown target
    double apex_gain = 0.1;            // 1/m, feedforward scale per metre of apex error
    double swing_clearance = 0.10;     // m
    double stand_kp_x = 30.0;          // 1/s^2
    double stand_kd_x = 12.0;          // 1/s
    double stand_kp_z = 100.0;
    double stand_kd_z = 20.0;
    double stand_height = 0.86;        // m
    double stand_margin = 0.12;        // m, base widening beyond the capture offset

    void validate() const {
        for (double g : {placement_gain, placement_integral_gain, max_placement_offset, apex_gain, swing_clearance, stand_kp_x,
                         stand_kd_x, stand_kp_z, stand_kd_z, stand_height, stand_margin})
            if (!std::isfinite(g)) throw std::invalid_argument("controller gains must be finite");
        if (swing_clearance <= 0.0) throw std::invalid_argument("swing clearance must be > 0");
    }
};

/// Maps a speed command to the gait parameters the running controller uses.
using ParamSchedule = std::function<GaitParams(double cmd_speed)>;

inline ParamSchedule fixed_params(GaitParams p) {
    p.validate();
    return [p](double) { return p; };
}

/// Raibert touchdown offset relative to the hip position at touchdown.
inline double raibert_offset(double forward_speed, double cmd_speed, double stance_time, double gain) {
    return forward_speed * stance_time / 2.0 + gain * (forward_speed - cmd_speed);
}

/// Peak of the sine-shaped vertical force that delivers half a stride's worth
/// of body-weight impulse in one stance.
inline double stance_force_peak(const GaitParams& p, double weight) {
    return std::numbers::pi * weight / (4.0 * (1.0 - p.ratio));
}

/// Hop height the COM must rise above touchdown height for a ballistic aerial
/// phase of the commanded length.
inline double commanded_hop_height(const GaitParams& p, double gravity) {
    double aerial = commanded_aerial_fraction(p.ratio) * 0.5 / p.freq;  // per aerial phase
    return gravity * aerial * aerial / 8.0;
}

/// Clock-driven running controller. Stance legs get an impulse-balanced
/// feedforward plus a spring-damper about rest length; swing feet land at a
/// Raibert target. The feedforward is scaled by the error between the desired
/// and last observed flight apex.
class RunningController {
public:
    RunningController(ModelParams model, ControllerGains gains, ParamSchedule schedule)
        : model_(model), gains_(gains), schedule_(std::move(schedule)) {
        model_.validate();
        gains_.validate();
    }

    ControlOutput step(const BipedState& s, double cmd_speed) {
        GaitParams p = schedule_(cmd_speed);
        observe(s, cmd_speed);
        return compute(s, s.phase, p, cmd_speed);
    }

    /// Output for the given inputs without touching the apex register.
    ControlOutput compute(const BipedState& s, Phase phase, const GaitParams& p, double cmd_speed) const {
        p.validate();
        if (!std::isfinite(cmd_speed)) throw std::invalid_argument("speed command must be finite");
        ControlOutput out;
        out.params = p;
        out.clock_running = true;

        double hop_scale = 1.0;
        if (last_apex_ && commanded_aerial_fraction(p.ratio) > 0.0) {
            double desired = model_.rest_length + commanded_hop_height(p, model_.gravity);
            hop_scale = std::clamp(1.0 + gains_.apex_gain * (desired - *last_apex_), 0.7, 1.3);
        }

        double vx = s.com_vel.x;
        for (int i = 0; i < 2; ++i) {
            LegCommand& leg = out.legs[i];
            leg.drive = LegDrive::Clock;
            leg.stance.sine_profile = true;
            leg.stance.feedforward = stance_force_peak(p, model_.weight()) * hop_scale;
            leg.stance.stiffness = model_.leg_stiffness;
            leg.stance.damping = model_.leg_damping;
            leg.stance.set_length = model_.rest_length;

            // time until this foot's next touchdown
            double local = foot_local_phase(phase, i);
            double to_touchdown = local < p.ratio ? (p.ratio - local) / p.freq : (1.0 + p.ratio - local) / p.freq;
            leg.swing.touchdown_x = s.com_pos.x + vx * to_touchdown + touchdown_offset(vx, cmd_speed, p);
            leg.swing.clearance = gains_.swing_clearance;
        }
        return out;
    }

    double touchdown_offset(double vx, double cmd_speed, const GaitParams& p) const {
        double off = raibert_offset(vx, cmd_speed, p.stance_time(), gains_.placement_gain) +
                     gains_.placement_integral_gain * speed_error_integral_;
        return std::clamp(off, -gains_.max_placement_offset, gains_.max_placement_offset);
    }

    /// Updates the apex and speed-error registers from the current state.
    void observe(const BipedState& s, double cmd_speed) {
        constexpr double kIntegralLimit = 2.0;  // m
        speed_error_integral_ = std::clamp(speed_error_integral_ + (s.com_vel.x - cmd_speed) * ModelParams::policy_dt,
                                           -kIntegralLimit, kIntegralLimit);
        bool airborne = !s.feet[0].contact && !s.feet[1].contact;
        if (airborne && s.com_vel.z > 0.0)
            last_apex_ = s.com_pos.z + s.com_vel.z * s.com_vel.z / (2.0 * model_.gravity);
        else if (airborne)
            last_apex_ = std::max(last_apex_.value_or(s.com_pos.z), s.com_pos.z);
    }

    std::optional<double> last_apex() const { return last_apex_; }
    double speed_error_integral() const { return speed_error_integral_; }
    void reset() {
        last_apex_.reset();
        speed_error_integral_ = 0.0;
    }
    GaitParams params_for(double cmd_speed) const { return schedule_(cmd_speed); }
    const ControllerGains& gains() const { return gains_; }

private:
    ModelParams model_;
    ControllerGains gains_;
    ParamSchedule schedule_;
    std::optional<double> last_apex_;
    double speed_error_integral_ = 0.0;
};

/// Balances with both feet planted. A foot that is airborne when control is
/// handed over is placed once along the COM momentum, capture-point style,
/// and is treated as planted from then on.
class StandingController {
public:
    StandingController(ModelParams model, ControllerGains gains) : model_(model), gains_(gains) {
        model_.validate();
        gains_.validate();
    }

    ControlOutput step(const BipedState& s) {
        if (!engaged_) engage(s);
        return compute(s);
    }

    /// Decides, once, which feet are to be placed and where.
    void engage(const BipedState& s) {
        engaged_ = true;
        std::array<bool, 2> airborne{};
        for (int i = 0; i < 2; ++i) airborne[i] = !s.feet[i].contact && s.feet[i].pos.z > 1e-6;
        int n_air = int(airborne[0]) + int(airborne[1]);
        double vx = s.com_vel.x;
        double capture = s.com_pos.x + capture_offset(vx, model_);
        if (n_air == 1) {
            int air = airborne[0] ? 0 : 1;
            double planted_x = s.feet[1 - air].pos.x;
            // side the body is falling toward: capture point relative to the planted foot
            double dir = capture >= planted_x ? 1.0 : -1.0;
            place_[air] = true;
            target_[air] = capture + dir * gains_.stand_margin;
        } else if (n_air == 2) {
            for (int i = 0; i < 2; ++i) place_[i] = true;
            double lead = vx >= 0 ? 1.0 : -1.0;
            bool left_ahead = s.feet[0].pos.x >= s.feet[1].pos.x;
            target_[left_ahead ? 0 : 1] = capture + lead * 0.5 * gains_.stand_margin;
            target_[left_ahead ? 1 : 0] = capture - lead * 0.5 * gains_.stand_margin;
        }
    }

    ControlOutput compute(const BipedState& s) const {
        ControlOutput out;
        out.clock_running = false;
        std::array<bool, 2> grounded{};
        for (int i = 0; i < 2; ++i) {
            LegCommand& leg = out.legs[i];
            leg.drive = place_[i] ? LegDrive::Place : LegDrive::Planted;
            leg.swing.touchdown_x = target_[i];
            grounded[i] = s.feet[i].pos.z <= model_.contact_tolerance;
        }
        std::array<double, 2> axial = support_forces(s, grounded);
        for (int i = 0; i < 2; ++i) {
            // axial force requested directly: cancel the vertical projection
            LegGeometry g = LegGeometry::of(s, i);
            out.legs[i].stance.feedforward = axial[i] * std::max(g.axis.z, 0.2);
            out.legs[i].stance.set_length = g.length;
        }
        return out;
    }

    /// Axial leg forces realising the PD law toward the support midpoint at
    /// standing height. Non-negative, solved per policy step.
    std::array<double, 2> support_forces(const BipedState& s, const std::array<bool, 2>& grounded) const {
        std::array<double, 2> a{};
        int n = int(grounded[0]) + int(grounded[1]);
        if (n == 0) return a;
        double target_x = 0.0;
        for (int i = 0; i < 2; ++i)
            if (grounded[i]) target_x += s.feet[i].pos.x / n;
        double m = model_.mass;
        Vec2 want{m * (gains_.stand_kp_x * (target_x - s.com_pos.x) - gains_.stand_kd_x * s.com_vel.x),
                  m * (model_.gravity + gains_.stand_kp_z * (gains_.stand_height - s.com_pos.z) -
                       gains_.stand_kd_z * s.com_vel.z)};
        want.z = std::max(want.z, 0.0);
        std::array<Vec2, 2> u{LegGeometry::of(s, 0).axis, LegGeometry::of(s, 1).axis};

        auto single = [&](int i) {
            // best non-negative magnitude along one axis, vertical weighted
            double num = u[i].x * want.x + 4.0 * u[i].z * want.z;
            double den = u[i].x * u[i].x + 4.0 * u[i].z * u[i].z;
            return std::max(0.0, num / den);
        };
        auto residual = [&](double a0, double a1) {
            Vec2 f = u[0] * a0 + u[1] * a1 - want;
            return f.x * f.x + 4.0 * f.z * f.z;
        };

        if (n == 2) {
            double det = u[0].x * u[1].z - u[1].x * u[0].z;
            bool solved = false;
            if (std::abs(det) > 1e-6) {
                double a0 = (want.x * u[1].z - u[1].x * want.z) / det;
                double a1 = (u[0].x * want.z - want.x * u[0].z) / det;
                if (a0 >= 0.0 && a1 >= 0.0) {
                    a = {a0, a1};
                    solved = true;
                }
            }
            if (!solved && std::abs(det) <= 1e-6) {
                // coincident axes: share the load
                double s0 = single(0);
                a = {0.5 * s0, 0.5 * s0};
            } else if (!solved) {
                double s0 = single(0), s1 = single(1);
                a = residual(s0, 0.0) <= residual(0.0, s1) ? std::array<double, 2>{s0, 0.0}
                                                            : std::array<double, 2>{0.0, s1};
            }
        } else {
            int i = grounded[0] ? 0 : 1;
            a[i] = single(i);
        }
        for (double& f : a) f = std::clamp(f, 0.0, model_.max_leg_force);
        return a;
    }

    bool engaged() const { return engaged_; }
    bool placing(int foot) const { return place_[foot]; }
    double placement_target(int foot) const { return target_[foot]; }

private:
    ModelParams model_;
    ControllerGains gains_;
    bool engaged_ = false;
    std::array<bool, 2> place_{};
    std::array<double, 2> target_{};
};

}  // namespace sprint
