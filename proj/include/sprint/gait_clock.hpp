#pragma once

// Cyclic gait clock and the per-foot swing/stance schedule derived from it.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sprint {

enum class FootMode { Swing, Stance };

enum Foot : int { kLeft = 0, kRight = 1 };

/// Position within the gait cycle, always in [0, 1).
class Phase {
public:
    constexpr Phase() = default;
    explicit Phase(double value) : value_(wrap(value)) {}

    double value() const { return value_; }

    static double wrap(double v) {
        if (!std::isfinite(v)) throw std::invalid_argument("phase must be finite");
        double w = v - std::floor(v);
        // floor() can leave exactly 1.0 for tiny negative inputs
        return w >= 1.0 ? 0.0 : w;
    }

    friend bool operator==(const Phase&, const Phase&) = default;

private:
    double value_ = 0.0;
};

/// Stride frequency [Hz] and swing ratio commanded to the running controller.
struct GaitParams {
    double freq = 1.5;
    double ratio = 0.6;

    bool valid() const {
        return std::isfinite(freq) && std::isfinite(ratio) && freq > 0.0 && ratio > 0.0 &&
               ratio < 1.0;
    }
    void validate() const {
        if (!valid())
            throw std::invalid_argument("invalid gait params: freq=" + std::to_string(freq) +
                                        " ratio=" + std::to_string(ratio));
    }
    double stride_period() const { return 1.0 / freq; }
    double stance_time() const { return (1.0 - ratio) / freq; }
    double swing_time() const { return ratio / freq; }

    friend bool operator==(const GaitParams&, const GaitParams&) = default;
};

// Left foot starts its swing at phase 0, right foot half a cycle later.
inline constexpr std::array<double, 2> kFootPhaseOffset{0.0, 0.5};

inline Phase advance(Phase phase, double dt, double freq) {
    if (!std::isfinite(dt) || !std::isfinite(freq))
        throw std::invalid_argument("advance: non-finite input");
    if (dt < 0.0 || freq <= 0.0) throw std::invalid_argument("advance: need dt >= 0 and freq > 0");
    return Phase(phase.value() + dt * freq);
}

/// Phase of one foot within its own cycle: swing occupies [0, ratio).
inline double foot_local_phase(Phase phase, int foot) {
    return Phase::wrap(phase.value() + kFootPhaseOffset[foot]);
}

inline void require_ratio(double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("swing ratio must lie in (0, 1), got " + std::to_string(ratio));
}

inline FootMode foot_mode(Phase phase, double ratio, int foot) {
    require_ratio(ratio);
    return foot_local_phase(phase, foot) < ratio ? FootMode::Swing : FootMode::Stance;
}

inline std::array<FootMode, 2> foot_schedule(Phase phase, double ratio) {
    require_ratio(ratio);
    return {foot_mode(phase, ratio, kLeft), foot_mode(phase, ratio, kRight)};
}

/// Fraction of the cycle with both feet commanded to swing.
inline double commanded_aerial_fraction(double ratio) {
    require_ratio(ratio);
    return std::max(0.0, 2.0 * ratio - 1.0);
}

/// Fraction of the cycle with both feet commanded to stance.
inline double commanded_double_support_fraction(double ratio) {
    require_ratio(ratio);
    return std::max(0.0, 1.0 - 2.0 * ratio);
}

inline const char* to_string(FootMode m) { return m == FootMode::Swing ? "Swing" : "Stance"; }

}  // namespace sprint
