#pragma once

// Gait-parameter search: grid sweep around a baseline speed mapping, four-cost
// scoring with per-speed median normalisation, top-k selection and a cubic
// least-squares speed -> (freq, ratio) map.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sprint/controllers.hpp"
#include "sprint/protocol.hpp"

namespace sprint {

/// Piecewise-linear speed -> gait parameter mapping. The default is a single
/// ramp over 0..5 m/s: freq 1.25 -> 1.875 Hz, ratio 0.4 -> 0.8.
struct BaselineMap {
    std::vector<double> speeds{0.0, 5.0};
    std::vector<double> freqs{1.25, 1.875};
    std::vector<double> ratios{0.4, 0.8};

    void validate() const {
        if (speeds.size() < 2 || freqs.size() != speeds.size() || ratios.size() != speeds.size())
            throw std::invalid_argument("baseline map needs >= 2 breakpoints with matching freq/ratio lists");
        if (!std::is_sorted(speeds.begin(), speeds.end()) ||
            std::adjacent_find(speeds.begin(), speeds.end()) != speeds.end())
            throw std::invalid_argument("baseline map speeds must be strictly increasing");
        for (std::size_t i = 0; i < speeds.size(); ++i) GaitParams{freqs[i], ratios[i]}.validate();
    }

    GaitParams at(double speed) const {
        double v = std::clamp(speed, speeds.front(), speeds.back());
        std::size_t i = 1;
        while (i + 1 < speeds.size() && v > speeds[i]) ++i;
        double t = (v - speeds[i - 1]) / (speeds[i] - speeds[i - 1]);
        return {freqs[i - 1] + t * (freqs[i] - freqs[i - 1]), ratios[i - 1] + t * (ratios[i] - ratios[i - 1])};
    }
};

inline constexpr double kRatioClampLow = 0.05;
inline constexpr double kRatioClampHigh = 0.95;
inline constexpr double kFreqFloor = 0.25;

struct SweepSpec {
    std::vector<double> speeds{1.0, 2.0, 3.0, 4.0, 5.0};
    double ratio_offset = 0.2;
    double freq_offset = 0.625;
    int freq_points = 9;
    int ratio_points = 9;
    std::uint64_t seed = 0;
    BaselineMap baseline;
    std::array<double, 4> weights{1.0, 1.0, 1.0, 1.0};  // speed, CoT, torque, motor velocity

    void validate() const {
        if (speeds.empty()) throw std::invalid_argument("sweep: speed list is empty");
        for (double v : speeds)
            if (!(v >= 0.0 && v <= kMaxSpeedCommand)) throw std::invalid_argument("sweep: speed outside [0, 5]");
        if (freq_points < 1 || ratio_points < 1) throw std::invalid_argument("sweep: grid resolution must be >= 1");
        if (!(ratio_offset >= 0.0) || !(freq_offset >= 0.0)) throw std::invalid_argument("sweep: offsets must be >= 0");
        for (double w : weights)
            if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("sweep: weights must be finite and >= 0");
        baseline.validate();
    }

    std::size_t cells_per_speed() const { return static_cast<std::size_t>(freq_points) * ratio_points; }
    std::size_t size() const { return speeds.size() * cells_per_speed(); }

    static double offset(int i, int n, double bound) {
        return n == 1 ? 0.0 : -bound + 2.0 * bound * i / (n - 1);
    }

    /// Gait params of grid cell (i_freq, i_ratio) at `speed`.
    GaitParams cell(double speed, int i_freq, int i_ratio) const {
        GaitParams base = baseline.at(speed);
        GaitParams p;
        p.freq = std::max(kFreqFloor, base.freq + offset(i_freq, freq_points, freq_offset));
        p.ratio = std::clamp(base.ratio + offset(i_ratio, ratio_points, ratio_offset), kRatioClampLow, kRatioClampHigh);
        return p;
    }
};

enum CostIndex { kSpeedError = 0, kCostOfTransport = 1, kTorque = 2, kMotorVelocity = 3 };

struct ScoreBreakdown {
    double speed = 0.0;
    GaitParams params;
    double speed_error = 0.0;        // m/s
    double cost_of_transport = 0.0;  // unitless
    double torque_cost = 0.0;        // N
    double motor_velocity = 0.0;     // m/s
    std::array<double, 4> normalized{};
    double score = 0.0;
    bool fell = false;

    std::array<double, 4> raw() const { return {speed_error, cost_of_transport, torque_cost, motor_velocity}; }

    friend bool operator==(const ScoreBreakdown&, const ScoreBreakdown&) = default;
};

inline double compile_score(const std::array<double, 4>& normalized, const std::array<double, 4>& weights) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += weights[i] * normalized[i];
    return std::exp(-s);
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline void normalize_scores(std::vector<ScoreBreakdown>& table, const std::array<double, 4>& weights);

/// Raw costs for one (speed, params) rollout. On its own a cell is a one-row
/// table, so its normalised costs are 1 (or 0 for a zero cost); sweep()
/// re-normalises over the whole per-speed table. Falls are data: fell = true.
inline ScoreBreakdown evaluate_cell(double cmd, const GaitParams& params, std::uint64_t seed, const ModelParams& model,
                                    const ControllerGains& gains, const InitialCondition& init = {},
                                    const std::array<double, 4>& weights = {1.0, 1.0, 1.0, 1.0}) {
    ScoreBreakdown b;
    b.speed = cmd;
    b.params = params;
    ProtocolRun run = protocol_rollout(model, gains, params, cmd, seed, init);
    auto win = run.window();
    if (run.fell() || win.empty()) {
        b.fell = true;
        return b;
    }
    double n = static_cast<double>(win.size());
    for (const auto& s : win) {
        b.speed_error += std::abs(s.com_vel.x - cmd) / n;
        for (int i = 0; i < 2; ++i) {
            b.torque_cost += std::abs(s.actuator_force[i]) / (2.0 * n);
            b.motor_velocity += (std::abs(s.leg_rate[i]) + model.rest_length * std::abs(s.swing_rate[i])) / (2.0 * n);
        }
    }
    // distance over the window, floored so stepping in place stays finite
    double start_x = run.log.samples[static_cast<std::size_t>(run.settle) - 1].com_pos.x;
    double distance = std::max(std::abs(win.back().com_pos.x - start_x), 0.05);
    b.cost_of_transport = run.collect_work / (model.weight() * distance);
    std::vector<ScoreBreakdown> one{b};
    normalize_scores(one, weights);
    return one.front();
}

/// Normalises each raw cost by its median over the non-fallen cells at the
/// same speed and compiles score = exp(-sum w_i c_i); fallen cells score 0.
inline void normalize_scores(std::vector<ScoreBreakdown>& table, const std::array<double, 4>& weights) {
    std::set<double> speeds;
    for (const auto& c : table) speeds.insert(c.speed);
    for (double v : speeds) {
        std::array<std::vector<double>, 4> costs;
        for (const auto& c : table)
            if (c.speed == v && !c.fell)
                for (int i = 0; i < 4; ++i) costs[i].push_back(c.raw()[i]);
        std::array<double, 4> med{};
        for (int i = 0; i < 4; ++i) med[i] = std::max(median(costs[i]), 1e-12);
        for (auto& c : table) {
            if (c.speed != v) continue;
            if (c.fell) {
                c.normalized = {};
                c.score = 0.0;
                continue;
            }
            auto raw = c.raw();
            for (int i = 0; i < 4; ++i) c.normalized[i] = raw[i] / med[i];
            c.score = compile_score(c.normalized, weights);
        }
    }
}

struct SweepOptions {
    unsigned threads = 0;  // 0: hardware concurrency
    std::optional<std::uint64_t> shuffle_seed;  // evaluate cells in a shuffled order
    ModelParams model;
    ControllerGains gains;
    InitialCondition init;
};

/// Evaluates every grid cell. Rows are ordered by (speed, freq index, ratio
/// index) regardless of evaluation order or thread count.
inline std::vector<ScoreBreakdown> sweep(const SweepSpec& spec, const SweepOptions& opt = {}) {
    spec.validate();
    const std::size_t per_speed = spec.cells_per_speed();
    std::vector<ScoreBreakdown> table(spec.size());
    std::vector<std::size_t> order(table.size());
    std::iota(order.begin(), order.end(), 0);
    if (opt.shuffle_seed) {
        std::mt19937_64 rng(*opt.shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    auto eval = [&](std::size_t idx) {
        std::size_t si = idx / per_speed;
        std::size_t rem = idx % per_speed;
        int fi = static_cast<int>(rem / spec.ratio_points);
        int ri = static_cast<int>(rem % spec.ratio_points);
        double v = spec.speeds[si];
        table[idx] = evaluate_cell(v, spec.cell(v, fi, ri), spec.seed, opt.model, opt.gains, opt.init,
                                   spec.weights);
    };
    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, order.size()));
    if (threads <= 1) {
        for (std::size_t idx : order) eval(idx);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < order.size(); k = next++) eval(order[k]);
            });
    }
    normalize_scores(table, spec.weights);
    return table;
}

struct TopK {
    std::vector<ScoreBreakdown> cells;
    bool short_list = false;  // fewer than k non-fallen cells were available
};

/// Best k non-fallen cells at `speed`: by score, then lower cost of
/// transport, then lower freq.
inline TopK top_k(std::span<const ScoreBreakdown> table, double speed, std::size_t k = 5) {
    TopK out;
    for (const auto& c : table)
        if (c.speed == speed && !c.fell) out.cells.push_back(c);
    std::sort(out.cells.begin(), out.cells.end(), [](const ScoreBreakdown& a, const ScoreBreakdown& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.cost_of_transport != b.cost_of_transport) return a.cost_of_transport < b.cost_of_transport;
        return a.params.freq < b.params.freq;
    });
    if (out.cells.size() < k) out.short_list = true;
    if (out.cells.size() > k) out.cells.resize(k);
    return out;
}

struct ParamPoint {
    double speed = 0.0;
    GaitParams params;
};

/// Cubic speed -> (freq, ratio) map, coefficients in ascending powers.
struct SpeedParamMap {
    int degree = 3;
    std::array<double, 4> freq_coeffs{};
    std::array<double, 4> ratio_coeffs{};
    double speed_min = 0.0;
    double speed_max = kMaxSpeedCommand;
    double freq_min = kFreqFloor;
    double freq_max = 4.0;
    double ratio_min = kRatioClampLow;
    double ratio_max = kRatioClampHigh;

    static double poly(const std::array<double, 4>& c, double v) {
        return c[0] + v * (c[1] + v * (c[2] + v * c[3]));
    }

    GaitParams raw(double speed) const { return {poly(freq_coeffs, speed), poly(ratio_coeffs, speed)}; }

    /// Clamped evaluation; speeds outside the fitted range use the end value.
    GaitParams at(double speed) const {
        double v = std::clamp(speed, speed_min, speed_max);
        GaitParams p = raw(v);
        p.freq = std::clamp(p.freq, freq_min, freq_max);
        p.ratio = std::clamp(p.ratio, ratio_min, ratio_max);
        return p;
    }

    ParamSchedule schedule() const {
        return [m = *this](double cmd) { return m.at(cmd); };
    }
};

inline double fit_residual(const std::array<double, 4>& coeffs, std::span<const double> x, std::span<const double> y) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = SpeedParamMap::poly(coeffs, x[i]) - y[i];
        r += e * e;
    }
    return r;
}

/// Least-squares cubic through (x, y) via column-pivoting Householder QR.
inline std::array<double, 4> fit_cubic(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_cubic: size mismatch");
    std::set<double> distinct(x.begin(), x.end());
    if (distinct.size() < 4) throw std::invalid_argument("fit_cubic: need at least 4 distinct speeds");
    Eigen::MatrixXd a(x.size(), 4);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double p = 1.0;
        for (int j = 0; j < 4; ++j, p *= x[i]) a(static_cast<Eigen::Index>(i), j) = p;
        b(static_cast<Eigen::Index>(i)) = y[i];
    }
    Eigen::Vector4d c = a.colPivHouseholderQr().solve(b);
    return {c(0), c(1), c(2), c(3)};
}

inline SpeedParamMap fit_map(std::span<const ParamPoint> points, const SweepSpec* bounds = nullptr) {
    std::vector<double> v, f, r;
    for (const auto& p : points) {
        v.push_back(p.speed);
        f.push_back(p.params.freq);
        r.push_back(p.params.ratio);
    }
    SpeedParamMap map;
    map.freq_coeffs = fit_cubic(v, f);
    map.ratio_coeffs = fit_cubic(v, r);
    map.speed_min = *std::min_element(v.begin(), v.end());
    map.speed_max = *std::max_element(v.begin(), v.end());
    if (bounds) {
        double lo = 1e9, hi = 0.0;
        for (double s : bounds->speeds)
            for (int i = 0; i < bounds->freq_points; ++i) {
                double fr = bounds->cell(s, i, 0).freq;
                lo = std::min(lo, fr);
                hi = std::max(hi, fr);
            }
        map.freq_min = lo;
        map.freq_max = hi;
    }
    return map;
}

/// Collects the top-k cells of every speed in the table as fit points.
inline std::vector<ParamPoint> top_points(std::span<const ScoreBreakdown> table, std::size_t k = 5) {
    std::set<double> speeds;
    for (const auto& c : table) speeds.insert(c.speed);
    std::vector<ParamPoint> pts;
    for (double v : speeds)
        for (const auto& c : top_k(table, v, k).cells) pts.push_back({v, c.params});
    return pts;
}

}  // namespace sprint
