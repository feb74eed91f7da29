#pragma once

// Running mechanics from trajectory logs: contact segmentation, stride
// metrics, effective ground reaction force and impulse.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sprint/model.hpp"
#include "sprint/protocol.hpp"

namespace sprint {

inline constexpr double kRunningSpeedThreshold = 2.0;  // m/s
inline constexpr double kContactThresholdFraction = 0.01;  // of body weight

struct BodyConstants {
    double weight = 0.0;  // N

    static BodyConstants of(const ModelParams& m) { return {m.weight()}; }
};

struct ContactEvent {
    int foot = kLeft;
    double touchdown_time = 0.0;
    double liftoff_time = 0.0;
    double mean_grf = 0.0;
    std::size_t first = 0;  // sample index range [first, last)
    std::size_t last = 0;
    bool truncated = false;  // touches the start or end of the log

    double duration() const { return liftoff_time - touchdown_time; }
};

struct MechanicsRecord {
    double speed = 0.0;
    double stride_length = 0.0;
    double stride_freq = 0.0;
    double swing_time = 0.0;
    double contact_time = 0.0;
    double aerial_time = 0.0;  // per aerial phase
    double grf_eff = 0.0;      // body weights
    double effective_impulse = 0.0;
    bool walking = false;
    // per-stride bookkeeping
    int foot = kLeft;
    double start_time = 0.0;
    double stride_period = 0.0;
    double vertical_impulse = 0.0;  // both feet, over the stride [N s]
    int aerial_phases = 0;
};

inline double grf_effective(double mean_grf, const BodyConstants& body) {
    if (!(body.weight > 0.0)) throw std::invalid_argument("grf_effective: body weight must be > 0");
    if (mean_grf < 0.0) throw std::invalid_argument("grf_effective: mean GRF must be >= 0");
    return (mean_grf - body.weight) / body.weight;
}

inline double contact_threshold(const ModelParams& m) { return kContactThresholdFraction * m.weight(); }

/// Per-foot maximal runs of samples with vertical GRF above `threshold`.
/// Runs shorter than two policy steps are dropped as chatter. Events are
/// ordered by touchdown time.
inline std::vector<ContactEvent> segment_contacts(std::span<const SampleRecord> samples, double threshold,
                                                  double period = ModelParams::policy_dt) {
    std::vector<ContactEvent> events;
    const std::size_t n = samples.size();
    for (int foot = 0; foot < 2; ++foot) {
        std::size_t k = 0;
        while (k < n) {
            if (samples[k].grf_z[foot] <= threshold) {
                ++k;
                continue;
            }
            std::size_t start = k;
            double sum = 0.0;
            while (k < n && samples[k].grf_z[foot] > threshold) sum += samples[k++].grf_z[foot];
            std::size_t len = k - start;
            if (len < 2) continue;
            ContactEvent e;
            e.foot = foot;
            e.first = start;
            e.last = k;
            // sample k covers the policy period ending at its timestamp
            e.touchdown_time = samples[start].time - period;
            e.liftoff_time = samples[k - 1].time;
            e.mean_grf = sum / static_cast<double>(len);
            e.truncated = start == 0 || k == n;
            events.push_back(e);
        }
    }
    std::sort(events.begin(), events.end(), [](const ContactEvent& a, const ContactEvent& b) {
        return a.touchdown_time < b.touchdown_time || (a.touchdown_time == b.touchdown_time && a.foot < b.foot);
    });
    return events;
}

inline std::vector<ContactEvent> segment_contacts(const TrajectoryLog& log, double threshold) {
    return segment_contacts(std::span<const SampleRecord>(log.samples), threshold);
}

/// One record per stride: same-foot touchdown to the next same-foot touchdown.
inline std::vector<MechanicsRecord> stride_metrics(const std::vector<ContactEvent>& events,
                                                   std::span<const SampleRecord> samples, const BodyConstants& body,
                                                   double threshold, double period = ModelParams::policy_dt) {
    std::vector<MechanicsRecord> out;
    for (int foot = 0; foot < 2; ++foot) {
        std::vector<const ContactEvent*> mine;
        for (const auto& e : events)
            if (e.foot == foot && e.first > 0) mine.push_back(&e);  // need a real touchdown
        for (std::size_t j = 0; j + 1 < mine.size(); ++j) {
            const ContactEvent& a = *mine[j];
            const ContactEvent& b = *mine[j + 1];
            if (a.truncated && a.last == samples.size()) continue;
            MechanicsRecord r;
            r.foot = foot;
            r.start_time = a.touchdown_time;
            r.stride_period = b.touchdown_time - a.touchdown_time;
            r.stride_freq = 1.0 / r.stride_period;
            r.stride_length = samples[b.first].com_pos.x - samples[a.first].com_pos.x;
            r.speed = r.stride_length / r.stride_period;
            r.contact_time = a.duration();
            r.swing_time = r.stride_period - r.contact_time;

            int aerial_samples = 0;
            bool double_support = false;
            bool in_aerial = false;
            for (std::size_t k = a.first; k < b.first; ++k) {
                bool l = samples[k].grf_z[kLeft] > threshold;
                bool rr = samples[k].grf_z[kRight] > threshold;
                r.vertical_impulse += (samples[k].grf_z[kLeft] + samples[k].grf_z[kRight]) * period;
                if (l && rr) double_support = true;
                bool aerial = !l && !rr;
                if (aerial) {
                    ++aerial_samples;
                    if (!in_aerial) ++r.aerial_phases;
                }
                in_aerial = aerial;
            }
            r.aerial_time = r.aerial_phases > 0 ? aerial_samples * period / r.aerial_phases : 0.0;
            r.walking = r.aerial_phases == 0 || double_support;
            if (r.walking) r.aerial_time = 0.0;
            r.grf_eff = grf_effective(a.mean_grf, body);
            r.effective_impulse = r.grf_eff * r.contact_time;
            out.push_back(r);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const MechanicsRecord& x, const MechanicsRecord& y) { return x.start_time < y.start_time; });
    return out;
}

/// Field-wise mean of a set of stride records.
inline MechanicsRecord average_records(std::span<const MechanicsRecord> recs) {
    MechanicsRecord m;
    if (recs.empty()) return m;
    double n = static_cast<double>(recs.size());
    int walking = 0;
    for (const auto& r : recs) {
        m.speed += r.speed / n;
        m.stride_length += r.stride_length / n;
        m.stride_freq += r.stride_freq / n;
        m.swing_time += r.swing_time / n;
        m.contact_time += r.contact_time / n;
        m.aerial_time += r.aerial_time / n;
        m.grf_eff += r.grf_eff / n;
        m.stride_period += r.stride_period / n;
        m.vertical_impulse += r.vertical_impulse / n;
        walking += r.walking ? 1 : 0;
    }
    m.walking = 2 * walking > static_cast<int>(recs.size());
    // keep the identity exact on the averaged record
    m.effective_impulse = m.grf_eff * m.contact_time;
    m.start_time = recs.front().start_time;
    return m;
}

/// Stride records of the strides lying entirely inside the last `window` samples.
inline std::vector<MechanicsRecord> window_strides(const TrajectoryLog& log, std::size_t window) {
    std::vector<MechanicsRecord> out;
    if (log.samples.size() < 2) return out;
    double thr = contact_threshold(log.model);
    auto events = segment_contacts(log, thr);
    auto strides = stride_metrics(events, log.samples, BodyConstants::of(log.model), thr);
    std::size_t n = log.samples.size();
    double t0 = n > window ? log.samples[n - window - 1].time : 0.0;
    for (const auto& s : strides)
        if (s.start_time >= t0 - 1e-12) out.push_back(s);
    return out;
}

struct MechanicsRow {
    double speed = 0.0;  // commanded
    MechanicsRecord record;
    int runs = 0;
    int fallen = 0;
    int strides = 0;
};

/// Rolls out every parameter set at each speed, averages stride records of
/// the collection window per speed. Fallen rollouts are excluded and counted.
inline std::vector<MechanicsRow> mechanics_sweep(const std::map<double, std::vector<GaitParams>>& params_by_speed,
                                                 const ModelParams& model, const ControllerGains& gains,
                                                 std::uint64_t seed, const InitialCondition& init = {}) {
    std::vector<MechanicsRow> rows;
    for (const auto& [speed, sets] : params_by_speed) {
        MechanicsRow row;
        row.speed = speed;
        std::vector<MechanicsRecord> per_run;
        for (const auto& p : sets) {
            ++row.runs;
            ProtocolRun run = protocol_rollout(model, gains, p, speed, seed, init);
            if (run.fell()) {
                ++row.fallen;
                continue;
            }
            auto strides = window_strides(run.log, kCollectSteps);
            if (strides.empty()) continue;
            row.strides += static_cast<int>(strides.size());
            per_run.push_back(average_records(strides));
        }
        row.record = average_records(per_run);
        row.record.speed = per_run.empty() ? 0.0 : row.record.speed;
        if (speed < kRunningSpeedThreshold) row.record.walking = true;
        if (row.record.walking) row.record.aerial_time = 0.0;
        rows.push_back(row);
    }
    return rows;
}

/// Overlay of user-supplied reference data, joined to the mechanics table by speed.
struct ReferencePoint {
    double speed = 0.0;
    std::string metric;
    double value = 0.0;
};

inline const std::vector<std::string>& mechanics_metric_names() {
    static const std::vector<std::string> names{"stride_len", "stride_freq", "swing_t", "contact_t",
                                                "aerial_t",   "grf_eff",     "impulse_eff"};
    return names;
}

inline std::optional<double> metric_value(const MechanicsRecord& r, const std::string& name) {
    if (name == "stride_len") return r.stride_length;
    if (name == "stride_freq") return r.stride_freq;
    if (name == "swing_t") return r.swing_time;
    if (name == "contact_t") return r.contact_time;
    if (name == "aerial_t") return r.aerial_time;
    if (name == "grf_eff") return r.grf_eff;
    if (name == "impulse_eff") return r.effective_impulse;
    return std::nullopt;
}

}  // namespace sprint
