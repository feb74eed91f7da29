#pragma once

// Experiment configuration: one JSON document, unknown keys rejected.

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "sprint/dash.hpp"
#include "sprint/optimizer.hpp"

namespace sprint {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    ModelParams model;
    ControllerGains gains;
    SweepSpec sweep;
    DashConfig dash;
    std::string map_path;  // fitted map JSON for analyze/dash; empty: baseline map
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    unsigned threads = 0;

    void validate() const {
        try {
            model.validate();
            gains.validate();
            sweep.validate();
            dash.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
};

namespace detail {

class ObjectReader {
public:
    ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <class T>
    void field(const std::string& key, T& dst) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        try {
            dst = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path_ + "." + key + ": " + e.what());
        }
    }

    const nlohmann::json* child(const std::string& key) {
        known_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!known_.count(item.key())) throw ConfigError(path_ + "." + item.key() + ": unknown key");
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> known_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig c;
    detail::ObjectReader top(j, "config");
    top.field("seed", c.seed);
    top.field("out", c.out_dir);
    top.field("threads", c.threads);
    top.field("map", c.map_path);
    if (auto m = top.child("model")) {
        detail::ObjectReader r(*m, "config.model");
        r.field("mass", c.model.mass);
        r.field("rest_length", c.model.rest_length);
        r.field("leg_stiffness", c.model.leg_stiffness);
        r.field("leg_damping", c.model.leg_damping);
        r.field("max_leg_force", c.model.max_leg_force);
        r.field("gravity", c.model.gravity);
        r.finish();
    }
    if (auto g = top.child("gains")) {
        detail::ObjectReader r(*g, "config.gains");
        r.field("placement_gain", c.gains.placement_gain);
        r.field("placement_integral_gain", c.gains.placement_integral_gain);
        r.field("max_placement_offset", c.gains.max_placement_offset);
        r.field("apex_gain", c.gains.apex_gain);
        r.field("swing_clearance", c.gains.swing_clearance);
        r.field("stand_kp_x", c.gains.stand_kp_x);
        r.field("stand_kd_x", c.gains.stand_kd_x);
        r.field("stand_kp_z", c.gains.stand_kp_z);
        r.field("stand_kd_z", c.gains.stand_kd_z);
        r.field("stand_height", c.gains.stand_height);
        r.field("stand_margin", c.gains.stand_margin);
        r.finish();
    }
    if (auto s = top.child("sweep")) {
        detail::ObjectReader r(*s, "config.sweep");
        r.field("speeds", c.sweep.speeds);
        r.field("ratio_offset", c.sweep.ratio_offset);
        r.field("freq_offset", c.sweep.freq_offset);
        r.field("freq_points", c.sweep.freq_points);
        r.field("ratio_points", c.sweep.ratio_points);
        r.field("weights", c.sweep.weights);
        if (auto b = r.child("baseline")) {
            detail::ObjectReader rb(*b, "config.sweep.baseline");
            rb.field("speeds", c.sweep.baseline.speeds);
            rb.field("freqs", c.sweep.baseline.freqs);
            rb.field("ratios", c.sweep.baseline.ratios);
            rb.finish();
        }
        r.finish();
    }
    if (auto d = top.child("dash")) {
        detail::ObjectReader r(*d, "config.dash");
        r.field("course_length", c.dash.course_length);
        r.field("cruise_speed", c.dash.cruise_speed);
        r.field("stop_command", c.dash.stop_command);
        r.field("start_signal_time", c.dash.start_signal_time);
        r.field("accel_ramp", c.dash.accel_ramp);
        r.field("decel_ramp", c.dash.decel_ramp);
        r.field("stand_signal_distance", c.dash.stand_signal_distance);
        r.field("stand_signal_delay", c.dash.stand_signal_delay);
        r.field("signal_jitter", c.dash.signal_jitter);
        r.field("stand_verify_time", c.dash.stand_verify_time);
        r.field("stand_speed_threshold", c.dash.stand_speed_threshold);
        r.field("stand_timeout", c.dash.stand_timeout);
        r.field("max_duration", c.dash.max_duration);
        r.finish();
    }
    top.finish();
    c.sweep.seed = c.seed;
    c.dash.seed = c.seed;
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace sprint
