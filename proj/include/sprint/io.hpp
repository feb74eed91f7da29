#pragma once

// CSV/JSON emission and parsing for logs, sweep tables, maps, mechanics
// tables and dash results. Floats are written with 9 significant digits.

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sprint/dash.hpp"
#include "sprint/mechanics.hpp"
#include "sprint/optimizer.hpp"

namespace sprint::io {

using nlohmann::json;

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Copy of `j` with every float rounded to 9 significant digits.
inline nlohmann::json round_floats(const nlohmann::json& j) {
    if (j.is_number_float()) return std::strtod(fmt(j.get<double>()).c_str(), nullptr);
    if (j.is_array() || j.is_object()) {
        nlohmann::json out = j;
        for (auto& v : out) v = round_floats(v);
        return out;
    }
    return j;
}

inline std::string dump(const nlohmann::json& j) { return round_floats(j).dump(2) + "\n"; }

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row_(row),
          column_(column) {}
    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, std::size_t row, std::size_t col) {
    if (s.empty()) throw ParseError(row, col, "empty field");
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ParseError(row, col, "not a number: '" + s + "'");
    return v;
}

// --- trajectory logs -------------------------------------------------------

inline const std::vector<std::string>& log_columns() {
    static const std::vector<std::string> cols{
        "t",       "phase",   "com_x",       "com_z",       "vx",        "vz",        "lfoot_x",
        "lfoot_z", "rfoot_x", "rfoot_z",     "grf_l",       "grf_r",     "act_force_l", "act_force_r",
        "legrate_l", "legrate_r", "cmd_speed", "freq",      "ratio"};
    return cols;
}

inline void write_log_csv(std::ostream& os, const TrajectoryLog& log) {
    const auto& cols = log_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& s : log.samples) {
        const double v[] = {s.time,           s.phase,          s.com_pos.x,         s.com_pos.z,
                            s.com_vel.x,      s.com_vel.z,      s.foot_pos[0].x,     s.foot_pos[0].z,
                            s.foot_pos[1].x,  s.foot_pos[1].z,  s.grf_z[0],          s.grf_z[1],
                            s.actuator_force[0], s.actuator_force[1], s.leg_rate[0], s.leg_rate[1],
                            s.cmd_speed,      s.params.freq,    s.params.ratio};
        for (std::size_t i = 0; i < std::size(v); ++i) os << (i ? "," : "") << fmt(v[i]);
        os << '\n';
    }
}

/// Parses a log CSV. Rows are numbered from 1 (the header); columns from 1.
inline TrajectoryLog read_log_csv(std::istream& is) {
    TrajectoryLog log;
    std::string line;
    if (!std::getline(is, line)) throw ParseError(1, 1, "missing header");
    auto header = split_csv_line(line);
    const auto& cols = log_columns();
    if (header.size() != cols.size()) throw ParseError(1, std::min(header.size(), cols.size()) + 1, "wrong column count");
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (header[i] != cols[i]) throw ParseError(1, i + 1, "expected column '" + cols[i] + "'");
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != cols.size()) throw ParseError(row, std::min(f.size(), cols.size()) + 1, "wrong field count");
        double v[19];
        for (std::size_t i = 0; i < cols.size(); ++i) v[i] = parse_double(f[i], row, i + 1);
        SampleRecord s;
        s.time = v[0];
        s.phase = v[1];
        s.com_pos = {v[2], v[3]};
        s.com_vel = {v[4], v[5]};
        s.foot_pos[0] = {v[6], v[7]};
        s.foot_pos[1] = {v[8], v[9]};
        s.grf_z[0] = v[10];
        s.grf_z[1] = v[11];
        s.actuator_force[0] = v[12];
        s.actuator_force[1] = v[13];
        s.leg_rate[0] = v[14];
        s.leg_rate[1] = v[15];
        s.cmd_speed = v[16];
        s.params = {v[17], v[18]};
        log.samples.push_back(s);
    }
    return log;
}

inline json to_json(const ModelParams& m) {
    return {{"mass", m.mass},
            {"rest_length", m.rest_length},
            {"leg_stiffness", m.leg_stiffness},
            {"leg_damping", m.leg_damping},
            {"max_leg_force", m.max_leg_force},
            {"gravity", m.gravity}};
}

inline json log_metadata(const TrajectoryLog& log) {
    json j{{"seed", log.seed},
           {"controller", log.controller},
           {"model", to_json(log.model)},
           {"schedule", {{"start", log.schedule.start}, {"target", log.schedule.target}, {"ramp_time", log.schedule.ramp_time}}},
           {"samples", log.samples.size()},
           {"fell", log.fell}};
    j["fall_time"] = log.fall_time ? json(*log.fall_time) : json(nullptr);
    return j;
}

// --- sweep tables and maps -------------------------------------------------

inline void write_sweep_csv(std::ostream& os, const std::vector<ScoreBreakdown>& table) {
    os << "speed,freq,ratio,score,fell,speed_err,cot,torque,motor_vel,norm_speed_err,norm_cot,norm_torque,"
          "norm_motor_vel\n";
    for (const auto& c : table) {
        os << fmt(c.speed) << ',' << fmt(c.params.freq) << ',' << fmt(c.params.ratio) << ',' << fmt(c.score) << ','
           << (c.fell ? 1 : 0);
        for (double v : c.raw()) os << ',' << fmt(v);
        for (double v : c.normalized) os << ',' << fmt(v);
        os << '\n';
    }
}

inline void write_top_csv(std::ostream& os, const std::vector<ScoreBreakdown>& table, const std::vector<double>& speeds,
                          std::size_t k = 5) {
    os << "speed,rank,freq,ratio,score,cot,speed_err\n";
    for (double v : speeds) {
        auto top = top_k(table, v, k);
        for (std::size_t i = 0; i < top.cells.size(); ++i) {
            const auto& c = top.cells[i];
            os << fmt(v) << ',' << i + 1 << ',' << fmt(c.params.freq) << ',' << fmt(c.params.ratio) << ','
               << fmt(c.score) << ',' << fmt(c.cost_of_transport) << ',' << fmt(c.speed_error) << '\n';
        }
    }
}

inline json to_json(const SpeedParamMap& m) {
    return {{"degree", m.degree},
            {"freq_coeffs", m.freq_coeffs},
            {"ratio_coeffs", m.ratio_coeffs},
            {"speed_range", {m.speed_min, m.speed_max}},
            {"clamps", {{"freq", {m.freq_min, m.freq_max}}, {"ratio", {m.ratio_min, m.ratio_max}}}}};
}

inline SpeedParamMap map_from_json(const json& j) {
    SpeedParamMap m;
    m.degree = j.at("degree").get<int>();
    if (m.degree != 3) throw std::invalid_argument("map: only degree 3 is supported");
    m.freq_coeffs = j.at("freq_coeffs").get<std::array<double, 4>>();
    m.ratio_coeffs = j.at("ratio_coeffs").get<std::array<double, 4>>();
    auto range = j.at("speed_range").get<std::array<double, 2>>();
    m.speed_min = range[0];
    m.speed_max = range[1];
    auto fc = j.at("clamps").at("freq").get<std::array<double, 2>>();
    auto rc = j.at("clamps").at("ratio").get<std::array<double, 2>>();
    m.freq_min = fc[0];
    m.freq_max = fc[1];
    m.ratio_min = rc[0];
    m.ratio_max = rc[1];
    if (!(m.speed_min <= m.speed_max) || !(m.freq_min > 0.0 && m.freq_min <= m.freq_max) ||
        !(m.ratio_min > 0.0 && m.ratio_min <= m.ratio_max && m.ratio_max < 1.0))
        throw std::invalid_argument("map: inconsistent range or clamps");
    return m;
}

// --- mechanics -------------------------------------------------------------

inline void write_mechanics_csv(std::ostream& os, const std::vector<MechanicsRow>& rows) {
    os << "speed,stride_len,stride_freq,swing_t,contact_t,aerial_t,grf_eff,impulse_eff,walking_flag\n";
    for (const auto& r : rows) {
        const auto& m = r.record;
        os << fmt(r.speed) << ',' << fmt(m.stride_length) << ',' << fmt(m.stride_freq) << ',' << fmt(m.swing_time)
           << ',' << fmt(m.contact_time) << ',' << fmt(m.aerial_time) << ',' << fmt(m.grf_eff) << ','
           << fmt(m.effective_impulse) << ',' << (m.walking ? 1 : 0) << '\n';
    }
}

struct OverlayInput {
    std::vector<ReferencePoint> points;
    std::vector<std::string> warnings;
};

/// Reads `speed,metric_name,value`. Unknown metric names are skipped with a warning.
inline OverlayInput read_overlay_csv(std::istream& is) {
    OverlayInput out;
    std::string line;
    if (!std::getline(is, line)) throw ParseError(1, 1, "missing header");
    auto header = split_csv_line(line);
    if (header != std::vector<std::string>{"speed", "metric_name", "value"})
        throw ParseError(1, 1, "expected header speed,metric_name,value");
    const auto& names = mechanics_metric_names();
    std::vector<std::string> unknown;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        if (f.size() != 3) throw ParseError(row, std::min<std::size_t>(f.size(), 3) + 1, "wrong field count");
        ReferencePoint p{parse_double(f[0], row, 1), f[1], parse_double(f[2], row, 3)};
        if (std::find(names.begin(), names.end(), p.metric) == names.end()) {
            if (std::find(unknown.begin(), unknown.end(), p.metric) == unknown.end()) {
                unknown.push_back(p.metric);
                out.warnings.push_back("unknown metric '" + p.metric + "' skipped");
            }
            continue;
        }
        out.points.push_back(p);
    }
    return out;
}

/// Joins reference points to the model table by speed (within 1e-6 m/s).
inline void write_overlay_csv(std::ostream& os, const std::vector<MechanicsRow>& rows,
                              const std::vector<ReferencePoint>& points) {
    os << "speed,metric_name,reference,model\n";
    for (const auto& p : points) {
        os << fmt(p.speed) << ',' << p.metric << ',' << fmt(p.value) << ',';
        for (const auto& r : rows)
            if (std::abs(r.speed - p.speed) < 1e-6) {
                os << fmt(*metric_value(r.record, p.metric));
                break;
            }
        os << '\n';
    }
}

// --- dash ------------------------------------------------------------------

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const PhaseCalibration& c) {
    return {{"start_phase", c.start_phase},
            {"apex_phases", c.apex_phases},
            {"tolerance", c.tolerance},
            {"crossings", c.crossings},
            {"strides", c.strides}};
}

inline json to_json(const DashResult& r) {
    json stages = json::object();
    for (int i = 0; i < 5; ++i) stages[to_string(static_cast<DashStage>(i + 1))] = opt_json(r.stage_start[i]);
    json seq = json::array();
    for (auto s : r.stages) seq.push_back(to_string(s));
    return {{"seed", r.seed},
            {"transition", to_string(r.transition)},
            {"success", r.success()},
            {"official_time", r.finished ? json(r.official_time) : json(nullptr)},
            {"avg_speed", r.finished ? json(r.avg_speed) : json(nullptr)},
            {"timer_start", opt_json(r.timer_start)},
            {"timer_stop", opt_json(r.timer_stop)},
            {"stand_signal_time", opt_json(r.stand_signal_time)},
            {"stand_swap_time", opt_json(r.stand_swap_time)},
            {"start_phase", r.start_phase_used},
            {"stand_swap_phase", opt_json(r.stand_swap_phase)},
            {"stage_start", stages},
            {"stages", seq},
            {"finished", r.finished},
            {"fell", r.fell},
            {"fall_stage", r.fell ? json(to_string(r.fall_stage)) : json(nullptr)},
            {"standing_verified", r.standing_verified}};
}

inline void write_dash_summary_csv(std::ostream& os, const std::vector<DashResult>& results) {
    os << "trial,time_s,avg_speed_mps\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        os << i + 1 << ',' << (r.finished ? fmt(r.official_time) : "") << ','
           << (r.finished ? fmt(r.avg_speed) : "") << '\n';
    }
}

}  // namespace sprint::io
