// sprint: command-line front end for simulation, gait optimisation,
// mechanics analysis and dash trials.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sprint/config.hpp"
#include "sprint/io.hpp"

namespace fs = std::filesystem;
using namespace sprint;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "1,2,3" or "a:b:step" (inclusive of b within half a step).
std::vector<double> parse_speed_list(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<double> p;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ':')) p.push_back(io::parse_double(tok, 1, p.size() + 1));
        if (p.size() != 3 || !(p[2] > 0.0) || p[1] < p[0]) throw UsageError("speed range must be min:max:step");
        int n = static_cast<int>(std::floor((p[1] - p[0]) / p[2] + 0.5));
        for (int i = 0; i <= n; ++i) out.push_back(p[0] + i * p[2]);
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(io::parse_double(tok, 1, out.size() + 1));
    return out;
}

std::array<double, 4> parse_weights(const std::string& text) {
    std::vector<double> w;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) w.push_back(io::parse_double(tok, 1, w.size() + 1));
    if (w.size() != 4) throw UsageError("--weights takes four comma-separated values");
    return {w[0], w[1], w[2], w[3]};
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

template <class F>
std::string render(F&& f) {
    std::ostringstream os;
    f(os);
    return os.str();
}

ParamSchedule schedule_from(const ExperimentConfig& cfg) {
    if (cfg.map_path.empty()) {
        BaselineMap b = cfg.sweep.baseline;
        return [b](double v) { return b.at(v); };
    }
    std::ifstream in(cfg.map_path);
    if (!in) throw std::runtime_error("cannot open map '" + cfg.map_path + "'");
    return io::map_from_json(nlohmann::json::parse(in)).schedule();
}

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

ExperimentConfig resolve(const Globals& g) {
    ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (g.out) cfg.out_dir = *g.out;
    if (g.threads) cfg.threads = *g.threads;
    cfg.sweep.seed = cfg.seed;
    cfg.dash.seed = cfg.seed;
    return cfg;
}

fs::path prepare_out(const ExperimentConfig& cfg) {
    fs::path out(cfg.out_dir);
    fs::create_directories(out);
    return out;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
    double speed = 0.0;
    std::optional<double> freq;
    std::optional<double> ratio;
    double duration = 10.0;
    std::string controller = "running";
    std::string name = "trajectory";
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
    if (a.speed < kMinSpeedCommand || a.speed > kMaxSpeedCommand)
        throw UsageError("--speed must be within the trained band [-0.2, 5] m/s");
    if (!(a.duration >= 0.0)) throw UsageError("--duration must be >= 0");
    ExperimentConfig cfg = resolve(g);
    TrajectoryLog log;
    if (a.controller == "standing") {
        StandingController c(cfg.model, cfg.gains);
        InitialCondition ic;
        ic.com_height = cfg.gains.stand_height;
        ic.stance_width = 0.3;
        log = rollout(c, a.duration, cfg.seed, cfg.model, ic);
    } else {
        GaitParams p = schedule_from(cfg)(a.speed);
        if (a.freq) p.freq = *a.freq;
        if (a.ratio) p.ratio = *a.ratio;
        if (!p.valid()) throw UsageError("gait params must satisfy freq > 0 and 0 < ratio < 1");
        RunningController c(cfg.model, cfg.gains, fixed_params(p));
        CommandSchedule sched{0.0, a.speed, std::abs(a.speed) / kCommandAccel};
        log = rollout(c, sched, a.duration, cfg.seed, cfg.model);
    }
    fs::path out = prepare_out(cfg);
    write_file(out / (a.name + ".csv"), render([&](std::ostream& os) { io::write_log_csv(os, log); }));
    write_file(out / (a.name + ".json"), io::dump(io::log_metadata(log)));
    std::cout << "wrote " << log.samples.size() << " samples to " << (out / (a.name + ".csv")).string()
              << (log.fell ? " (fell)" : "") << '\n';
    return 0;
}

// --- optimize ----------------------------------------------------------------

struct OptimizeArgs {
    std::optional<std::string> speeds;
    std::optional<std::string> weights;
    std::optional<int> grid;
};

int cmd_optimize(const Globals& g, const OptimizeArgs& a) {
    ExperimentConfig cfg = resolve(g);
    if (a.speeds) {
        cfg.sweep.speeds = parse_speed_list(*a.speeds);
        if (cfg.sweep.speeds.empty()) throw UsageError("--speeds is empty");
    }
    if (a.weights) cfg.sweep.weights = parse_weights(*a.weights);
    if (a.grid) {
        if (*a.grid < 1) throw UsageError("--grid must be >= 1");
        cfg.sweep.freq_points = cfg.sweep.ratio_points = *a.grid;
    }
    if (cfg.sweep.speeds.empty()) throw UsageError("speed list is empty");
    try {
        cfg.sweep.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    SweepOptions opt;
    opt.threads = cfg.threads;
    opt.model = cfg.model;
    opt.gains = cfg.gains;
    auto table = sweep(cfg.sweep, opt);

    std::size_t alive = 0;
    for (const auto& c : table) alive += c.fell ? 0 : 1;
    if (alive == 0) {
        std::cerr << "error: every grid cell fell; nothing to select or fit\n";
        return kExitRuntime;
    }
    fs::path out = prepare_out(cfg);
    write_file(out / "sweep.csv", render([&](std::ostream& os) { io::write_sweep_csv(os, table); }));
    write_file(out / "top5.csv",
               render([&](std::ostream& os) { io::write_top_csv(os, table, cfg.sweep.speeds); }));
    for (double v : cfg.sweep.speeds) {
        auto top = top_k(table, v);
        if (top.short_list)
            std::cerr << "warning: only " << top.cells.size() << " non-fallen cells at " << io::fmt(v) << " m/s\n";
    }
    auto points = top_points(table);
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.speed);
    if (distinct.size() < 4) {
        std::cerr << "error: the map fit needs at least 4 speeds with surviving cells (have " << distinct.size()
                  << ")\n";
        return kExitRuntime;
    }
    SpeedParamMap map = fit_map(points, &cfg.sweep);
    write_file(out / "map.json", io::dump(io::to_json(map)));
    std::cout << "cells " << table.size() << ", fell " << table.size() - alive << "; wrote sweep.csv, top5.csv, map.json to "
              << out.string() << '\n';
    return 0;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
    std::vector<std::string> logs;
    std::optional<std::string> speeds;
    std::optional<std::string> top;
    std::optional<std::string> overlay;
};

ModelParams model_from_sidecar(const fs::path& csv, const ModelParams& fallback) {
    fs::path meta = csv;
    meta.replace_extension(".json");
    std::ifstream in(meta);
    if (!in) return fallback;
    auto j = nlohmann::json::parse(in);
    if (!j.contains("model")) return fallback;
    ModelParams m = fallback;
    const auto& jm = j.at("model");
    m.mass = jm.value("mass", m.mass);
    m.rest_length = jm.value("rest_length", m.rest_length);
    m.leg_stiffness = jm.value("leg_stiffness", m.leg_stiffness);
    m.leg_damping = jm.value("leg_damping", m.leg_damping);
    m.max_leg_force = jm.value("max_leg_force", m.max_leg_force);
    m.gravity = jm.value("gravity", m.gravity);
    return m;
}

/// Top-5 CSV as written by `optimize`: speed,rank,freq,ratio,...
std::map<double, std::vector<GaitParams>> read_top_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    auto header = io::split_csv_line(line);
    if (header.size() < 4 || header[0] != "speed" || header[2] != "freq" || header[3] != "ratio")
        throw io::ParseError(1, 1, "expected a top5.csv header");
    std::map<double, std::vector<GaitParams>> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = io::split_csv_line(line);
        if (f.size() != header.size()) throw io::ParseError(row, 1, "wrong field count");
        out[io::parse_double(f[0], row, 1)].push_back({io::parse_double(f[2], row, 3), io::parse_double(f[3], row, 4)});
    }
    return out;
}

int cmd_analyze(const Globals& g, const AnalyzeArgs& a) {
    ExperimentConfig cfg = resolve(g);
    std::vector<MechanicsRow> rows;
    if (!a.logs.empty()) {
        for (const auto& path : a.logs) {
            std::ifstream in(path);
            if (!in) throw std::runtime_error("cannot open log '" + path + "'");
            TrajectoryLog log;
            try {
                log = io::read_log_csv(in);
            } catch (const io::ParseError& e) {
                throw std::runtime_error(path + ": " + e.what());
            }
            log.model = model_from_sidecar(path, cfg.model);
            double thr = contact_threshold(log.model);
            auto events = segment_contacts(log, thr);
            auto strides = stride_metrics(events, log.samples, BodyConstants::of(log.model), thr);
            MechanicsRow row;
            row.runs = 1;
            row.strides = static_cast<int>(strides.size());
            row.record = average_records(strides);
            row.speed = log.samples.empty() ? 0.0 : log.samples.back().cmd_speed;
            if (row.speed < kRunningSpeedThreshold) row.record.walking = true;
            if (row.record.walking) row.record.aerial_time = 0.0;
            if (strides.empty()) std::cerr << "warning: " << path << ": no complete strides\n";
            rows.push_back(row);
        }
    } else {
        std::map<double, std::vector<GaitParams>> sets;
        if (a.top) {
            sets = read_top_csv(*a.top);
            if (a.speeds) {
                auto keep = parse_speed_list(*a.speeds);
                std::erase_if(sets, [&](const auto& kv) {
                    return std::none_of(keep.begin(), keep.end(), [&](double v) { return std::abs(v - kv.first) < 1e-9; });
                });
            }
        } else {
            if (!a.speeds) throw UsageError("analyze needs --log files, or --speeds with a map or --top table");
            auto speeds = parse_speed_list(*a.speeds);
            if (speeds.empty()) throw UsageError("--speeds is empty");
            ParamSchedule sched = schedule_from(cfg);
            for (double v : speeds) {
                if (v < 0.0 || v > kMaxSpeedCommand) throw UsageError("speeds must be within [0, 5] m/s");
                sets[v].push_back(sched(v));
            }
        }
        rows = mechanics_sweep(sets, cfg.model, cfg.gains, cfg.seed);
        for (const auto& r : rows)
            if (r.fallen) std::cerr << "warning: " << r.fallen << " of " << r.runs << " rollouts fell at " << io::fmt(r.speed) << " m/s\n";
    }
    fs::path out = prepare_out(cfg);
    write_file(out / "mechanics.csv", render([&](std::ostream& os) { io::write_mechanics_csv(os, rows); }));
    if (a.overlay) {
        std::ifstream in(*a.overlay);
        if (!in) throw std::runtime_error("cannot open overlay '" + *a.overlay + "'");
        auto ov = io::read_overlay_csv(in);
        for (const auto& w : ov.warnings) std::cerr << "warning: " << w << '\n';
        write_file(out / "overlay.csv", render([&](std::ostream& os) { io::write_overlay_csv(os, rows, ov.points); }));
    }
    std::cout << "wrote " << rows.size() << " mechanics rows to " << (out / "mechanics.csv").string() << '\n';
    return 0;
}

// --- dash --------------------------------------------------------------------

struct DashArgs {
    std::optional<double> speed;
    int trials = 1;
    std::string ablate = "none";
    bool logs = false;
};

int cmd_dash(const Globals& g, const DashArgs& a) {
    if (a.trials < 1) throw UsageError("--trials must be >= 1");
    ExperimentConfig cfg = resolve(g);
    if (a.speed) cfg.dash.cruise_speed = *a.speed;
    if (a.ablate != "none") {
        auto t = parse_transition(a.ablate);
        if (!t || *t == StandTransition::Calibrated)
            throw UsageError("--ablate must be one of immediate-swap, apex-only, no-apex-wait");
        cfg.dash.transition = *t;
    }
    try {
        cfg.dash.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    ParamSchedule sched = schedule_from(cfg);
    PhaseCalibration cal;
    try {
        cal = calibrate(cfg.model, cfg.gains, sched, cfg.seed);
    } catch (const CalibrationError& e) {
        std::cerr << "error: calibration failed: " << e.what() << '\n';
        return kExitRuntime;
    }
    auto runs = run_dash_trials(cfg.dash, cal, cfg.model, cfg.gains, sched, a.trials, cfg.threads, a.logs);
    fs::path out = prepare_out(cfg);
    write_file(out / "calibration.json", io::dump(io::to_json(cal)));
    std::vector<DashResult> results;
    int ok = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        results.push_back(runs[i].result);
        ok += runs[i].result.success() ? 1 : 0;
        std::string stem = "dash_trial_" + std::to_string(i + 1);
        write_file(out / (stem + ".json"), io::dump(io::to_json(runs[i].result)));
        if (a.logs)
            write_file(out / (stem + ".csv"), render([&](std::ostream& os) { io::write_log_csv(os, runs[i].log); }));
    }
    std::string summary = render([&](std::ostream& os) { io::write_dash_summary_csv(os, results); });
    write_file(out / "dash_summary.csv", summary);
    std::cout << summary << "success " << ok << "/" << runs.size() << " (" << to_string(cfg.dash.transition) << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reduced-order biped running: simulation, gait optimisation, mechanics and 100 m dash."};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for rollouts and trials");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--threads", g.threads, "Worker threads (0: all cores)");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Roll out one controller and write its trajectory log");
    sim->add_option("--speed", sa.speed, "Speed command [m/s]");
    sim->add_option("--freq", sa.freq, "Stride frequency [Hz] (default: from map or baseline)");
    sim->add_option("--ratio", sa.ratio, "Swing ratio (default: from map or baseline)");
    sim->add_option("--duration", sa.duration, "Duration [s]");
    sim->add_option("--controller", sa.controller, "running or standing")->check(CLI::IsMember({"running", "standing"}));
    sim->add_option("--name", sa.name, "Output file stem");

    OptimizeArgs oa;
    auto* opt = app.add_subcommand("optimize", "Grid sweep, top-5 selection and cubic speed map");
    opt->add_option("--speeds", oa.speeds, "Speeds: comma list or min:max:step");
    opt->add_option("--weights", oa.weights, "Cost weights: speed,cot,torque,motor_vel");
    opt->add_option("--grid", oa.grid, "Grid points per axis");

    AnalyzeArgs aa;
    auto* ana = app.add_subcommand("analyze", "Mechanics table from logs, a map or a top-5 table");
    ana->add_option("--log", aa.logs, "Trajectory log CSV (repeatable)");
    ana->add_option("--speeds", aa.speeds, "Speeds: comma list or min:max:step");
    ana->add_option("--top", aa.top, "top5.csv from optimize");
    ana->add_option("--overlay", aa.overlay, "Reference CSV: speed,metric_name,value");

    DashArgs da;
    auto* dash = app.add_subcommand("dash", "Calibrate once, then run seeded 100 m dashes");
    dash->add_option("--speed", da.speed, "Cruise speed command [m/s]");
    dash->add_option("--trials", da.trials, "Number of seeded trials");
    dash->add_option("--ablate", da.ablate, "Transition variant: immediate-swap, apex-only, no-apex-wait");
    dash->add_flag("--logs", da.logs, "Also write each trial's trajectory log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    try {
        if (*sim) return cmd_simulate(g, sa);
        if (*opt) return cmd_optimize(g, oa);
        if (*ana) return cmd_analyze(g, aa);
        if (*dash) return cmd_dash(g, da);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
