#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sprint/dash.hpp"

using namespace sprint;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// One gait cycle per second sampled at 40 Hz: sample phase (k + 0.5)/40.
std::vector<SampleRecord> synthetic(int cycles, auto&& fill) {
    std::vector<SampleRecord> out;
    for (int k = 0; k < 40 * cycles; ++k) {
        SampleRecord s;
        s.time = (k + 1) * ModelParams::policy_dt;
        s.phase = Phase::wrap((k + 0.5) / 40.0);
        fill(s);
        out.push_back(s);
    }
    return out;
}

ParamSchedule baseline_schedule() {
    return [b = BaselineMap{}](double v) { return b.at(v); };
}

const PhaseCalibration& baseline_calibration() {
    static const PhaseCalibration cal = calibrate(ModelParams{}, {}, baseline_schedule(), 0);
    return cal;
}

DashResult dash(double cruise, StandTransition t = StandTransition::Calibrated, std::uint64_t seed = 0) {
    DashConfig cfg;
    cfg.cruise_speed = cruise;
    cfg.transition = t;
    cfg.seed = seed;
    return run_dash(cfg, baseline_calibration(), ModelParams{}, {}, baseline_schedule()).result;
}

int successes(StandTransition t, int trials = 20) {
    DashConfig cfg;
    cfg.transition = t;
    int ok = 0;
    for (const auto& r : run_dash_trials(cfg, baseline_calibration(), ModelParams{}, {}, baseline_schedule(), trials))
        ok += r.result.success() ? 1 : 0;
    return ok;
}

}  // namespace

TEST(Circular, DiffAndDistance) {
    EXPECT_NEAR(circular_diff(0.95, 0.05), 0.1, 1e-12);
    EXPECT_NEAR(circular_diff(0.05, 0.95), -0.1, 1e-12);
    EXPECT_NEAR(circular_distance(0.2, 0.7), 0.5, 1e-12);
}

TEST(Circular, MedianAcrossWrap) {
    std::vector<double> p{0.98, 0.99, 0.01, 0.02, 0.03};
    EXPECT_NEAR(circular_median(p), 0.01, 1e-12);
    EXPECT_THROW(circular_median(std::vector<double>{}), std::invalid_argument);
}

TEST(Crossings, SineDifferenceCrossesTwicePerCycle) {
    auto s = synthetic(5, [](SampleRecord& r) {
        double d = 500.0 * std::sin(kTwoPi * r.phase);
        r.grf_z[kLeft] = std::max(0.0, d);
        r.grf_z[kRight] = std::max(0.0, -d);
    });
    auto c = find_grf_crossings(s);
    ASSERT_EQ(c.size(), 9u);
    for (double p : c)
        EXPECT_LT(std::min(circular_distance(p, 0.0), circular_distance(p, 0.5)), 1.0 / 40.0) << p;
}

TEST(Crossings, ConstantOrEqualForcesHaveNone) {
    auto flat = synthetic(2, [](SampleRecord& r) { r.grf_z = {300.0, 100.0}; });
    EXPECT_TRUE(find_grf_crossings(flat).empty());
    auto equal = synthetic(2, [](SampleRecord& r) { r.grf_z = {200.0, 200.0}; });
    EXPECT_TRUE(find_grf_crossings(equal).empty());
}

TEST(Crossings, ZeroDifferenceDoesNotEndARun) {
    std::vector<SampleRecord> s(4);
    s[0].grf_z = {10.0, 0.0};
    s[1].grf_z = {0.0, 0.0};
    s[2].grf_z = {0.0, 0.0};
    s[3].grf_z = {0.0, 10.0};
    for (int k = 0; k < 4; ++k) s[k].phase = 0.1 * k;
    auto c = find_grf_crossings(s);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_NEAR(c[0], 0.3, 1e-12);
}

TEST(StartPhase, MedianOfModeNearestZero) {
    std::vector<double> c{0.09, 0.10, 0.11, 0.59, 0.60, 0.61};
    EXPECT_NEAR(start_phase_from_crossings(c), 0.10, 1e-12);
    auto groups = cluster_two_modes(c);
    EXPECT_EQ(groups[0].size(), 3u);
    EXPECT_EQ(groups[1].size(), 3u);
}

TEST(StartPhase, TooFewCrossings) {
    std::vector<double> c{0.1, 0.6, 0.1};
    EXPECT_THROW(start_phase_from_crossings(c), CalibrationError);
}

TEST(ApexPhases, AnalyticMaximum) {
    auto s = synthetic(4, [](SampleRecord& r) {
        r.foot_pos[kLeft].z = std::max(0.0, std::sin(kTwoPi * r.phase));
        r.foot_pos[kRight].z = std::max(0.0, std::sin(kTwoPi * (r.phase + 0.5)));
    });
    auto a = find_apex_phases(s);
    EXPECT_NEAR(circular_distance(a[kLeft], 0.25), 0.0, 1.0 / 80.0 + 1e-12);
    EXPECT_NEAR(circular_distance(a[kLeft], a[kRight]), 0.5, 1.0 / 40.0);
}

TEST(ApexPhases, FlatFootIsAnError) {
    auto s = synthetic(2, [](SampleRecord& r) { r.foot_pos[kLeft].z = std::sin(kTwoPi * r.phase); });
    EXPECT_THROW(find_apex_phases(s), CalibrationError);
}

TEST(Calibration, DeterministicWithTwoCrossingsPerStride) {
    PhaseCalibration a = calibrate(ModelParams{}, {}, baseline_schedule(), 3);
    PhaseCalibration b = calibrate(ModelParams{}, {}, baseline_schedule(), 3);
    EXPECT_EQ(a.start_phase, b.start_phase);
    EXPECT_EQ(a.apex_phases, b.apex_phases);
    EXPECT_NEAR(static_cast<double>(a.crossings) / a.strides, 2.0, 0.2);
    EXPECT_NEAR(circular_distance(a.apex_phases[0], a.apex_phases[1]), 0.5, 0.05);
    EXPECT_NEAR(a.tolerance, 1.5 * ModelParams::policy_dt * BaselineMap{}.at(0.0).freq, 1e-15);
}

TEST(DashConfig, Validation) {
    DashConfig c;
    EXPECT_NO_THROW(c.validate());
    c.cruise_speed = 6.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.stop_command = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.transition = StandTransition::ApexOnly;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.effective_stop_command(), 0.0);
    c = {};
    c.stop_command = -0.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(DashConfig, TransitionNamesRoundTrip) {
    for (auto t : {StandTransition::Calibrated, StandTransition::ApexOnly, StandTransition::NoApexWait,
                   StandTransition::ImmediateSwap})
        EXPECT_EQ(parse_transition(to_string(t)), t);
    EXPECT_FALSE(parse_transition("sideways").has_value());
}

TEST(Dash, StagesRunInOrderAndTimerIsExact) {
    DashConfig cfg;
    const auto& cal = baseline_calibration();
    DashRun run = run_dash(cfg, cal, ModelParams{}, {}, baseline_schedule());
    const DashResult& r = run.result;
    ASSERT_TRUE(r.success());
    ASSERT_EQ(r.stages.size(), 5u);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(static_cast<int>(r.stages[i]), i + 1);
    EXPECT_DOUBLE_EQ(*r.timer_start, cfg.start_signal_time);
    EXPECT_DOUBLE_EQ(r.official_time, *r.timer_stop - *r.timer_start);
    EXPECT_NEAR(r.avg_speed * r.official_time, cfg.course_length, 1e-9);
    // the step that starts the run begins at the calibrated phase
    const SampleRecord& first = run.log.samples[static_cast<std::size_t>(cfg.start_signal_time * kPolicyRate)];
    EXPECT_NEAR(circular_diff(cal.start_phase, first.phase), first.params.freq * ModelParams::policy_dt, 1e-9);
    EXPECT_EQ(r.start_phase_used, cal.start_phase);
}

TEST(Dash, SwapWaitsForAnApexPhase) {
    const auto& cal = baseline_calibration();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        DashResult r = dash(4.0, StandTransition::Calibrated, seed);
        ASSERT_TRUE(r.stand_swap_phase.has_value());
        double d = std::min(circular_distance(*r.stand_swap_phase, cal.apex_phases[0]),
                            circular_distance(*r.stand_swap_phase, cal.apex_phases[1]));
        EXPECT_LE(d, cal.tolerance + 1e-12);
        EXPECT_GE(*r.stand_swap_time, *r.stand_signal_time);
    }
}

TEST(Dash, ImmediateSwapIgnoresPhase) {
    DashResult r = dash(4.0, StandTransition::ImmediateSwap, 2);
    ASSERT_TRUE(r.stand_swap_time.has_value());
    EXPECT_EQ(*r.stand_swap_time, *r.stand_signal_time);
}

TEST(Dash, OfficialTimeBandAndSpeedOrdering) {
    DashResult four = dash(4.0), five = dash(5.0);
    ASSERT_TRUE(four.success());
    ASSERT_TRUE(five.success());
    EXPECT_GE(four.official_time, 24.0);
    EXPECT_LE(four.official_time, 30.0);
    EXPECT_LT(five.official_time, four.official_time);
}

TEST(Dash, AblationsNeverBeatTheCalibratedProcedure) {
    int calibrated = successes(StandTransition::Calibrated);
    EXPECT_EQ(calibrated, 20);
    EXPECT_GE(calibrated, successes(StandTransition::NoApexWait));
    EXPECT_GE(calibrated, successes(StandTransition::ApexOnly));
    EXPECT_GE(successes(StandTransition::ApexOnly), successes(StandTransition::ImmediateSwap));
}

TEST(Dash, TrialsIndependentOfThreadCount) {
    DashConfig cfg;
    cfg.transition = StandTransition::ImmediateSwap;
    const auto& cal = baseline_calibration();
    auto a = run_dash_trials(cfg, cal, ModelParams{}, {}, baseline_schedule(), 6, 1);
    auto b = run_dash_trials(cfg, cal, ModelParams{}, {}, baseline_schedule(), 6, 3);
    for (int i = 0; i < 6; ++i) {
        EXPECT_EQ(a[i].result.seed, static_cast<std::uint64_t>(i));
        EXPECT_EQ(a[i].result.success(), b[i].result.success());
        EXPECT_EQ(a[i].result.official_time, b[i].result.official_time);
        EXPECT_EQ(a[i].result.stand_swap_phase, b[i].result.stand_swap_phase);
    }
    EXPECT_THROW(run_dash_trials(cfg, cal, ModelParams{}, {}, baseline_schedule(), 0), std::invalid_argument);
}

TEST(ApexPhases, FlatTopCountsAtItsMiddle) {
    auto s = synthetic(3, [](SampleRecord& r) {
        // three equal samples at the top of each foot's hump
        double l = std::round(40.0 * std::max(0.0, std::sin(kTwoPi * r.phase))) / 40.0;
        double rr = std::round(40.0 * std::max(0.0, std::sin(kTwoPi * (r.phase + 0.5)))) / 40.0;
        r.foot_pos[kLeft].z = std::min(l, 0.95);
        r.foot_pos[kRight].z = std::min(rr, 0.95);
    });
    auto a = find_apex_phases(s);
    EXPECT_NEAR(circular_distance(a[kLeft], 0.25), 0.0, 1e-9);
    EXPECT_NEAR(circular_distance(a[kRight], 0.75), 0.0, 1e-9);
}
