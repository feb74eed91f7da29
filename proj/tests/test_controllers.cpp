#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "oracles.hpp"
#include "sprint/mechanics.hpp"
#include "sprint/optimizer.hpp"
#include "sprint/simulator.hpp"

using namespace sprint;

namespace {

BipedState standing_state(double left_x, double right_x, double com_x = 0.0, double z = 0.86) {
    BipedState s;
    s.com_pos = {com_x, z};
    s.feet[kLeft].pos = {left_x, 0.0};
    s.feet[kRight].pos = {right_x, 0.0};
    for (auto& f : s.feet) f.contact = true;
    return s;
}

/// Apex (max COM height) of each same-foot stride in the log.
std::vector<double> stride_apexes(const TrajectoryLog& log) {
    double thr = contact_threshold(log.model);
    auto events = segment_contacts(log, thr);
    std::vector<double> out;
    std::vector<const ContactEvent*> left;
    for (const auto& e : events)
        if (e.foot == kLeft) left.push_back(&e);
    for (std::size_t j = 0; j + 1 < left.size(); ++j) {
        double apex = 0.0;
        for (std::size_t k = left[j]->first; k < left[j + 1]->first; ++k)
            apex = std::max(apex, log.samples[k].com_pos.z);
        out.push_back(apex);
    }
    return out;
}

}  // namespace

TEST(Running, NeutralTouchdownUnderHip) {
    ModelParams m;
    RunningController c(m, {}, fixed_params({1.5, 0.6}));
    BipedState s = standing_state(0.0, 0.0, 0.3);
    ControlOutput out = c.compute(s, Phase(0.0), {1.5, 0.6}, 0.0);
    for (const auto& leg : out.legs) EXPECT_DOUBLE_EQ(leg.swing.touchdown_x, 0.3);
}

TEST(Running, OverspeedShiftsTouchdownForward) {
    ModelParams m;
    ControllerGains g;
    RunningController c(m, g, fixed_params({1.5, 0.6}));
    GaitParams p{1.5, 0.6};
    double neutral = 3.0 * p.stance_time() / 2.0;
    EXPECT_GT(c.touchdown_offset(3.0, 2.5, p), neutral);
    EXPECT_LT(c.touchdown_offset(3.0, 3.5, p), neutral);
    EXPECT_DOUBLE_EQ(c.touchdown_offset(3.0, 3.0, p), neutral);
}

TEST(Running, RejectsInvalidParams) {
    ModelParams m;
    RunningController c(m, {}, fixed_params({1.5, 0.6}));
    BipedState s = standing_state(0.0, 0.0);
    EXPECT_THROW(c.compute(s, Phase(0.0), {1.5, 1.2}, 1.0), std::invalid_argument);
    EXPECT_THROW(c.compute(s, Phase(0.0), {-1.0, 0.5}, 1.0), std::invalid_argument);
}

TEST(Running, ComputeIsRepeatable) {
    ModelParams m;
    RunningController c(m, {}, fixed_params({1.5, 0.6}));
    BipedState s = standing_state(-0.1, 0.2, 0.05, 0.88);
    s.com_vel = {2.0, 0.3};
    auto a = c.compute(s, Phase(0.37), {1.5, 0.6}, 2.0);
    auto b = c.compute(s, Phase(0.37), {1.5, 0.6}, 2.0);
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(a.legs[i].swing.touchdown_x, b.legs[i].swing.touchdown_x);
        EXPECT_EQ(a.legs[i].stance.feedforward, b.legs[i].stance.feedforward);
    }
}

TEST(Running, FeedforwardDeliversHalfStrideImpulse) {
    // midpoint-rule integral of the sine profile over one stance
    ModelParams m;
    GaitParams p{1.6, 0.7};
    double peak = stance_force_peak(p, m.weight());
    int n = 20000;
    double T = p.stance_time(), impulse = 0.0;
    for (int k = 0; k < n; ++k) impulse += peak * std::sin(std::numbers::pi * (k + 0.5) / n) * T / n;
    EXPECT_NEAR(impulse, m.weight() * p.stride_period() / 2.0, 1e-6);
}

TEST(Standing, CenteredStaticEquilibrium) {
    ModelParams m;
    ControllerGains g;
    StandingController c(m, g);
    BipedState s = standing_state(-0.15, 0.15, 0.0, g.stand_height);
    auto a = c.support_forces(s, {true, true});
    EXPECT_NEAR(a[0], a[1], 1e-9);
    double vertical = 0.0;
    for (int i = 0; i < 2; ++i) vertical += a[i] * LegGeometry::of(s, i).axis.z;
    EXPECT_NEAR(vertical, m.weight(), 1e-9);
}

TEST(Standing, CaptureOffsetFormula) {
    ModelParams m;
    // frozen from oracle::capture_offset(0.5, 0.9, 9.81)
    EXPECT_NEAR(capture_offset(0.5, m), 0.151445633, 1e-9);
    EXPECT_NEAR(oracle::capture_offset(0.5, 0.9, 9.81), 0.151445633, 1e-9);
}

TEST(Standing, AirborneFootPlacedAlongMomentum) {
    ModelParams m;
    ControllerGains g;
    StandingController c(m, g);
    BipedState s = standing_state(0.0, 0.0, 0.0, 0.88);
    s.com_vel = {0.5, 0.0};
    s.feet[kRight].pos = {-0.2, 0.08};
    s.feet[kRight].contact = false;
    c.engage(s);
    EXPECT_TRUE(c.placing(kRight));
    EXPECT_FALSE(c.placing(kLeft));
    EXPECT_NEAR(c.placement_target(kRight) - s.com_pos.x, 0.151445633 + g.stand_margin, 1e-9);
}

TEST(Standing, RestIsStationary) {
    ModelParams m;
    ControllerGains g;
    StandingController c(m, g);
    InitialCondition ic;
    ic.com_height = g.stand_height;
    ic.stance_width = 0.3;
    TrajectoryLog log = rollout(c, 10.0, 0, m, ic);
    ASSERT_FALSE(log.fell);
    double drift = 0.0;
    for (const auto& s : log.samples) drift = std::max(drift, std::abs(s.com_pos.x));
    EXPECT_LT(drift, 0.05);
}

TEST(Standing, NarrowBaseCannotAbsorbMomentum) {
    ModelParams m;
    ControllerGains g;
    StandingController c(m, g);
    InitialCondition ic;
    ic.com_height = g.stand_height;
    ic.stance_width = 0.05;
    ic.forward_speed = 1.5;
    TrajectoryLog log = rollout(c, 5.0, 0, m, ic);
    EXPECT_TRUE(log.fell);
}

TEST(Running, RealizedStrideFrequencyTracksClock) {
    ModelParams m;
    GaitParams p = BaselineMap{}.at(4.0);
    RunningController c(m, {}, fixed_params(p));
    TrajectoryLog log = rollout(c, CommandSchedule{0.0, 4.0, 2.0}, 12.0, 0, m);
    ASSERT_FALSE(log.fell);
    double thr = contact_threshold(m);
    auto strides = stride_metrics(segment_contacts(log, thr), log.samples, BodyConstants::of(m), thr);
    ASSERT_GE(strides.size(), 12u);
    std::vector<double> periods;
    for (auto it = strides.end() - 10; it != strides.end(); ++it) periods.push_back(it->stride_period);
    double mean_period = std::accumulate(periods.begin(), periods.end(), 0.0) / periods.size();
    EXPECT_NEAR(1.0 / mean_period, p.freq, 0.05 * p.freq);
}

class LimitCycle : public ::testing::TestWithParam<double> {};

TEST_P(LimitCycle, ApexHeightsSettleWithOptimizedParams) {
    double v = GetParam();
    SweepSpec spec;
    spec.speeds = {v};
    auto table = sweep(spec);
    auto top = top_k(table, v, 1);
    ASSERT_EQ(top.cells.size(), 1u);
    ModelParams m;
    RunningController c(m, {}, fixed_params(top.cells[0].params));
    TrajectoryLog log = rollout(c, CommandSchedule{0.0, v, v / kCommandAccel}, 20.0, 0, m);
    ASSERT_FALSE(log.fell);
    auto apex = stride_apexes(log);
    ASSERT_GE(apex.size(), 14u);
    // skip the acceleration ramp, then 10 strides
    std::size_t first = static_cast<std::size_t>(std::ceil((v / kCommandAccel) * top.cells[0].params.freq)) + 10;
    ASSERT_LT(first + 2, apex.size());
    for (std::size_t k = first + 1; k < apex.size(); ++k)
        EXPECT_LT(std::abs(apex[k] - apex[k - 1]) / apex[k - 1], 0.02) << "stride " << k;
}

INSTANTIATE_TEST_SUITE_P(Speeds, LimitCycle, ::testing::Values(2.0, 3.0, 4.0, 5.0));

TEST(Running, DutyFactorFallsWithRatio) {
    ModelParams m;
    const double v = 3.0;
    GaitParams base = BaselineMap{}.at(v);
    std::vector<double> ratios, duty;
    for (int i = 0; i < 9; ++i) {
        GaitParams p{base.freq, base.ratio - 0.2 + 0.05 * i};
        ProtocolRun run = protocol_rollout(m, {}, p, v, 0);
        if (run.fell()) continue;
        auto strides = window_strides(run.log, kCollectSteps);
        if (strides.empty()) continue;
        auto avg = average_records(strides);
        ratios.push_back(p.ratio);
        duty.push_back(avg.contact_time / avg.stride_period);
    }
    ASSERT_GE(ratios.size(), 5u);
    EXPECT_LT(oracle::spearman(ratios, duty), 0.0);
}
