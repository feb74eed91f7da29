#include <gtest/gtest.h>

#include <cmath>

#include "sprint/optimizer.hpp"
#include "sprint/simulator.hpp"

using namespace sprint;

namespace {

TrajectoryLog running_log(double v, double duration, std::uint64_t seed = 0) {
    ModelParams m;
    RunningController c(m, {}, fixed_params(BaselineMap{}.at(v)));
    return rollout(c, CommandSchedule{0.0, v, v / kCommandAccel}, duration, seed, m);
}

bool same(const SampleRecord& a, const SampleRecord& b) {
    bool eq = a.time == b.time && a.phase == b.phase && a.com_pos == b.com_pos && a.com_vel == b.com_vel &&
              a.cmd_speed == b.cmd_speed;
    for (int i = 0; i < 2; ++i)
        eq = eq && a.foot_pos[i] == b.foot_pos[i] && a.grf_z[i] == b.grf_z[i] && a.grf_x[i] == b.grf_x[i] &&
             a.actuator_force[i] == b.actuator_force[i];
    return eq;
}

}  // namespace

TEST(Rollout, BitIdenticalAcrossRuns) {
    auto a = running_log(3.0, 6.0, 7);
    auto b = running_log(3.0, 6.0, 7);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_TRUE(same(a.samples[k], b.samples[k])) << "sample " << k;
}

TEST(Rollout, ZeroDurationIsEmpty) {
    auto log = running_log(2.0, 0.0);
    EXPECT_TRUE(log.empty());
    EXPECT_FALSE(log.fell);
}

TEST(Rollout, RejectsNegativeDuration) {
    ModelParams m;
    RunningController c(m, {}, fixed_params({1.5, 0.6}));
    EXPECT_THROW(rollout(c, CommandSchedule::constant(0.0), -1.0, 0, m), std::invalid_argument);
}

TEST(Rollout, OneSamplePerPolicyStep) {
    auto log = running_log(2.0, 3.0);
    ASSERT_EQ(log.size(), 120u);
    for (std::size_t k = 0; k < log.size(); ++k) EXPECT_NEAR(log.samples[k].time, static_cast<double>(k + 1) / kPolicyRate, 1e-12);
}

TEST(Rollout, PhaseAdvancesAtCommandedFrequency) {
    auto log = running_log(3.0, 4.0);
    for (std::size_t k = 1; k < log.size(); ++k) {
        double d = log.samples[k].phase - log.samples[k - 1].phase;
        d -= std::floor(d);
        EXPECT_NEAR(d, log.samples[k].params.freq * ModelParams::policy_dt, 1e-9);
    }
}

TEST(Rollout, GroundForcesAreUnilateral) {
    auto log = running_log(4.0, 8.0);
    ASSERT_FALSE(log.fell);
    for (const auto& s : log.samples)
        for (int i = 0; i < 2; ++i) EXPECT_GE(s.grf_z[i], 0.0);
}

TEST(Rollout, VerticalMomentumMatchesImpulse) {
    // period-mean forces integrate the substep impulses exactly
    ModelParams m;
    auto log = running_log(3.0, 5.0);
    ASSERT_FALSE(log.fell);
    double impulse = 0.0;
    for (const auto& s : log.samples) impulse += (s.grf_z[0] + s.grf_z[1] - m.weight()) * ModelParams::policy_dt;
    double dp = m.mass * (log.samples.back().com_vel.z - 0.0);
    EXPECT_NEAR(impulse, dp, 1e-6 * m.weight());
}

TEST(Rollout, TracksRunningCommand) {
    auto log = running_log(4.0, 10.0);
    ASSERT_FALSE(log.fell);
    double mean = 0.0;
    std::size_t n = 80;
    for (std::size_t k = log.size() - n; k < log.size(); ++k) mean += log.samples[k].com_vel.x / n;
    EXPECT_NEAR(mean, 4.0, 0.2);
}

TEST(Simulator, BallisticFlight) {
    ModelParams m;
    BipedState s;
    s.com_pos = {0.0, 2.0};
    s.phase = Phase(0.55);  // both feet in swing at ratio 0.9
    for (auto& f : s.feet) f.pos = {0.0, 0.5};
    Simulator sim(m, s);
    ControlOutput out;
    out.params = {1.0, 0.9};
    SampleRecord r = sim.step(out, 0.0);
    EXPECT_EQ(r.grf_z[0] + r.grf_z[1], 0.0);
    EXPECT_NEAR(r.com_vel.z / ModelParams::policy_dt, -m.gravity, 0.01 * m.gravity);
}

TEST(Simulator, StepAfterFallThrows) {
    ModelParams m;
    BipedState s;
    s.com_pos = {0.0, 0.1};
    Simulator sim(m, s);
    ASSERT_TRUE(sim.fallen());
    EXPECT_THROW(sim.step(ControlOutput{}, 0.0), std::logic_error);
}

TEST(Simulator, SeededNoiseIsReproducible) {
    InitialCondition ic;
    ic.noise = 0.05;
    BipedState a = ic.make(3), b = ic.make(3), c = ic.make(4);
    EXPECT_EQ(a.com_vel, b.com_vel);
    EXPECT_NE(a.com_vel, c.com_vel);
}
