#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "liveclock/steering.hpp"

namespace lc = liveclock;

TEST(PhaseError, Examples) {
  EXPECT_NEAR(lc::phase_error({3, 0.1}, 0.0), 0.1, 1e-15);
  EXPECT_NEAR(lc::phase_error({3, 0.45}, -0.45), -0.1, 1e-12);
  EXPECT_EQ(lc::phase_error({3, 0.2}, 0.2), 0.0);
  EXPECT_EQ(lc::phase_error({0, 0.25}, -0.25), 0.5);
}

TEST(PhaseError, PropertyRange) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ph(-0.4999, 0.5);
  for (int i = 0; i < 5000; ++i) {
    const double e = lc::phase_error({0, ph(rng)}, ph(rng));
    EXPECT_GT(e, -0.5);
    EXPECT_LE(e, 0.5);
  }
}

TEST(ServoStep, ProportionalOnly) {
  lc::ServoState s;
  s.gains = {0.1, 0.0};
  lc::ServoLimits limits;
  limits.slew_limit = 1.0;
  const auto step = lc::servo_step(s, 0.2, limits);
  EXPECT_EQ(step.decision.kind, lc::DecisionKind::rate_command);
  EXPECT_NEAR(step.decision.delta, -0.02, 1e-15);
  EXPECT_DOUBLE_EQ(step.state.integral_accumulator, 0.2);
}

TEST(ServoStep, ZeroErrorHolds) {
  lc::ServoState s;
  for (int i = 0; i < 10; ++i) {
    const auto step = lc::servo_step(s, 0.0, lc::ServoLimits{});
    EXPECT_EQ(step.decision.kind, lc::DecisionKind::hold);
    EXPECT_EQ(step.decision.delta, 0.0);
    EXPECT_EQ(step.state.integral_accumulator, 0.0);
    s = step.state;
  }
}

TEST(ServoStep, SlewLimitAndClamp) {
  lc::ServoState s;
  lc::ServoLimits limits;
  limits.integral_clamp = 0.3;
  limits.tolerance = 0.49;
  auto step = lc::servo_step(s, 0.2, limits);
  EXPECT_EQ(step.decision.delta, -1e-3);
  step = lc::servo_step(step.state, 0.2, limits);
  EXPECT_DOUBLE_EQ(step.state.integral_accumulator, 0.3);
  step = lc::servo_step(step.state, -0.2, limits);
  EXPECT_NEAR(step.state.integral_accumulator, 0.1, 1e-15);
}

TEST(ServoStep, RevisionAfterWindow) {
  lc::ServoState s;
  lc::ServoLimits limits;
  limits.tolerance = 0.05;
  limits.revision_window = 3;
  auto a = lc::servo_step(s, 0.1, limits);
  auto b = lc::servo_step(a.state, 0.1, limits);
  auto c = lc::servo_step(b.state, 0.1, limits);
  EXPECT_EQ(a.decision.kind, lc::DecisionKind::rate_command);
  EXPECT_EQ(b.decision.kind, lc::DecisionKind::rate_command);
  EXPECT_EQ(c.decision.kind, lc::DecisionKind::request_revision);
  EXPECT_EQ(c.state.consecutive_violations, 0);
}

TEST(ServoStep, InToleranceResetsCounter) {
  lc::ServoLimits limits;
  limits.revision_window = 3;
  auto st = lc::servo_step(lc::ServoState{}, 0.1, limits).state;
  st = lc::servo_step(st, 0.1, limits).state;
  EXPECT_EQ(st.consecutive_violations, 2);
  st = lc::servo_step(st, 0.01, limits).state;
  EXPECT_EQ(st.consecutive_violations, 0);
}

TEST(ServoStep, DeterministicAndNoRevisionWithinTolerance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> err(-0.05, 0.05);
  lc::ServoState s;
  lc::ServoLimits limits;
  limits.revision_window = 2;
  for (int i = 0; i < 10000; ++i) {
    const double e = err(rng);
    const auto a = lc::servo_step(s, e, limits);
    const auto b = lc::servo_step(s, e, limits);
    EXPECT_EQ(a.state, b.state);
    EXPECT_EQ(a.decision, b.decision);
    EXPECT_NE(a.decision.kind, lc::DecisionKind::request_revision);
    EXPECT_LE(std::abs(a.decision.delta), limits.slew_limit);
    s = a.state;
  }
}

// Closed loop on a bare phase model: the error grows by the node's frequency
// deficit each cycle and the servo command removes it.
TEST(ServoStep, ConvergesAgainstFrequencyOffset) {
  lc::ServoState s;
  lc::ServoLimits limits;
  double error = 0.0;
  double correction = 0.0;
  const double offset = 1e-4;
  double worst_late = 0.0;
  for (int k = 0; k < 10500; ++k) {
    error += 4.0 * (offset - correction);
    const auto step = lc::servo_step(s, error, limits);
    s = step.state;
    if (step.decision.kind == lc::DecisionKind::rate_command) correction = -step.decision.delta;
    ASSERT_LT(std::abs(error), 1e-3);
    if (k >= 500) worst_late = std::max(worst_late, std::abs(error));
  }
  EXPECT_LT(worst_late, 1e-6);
}

namespace {

lc::ReferencePattern symmetric_pattern(double stride) {
  lc::ReferencePattern p;
  p.targets = {{lc::node(0), lc::node(1), 0.0, stride}, {lc::node(1), lc::node(0), 0.0, stride}};
  return p;
}

lc::EchoRecord echo(std::int64_t start, double count, double turnaround) {
  lc::EchoRecord e;
  e.tx = {start, 0.0};
  e.rx_back = lc::normalize(start, count);
  e.origin = lc::node(0);
  e.peer = lc::node(1);
  e.turnaround = turnaround;
  return e;
}

}  // namespace

TEST(ReferencePattern, FindAndValidate) {
  const auto p = symmetric_pattern(4.0);
  ASSERT_NE(p.find(lc::node(0), lc::node(1)), nullptr);
  EXPECT_EQ(p.find(lc::node(0), lc::node(2)), nullptr);
  EXPECT_EQ(p.targets[0].stride(), 4);
  EXPECT_NO_THROW(lc::validate(p, 0.5));
  auto bad = p;
  bad.tolerance = 0.3;
  EXPECT_THROW(lc::validate(bad, 0.5), std::invalid_argument);
  bad = p;
  bad.targets[0].target_phase = 0.5;
  EXPECT_THROW(lc::validate(bad, 0.5), std::invalid_argument);
  bad = p;
  bad.revision_window = 0;
  EXPECT_THROW(lc::validate(bad, 0.5), std::invalid_argument);
}

TEST(Revise, ConsistentEchoesLeavePatternUnchanged) {
  const auto p = symmetric_pattern(4.0);
  const std::vector<lc::EchoRecord> echoes = {echo(0, 9.0, 1.0), echo(10, 9.0, 1.0)};
  EXPECT_EQ(lc::revise_reference(echoes, p), p);
}

TEST(Revise, StaticRingEchoGivesStrideFour) {
  const auto p = symmetric_pattern(3.0);
  const std::vector<lc::EchoRecord> echoes = {echo(0, 9.0, 1.0)};
  const auto r = lc::revise_reference(echoes, p);
  EXPECT_EQ(r.generation, 1);
  EXPECT_DOUBLE_EQ(r.targets[0].one_way_cycles, 4.0);
  EXPECT_EQ(r.targets[0].stride(), 4);
  EXPECT_EQ(r.targets[1].stride(), 4);
}

TEST(Revise, TenPercentLongerEchoes) {
  const auto p = symmetric_pattern(4.0);
  const std::vector<lc::EchoRecord> echoes = {echo(0, 9.9, 1.0), echo(20, 9.9, 1.0),
                                              echo(40, 9.9, 1.0)};
  const auto r = lc::revise_reference(echoes, p);
  EXPECT_EQ(r.generation, 1);
  EXPECT_NEAR(r.targets[0].one_way_cycles, 4.45, 1e-12);
  EXPECT_NEAR(r.targets[1].one_way_cycles, 4.45, 1e-12);
  EXPECT_EQ(r.targets[0].target_phase, 0.0);
}

TEST(Revise, AsymmetricSplitFollowsPattern) {
  lc::ReferencePattern p;
  p.targets = {{lc::node(0), lc::node(1), 0.0, 4.0}, {lc::node(1), lc::node(0), 0.0, 3.0}};
  const std::vector<lc::EchoRecord> echoes = {echo(0, 15.0, 1.0)};
  const auto r = lc::revise_reference(echoes, p);
  EXPECT_NEAR(r.targets[0].one_way_cycles, 8.0, 1e-12);
  EXPECT_NEAR(r.targets[1].one_way_cycles, 6.0, 1e-12);
}

TEST(Revise, MedianRejectsOutlier) {
  const auto p = symmetric_pattern(4.0);
  const std::vector<lc::EchoRecord> echoes = {echo(0, 9.0, 1.0), echo(10, 30.0, 1.0),
                                              echo(20, 9.0, 1.0)};
  EXPECT_EQ(lc::revise_reference(echoes, p), p);
}

TEST(Revise, IgnoresCircuitEchoesAndRejectsEmpty) {
  const auto p = symmetric_pattern(4.0);
  auto circuit = echo(0, 40.0, 5.0);
  circuit.hops = 6;
  const std::vector<lc::EchoRecord> echoes = {circuit};
  EXPECT_EQ(lc::revise_reference(echoes, p), p);
  EXPECT_THROW(lc::revise_reference({}, p), std::invalid_argument);
}
