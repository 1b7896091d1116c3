#include <gtest/gtest.h>

#include <cmath>

#include "sumlab/observer/observer.hpp"

using namespace sumlab;

namespace {

StimulusSpec one(double mm) { return StimulusSpec::uniform(make_channel_set({0}), mm); }
StimulusSpec two(double mm) { return StimulusSpec::uniform(make_channel_set({0, 1}), mm); }

bool comparison_judged_greater(const Response& r) { return r.judgment == Judgment::FirstLess; }

}  // namespace

TEST(Observer, FullSummationDoublesIntensity) {
    const Observer obs(observer_preset("paper-like"), 1);
    EXPECT_DOUBLE_EQ(obs.perceive(two(12.0)), 2.0 * obs.perceive(one(12.0)));
}

TEST(Observer, NoSummationTakesTheMax) {
    const Observer obs(observer_preset("non-summing"), 1);
    StimulusSpec mixed;
    mixed.levels.emplace(ChannelId{0}, StimulusLevel{9.0});
    mixed.levels.emplace(ChannelId{1}, StimulusLevel{13.0});
    EXPECT_EQ(obs.perceive(mixed), obs.site_intensity(13.0));
    EXPECT_EQ(obs.perceive(two(12.0)), obs.perceive(one(12.0)));
}

TEST(Observer, MinkowskiBetweenTheLimits) {
    auto params = observer_preset("paper-like");
    params.summation_exponent = 2.0;
    const Observer obs(params, 1);
    EXPECT_NEAR(obs.perceive(two(12.0)), std::sqrt(2.0) * obs.perceive(one(12.0)), 1e-12);
}

TEST(Observer, ZeroLevelsHaveZeroIntensity) {
    const Observer obs(observer_preset("paper-like"), 1);
    EXPECT_EQ(obs.perceive(two(0.0)), 0.0);
}

TEST(Observer, IdenticalSpecsWithWideBandAreMostlyEqual) {
    auto params = observer_preset("paper-like");
    params.equality_band = 1.0;
    params.noise_floor = 0.5;
    Observer obs(params, 7);
    int equal = 0;
    for (int i = 0; i < 1000; ++i) equal += obs.compare(one(10.0), one(10.0)).judgment == Judgment::Equal ? 1 : 0;
    EXPECT_GT(equal, 500);
    // Analytic value: P(|N(0, 2 * 0.5^2)| < 1) = erf(1)
    EXPECT_NEAR(equal / 1000.0, std::erf(1.0), 0.05);
}

TEST(Observer, WidelySeparatedSpecsAreJudgedCorrectly) {
    Observer obs(observer_preset("paper-like"), 8);
    int correct = 0;
    for (int i = 0; i < 1000; ++i) correct += obs.compare(one(5.0), one(16.0)).judgment == Judgment::FirstLess ? 1 : 0;
    EXPECT_GE(correct, 990);
}

TEST(Observer, ZeroNoiseIsDeterministic) {
    auto params = observer_preset("paper-like");
    params.noise_floor = 0.0;
    params.weber_fraction = 0.0;
    params.equality_band = 0.5;
    Observer obs(params, 9);
    const double i10 = obs.site_intensity(10.0);
    // Find the level whose intensity exceeds i10 by exactly the band.
    const double edge = 4.0 + std::pow((i10 + 0.5) / params.gain, 1.0 / params.transducer_exponent);
    EXPECT_EQ(obs.compare(one(10.0), one(edge - 1e-6)).judgment, Judgment::Equal);
    EXPECT_EQ(obs.compare(one(10.0), one(edge + 1e-6)).judgment, Judgment::FirstLess);
    EXPECT_EQ(obs.compare(one(edge + 1e-6), one(10.0)).judgment, Judgment::FirstGreater);
}

TEST(Psychometric, EqualLevelsWithoutBandIsOneHalf) {
    auto params = observer_preset("paper-like");
    params.equality_band = 0.0;
    const Observer obs(params, 1);
    EXPECT_EQ(obs.psychometric(10.4, 10.4, 1), 0.5);
}

TEST(Psychometric, EqualLevelsSplitsMassOutsideBand) {
    const Observer analytic(observer_preset("paper-like"), 1);
    const double p = analytic.psychometric(10.4, 10.4, 1);
    const double eq = analytic.equal_probability(10.4, 10.4, 1);
    EXPECT_NEAR(p, (1.0 - eq) / 2.0, 1e-12);

    Observer mc(observer_preset("paper-like"), 2);
    int greater = 0;
    constexpr int n = 40000;
    for (int i = 0; i < n; ++i) greater += comparison_judged_greater(mc.compare(one(10.4), one(10.4))) ? 1 : 0;
    EXPECT_NEAR(greater / double(n), p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Psychometric, MatchesMonteCarloAwayFromReference) {
    Observer mc(observer_preset("paper-like"), 3);
    const double p = mc.psychometric(10.4, 12.0, 2);
    int greater = 0;
    constexpr int n = 40000;
    for (int i = 0; i < n; ++i) greater += comparison_judged_greater(mc.compare(two(10.4), two(12.0))) ? 1 : 0;
    EXPECT_NEAR(greater / double(n), p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Psychometric, SaturatesForLargeDifferences) {
    const Observer obs(observer_preset("paper-like"), 1);
    EXPECT_GT(obs.psychometric(4.0, 16.8, 1), 0.999);
}

TEST(Psychometric, TwoSitesBeatOneUnderSummation) {
    const Observer obs(observer_preset("paper-like"), 1);
    for (double cmp : {11.0, 12.0, 13.0}) EXPECT_GT(obs.psychometric(10.4, cmp, 2), obs.psychometric(10.4, cmp, 1));
    const Observer max_obs(observer_preset("non-summing"), 1);
    EXPECT_DOUBLE_EQ(max_obs.psychometric(10.4, 12.0, 2), max_obs.psychometric(10.4, 12.0, 1));
}

TEST(Observer, SameSeedSameResponses) {
    Observer a(observer_preset("paper-like"), 77);
    Observer b(observer_preset("paper-like"), 77);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.compare(one(10.4), one(11.0)), b.compare(one(10.4), one(11.0)));
}

TEST(Observer, ForceModeUsesMeasuredForce) {
    auto params = observer_preset("paper-like");
    params.input = ObserverInput::Force;
    params.noise_floor = 0.0;
    Observer obs(params, 4);
    const std::map<ChannelId, double> low{{ChannelId{0}, 4.3}};
    const std::map<ChannelId, double> high{{ChannelId{0}, 6.0}};
    EXPECT_EQ(obs.compare_forces(low, high, {}).judgment, Judgment::FirstLess);
}

TEST(Observer, AsrSignalThresholds) {
    const Observer obs(observer_preset("paper-like"), 1);
    EXPECT_EQ(obs.asr_signal(one(3.5)), AsrSignal::NotDetected);
    EXPECT_EQ(obs.asr_signal(one(4.0)), AsrSignal::Detected);
    EXPECT_EQ(obs.asr_signal(one(16.8)), AsrSignal::MaxComfortable);
}

TEST(ObserverParams, ValidationNamesTheField) {
    auto params = observer_preset("paper-like");
    params.noise_floor = -1.0;
    try {
        params.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "observer.noise_floor");
    }
    EXPECT_THROW(observer_preset("nope"), ConfigError);
}
