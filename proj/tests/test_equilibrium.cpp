#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sumlab/errors.hpp"
#include "sumlab/staircase/equilibrium.hpp"

using namespace sumlab;

namespace {

// Smooth psychometric function rising from 0.5 at 10 mm.
double cumulative_gaussian(double level) { return 0.5 + 0.5 * std::erf((level - 10.0) / (2.0 * std::sqrt(2.0))); }

EquilibriumOptions options(double step_up) {
    EquilibriumOptions o;
    o.step_up_mm = step_up;
    o.lower_mm = 4.0;
    o.upper_mm = 20.0;
    o.start_mm = 16.0;
    return o;
}

// Long free-running simulation of the same chain, used as the independent oracle.
double simulated_mean_level(double ratio, double step_up, std::uint64_t seed, int trials) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double level = 16.0;
    int streak = 0;
    double sum = 0.0;
    const int burn_in = trials / 10;
    for (int i = 0; i < trials; ++i) {
        if (u(rng) < cumulative_gaussian(level)) {
            if (++streak == 2) {
                level = std::max(4.0, level - ratio * step_up);
                streak = 0;
            }
        } else {
            level = std::min(20.0, level + step_up);
            streak = 0;
        }
        if (i >= burn_in) sum += level;
    }
    return sum / (trials - burn_in);
}

}  // namespace

TEST(Equilibrium, AsymptoticPercentile) {
    EXPECT_NEAR(asymptotic_percentile(1.0), 0.70711, 1e-5);
    EXPECT_NEAR(asymptotic_percentile(0.7393), 0.75825, 1e-5);
}

TEST(Equilibrium, RatioOneConvergesNear707) {
    const auto eq = equilibrium_percentile(1.0, cumulative_gaussian, options(0.25));
    ASSERT_TRUE(eq.converged);
    EXPECT_EQ(eq.lattice_ratio, 1.0);
    EXPECT_NEAR(eq.percentile, 0.707, 0.01);
}

TEST(Equilibrium, DefaultRatioApproachesSmallStepLimit) {
    const auto eq = equilibrium_percentile(0.7393, cumulative_gaussian, options(0.05));
    ASSERT_TRUE(eq.converged);
    EXPECT_NEAR(eq.lattice_ratio, 0.74, 1e-12);
    EXPECT_NEAR(eq.percentile, asymptotic_percentile(eq.lattice_ratio), 0.005);
}

TEST(Equilibrium, MatchesLongSimulation) {
    for (double ratio : {1.0, 0.7393}) {
        const auto eq = equilibrium_percentile(ratio, cumulative_gaussian, options(0.5));
        const double ratio_on_lattice = eq.lattice_ratio;
        const double sim = simulated_mean_level(ratio_on_lattice, 0.5, 99, 2'000'000);
        EXPECT_NEAR(eq.asymptotic_level_mm, sim, 0.02) << "ratio " << ratio;
    }
}

TEST(Equilibrium, FlatPsychometricDoesNotConverge) {
    const auto eq = equilibrium_percentile(0.7393, [](double) { return 0.5; }, options(0.25));
    EXPECT_FALSE(eq.converged);
    EXPECT_GT(eq.rail_mass, 0.5);
}

TEST(Equilibrium, RejectsBadInput) {
    EXPECT_THROW(equilibrium_percentile(0.0, cumulative_gaussian, options(0.25)), ConfigError);
    EXPECT_THROW(equilibrium_percentile(1.2, cumulative_gaussian, options(0.25)), ConfigError);
    auto o = options(0.25);
    o.upper_mm = o.lower_mm;
    EXPECT_THROW(equilibrium_percentile(1.0, cumulative_gaussian, o), ConfigError);
}
