#pragma once

#include <cstddef>
#include <functional>

namespace sumlab {

struct EquilibriumOptions {
    double step_up_mm = 0.25;
    double lower_mm = 0.0;  // clamp range of the staircase
    double upper_mm = 0.0;
    double start_mm = 0.0;
    /// Lattice resolution: grid spacing is step_up_mm / cells_per_step_up and
    /// the down step is rounded to a whole number of cells.
    int cells_per_step_up = 100;
    /// Stationary mass within one up-step of either clamp bound above which
    /// the staircase is reported as not converged.
    double rail_mass_limit = 0.5;
};

struct Equilibrium {
    bool converged = false;
    /// p(correct) at the stationary mean level.
    double percentile = 0.0;
    double asymptotic_level_mm = 0.0;
    double rail_mass = 0.0;
    /// Down/up ratio actually represented on the lattice.
    double lattice_ratio = 0.0;
    std::size_t states = 0;
};

/// Stationary analysis of the 2-down/1-up staircase as a Markov chain over
/// (lattice level, consecutive-correct counter), driven by `p_correct(level)`.
/// The stationary distribution is solved directly (sparse LU), not simulated.
Equilibrium equilibrium_percentile(double ratio, const std::function<double(double)>& p_correct,
                                   const EquilibriumOptions& options);

/// Small-step limit of the same chain: the level where the expected drift
/// vanishes satisfies p^2 = 1 / (1 + ratio).
double asymptotic_percentile(double ratio);

}  // namespace sumlab
