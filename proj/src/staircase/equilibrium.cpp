#include "sumlab/staircase/equilibrium.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "sumlab/errors.hpp"

namespace sumlab {

double asymptotic_percentile(double ratio) { return std::sqrt(1.0 / (1.0 + ratio)); }

Equilibrium equilibrium_percentile(double ratio, const std::function<double(double)>& p_correct,
                                   const EquilibriumOptions& options) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio", "must be in (0, 1]");
    if (!(options.step_up_mm > 0.0)) throw ConfigError("step_up_mm", "must be > 0");
    if (!(options.upper_mm > options.lower_mm)) throw ConfigError("upper_mm", "must exceed lower_mm");
    if (options.cells_per_step_up < 1) throw ConfigError("cells_per_step_up", "must be >= 1");

    const double h = options.step_up_mm / options.cells_per_step_up;
    const int up = options.cells_per_step_up;
    const int down = std::max(1, static_cast<int>(std::lround(ratio * up)));
    const int top = static_cast<int>(std::ceil((options.upper_mm - options.lower_mm) / h - 1e-9));
    auto level_of = [&](int cell) { return std::min(options.lower_mm + cell * h, options.upper_mm); };
    const int start = std::clamp(static_cast<int>(std::lround((options.start_mm - options.lower_mm) / h)), 0, top);

    // State id = 2 * cell + counter. Collect states reachable from (start, 0).
    const int n_all = 2 * (top + 1);
    std::vector<int> index(static_cast<std::size_t>(n_all), -1);
    std::vector<int> states;
    std::deque<int> queue{2 * start};
    index[static_cast<std::size_t>(2 * start)] = 0;
    states.push_back(2 * start);

    auto successors = [&](int s) {
        const int cell = s / 2;
        const int counter = s % 2;
        const int up_state = 2 * std::min(cell + up, top);
        const int correct_state = counter == 0 ? 2 * cell + 1 : 2 * std::max(cell - down, 0);
        return std::pair{correct_state, up_state};
    };

    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        const auto [a, b] = successors(s);
        for (int t : {a, b}) {
            if (index[static_cast<std::size_t>(t)] < 0) {
                index[static_cast<std::size_t>(t)] = static_cast<int>(states.size());
                states.push_back(t);
                queue.push_back(t);
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(states.size());
    std::vector<double> p_at(static_cast<std::size_t>(top + 1), -1.0);
    auto p_cell = [&](int cell) {
        double& v = p_at[static_cast<std::size_t>(cell)];
        if (v < 0.0) v = std::clamp(p_correct(level_of(cell)), 0.0, 1.0);
        return v;
    };

    // Solve (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(3 * n + n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const int s = states[static_cast<std::size_t>(j)];
        const double p = p_cell(s / 2);
        const auto [a, b] = successors(s);
        const Eigen::Index ia = index[static_cast<std::size_t>(a)];
        const Eigen::Index ib = index[static_cast<std::size_t>(b)];
        if (ia != n - 1) triplets.emplace_back(ia, j, p);
        if (ib != n - 1) triplets.emplace_back(ib, j, 1.0 - p);
        if (j != n - 1) triplets.emplace_back(j, j, -1.0);
        triplets.emplace_back(n - 1, j, 1.0);
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    Equilibrium out;
    out.states = static_cast<std::size_t>(n);
    out.lattice_ratio = static_cast<double>(down) / up;
    if (lu.info() != Eigen::Success) return out;
    const Eigen::VectorXd pi = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !pi.allFinite()) return out;

    double mean = 0.0;
    double rail = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double level = level_of(states[static_cast<std::size_t>(j)] / 2);
        const double mass = std::max(0.0, pi(j));
        mean += mass * level;
        if (level >= options.upper_mm - options.step_up_mm || level <= options.lower_mm + options.step_up_mm) rail += mass;
    }
    out.asymptotic_level_mm = mean / pi.sum();
    out.rail_mass = rail / pi.sum();
    out.percentile = std::clamp(p_correct(out.asymptotic_level_mm), 0.0, 1.0);
    out.converged = out.rail_mass <= options.rail_mass_limit;
    return out;
}

}  // namespace sumlab
