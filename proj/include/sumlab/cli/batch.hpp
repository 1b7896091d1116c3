#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sumlab/core/config.hpp"
#include "sumlab/session/simulation.hpp"

namespace sumlab {

enum class RunMode : std::uint8_t { Simulate, Serve, Replay, Sweep };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view text);  // throws ConfigError("mode")

/// Everything a CLI invocation asks for. All outputs go under `out`.
struct RunManifest {
    RunMode mode = RunMode::Simulate;
    std::optional<std::filesystem::path> config_path;
    int reps = 1;
    std::optional<std::uint64_t> seed;  // default: the config's seed
    std::filesystem::path out = "sumlab-out";
    std::string grid;
    int workers = 1;
    bool write_logs = false;                         // simulate: keep session logs
    std::vector<std::filesystem::path> replay_logs;  // replay
    std::string host = "127.0.0.1";                  // serve
    int port = 8080;
    std::filesystem::path logs_dir = "sumlab-sessions";

    /// Throws ConfigError naming the offending flag.
    void validate() const;
};

/// Config from the manifest's file, or defaults.
ExperimentConfig manifest_config(const RunManifest& manifest);

/// Seed of repetition `index`: base + index.
std::uint64_t rep_seed(std::uint64_t base, int index);

struct RunRecord {
    int index = 0;
    std::uint64_t seed = 0;
    SimulationResult result;
};

/// Runs `reps` sessions on `workers` threads. Records come back in index
/// order whatever the scheduling. With `log_dir`, each session logs to
/// `<log_dir>/run-NNNN.ndjson`.
std::vector<RunRecord> simulate_runs(const ExperimentConfig& config, std::uint64_t base_seed, int reps, int workers,
                                     const std::optional<std::filesystem::path>& log_dir = std::nullopt);

/// Aggregate statistics over runs. Independent of the order of `runs`.
nlohmann::json aggregate_runs(std::vector<const RunRecord*> runs);

/// Writes per-run summaries, trace CSVs, placement CSVs and plots, plus
/// `aggregate.json`. Returns the aggregate.
nlohmann::json write_simulation_outputs(const std::vector<RunRecord>& runs, const std::filesystem::path& out);

/// Placement export: label, levels, position and replay count per row.
std::string placements_csv(const SessionEngine& engine);

/// One axis of a sweep grid, e.g. "ratio=0.7393,1.0". Keys: ratio,
/// exponent (accepts "inf"), step_up, noise_floor.
struct GridAxis {
    std::string key;
    std::vector<double> values;
};

/// Parses "key=v1,v2;key=v3". Throws ConfigError("grid") on an empty grid,
/// an empty axis, an unknown or repeated key, or a bad number.
std::vector<GridAxis> parse_grid(std::string_view text);

struct SweepRow {
    std::map<std::string, double> point;
    int reps = 0;
    int completed = 0;
    double one_site_level_mm = 0.0;
    double two_site_level_mm = 0.0;
    double one_site_percentile = 0.0;  // analytic p(correct) at the mean one-site level
    double equilibrium_percentile = 0.0;
    double jnd_1site_mm = 0.0;
    double jnd_2site_mm = 0.0;
    double two_below_one = 0.0;  // fraction of paired runs
};

/// Cartesian product of the axes, `reps` paired one-site / two-site
/// staircases per point. Rep i of every point uses seed base + i.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::vector<GridAxis>& grid,
                                std::uint64_t base_seed, int reps);

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Human-readable tables for standard output.
void print_aggregate_table(std::ostream& out, const nlohmann::json& aggregate);
void print_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace sumlab
