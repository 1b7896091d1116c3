#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sumlab/cli/batch.hpp"
#include "sumlab/errors.hpp"

using namespace sumlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig fast_config(std::uint64_t seed = 5) {
    ExperimentConfig c;
    c.seed = seed;
    c.logging.drive_device = false;
    c.logging.force_log_hz = 0;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sumlab-cli-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SUMLAB_BINARY) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Manifest, RejectsBadValues) {
    RunManifest m;
    m.reps = 0;
    try {
        m.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "reps");
    }
    m = RunManifest{};
    m.mode = RunMode::Sweep;
    EXPECT_THROW(m.validate(), ConfigError);
    m = RunManifest{};
    m.mode = RunMode::Replay;
    EXPECT_THROW(m.validate(), ConfigError);
    EXPECT_THROW(run_mode_from_string("batch"), ConfigError);
    EXPECT_EQ(run_mode_from_string("sweep"), RunMode::Sweep);
}

TEST(Grid, Parses) {
    const auto g = parse_grid("ratio=0.7393,1.0;exponent=1,inf");
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0].key, "ratio");
    EXPECT_EQ(g[0].values, (std::vector<double>{0.7393, 1.0}));
    EXPECT_TRUE(std::isinf(g[1].values[1]));
    EXPECT_THROW(parse_grid(""), ConfigError);
    EXPECT_THROW(parse_grid("ratio="), ConfigError);
    EXPECT_THROW(parse_grid("color=1"), ConfigError);
    EXPECT_THROW(parse_grid("ratio=1;ratio=0.5"), ConfigError);
    EXPECT_THROW(parse_grid("ratio=abc"), ConfigError);
}

TEST(Sweep, SinglePointGivesOneRow) {
    const auto rows = run_sweep(fast_config(), parse_grid("ratio=0.7393"), 100, 2);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].reps, 2);
    EXPECT_EQ(rows[0].point.at("ratio"), 0.7393);
    const std::string csv = sweep_csv(rows);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

// Equal up and down steps with a two-down rule track sqrt(0.5).
TEST(Sweep, EqualStepsTrackTheTransformedRuleLevel) {
    const auto rows = run_sweep(fast_config(), parse_grid("ratio=1.0"), 1, 1);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].equilibrium_percentile, std::sqrt(0.5), 0.01);
}

TEST(Sweep, SummationLowersTwoSiteLevelButMaxDoesNot) {
    const auto rows = run_sweep(fast_config(), parse_grid("exponent=1,inf"), 300, 80);
    ASSERT_EQ(rows.size(), 2u);
    const SweepRow& sum = rows[0];
    const SweepRow& max = rows[1];
    ASSERT_GT(sum.completed, 70);
    ASSERT_GT(max.completed, 70);
    EXPECT_LT(sum.two_site_level_mm, sum.one_site_level_mm - 0.5);
    EXPECT_GT(sum.two_below_one, 0.9);
    EXPECT_NEAR(max.two_site_level_mm, max.one_site_level_mm, 0.5);
    EXPECT_LT(max.two_below_one, 0.7);
}

TEST(Simulate, WorkerCountDoesNotChangeResults) {
    const auto one = simulate_runs(fast_config(), 40, 3, 1);
    const auto three = simulate_runs(fast_config(), 40, 3, 3);
    ASSERT_EQ(one.size(), 3u);
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].index, static_cast<int>(i));
        EXPECT_EQ(one[i].seed, rep_seed(40, static_cast<int>(i)));
        EXPECT_EQ(one[i].result.summary, three[i].result.summary);
        EXPECT_EQ(one[i].result.trace_1site, three[i].result.trace_1site);
    }
}

TEST(Simulate, AggregateIgnoresRecordOrder) {
    const auto runs = simulate_runs(fast_config(), 7, 5, 2);
    std::vector<const RunRecord*> ptrs;
    for (const auto& r : runs) ptrs.push_back(&r);
    const json base = aggregate_runs(ptrs);
    std::mt19937 shuffle_rng(3);
    for (int k = 0; k < 5; ++k) {
        std::shuffle(ptrs.begin(), ptrs.end(), shuffle_rng);
        EXPECT_EQ(aggregate_runs(ptrs).dump(), base.dump());
    }
    EXPECT_EQ(base["runs"], 5);
    EXPECT_EQ(base["completed"].get<int>() + base["aborted"].get<int>(), 5);
    EXPECT_LT(base["two_site"]["converged_level_mm"]["mean"].get<double>(),
              base["one_site"]["converged_level_mm"]["mean"].get<double>());
}

TEST(Simulate, OutputsAreByteIdenticalAcrossReruns) {
    const fs::path a = scratch("rerun-a");
    const fs::path b = scratch("rerun-b");
    write_simulation_outputs(simulate_runs(fast_config(), 11, 2, 1), a);
    write_simulation_outputs(simulate_runs(fast_config(), 11, 2, 2), b);
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    }
    EXPECT_TRUE(fs::exists(a / "aggregate.json"));
    EXPECT_TRUE(fs::exists(a / "runs" / "run-0002" / "placements.csv"));
    const std::string csv = slurp(a / "runs" / "run-0001" / "placements.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "label,first_mm,second_mm,position,replays");
}

TEST(Binary, ExitCodes) {
    const fs::path dir = scratch("binary");
    const std::string out = " --out " + (dir / "o").string();
    EXPECT_EQ(run_cli("--mode simulate --reps 0" + out), 2);
    EXPECT_EQ(run_cli("--mode sweep --grid ''" + out), 2);
    EXPECT_EQ(run_cli("--mode sweep --grid 'hue=1'" + out), 2);
    EXPECT_EQ(run_cli("--mode teleport" + out), 2);
    {
        std::ofstream(dir / "bad.json") << R"({"device": {"stroke_mm": 0}})";
    }
    EXPECT_EQ(run_cli("--mode simulate --config " + (dir / "bad.json").string() + out), 2);
    {
        std::ofstream(dir / "broken.ndjson") << "{\"seq\": 0}\n";
    }
    EXPECT_EQ(run_cli("--mode replay --log " + (dir / "broken.ndjson").string()), 3);

    std::ofstream(dir / "fast.json") << config_to_json(fast_config()).dump();
    const std::string cfg = " --config " + (dir / "fast.json").string();
    EXPECT_EQ(run_cli("--mode simulate --reps 2 --keep-logs" + cfg + out), 0);
    EXPECT_TRUE(fs::exists(dir / "o" / "summary.json"));
    std::string logs;
    for (const auto& entry : fs::directory_iterator(dir / "o" / "logs")) logs += " --log " + entry.path().string();
    EXPECT_EQ(run_cli("--mode replay" + logs), 0);
}
