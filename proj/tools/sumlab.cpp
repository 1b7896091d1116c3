#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "sumlab/cli/batch.hpp"
#include "sumlab/session/http_api.hpp"
#include "sumlab/session/replay.hpp"

using namespace sumlab;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kReplayMismatch = 3 };

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary | std::ios::trunc) << text;
}

// Human table first; the last line of standard output is the summary JSON.
int simulate(const RunManifest& m) {
    const ExperimentConfig config = manifest_config(m);
    const auto runs = simulate_runs(config, config.seed, m.reps, m.workers,
                                    m.write_logs ? std::optional(m.out / "logs") : std::nullopt);
    const json aggregate = write_simulation_outputs(runs, m.out);
    const json summary = {{"mode", "simulate"}, {"seed", config.seed}, {"reps", m.reps}, {"aggregate", aggregate}};
    write_text(m.out / "config.json", config_to_json(config).dump(2) + "\n");
    write_text(m.out / "summary.json", summary.dump(2) + "\n");
    print_aggregate_table(std::cout, aggregate);
    std::cout << summary.dump() << "\n";
    return kOk;
}

int sweep(const RunManifest& m) {
    const ExperimentConfig config = manifest_config(m);
    const auto grid = parse_grid(m.grid);
    const auto rows = run_sweep(config, grid, config.seed, m.reps);
    const json summary = {{"mode", "sweep"}, {"seed", config.seed}, {"reps", m.reps}, {"grid", m.grid},
                          {"rows", sweep_to_json(rows)}};
    write_text(m.out / "sweep.csv", sweep_csv(rows));
    write_text(m.out / "summary.json", summary.dump(2) + "\n");
    print_sweep_table(std::cout, rows);
    std::cout << summary.dump() << "\n";
    return kOk;
}

int replay(const RunManifest& m) {
    json results = json::array();
    for (const auto& path : m.replay_logs) {
        try {
            const ReplayOutcome r = replay_file(path);
            const json summary = r.engine.summary();
            std::cout << path.string() << ": " << r.records << " records, " << r.commands << " commands, phase "
                      << to_string(r.engine.phase()) << ", replay identical\n";
            if (!m.out.empty()) {
                const auto dir = m.out / path.stem();
                write_text(dir / "summary.json", summary.dump(2) + "\n");
                for (int sites : {1, 2}) {
                    const std::string csv = trace_csv(r.engine, sites);
                    if (!csv.empty()) write_text(dir / (sites == 1 ? "trace_1site.csv" : "trace_2site.csv"), csv);
                }
            }
            results.push_back({{"log", path.string()}, {"records", r.records}, {"summary", summary}});
        } catch (const ReplayError& e) {
            std::cerr << "replay mismatch in " << path.string() << ": " << e.what() << "\n";
            return kReplayMismatch;
        }
    }
    std::cout << json{{"mode", "replay"}, {"results", results}}.dump() << "\n";
    return kOk;
}

int serve(const RunManifest& m) {
    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    SessionStore store(m.logs_dir, true);
    for (const auto& [path, why] : store.unrecoverable()) {
        std::cerr << "warning: could not recover " << path.string() << ": " << why << "\n";
    }
    ApiServer server(store, {.host = m.host, .port = m.port, .workers = m.workers});
    const int port = server.bind();
    std::cout << "serving " << store.ids().size() << " sessions from " << m.logs_dir.string() << " on http://"
              << m.host << ":" << port << "/api/v1" << std::endl;
    std::thread listener([&] { server.serve(); });
    int signal = 0;
    sigwait(&stop_signals, &signal);
    server.stop();
    listener.join();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sumlab: staircase discrimination experiments with a simulated pressure device"};
    RunManifest m;
    std::string mode = "simulate";
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out = m.out.string();
    std::string logs_dir = m.logs_dir.string();
    std::vector<std::string> logs;
    app.add_option("--mode", mode, "simulate, serve, replay or sweep")->capture_default_str();
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--reps", m.reps, "repetitions (simulate, sweep)")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "base seed; repetition i uses seed + i (default: config seed)");
    auto* out_opt = app.add_option("--out", out, "output directory (replay: only written when given)")->capture_default_str();
    app.add_option("--grid", m.grid, "sweep grid, e.g. \"ratio=0.7393,1.0;exponent=1,inf\"");
    app.add_option("--workers", m.workers, "worker threads (simulate) or HTTP workers (serve)")->capture_default_str();
    app.add_flag("--keep-logs", m.write_logs, "simulate: write session logs under <out>/logs");
    app.add_option("--log", logs, "replay: session log file(s)");
    app.add_option("--logs", logs_dir, "serve: session log directory")->capture_default_str();
    app.add_option("--host", m.host, "serve: bind address")->capture_default_str();
    app.add_option("--port", m.port, "serve: port (0 picks one)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        m.mode = run_mode_from_string(mode);
        if (!config_path.empty()) m.config_path = config_path;
        if (*seed_opt) m.seed = seed;
        m.out = out;
        if (m.mode == RunMode::Replay && !*out_opt) m.out.clear();
        m.logs_dir = logs_dir;
        for (const auto& l : logs) m.replay_logs.emplace_back(l);
        m.validate();
        switch (m.mode) {
            case RunMode::Simulate: return simulate(m);
            case RunMode::Sweep: return sweep(m);
            case RunMode::Replay: return replay(m);
            case RunMode::Serve: return serve(m);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
