// Acceptance suite: one PASS/FAIL line per primary criterion; exits nonzero
// when any criterion fails.
//
// Seeds: every criterion draws its seeds from named substreams of
// kAcceptanceSeed ("c1/0", "c1/1", ...), fixed before any result was seen.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "sumlab/core/config.hpp"
#include "sumlab/device/device.hpp"
#include "sumlab/device/wire.hpp"
#include "sumlab/session/replay.hpp"
#include "sumlab/session/simulation.hpp"
#include "sumlab/staircase/equilibrium.hpp"

using namespace sumlab;

namespace {

constexpr std::uint64_t kAcceptanceSeed = 20240601;

// Pinned tolerances.
constexpr double kC1PercentileTol = 0.03;
constexpr double kC1MaxSeconds = 30.0;
constexpr double kC2Target = 0.707;
constexpr double kC2Tol = 0.02;
constexpr int kC3MinSumming = 190;  // 95% of 200
constexpr int kC3MaxMax = 110;      // 55% of 200
constexpr double kC5AnchorMm = 10.4;
constexpr double kC5AnchorN = 4.3;
constexpr double kC9LevelTol = 1e-9;

std::uint64_t seed_for(const std::string& criterion, int i) {
    return substream_seed(kAcceptanceSeed, criterion + "/" + std::to_string(i));
}

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("%s %s %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

ExperimentConfig commanded_config(std::uint64_t seed) {
    ExperimentConfig c;
    c.seed = seed;
    c.logging.drive_device = false;
    c.logging.force_log_hz = 0;
    return c;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Converged levels of `n` one-site staircases and the analytic p(correct)
// at their mean, plus the equilibrium percentile of the same chain.
struct PercentileRun {
    double simulated = 0.0;
    double equilibrium = 0.0;
    int incomplete = 0;
};

PercentileRun converged_percentile(const std::string& tag, double ratio, int n) {
    const ObserverParams params = observer_preset("paper-like");
    const Observer observer(params, 0);
    std::vector<double> levels;
    PercentileRun out;
    std::optional<StaircaseRun> any;
    for (int i = 0; i < n; ++i) {
        ExperimentConfig c = commanded_config(seed_for(tag, i));
        c.observer = params;
        c.staircase.step_ratio = ratio;
        StaircaseRun run = simulate_staircase(c, 1);
        if (!run.estimate) {
            ++out.incomplete;
            continue;
        }
        levels.push_back(run.estimate->converged_level_mm);
        any = std::move(run);
    }
    if (levels.empty()) return out;
    const double ref = any->config.reference_mm;
    auto p_correct = [&](double level) { return observer.psychometric(ref, level, 1); };
    out.simulated = p_correct(mean(levels));
    EquilibriumOptions options;
    options.step_up_mm = any->config.step_up_mm;
    options.lower_mm = any->asr.detection_threshold_mm();
    options.upper_mm = any->asr.max_comfortable_mm();
    options.start_mm = any->config.start_comparison_mm;
    out.equilibrium = equilibrium_percentile(ratio, p_correct, options).percentile;
    return out;
}

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const PercentileRun r = converged_percentile("c1", kDefaultStepRatio, 500);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = r.incomplete == 0 && std::abs(r.simulated - r.equilibrium) <= kC1PercentileTol && seconds < kC1MaxSeconds;
    report("[C1 equilibrium percentile]", pass,
           fmt("simulated %.4f equilibrium %.4f |diff| %.4f <= %.2f; incomplete %d; %.2f s < %.0f s", r.simulated,
               r.equilibrium, std::abs(r.simulated - r.equilibrium), kC1PercentileTol, r.incomplete, seconds,
               kC1MaxSeconds));
}

void criterion2() {
    const PercentileRun r = converged_percentile("c2", 1.0, 1000);
    const bool pass = r.incomplete == 0 && std::abs(r.simulated - kC2Target) <= kC2Tol;
    report("[C2 ratio 1.0 percentile]", pass,
           fmt("converged percentile %.4f, target %.3f +- %.2f (equilibrium oracle %.4f); incomplete %d", r.simulated,
               kC2Target, kC2Tol, r.equilibrium, r.incomplete));
}

// Two-site converged level below one-site, counted over paired sessions.
int two_site_wins(const char* preset, const std::string& tag) {
    int wins = 0;
    for (int i = 0; i < 200; ++i) {
        ExperimentConfig c = commanded_config(seed_for(tag, i));
        c.observer = observer_preset(preset);
        const SimulationResult r = run_simulated_session(c);
        if (r.phase != Phase::Done) continue;
        const auto& s = r.summary["staircases"];
        wins += s["2site"]["jnd"]["converged_level_mm"].get<double>() < s["1site"]["jnd"]["converged_level_mm"].get<double>();
    }
    return wins;
}

void criterion3() {
    const int summing = two_site_wins("paper-like", "c3");
    const int max_comb = two_site_wins("non-summing", "c3");
    report("[C3 two-site below one-site]", summing >= kC3MinSumming && max_comb <= kC3MaxMax,
           fmt("exponent 1: %d/200 (need >= %d); max-combination: %d/200 (need <= %d)", summing, kC3MinSumming,
               max_comb, kC3MaxMax));
}

// Reversals re-derived from outcomes alone: a move happens after an
// incorrect trial (up) or the second consecutive correct one (down); a
// reversal is a move opposite to the previous move.
JndEstimate brute_force_estimate(const StaircaseState& state, double reference_mm, int k) {
    std::vector<double> reversals;
    int run = 0;
    int last = 0;
    for (const auto& t : state.trial_log) {
        if (t.outcome == TrialOutcome::Discarded) continue;
        int move = 0;
        if (t.outcome == TrialOutcome::Incorrect) {
            run = 0;
            move = +1;
        } else if (++run == 2) {
            run = 0;
            move = -1;
        }
        if (move == 0) continue;
        if (last != 0 && move != last) reversals.push_back(t.comparison_mm);
        last = move;
        if (static_cast<int>(reversals.size()) == 16) break;
    }
    JndEstimate e;
    e.reversals_used = k;
    double sum = 0.0;
    for (std::size_t i = reversals.size() - k; i < reversals.size(); ++i) sum += reversals[i];
    e.converged_level_mm = sum / k;
    double ss = 0.0;
    for (std::size_t i = reversals.size() - k; i < reversals.size(); ++i) {
        ss += (reversals[i] - e.converged_level_mm) * (reversals[i] - e.converged_level_mm);
    }
    e.converged_level_sd_mm = std::sqrt(ss / (k - 1));
    e.jnd_delta_mm = e.converged_level_mm - reference_mm;
    return e;
}

void criterion4() {
    int checked = 0;
    int mismatches = 0;
    for (int i = 0; checked < 1000; ++i) {
        Rng rng(seed_for("c4", i));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        ExperimentConfig c = commanded_config(rng());
        c.staircase.step_up_mm = 0.1 + 0.9 * u(rng);
        c.staircase.step_ratio = 0.5 + 0.5 * u(rng);
        c.staircase.equal_counts_as = u(rng) < 0.5 ? EqualPolicy::Incorrect : EqualPolicy::Ignore;
        c.observer.noise_floor = 0.5 + 3.0 * u(rng);
        c.observer.equality_band = 0.5 * u(rng);
        const StaircaseRun run = simulate_staircase(c, u(rng) < 0.5 ? 1 : 2);
        if (!run.estimate) continue;
        ++checked;
        if (!(brute_force_estimate(run.state, run.config.reference_mm, 3) == *run.estimate)) ++mismatches;
    }
    report("[C4 estimate_jnd brute force]", mismatches == 0,
           fmt("%d random completed staircases, %d not bit-identical", checked, mismatches));
}

void criterion5() {
    const DeviceParams params;
    SimulatedDevice device(params, seed_for("c5", 0));
    const ChannelId ch{0};
    device.set_target(ch, kC5AnchorMm);
    device.settle();
    const double anchor = device.steady_state_force(ch);
    const bool anchor_ok = std::abs(anchor - kC5AnchorN) <= params.sensor.resolution_n + 1e-12;

    bool monotone = true;
    double previous = -1.0;
    int points = 0;
    for (int i = 0; i <= 200; ++i, ++points) {
        device.set_target(ch, i * 0.1);
        device.settle();
        const double f = device.steady_state_force(ch);
        if (f < previous) monotone = false;
        previous = f;
    }
    report("[C5 device force anchor]", anchor_ok && monotone,
           fmt("force at %.1f mm = %.2f N (target %.1f +- %.2f N); monotone over %d settled points 0..20 mm: %s",
               kC5AnchorMm, anchor, kC5AnchorN, params.sensor.resolution_n, points, monotone ? "yes" : "no"));
}

void criterion6() {
    static constexpr Opcode kOpcodes[] = {Opcode::SetTarget, Opcode::GetPos,    Opcode::GetForce, Opcode::SetGains,
                                          Opcode::Calibrate, Opcode::Ack,       Opcode::Nak};
    Rng rng(seed_for("c6", 0));
    int round_trip_failures = 0;
    int worst = 255;
    std::size_t positions = 0;
    for (int n = 0; n < 10000; ++n) {
        const Opcode op = kOpcodes[uniform_below(rng, 7)];
        std::vector<std::uint8_t> payload(payload_size(op));
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        const WireFrame frame = make_frame(static_cast<std::uint8_t>(uniform_below(rng, 4)), op, payload);
        const auto bytes = encode_frame(frame);
        if (!(decode_frame(bytes) == frame)) ++round_trip_failures;
        // Of the 256 values a position can hold, only the original may decode.
        for (std::size_t pos = 0; pos < bytes.size(); ++pos, ++positions) {
            int rejected = 0;
            for (int v = 0; v < 256; ++v) {
                if (v == bytes[pos]) continue;
                auto bad = bytes;
                bad[pos] = static_cast<std::uint8_t>(v);
                try {
                    decode_frame(bad);
                } catch (const FrameError&) {
                    ++rejected;
                }
            }
            worst = std::min(worst, rejected);
        }
    }
    report("[C6 frame integrity]", round_trip_failures == 0 && worst == 255,
           fmt("10000 random frames, %d round-trip failures; single-byte sweep over %zu positions: worst position "
               "rejects %d of 255 substitutes (need all 255, i.e. 255/256 values)",
               round_trip_failures, positions, worst));
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string live_log(const ExperimentConfig& config, std::shared_ptr<const SessionEngine>* final_state = nullptr) {
    auto sink = std::make_unique<MemoryLogSink>();
    auto* mem = sink.get();
    auto session = Session::create("s-000001", config, "", std::move(sink));
    drive_to_completion(*session, SimulatedParticipant(config));
    if (final_state) *final_state = session->snapshot();
    return mem->text();
}

// Crashes the writer after `k` records (torn when `torn`), recovers and
// finishes. True when the final log equals `reference`.
bool crash_and_recover(const ExperimentConfig& config, const std::filesystem::path& path, std::size_t k, bool torn,
                       const std::string& reference) {
    std::filesystem::remove(path);
    auto sink = std::make_unique<FileLogSink>(path);
    sink->set_crash_plan({k, torn});
    try {
        auto session = Session::create("s-000001", config, "", std::move(sink));
        drive_to_completion(*session, SimulatedParticipant(config));
    } catch (const InjectedCrash&) {
    }
    const std::string on_disk = slurp(path);
    if (on_disk != reference.substr(0, on_disk.size())) return false;
    if (parse_log(on_disk).committed_records == 0) return true;  // nothing was acknowledged
    auto recovered = Session::recover(path);
    drive_to_completion(*recovered, SimulatedParticipant(config));
    return slurp(path) == reference;
}

void criterion7() {
    // Replay of device-driven sessions with force logging.
    int replay_mismatches = 0;
    int sessions = 0;
    for (int i = 0; i < 3; ++i, ++sessions) {
        ExperimentConfig config;
        config.seed = seed_for("c7", i);
        std::shared_ptr<const SessionEngine> live;
        const std::string text = live_log(config, &live);
        const ReplayOutcome r = replay_log(parse_log(text));
        const bool same = r.engine.staircase(1)->estimate() == live->staircase(1)->estimate() &&
                          r.engine.staircase(2)->estimate() == live->staircase(2)->estimate() &&
                          r.engine.ordering_metrics() == live->ordering_metrics() &&
                          trace_csv(r.engine, 1) == trace_csv(*live, 1) &&
                          trace_csv(r.engine, 2) == trace_csv(*live, 2) &&
                          r.engine.summary().dump() == live->summary().dump() && live_log(config) == text;
        if (!same) ++replay_mismatches;
    }

    // Crash at every record boundary of a commanded session, alternating
    // clean and torn writes, plus sampled points of a device-driven one.
    const auto dir = std::filesystem::temp_directory_path() / ("sumlab-acceptance-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto path = dir / "s-000001.ndjson";
    int crash_points = 0;
    int divergent = 0;
    {
        const ExperimentConfig config = commanded_config(seed_for("c7-crash", 0));
        const std::string reference = live_log(config);
        const std::size_t records = parse_log(reference).records.size();
        for (std::size_t k = 0; k < records; ++k, ++crash_points) {
            if (!crash_and_recover(config, path, k, k % 2 == 1, reference)) ++divergent;
        }
    }
    {
        ExperimentConfig config;
        config.seed = seed_for("c7-crash", 1);
        config.logging.force_log_hz = 10;
        const std::string reference = live_log(config);
        const std::size_t records = parse_log(reference).records.size();
        for (std::size_t k = 0; k < records; k += records / 6 + 1, ++crash_points) {
            if (!crash_and_recover(config, path, k, true, reference)) ++divergent;
        }
    }
    std::filesystem::remove_all(dir);
    report("[C7 replay and crash recovery]", replay_mismatches == 0 && divergent == 0,
           fmt("%d device-driven sessions replayed, %d mismatches; %d crash points, %d divergent recoveries", sessions,
               replay_mismatches, crash_points, divergent));
}

void criterion8() {
    int perfect = 0;
    for (int i = 0; i < 100; ++i) {
        ExperimentConfig c = commanded_config(seed_for("c8", i));
        c.ordering.responder = OrderingResponderKind::SumIntensity;
        const SimulationResult r = run_simulated_session(c);
        if (r.phase != Phase::Done) continue;
        const auto& o = r.summary["ordering"];
        perfect += o["endpoints_correct"].get<bool>() && o["kendall_tau_b"].get<double>() == 1.0;
    }
    report("[C8 sum-intensity ordering]", perfect == 100,
           fmt("%d/100 sessions with endpoints_correct and tau_b == 1.0", perfect));
}

struct TraceRow {
    double level;
    bool correct;
    bool reversal;
    bool discarded;
};

std::vector<TraceRow> parse_trace(const std::string& csv) {
    std::vector<TraceRow> rows;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string index, level, correct, reversal, discarded;
        std::getline(fields, index, ',');
        std::getline(fields, level, ',');
        std::getline(fields, correct, ',');
        std::getline(fields, reversal, ',');
        std::getline(fields, discarded, ',');
        rows.push_back({std::stod(level), correct == "1", reversal == "1", discarded == "1"});
    }
    return rows;
}

void criterion9() {
    ExperimentConfig config;
    config.seed = seed_for("c9", 0);
    const SimulationResult result = run_simulated_session(config);
    const double up = config.staircase.step_up_mm;
    const double down = up * config.staircase.step_ratio;
    const double lo = result.summary["asr"]["detection_threshold_mm"];
    const double hi = result.summary["asr"]["max_comfortable_mm"];

    std::string detail;
    bool pass = result.phase == Phase::Done;
    for (const auto& [name, csv] : {std::pair{"1site", result.trace_1site}, std::pair{"2site", result.trace_2site}}) {
        const auto rows = parse_trace(csv);
        int reversals = 0;
        int bad_increments = 0;
        int moves = 0;
        int run = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            reversals += rows[i].reversal;
            if (rows[i].discarded) continue;
            double step = 0.0;  // pre-clamp increment by the 2-down/1-up rule
            if (!rows[i].correct) {
                run = 0;
                step = +up;
            } else if (++run == 2) {
                run = 0;
                step = -down;
            }
            if (i + 1 == rows.size()) break;
            const double next = rows[i + 1].level;
            const double expected = std::clamp(rows[i].level + step, lo, hi);
            if (step != 0.0) ++moves;
            if (std::abs(next - expected) > kC9LevelTol) ++bad_increments;
        }
        pass = pass && reversals == 16 && bad_increments == 0;
        detail += fmt("%s: %d trials, %d reversals, %d moves, %d off-rule increments; ", name, static_cast<int>(rows.size()),
                      reversals, moves, bad_increments);
    }
    detail += fmt("steps +%.4f / -%.6f mm", up, down);
    report("[C9 staircase trace]", pass, detail);
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void()>>> criteria = {
        {"C1", criterion1}, {"C2", criterion2}, {"C3", criterion3}, {"C4", criterion4}, {"C5", criterion5},
        {"C6", criterion6}, {"C7", criterion7}, {"C8", criterion8}, {"C9", criterion9}};
    for (const auto& [id, run] : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            report(id, false, std::string("threw: ") + e.what());
        }
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
