#include "sumlab/cli/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "sumlab/core/format.hpp"
#include "sumlab/plot/svg.hpp"
#include "sumlab/staircase/equilibrium.hpp"

namespace sumlab {

using nlohmann::json;

std::string_view to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Simulate: return "simulate";
        case RunMode::Serve: return "serve";
        case RunMode::Replay: return "replay";
        case RunMode::Sweep: return "sweep";
    }
    return "simulate";
}

RunMode run_mode_from_string(std::string_view text) {
    for (RunMode m : {RunMode::Simulate, RunMode::Serve, RunMode::Replay, RunMode::Sweep}) {
        if (to_string(m) == text) return m;
    }
    throw ConfigError("mode", "unknown mode '" + std::string(text) + "' (simulate, serve, replay, sweep)");
}

void RunManifest::validate() const {
    if (reps < 1) throw ConfigError("reps", "must be >= 1");
    if (workers < 1) throw ConfigError("workers", "must be >= 1");
    if (mode == RunMode::Sweep && grid.empty()) throw ConfigError("grid", "sweep needs a non-empty grid");
    if (mode == RunMode::Replay && replay_logs.empty()) throw ConfigError("log", "replay needs at least one log file");
    if (mode == RunMode::Serve && (port < 0 || port > 65535)) throw ConfigError("port", "must be in [0, 65535]");
}

ExperimentConfig manifest_config(const RunManifest& manifest) {
    ExperimentConfig config = manifest.config_path ? load_config(*manifest.config_path) : ExperimentConfig{};
    if (manifest.seed) config.seed = *manifest.seed;
    config.validate();
    return config;
}

std::uint64_t rep_seed(std::uint64_t base, int index) { return base + static_cast<std::uint64_t>(index); }

namespace {

std::string run_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run-%04d", index + 1);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

json stats(const std::vector<double>& v) {
    if (v.empty()) return {{"n", 0}, {"mean", nullptr}, {"sd", nullptr}};
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return {{"n", v.size()}, {"mean", mean}, {"sd", sd}};
}

std::string number_text(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

json number_json(double v) { return std::isfinite(v) ? json(v) : json(number_text(v)); }

double parse_number(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) throw ConfigError("grid", "bad number '" + text + "'");
    return v;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        parts.push_back(trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return parts;
}

void apply_point(ExperimentConfig& c, const std::string& key, double v) {
    if (key == "ratio") {
        c.staircase.step_ratio = v;
    } else if (key == "exponent") {
        c.observer.summation_exponent = v;
    } else if (key == "step_up") {
        c.staircase.step_up_mm = v;
    } else if (key == "noise_floor") {
        c.observer.noise_floor = v;
    }
}

}  // namespace

std::vector<RunRecord> simulate_runs(const ExperimentConfig& config, std::uint64_t base_seed, int reps, int workers,
                                     const std::optional<std::filesystem::path>& log_dir) {
    if (reps < 1) throw ConfigError("reps", "must be >= 1");
    if (log_dir) std::filesystem::create_directories(*log_dir);
    std::vector<RunRecord> runs(static_cast<std::size_t>(reps));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (int i = next++; i < reps; i = next++) {
            try {
                ExperimentConfig c = config;
                c.seed = rep_seed(base_seed, i);
                std::unique_ptr<LogSink> sink;
                if (log_dir) {
                    const auto path = *log_dir / (run_name(i) + ".ndjson");
                    std::filesystem::remove(path);
                    sink = std::make_unique<FileLogSink>(path);
                }
                runs[static_cast<std::size_t>(i)] = {i, c.seed, run_simulated_session(c, std::move(sink), run_name(i))};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int threads = std::min(workers, reps);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return runs;
}

json aggregate_runs(std::vector<const RunRecord*> runs) {
    std::sort(runs.begin(), runs.end(), [](const RunRecord* a, const RunRecord* b) { return a->index < b->index; });
    std::vector<double> level1, level2, jnd1, jnd2, tau;
    int done = 0;
    int aborted = 0;
    int two_below = 0;
    int endpoints = 0;
    for (const RunRecord* r : runs) {
        const json& s = r->result.summary;
        if (r->result.phase == Phase::Aborted) ++aborted;
        if (r->result.phase != Phase::Done) continue;
        ++done;
        const json& e1 = s["staircases"]["1site"]["jnd"];
        const json& e2 = s["staircases"]["2site"]["jnd"];
        level1.push_back(e1["converged_level_mm"]);
        level2.push_back(e2["converged_level_mm"]);
        jnd1.push_back(e1["jnd_delta_mm"]);
        jnd2.push_back(e2["jnd_delta_mm"]);
        two_below += level2.back() < level1.back();
        tau.push_back(s["ordering"]["kendall_tau_b"]);
        endpoints += s["ordering"]["endpoints_correct"].get<bool>();
    }
    auto fraction = [&](int k) { return done > 0 ? json(static_cast<double>(k) / done) : json(nullptr); };
    return {{"runs", runs.size()},
            {"completed", done},
            {"aborted", aborted},
            {"one_site", {{"converged_level_mm", stats(level1)}, {"jnd_mm", stats(jnd1)}}},
            {"two_site", {{"converged_level_mm", stats(level2)}, {"jnd_mm", stats(jnd2)}}},
            {"two_site_below_one_site", fraction(two_below)},
            {"ordering", {{"kendall_tau_b", stats(tau)}, {"endpoints_correct", fraction(endpoints)}}}};
}

std::string placements_csv(const SessionEngine& engine) {
    std::ostringstream out;
    out << "label,first_mm,second_mm,position,replays\n";
    if (!engine.ordering() || engine.ordering()->placements().empty()) return out.str();
    const OrderingTask& task = *engine.ordering();
    for (const auto& p : task.placements()) {
        for (const auto& pair : task.pairs()) {
            if (pair.label.letter != p.label) continue;
            const auto level_of = [&](ChannelId ch) {
                const auto it = pair.spec.levels.find(ch);
                return it == pair.spec.levels.end() ? 0.0 : it->second.mm();
            };
            const auto& oc = engine.config().ordering;
            out << p.label << ',' << format_double(level_of(oc.first_channel)) << ','
                << format_double(level_of(oc.second_channel)) << ',' << format_double(p.position) << ','
                << task.replay_count(p.label) << '\n';
        }
    }
    return out.str();
}

json write_simulation_outputs(const std::vector<RunRecord>& runs, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    json per_run = json::array();
    for (const auto& r : runs) {
        const auto dir = out / "runs" / run_name(r.index);
        const SessionEngine& engine = *r.result.engine;
        write_file(dir / "summary.json", r.result.summary.dump(2) + "\n");
        std::vector<TracePanel> panels;
        for (int sites : {1, 2}) {
            const Staircase* sc = engine.staircase(sites);
            if (!sc) continue;
            write_file(dir / (sites == 1 ? "trace_1site.csv" : "trace_2site.csv"), trace_csv(engine, sites));
            panels.push_back({sites == 1 ? "One site" : "Two sites", sc->config().reference_mm, &sc->state()});
        }
        if (!panels.empty()) write_file(dir / "staircase.svg", render_staircase_svg(panels));
        if (engine.ordering() && !engine.ordering()->placements().empty()) {
            write_file(dir / "placements.csv", placements_csv(engine));
            write_file(dir / "ordering.svg", render_ordering_svg(engine.ordering()->placements()));
        }
        json row = {{"run", run_name(r.index)}, {"seed", r.seed}, {"phase", to_string(r.result.phase)}};
        for (const char* key : {"1site", "2site"}) {
            const json& sc = r.result.summary["staircases"];
            row[std::string("jnd_") + key] = sc.contains(key) ? sc[key]["jnd"] : json(nullptr);
        }
        row["ordering"] = r.result.summary["ordering"].is_object()
                              ? json{{"kendall_tau_b", r.result.summary["ordering"]["kendall_tau_b"]},
                                     {"endpoints_correct", r.result.summary["ordering"]["endpoints_correct"]}}
                              : json(nullptr);
        per_run.push_back(std::move(row));
    }
    std::vector<const RunRecord*> ptrs;
    for (const auto& r : runs) ptrs.push_back(&r);
    json aggregate = aggregate_runs(ptrs);
    write_file(out / "runs.json", per_run.dump(2) + "\n");
    write_file(out / "aggregate.json", aggregate.dump(2) + "\n");
    return aggregate;
}

std::vector<GridAxis> parse_grid(std::string_view text) {
    std::vector<GridAxis> axes;
    if (trim(text).empty()) throw ConfigError("grid", "empty grid");
    for (const std::string& part : split(text, ';')) {
        if (part.empty()) continue;
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos) throw ConfigError("grid", "expected key=v1,v2 in '" + part + "'");
        GridAxis axis{trim(part.substr(0, eq)), {}};
        if (axis.key != "ratio" && axis.key != "exponent" && axis.key != "step_up" && axis.key != "noise_floor") {
            throw ConfigError("grid", "unknown parameter '" + axis.key + "' (ratio, exponent, step_up, noise_floor)");
        }
        for (const auto& a : axes) {
            if (a.key == axis.key) throw ConfigError("grid", "parameter '" + axis.key + "' given twice");
        }
        for (const std::string& v : split(std::string_view(part).substr(eq + 1), ',')) {
            if (!v.empty()) axis.values.push_back(parse_number(v));
        }
        if (axis.values.empty()) throw ConfigError("grid", "parameter '" + axis.key + "' has no values");
        axes.push_back(std::move(axis));
    }
    if (axes.empty()) throw ConfigError("grid", "empty grid");
    return axes;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::vector<GridAxis>& grid,
                                std::uint64_t base_seed, int reps) {
    if (grid.empty()) throw ConfigError("grid", "empty grid");
    if (reps < 1) throw ConfigError("reps", "must be >= 1");
    std::vector<std::map<std::string, double>> points{{}};
    for (const auto& axis : grid) {
        std::vector<std::map<std::string, double>> next;
        for (const auto& p : points) {
            for (double v : axis.values) {
                auto q = p;
                q[axis.key] = v;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }

    std::vector<SweepRow> rows;
    for (const auto& point : points) {
        ExperimentConfig c = config;
        for (const auto& [key, v] : point) apply_point(c, key, v);
        try {
            c.validate();
        } catch (const ConfigError& e) {
            throw ConfigError("grid", std::string("point rejected: ") + e.what());
        }
        SweepRow row;
        row.point = point;
        row.reps = reps;
        std::vector<double> l1, l2;
        int below = 0;
        std::optional<StaircaseRun> sample;
        for (int i = 0; i < reps; ++i) {
            c.seed = rep_seed(base_seed, i);
            StaircaseRun one = simulate_staircase(c, 1);
            const StaircaseRun two = simulate_staircase(c, 2);
            if (!one.estimate || !two.estimate) continue;
            ++row.completed;
            l1.push_back(one.estimate->converged_level_mm);
            l2.push_back(two.estimate->converged_level_mm);
            below += l2.back() < l1.back();
            sample = std::move(one);
        }
        if (row.completed > 0) {
            const double n = row.completed;
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < l1.size(); ++i) {
                s1 += l1[i];
                s2 += l2[i];
            }
            row.one_site_level_mm = s1 / n;
            row.two_site_level_mm = s2 / n;
            const double ref = sample->config.reference_mm;
            row.jnd_1site_mm = row.one_site_level_mm - ref;
            row.jnd_2site_mm = row.two_site_level_mm - ref;
            row.two_below_one = below / n;
            const Observer observer(c.observer, 0);
            auto p_correct = [&](double level) { return observer.psychometric(ref, level, 1); };
            row.one_site_percentile = p_correct(row.one_site_level_mm);
            EquilibriumOptions options;
            options.step_up_mm = sample->config.step_up_mm;
            options.lower_mm = sample->asr.detection_threshold_mm();
            options.upper_mm = sample->asr.max_comfortable_mm();
            options.start_mm = sample->config.start_comparison_mm;
            row.equilibrium_percentile =
                equilibrium_percentile(sample->config.step_ratio_down_over_up, p_correct, options).percentile;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json sweep_to_json(const std::vector<SweepRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json point = json::object();
        for (const auto& [k, v] : r.point) point[k] = number_json(v);
        out.push_back({{"point", point},
                       {"reps", r.reps},
                       {"completed", r.completed},
                       {"one_site_level_mm", r.one_site_level_mm},
                       {"two_site_level_mm", r.two_site_level_mm},
                       {"one_site_percentile", r.one_site_percentile},
                       {"equilibrium_percentile", r.equilibrium_percentile},
                       {"jnd_1site_mm", r.jnd_1site_mm},
                       {"jnd_2site_mm", r.jnd_2site_mm},
                       {"two_below_one", r.two_below_one}});
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    if (rows.empty()) return {};
    for (const auto& [k, v] : rows.front().point) out << k << ',';
    out << "reps,completed,one_site_level_mm,two_site_level_mm,one_site_percentile,equilibrium_percentile,"
           "jnd_1site_mm,jnd_2site_mm,two_below_one\n";
    for (const auto& r : rows) {
        for (const auto& [k, v] : r.point) out << number_text(v) << ',';
        out << r.reps << ',' << r.completed << ',' << format_double(r.one_site_level_mm) << ','
            << format_double(r.two_site_level_mm) << ',' << format_double(r.one_site_percentile) << ','
            << format_double(r.equilibrium_percentile) << ',' << format_double(r.jnd_1site_mm) << ','
            << format_double(r.jnd_2site_mm) << ',' << format_double(r.two_below_one) << '\n';
    }
    return out.str();
}

void print_aggregate_table(std::ostream& out, const json& a) {
    auto cell = [](const json& s) {
        std::ostringstream c;
        if (s["mean"].is_null()) {
            c << "-";
        } else {
            c << std::fixed << std::setprecision(3) << s["mean"].get<double>() << " +- " << s["sd"].get<double>();
        }
        return c.str();
    };
    out << "runs " << a["runs"] << ", completed " << a["completed"] << ", aborted " << a["aborted"] << "\n";
    out << std::left << std::setw(12) << "procedure" << std::setw(26) << "converged level (mm)" << "JND (mm)\n";
    out << std::setw(12) << "one-site" << std::setw(26) << cell(a["one_site"]["converged_level_mm"])
        << cell(a["one_site"]["jnd_mm"]) << "\n";
    out << std::setw(12) << "two-site" << std::setw(26) << cell(a["two_site"]["converged_level_mm"])
        << cell(a["two_site"]["jnd_mm"]) << "\n";
    if (!a["two_site_below_one_site"].is_null()) {
        out << "two-site below one-site in " << std::fixed << std::setprecision(3)
            << a["two_site_below_one_site"].get<double>() << " of runs\n";
        out << "ordering tau_b " << cell(a["ordering"]["kendall_tau_b"]) << ", endpoints correct in "
            << a["ordering"]["endpoints_correct"].get<double>() << " of runs\n";
    }
    out.unsetf(std::ios::fixed);
}

void print_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
    if (rows.empty()) return;
    out << std::left;
    for (const auto& [k, v] : rows.front().point) out << std::setw(12) << k;
    out << std::setw(8) << "reps" << std::setw(12) << "level_1s" << std::setw(12) << "level_2s" << std::setw(12)
        << "pct_1s" << std::setw(12) << "pct_equil" << std::setw(12) << "jnd_1s" << std::setw(12) << "jnd_2s"
        << "2s<1s\n";
    for (const auto& r : rows) {
        for (const auto& [k, v] : r.point) out << std::setw(12) << number_text(v);
        auto col = [&](double v) {
            std::ostringstream c;
            c << std::fixed << std::setprecision(4) << v;
            return c.str();
        };
        out << std::setw(8) << r.reps << std::setw(12) << col(r.one_site_level_mm) << std::setw(12)
            << col(r.two_site_level_mm) << std::setw(12) << col(r.one_site_percentile) << std::setw(12)
            << col(r.equilibrium_percentile) << std::setw(12) << col(r.jnd_1site_mm) << std::setw(12)
            << col(r.jnd_2site_mm) << col(r.two_below_one) << "\n";
    }
}

}  // namespace sumlab
