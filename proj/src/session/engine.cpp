#include "sumlab/session/engine.hpp"

#include <cmath>
#include <sstream>

#include "sumlab/session/event_log.hpp"

namespace sumlab {

using nlohmann::json;

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::Asr: return "ASR";
        case Phase::Staircase1Site: return "STAIRCASE_1SITE";
        case Phase::Staircase2Site: return "STAIRCASE_2SITE";
        case Phase::Ordering: return "ORDERING";
        case Phase::Done: return "DONE";
        case Phase::Aborted: return "ABORTED";
    }
    return "ASR";
}

Phase phase_from_string(std::string_view text) {
    for (Phase p : {Phase::Asr, Phase::Staircase1Site, Phase::Staircase2Site, Phase::Ordering, Phase::Done,
                    Phase::Aborted}) {
        if (to_string(p) == text) return p;
    }
    throw ConfigError("phase", "unknown phase '" + std::string(text) + "'");
}

std::string_view to_string(PresentationKind kind) {
    switch (kind) {
        case PresentationKind::AsrStimulus: return "asr";
        case PresentationKind::StimulusPair: return "pair";
        case PresentationKind::OrderingPair: return "ordering";
    }
    return "asr";
}

namespace {

json spec_to_json(const StimulusSpec& spec) {
    json levels = json::object();
    for (const auto& [ch, level] : spec.levels) levels[std::to_string(ch.index())] = level.mm();
    return {{"levels", levels}, {"hold_ms", spec.timing.hold_ms}, {"gap_ms", spec.timing.gap_ms}};
}

json forces_to_json(const std::map<ChannelId, double>& forces) {
    json out = json::object();
    for (const auto& [ch, f] : forces) out[std::to_string(ch.index())] = f;
    return out;
}

json estimate_to_json(const JndEstimate& e) {
    return {{"converged_level_mm", e.converged_level_mm},
            {"converged_level_sd_mm", e.converged_level_sd_mm},
            {"jnd_delta_mm", e.jnd_delta_mm},
            {"reversals_used", e.reversals_used}};
}

std::string_view to_string(TrialOutcome o) {
    switch (o) {
        case TrialOutcome::Correct: return "correct";
        case TrialOutcome::Incorrect: return "incorrect";
        case TrialOutcome::Discarded: return "discarded";
    }
    return "incorrect";
}

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::None: return "none";
        case Direction::Up: return "up";
        case Direction::Down: return "down";
    }
    return "none";
}

std::string_view to_string(CommandKind kind) {
    switch (kind) {
        case CommandKind::AsrSignal: return "asr";
        case CommandKind::Judgment: return "judgment";
        case CommandKind::Presented: return "presented";
        case CommandKind::Replay: return "replay";
        case CommandKind::Placements: return "placements";
        case CommandKind::Abort: return "abort";
    }
    return "judgment";
}

std::string procedure_name(int sites) { return sites == 1 ? "1site" : "2site"; }

}  // namespace

json presentation_to_json(const Presentation& p) {
    json out = {{"id", p.id}, {"phase", to_string(p.phase)}, {"kind", to_string(p.kind)}};
    json stimuli = json::array();
    for (const auto& s : p.stimuli) stimuli.push_back(spec_to_json(s));
    out["stimuli"] = std::move(stimuli);
    if (p.kind == PresentationKind::StimulusPair) {
        out["reference_first"] = p.reference_first;
        out["trial_index"] = p.trial_index;
    }
    if (p.kind == PresentationKind::OrderingPair) {
        out["label"] = std::string(1, p.label);
        out["replay"] = p.replay;
    }
    if (!p.hold_force_n.empty()) {
        json forces = json::array();
        for (const auto& f : p.hold_force_n) forces.push_back(forces_to_json(f));
        out["hold_force_n"] = std::move(forces);
    }
    return out;
}

json command_to_json(const Command& c) {
    json out = {{"kind", to_string(c.kind)}};
    if (!c.token.empty()) out["token"] = c.token;
    if (c.presentation_id) out["presentation_id"] = *c.presentation_id;
    switch (c.kind) {
        case CommandKind::AsrSignal: out["signal"] = to_string(c.signal); break;
        case CommandKind::Judgment:
            out["judgment"] = to_string(c.response.judgment);
            out["latency_ms"] = c.response.latency_ms;
            break;
        case CommandKind::Presented: break;
        case CommandKind::Replay: out["label"] = std::string(1, c.label); break;
        case CommandKind::Placements: {
            json list = json::array();
            for (const auto& p : c.placements) list.push_back({{"label", std::string(1, p.label)}, {"position", p.position}});
            out["placements"] = std::move(list);
            break;
        }
        case CommandKind::Abort: out["reason"] = c.reason; break;
    }
    return out;
}

Command command_from_json(const json& body) {
    if (!body.is_object()) throw ConfigError("<body>", "expected an object");
    auto str = [&](const char* key) -> std::string {
        if (!body.contains(key) || !body[key].is_string()) throw ConfigError(key, "expected a string");
        return body[key].get<std::string>();
    };
    auto label_of = [](const json& v, const std::string& field) {
        if (!v.is_string() || v.get<std::string>().size() != 1) throw ConfigError(field, "expected a single letter A-I");
        const char c = v.get<std::string>()[0];
        PairLabel::from_letter(c);
        return c;
    };
    Command c;
    const std::string kind = str("kind");
    if (body.contains("token")) c.token = str("token");
    if (body.contains("presentation_id")) {
        if (!body["presentation_id"].is_number_unsigned()) throw ConfigError("presentation_id", "expected an id");
        c.presentation_id = body["presentation_id"].get<std::uint64_t>();
    }
    if (kind == "asr") {
        c.kind = CommandKind::AsrSignal;
        c.signal = asr_signal_from_string(str("signal"));
    } else if (kind == "judgment") {
        c.kind = CommandKind::Judgment;
        c.response.judgment = judgment_from_string(str("judgment"));
        if (body.contains("latency_ms")) {
            if (!body["latency_ms"].is_number_integer() || body["latency_ms"].get<long long>() < 0)
                throw ConfigError("latency_ms", "expected a non-negative integer");
            c.response.latency_ms = body["latency_ms"].get<int>();
        }
    } else if (kind == "presented") {
        c.kind = CommandKind::Presented;
    } else if (kind == "replay") {
        c.kind = CommandKind::Replay;
        if (!body.contains("label")) throw ConfigError("label", "required");
        c.label = label_of(body["label"], "label");
    } else if (kind == "placements") {
        c.kind = CommandKind::Placements;
        if (!body.contains("placements") || !body["placements"].is_array())
            throw ConfigError("placements", "expected an array");
        for (std::size_t i = 0; i < body["placements"].size(); ++i) {
            const json& p = body["placements"][i];
            const std::string field = "placements[" + std::to_string(i) + "]";
            if (!p.is_object() || !p.contains("label") || !p.contains("position") || !p["position"].is_number())
                throw ConfigError(field, "expected {label, position}");
            c.placements.push_back({label_of(p["label"], field + ".label"), p["position"].get<double>()});
        }
    } else if (kind == "abort") {
        c.kind = CommandKind::Abort;
        if (body.contains("reason")) c.reason = str("reason");
    } else {
        throw ConfigError("kind", "unknown command kind '" + kind + "'");
    }
    return c;
}

SessionEngine::SessionEngine(std::string session_id, ExperimentConfig config, std::string client_token)
    : id_(std::move(session_id)), config_(std::move(config)), client_token_(std::move(client_token)) {
    config_.validate();
}

json SessionEngine::event(std::string_view type) {
    return {{"seq", next_seq_++}, {"t_ms", clock_ms_}, {"type", type}};
}

const Staircase* SessionEngine::staircase(int sites) const {
    const auto& sc = sites == 1 ? staircase1_ : staircase2_;
    return sc ? &*sc : nullptr;
}

std::optional<OrderingMetrics> SessionEngine::ordering_metrics() const {
    if (!ordering_ || ordering_->status() != OrderingStatus::Complete) return std::nullopt;
    return sumlab::ordering_metrics(ordering_->placements(), ordering_->pairs());
}

void SessionEngine::set_phase(Batch& batch, Phase to, const std::string& reason) {
    json e = event("phase");
    e["from"] = to_string(phase_);
    e["to"] = to_string(to);
    if (!reason.empty()) e["reason"] = reason;
    batch.push_back(std::move(e));
    phase_ = to;
}

void SessionEngine::abort(Batch& batch, const std::string& reason) {
    abort_reason_ = reason.empty() ? "aborted" : reason;
    pending_.reset();
    if (ordering_) ordering_->abort();
    set_phase(batch, Phase::Aborted, abort_reason_);
}

std::vector<json> SessionEngine::start() {
    if (started_) throw ProtocolError("session already started");
    started_ = true;
    Batch batch;
    json header = event("header");
    header["format"] = kLogFormat;
    header["version"] = kLogVersion;
    header["session_id"] = id_;
    header["client_token"] = client_token_;
    header["config"] = config_to_json(config_);
    batch.push_back(std::move(header));

    if (config_.logging.drive_device) device_.emplace(config_.device, substream_seed(config_.seed, "device"));
    asr_.emplace(config_.asr.channels, config_.asr.step_mm, config_.device.actuator.stroke_mm, config_.timing);
    next_asr(batch);
    batch.back()["commit"] = true;
    return batch;
}

std::map<ChannelId, double> SessionEngine::drive_stimulus(Batch& batch, std::uint64_t presentation_id,
                                                          const StimulusSpec& spec) {
    DeviceLink& link = *device_;
    SimulatedDevice& dev = link.device();
    const int rate = config_.device.actuator.tick_rate_hz;
    const int log_hz = config_.logging.force_log_hz;
    const std::int64_t every = std::max(1, rate / (log_hz > 0 ? log_hz : 50));
    std::int64_t ticks = 0;
    std::map<ChannelId, std::pair<double, int>> hold;

    auto settled = [&] {
        for (const auto& [ch, level] : spec.levels) {
            const auto& a = dev.actuator(ch);
            if (std::abs(a.position_mm - a.target_mm) > 0.005 || std::abs(a.velocity_mm_s) >= 0.05) return false;
        }
        return true;
    };
    auto step = [&](bool in_hold) {
        dev.tick();
        ++ticks;
        clock_ms_ = dev.t_ms();
        if (ticks % every != 0) return;
        for (const auto& [ch, level] : spec.levels) {
            const double f = link.force(ch);
            if (log_hz > 0) {
                json e = event("force");
                e["presentation_id"] = presentation_id;
                e["channel"] = ch.index();
                e["force_n"] = f;
                batch.push_back(std::move(e));
            }
            if (in_hold) {
                hold[ch].first += f;
                ++hold[ch].second;
            }
        }
    };

    const std::int64_t settle_limit = 3 * std::int64_t{rate};
    for (const auto& [ch, level] : spec.levels) link.set_target(ch, level.mm());
    for (std::int64_t t = 0; t < settle_limit && !settled(); ++t) step(false);
    const std::int64_t hold_ticks = std::int64_t{spec.timing.hold_ms} * rate / 1000;
    for (std::int64_t t = 0; t < hold_ticks; ++t) step(true);
    std::map<ChannelId, double> means;
    for (const auto& [ch, level] : spec.levels) {
        const auto& [sum, n] = hold[ch];
        means[ch] = n > 0 ? sum / n : link.force(ch);
    }
    for (const auto& [ch, level] : spec.levels) link.set_target(ch, 0.0);
    for (std::int64_t t = 0; t < settle_limit && !settled(); ++t) step(false);
    const std::int64_t gap_ticks = std::int64_t{spec.timing.gap_ms} * rate / 1000;
    for (std::int64_t t = 0; t < gap_ticks; ++t) step(false);
    return means;
}

void SessionEngine::present(Batch& batch, Presentation p) {
    p.id = next_presentation_++;
    p.phase = phase_;
    json e = event("presentation");
    e["presentation"] = presentation_to_json(p);
    batch.push_back(std::move(e));
    if (device_) {
        for (const auto& spec : p.stimuli) p.hold_force_n.push_back(drive_stimulus(batch, p.id, spec));
        json done = event("presented");
        done["presentation_id"] = p.id;
        json forces = json::array();
        for (const auto& f : p.hold_force_n) forces.push_back(forces_to_json(f));
        done["hold_force_n"] = std::move(forces);
        batch.push_back(std::move(done));
    } else {
        for (const auto& spec : p.stimuli) clock_ms_ += spec.timing.hold_ms + spec.timing.gap_ms;
    }
    pending_ = std::move(p);
}

void SessionEngine::next_asr(Batch& batch) {
    Presentation p;
    p.kind = PresentationKind::AsrStimulus;
    p.stimuli.push_back(asr_->pending());
    present(batch, std::move(p));
}

void SessionEngine::begin_staircase(Batch& batch, int sites) {
    set_phase(batch, sites == 1 ? Phase::Staircase1Site : Phase::Staircase2Site);
    const ChannelSet& channels = sites == 1 ? config_.staircase.single_site : config_.staircase.two_site;
    const AsrResult& asr = registry_.at(channels);
    const StaircaseConfig c = staircase_config(config_, asr, sites);
    try {
        (sites == 1 ? staircase1_ : staircase2_).emplace(c, asr);
    } catch (const ConfigError& e) {
        abort(batch, std::string("staircase configuration rejected: ") + e.what());
        return;
    }
    next_pair(batch);
}

void SessionEngine::next_pair(Batch& batch) {
    const int sites = phase_ == Phase::Staircase1Site ? 1 : 2;
    Staircase& sc = sites == 1 ? *staircase1_ : *staircase2_;
    if (static_cast<int>(sc.state().trial_log.size()) >= config_.staircase.trial_cap) {
        abort(batch, "trial cap reached before the staircase completed");
        return;
    }
    const PairPresentation pres = sc.next_trial();
    Presentation p;
    p.kind = PresentationKind::StimulusPair;
    p.stimuli = {pres.first, pres.second};
    p.reference_first = pres.reference_first;
    p.trial_index = sc.pending()->trial_index;
    present(batch, std::move(p));
}

void SessionEngine::begin_ordering(Batch& batch) {
    set_phase(batch, Phase::Ordering);
    const auto& oc = config_.ordering;
    const AsrResult* asr = registry_.find({oc.first_channel, oc.second_channel});
    ordering_.emplace(build_pair_set(asr, oc.first_channel, oc.second_channel, config_.timing),
                      substream_seed(config_.seed, "ordering"));
    json e = event("ordering_order");
    std::string order;
    for (std::size_t i : ordering_->order()) order += ordering_->pairs()[i].label.letter;
    e["order"] = order;
    batch.push_back(std::move(e));
    next_ordering(batch);
}

void SessionEngine::next_ordering(Batch& batch) {
    const auto next = ordering_->pending();
    if (!next) return;  // all presented: waiting for replays or placements
    Presentation p;
    p.kind = PresentationKind::OrderingPair;
    p.stimuli = {next->spec};
    p.label = next->label.letter;
    present(batch, std::move(p));
}

std::vector<json> SessionEngine::handle(const Command& command) {
    if (!started_) throw ProtocolError("session has not started");
    if (!command.token.empty() && tokens_.contains(command.token)) return {};
    if (is_terminal(phase_)) throw ProtocolError("session is " + std::string(to_string(phase_)));
    if (command.presentation_id && (!pending_ || pending_->id != *command.presentation_id)) {
        throw ProtocolError("presentation " + std::to_string(*command.presentation_id) + " is not pending");
    }
    Batch batch;
    json e = event("command");
    e["command"] = command_to_json(command);
    batch.push_back(std::move(e));
    // Handlers validate before they mutate, so the seq counter is all there is to undo.
    try {
        switch (command.kind) {
            case CommandKind::AsrSignal: on_asr(batch, command); break;
            case CommandKind::Judgment: on_judgment(batch, command); break;
            case CommandKind::Presented: on_presented(batch, command); break;
            case CommandKind::Replay: on_replay(batch, command); break;
            case CommandKind::Placements: on_placements(batch, command); break;
            case CommandKind::Abort: abort(batch, command.reason.empty() ? "aborted by operator" : command.reason); break;
        }
    } catch (...) {
        next_seq_ -= batch.size();
        throw;
    }
    if (!command.token.empty()) tokens_.insert(command.token);
    batch.back()["commit"] = true;
    return batch;
}

namespace {

void expect_pending(const std::optional<Presentation>& pending, PresentationKind kind) {
    if (!pending) throw ProtocolError("no presentation is pending");
    if (pending->kind != kind) {
        throw ProtocolError("pending presentation is of kind '" + std::string(to_string(pending->kind)) + "'");
    }
}

}  // namespace

void SessionEngine::on_asr(Batch& batch, const Command& command) {
    expect_pending(pending_, PresentationKind::AsrStimulus);
    try {
        asr_->respond(command.signal);
    } catch (const AsrOutOfRange& e) {
        abort(batch, e.what());
        return;
    } catch (const AsrError& e) {
        throw ProtocolError(e.what());
    }
    pending_.reset();
    const AsrStep& step = asr_->steps().back();
    json s = event("asr_step");
    s["level_mm"] = step.level_mm;
    s["signal"] = to_string(step.signal);
    s["anomaly"] = step.anomaly;
    batch.push_back(std::move(s));
    if (!asr_->complete()) {
        next_asr(batch);
        return;
    }
    // One ascending series sets the range for every procedure configuration.
    asr_result_ = asr_->result();
    asr_anomalies_ = asr_->anomaly_count();
    const ChannelSet sets[] = {config_.asr.channels, config_.staircase.single_site, config_.staircase.two_site,
                               ChannelSet{config_.ordering.first_channel, config_.ordering.second_channel}};
    json registered = json::array();
    for (const auto& set : sets) {
        if (registry_.find(set)) continue;
        registry_.register_result(set, *asr_result_);
        registered.push_back(to_string(set));
    }
    json r = event("asr_result");
    r["detection_threshold_mm"] = asr_result_->detection_threshold_mm();
    r["max_comfortable_mm"] = asr_result_->max_comfortable_mm();
    r["reference_mm"] = asr_result_->reference_mm();
    r["anomalies"] = asr_anomalies_;
    r["registered"] = std::move(registered);
    batch.push_back(std::move(r));
    begin_staircase(batch, 1);
}

void SessionEngine::on_judgment(Batch& batch, const Command& command) {
    expect_pending(pending_, PresentationKind::StimulusPair);
    const int sites = phase_ == Phase::Staircase1Site ? 1 : 2;
    Staircase& sc = sites == 1 ? *staircase1_ : *staircase2_;
    const TrialRecord rec = sc.respond(command.response);
    pending_.reset();

    json t = event("trial");
    t["procedure"] = procedure_name(sites);
    t["trial_index"] = rec.trial_index;
    t["comparison_mm"] = rec.comparison_mm;
    t["reference_first"] = rec.reference_first;
    t["outcome"] = to_string(rec.outcome);
    t["reversal"] = rec.reversal;
    t["next_comparison_mm"] = rec.next_comparison_mm;
    batch.push_back(std::move(t));

    const StaircaseState& st = sc.state();
    if (rec.reversal) {
        json r = event("reversal");
        r["procedure"] = procedure_name(sites);
        r["number"] = st.reversal_levels_mm.size();
        r["level_mm"] = st.reversal_levels_mm.back();
        r["state"] = {{"current_comparison_mm", st.current_comparison_mm},
                      {"consecutive_correct", st.consecutive_correct},
                      {"last_move_direction", to_string(st.last_move_direction)}};
        batch.push_back(std::move(r));
    }
    if (!sc.complete()) {
        next_pair(batch);
        return;
    }
    json j = event("jnd");
    j["procedure"] = procedure_name(sites);
    j["estimate"] = estimate_to_json(sc.estimate());
    batch.push_back(std::move(j));
    if (sites == 1) {
        begin_staircase(batch, 2);
    } else {
        begin_ordering(batch);
    }
}

void SessionEngine::on_presented(Batch& batch, const Command&) {
    expect_pending(pending_, PresentationKind::OrderingPair);
    if (!pending_->replay) ordering_->advance();
    ordering_history_.emplace_back(pending_->id, pending_->label);
    pending_.reset();
    next_ordering(batch);
}

void SessionEngine::on_replay(Batch& batch, const Command& command) {
    if (phase_ != Phase::Ordering) throw ProtocolError("replays are only available during ordering");
    if (pending_) throw ProtocolError("a presentation is still pending");
    const LabeledPair& pair = ordering_->replay(command.label);
    Presentation p;
    p.kind = PresentationKind::OrderingPair;
    p.stimuli = {pair.spec};
    p.label = pair.label.letter;
    p.replay = true;
    present(batch, std::move(p));
}

void SessionEngine::on_placements(Batch& batch, const Command& command) {
    if (phase_ != Phase::Ordering) throw ProtocolError("placements are only accepted during ordering");
    if (pending_) throw ProtocolError("a presentation is still pending");
    ordering_->submit(command.placements);
    const auto metrics = *ordering_metrics();
    json r = event("ordering_result");
    r["kendall_tau_b"] = metrics.kendall_tau_b;
    r["endpoints_correct"] = metrics.endpoints_correct;
    batch.push_back(std::move(r));
    set_phase(batch, Phase::Done);
}

json SessionEngine::summary() const {
    json out = {{"session_id", id_}, {"phase", to_string(phase_)}, {"seed", config_.seed}};
    out["asr"] = nullptr;
    if (asr_result_) {
        out["asr"] = {{"detection_threshold_mm", asr_result_->detection_threshold_mm()},
                      {"max_comfortable_mm", asr_result_->max_comfortable_mm()},
                      {"reference_mm", asr_result_->reference_mm()},
                      {"anomalies", asr_anomalies_}};
    }
    json staircases = json::object();
    for (int sites : {1, 2}) {
        const Staircase* sc = staircase(sites);
        if (!sc) continue;
        json s = {{"channels", to_string(sc->config().channel_set)},
                  {"reference_mm", sc->config().reference_mm},
                  {"trials", sc->state().trial_log.size()},
                  {"reversals", sc->state().reversal_levels_mm.size()},
                  {"complete", sc->complete()},
                  {"jnd", nullptr}};
        if (sc->complete()) s["jnd"] = estimate_to_json(sc->estimate());
        staircases[procedure_name(sites)] = std::move(s);
    }
    out["staircases"] = std::move(staircases);
    out["ordering"] = nullptr;
    if (const auto m = ordering_metrics()) {
        json placements = json::array();
        for (const auto& p : ordering_->placements()) {
            placements.push_back({{"label", std::string(1, p.label)},
                                  {"position", p.position},
                                  {"replays", ordering_->replay_count(p.label)}});
        }
        out["ordering"] = {{"placements", std::move(placements)},
                           {"kendall_tau_b", m->kendall_tau_b},
                           {"endpoints_correct", m->endpoints_correct}};
    }
    out["abort_reason"] = abort_reason_.empty() ? json(nullptr) : json(abort_reason_);
    return out;
}

StaircaseConfig staircase_config(const ExperimentConfig& config, const AsrResult& asr, int sites) {
    const auto& s = config.staircase;
    StaircaseConfig c = StaircaseConfig::from_asr(asr, sites == 1 ? s.single_site : s.two_site);
    c.step_up_mm = s.step_up_mm;
    c.step_ratio_down_over_up = s.step_ratio;
    c.n_reversals_to_stop = s.reversals_to_stop;
    c.n_reversals_for_estimate = s.reversals_for_estimate;
    c.equal_counts_as = s.equal_counts_as;
    if (s.start_mm) c.start_comparison_mm = *s.start_mm;
    c.timing = config.timing;
    c.schedule_seed = substream_seed(config.seed, "schedule/" + procedure_name(sites));
    return c;
}

std::string trace_csv(const SessionEngine& engine, int sites) {
    const Staircase* sc = engine.staircase(sites);
    if (!sc) return {};
    std::ostringstream out;
    write_trace_csv(out, sc->state());
    return out.str();
}

}  // namespace sumlab
