#include "sumlab/session/simulation.hpp"

#include <random>

namespace sumlab {

SimulatedParticipant::SimulatedParticipant(const ExperimentConfig& config)
    : config_(config), observer_(config.observer, substream_seed(config.seed, "observer")) {}

Command SimulatedParticipant::judge(const Presentation& p) const {
    Observer obs(config_.observer, substream_seed(config_.seed, "response/" + std::to_string(p.id)));
    Command c;
    c.kind = CommandKind::Judgment;
    c.presentation_id = p.id;
    c.token = "resp-" + std::to_string(p.id);
    if (config_.observer.input == ObserverInput::Force && p.hold_force_n.size() == 2) {
        c.response = obs.compare_forces(p.hold_force_n[0], p.hold_force_n[1], p.stimuli[0].timing);
    } else {
        c.response = obs.compare(p.stimuli[0], p.stimuli[1]);
    }
    return c;
}

Command SimulatedParticipant::finish_ordering(const SessionEngine& engine) const {
    const OrderingTask& task = *engine.ordering();
    auto spec_of = [&](char label) -> const StimulusSpec& {
        for (const auto& pair : task.pairs()) {
            if (pair.label.letter == label) return pair.spec;
        }
        throw ProtocolError(std::string("unknown pair ") + label);
    };

    Command c;
    if (config_.ordering.responder == OrderingResponderKind::SumIntensity) {
        SumIntensityResponder responder;
        for (const auto& pair : task.pairs()) responder.observe(pair);
        c.kind = CommandKind::Placements;
        c.token = "place";
        c.placements = responder.place();
        return c;
    }

    for (const auto& pair : task.pairs()) {
        const char label = pair.label.letter;
        if (task.replay_count(label) > 0) continue;
        Rng rng(substream_seed(config_.seed, std::string("replay/") + label));
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config_.ordering.replay_probability) {
            c.kind = CommandKind::Replay;
            c.label = label;
            c.token = std::string("replay-") + label;
            return c;
        }
    }

    std::map<char, std::pair<double, int>> sums;
    for (const auto& [id, label] : engine.ordering_history()) {
        Rng rng(substream_seed(config_.seed, "ordering/" + std::to_string(id)));
        const double intensity = observer_.perceive(spec_of(label));
        const double sample = intensity + observer_.noise_sd(intensity) * std::normal_distribution<double>()(rng);
        sums[label].first += sample;
        ++sums[label].second;
    }
    std::map<char, double> means;
    for (const auto& [label, s] : sums) means[label] = s.first / s.second;
    c.kind = CommandKind::Placements;
    c.token = "place";
    c.placements = normalise_placements(means);
    return c;
}

std::optional<Command> SimulatedParticipant::next(const SessionEngine& engine) const {
    if (is_terminal(engine.phase())) return std::nullopt;
    const auto& pending = engine.pending();
    if (!pending) {
        if (engine.phase() != Phase::Ordering) throw ProtocolError("nothing pending outside ordering");
        return finish_ordering(engine);
    }
    Command c;
    c.presentation_id = pending->id;
    c.token = "resp-" + std::to_string(pending->id);
    switch (pending->kind) {
        case PresentationKind::AsrStimulus:
            c.kind = CommandKind::AsrSignal;
            c.signal = observer_.asr_signal(pending->stimuli.front());
            return c;
        case PresentationKind::StimulusPair: return judge(*pending);
        case PresentationKind::OrderingPair: c.kind = CommandKind::Presented; return c;
    }
    return std::nullopt;
}

StaircaseRun simulate_staircase(const ExperimentConfig& config, int sites) {
    const Observer asr_observer(config.observer, 0);
    const AsrRun asr = run_asr(
        config.asr.channels, [&](const StimulusSpec& spec) { return asr_observer.asr_signal(spec); },
        config.asr.step_mm, config.device.actuator.stroke_mm, config.timing);
    StaircaseRun run{staircase_config(config, asr.result, sites), asr.result, {}, std::nullopt};
    Staircase staircase(run.config, run.asr);
    Observer observer(config.observer, substream_seed(config.seed, "responses/" + std::to_string(sites)));
    while (!staircase.complete() && static_cast<int>(staircase.state().trial_log.size()) < config.staircase.trial_cap) {
        const PairPresentation& pair = staircase.next_trial();
        staircase.respond(observer.compare(pair.first, pair.second));
    }
    run.state = staircase.state();
    if (staircase.complete()) run.estimate = staircase.estimate();
    return run;
}

std::uint64_t drive_to_completion(Session& session, const SimulatedParticipant& participant) {
    std::uint64_t commands = 0;
    while (auto command = participant.next(*session.snapshot())) {
        session.submit(*command);
        ++commands;
    }
    return commands;
}

SimulationResult run_simulated_session(const ExperimentConfig& config, std::unique_ptr<LogSink> sink,
                                       const std::string& session_id) {
    if (!sink) sink = std::make_unique<NullLogSink>();
    auto session = Session::create(session_id, config, {}, std::move(sink));
    SimulationResult out;
    out.commands = drive_to_completion(*session, SimulatedParticipant(config));
    const auto engine = session->snapshot();
    out.engine = engine;
    out.summary = engine->summary();
    out.trace_1site = trace_csv(*engine, 1);
    out.trace_2site = trace_csv(*engine, 2);
    out.phase = engine->phase();
    out.records = engine->next_seq();
    return out;
}

}  // namespace sumlab
