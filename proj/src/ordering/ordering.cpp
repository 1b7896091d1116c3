#include "sumlab/ordering/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace sumlab {

std::string_view to_string(Anchor anchor) {
    switch (anchor) {
        case Anchor::Min: return "MIN";
        case Anchor::Med: return "MED";
        case Anchor::Max: return "MAX";
    }
    return "MIN";
}

const std::array<PairLabel, 9>& PairLabel::all() {
    static const std::array<PairLabel, 9> labels = [] {
        std::array<PairLabel, 9> out{};
        constexpr Anchor anchors[] = {Anchor::Min, Anchor::Med, Anchor::Max};
        for (int i = 0; i < 9; ++i) out[static_cast<std::size_t>(i)] = {static_cast<char>('A' + i), anchors[i / 3], anchors[i % 3]};
        return out;
    }();
    return labels;
}

PairLabel PairLabel::from_letter(char letter) {
    if (letter < 'A' || letter > 'I') throw ConfigError("label", std::string("unknown pair label '") + letter + "'");
    return all()[static_cast<std::size_t>(letter - 'A')];
}

std::vector<LabeledPair> build_pair_set(const AsrResult* asr, ChannelId first, ChannelId second, StimulusTiming timing) {
    if (asr == nullptr) throw ConfigError("asr", "no ASR registered for the ordering channels");
    if (first == second) throw ConfigError("ordering.channels", "the two channels must differ");
    auto level = [&](Anchor a) {
        switch (a) {
            case Anchor::Min: return asr->detection_threshold_mm();
            case Anchor::Med: return asr->reference_mm();
            case Anchor::Max: return asr->max_comfortable_mm();
        }
        return asr->reference_mm();
    };
    std::vector<LabeledPair> out;
    out.reserve(9);
    for (const PairLabel& label : PairLabel::all()) {
        StimulusSpec spec;
        spec.timing = timing;
        spec.levels.emplace(first, StimulusLevel{level(label.first)});
        spec.levels.emplace(second, StimulusLevel{level(label.second)});
        out.push_back({label, std::move(spec)});
    }
    return out;
}

OrderingTask::OrderingTask(std::vector<LabeledPair> pairs, std::uint64_t seed) : pairs_(std::move(pairs)) {
    if (pairs_.size() != 9) throw ConfigError("ordering", "exactly nine labelled pairs required");
    std::set<char> letters;
    for (const auto& p : pairs_) letters.insert(p.label.letter);
    if (letters.size() != 9) throw ConfigError("ordering", "pair labels must be distinct");
    order_.resize(pairs_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    // Fisher-Yates on raw engine output, portable across standard libraries.
    Rng rng(seed);
    for (std::size_t i = order_.size() - 1; i > 0; --i) std::swap(order_[i], order_[uniform_below(rng, i + 1)]);
}

std::optional<LabeledPair> OrderingTask::pending() const {
    if (status_ != OrderingStatus::InProgress || all_presented()) return std::nullopt;
    return pairs_[order_[presented_]];
}

void OrderingTask::advance() {
    if (status_ != OrderingStatus::InProgress) throw ProtocolError("ordering task is not in progress");
    if (all_presented()) throw ProtocolError("all pairs already presented");
    ++presented_;
}

std::size_t OrderingTask::index_of(char label) const {
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        if (pairs_[i].label.letter == label) return i;
    }
    throw ProtocolError(std::string("unknown pair label '") + label + "'");
}

const LabeledPair& OrderingTask::replay(char label) {
    if (status_ != OrderingStatus::InProgress) throw ProtocolError("ordering task is not in progress");
    const std::size_t idx = index_of(label);
    const auto shown_end = order_.begin() + static_cast<std::ptrdiff_t>(presented_);
    if (std::find(order_.begin(), shown_end, idx) == shown_end) {
        throw ProtocolError(std::string("pair '") + label + "' has not been presented yet");
    }
    ++replays_[label];
    return pairs_[idx];
}

int OrderingTask::replay_count(char label) const {
    auto it = replays_.find(label);
    return it == replays_.end() ? 0 : it->second;
}

void OrderingTask::submit(std::vector<ContinuumPlacement> placements) {
    if (status_ != OrderingStatus::InProgress) throw ProtocolError("ordering task is not in progress");
    if (!all_presented()) throw ProtocolError("placements submitted before all pairs were presented");
    if (placements.size() != pairs_.size()) throw ProtocolError("exactly nine placements required");
    std::set<char> seen;
    for (const auto& p : placements) {
        index_of(p.label);
        if (!seen.insert(p.label).second) throw ProtocolError(std::string("duplicate placement for '") + p.label + "'");
        if (!(p.position >= 0.0 && p.position <= 1.0)) throw ProtocolError("positions must lie in [0, 1]");
    }
    std::sort(placements.begin(), placements.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
    placements_ = std::move(placements);
    status_ = OrderingStatus::Complete;
}

void OrderingTask::abort() {
    if (status_ == OrderingStatus::InProgress) status_ = OrderingStatus::Aborted;
}

double total_level(const StimulusSpec& spec) {
    double sum = 0.0;
    for (const auto& [ch, level] : spec.levels) sum += level.mm();
    return sum;
}

std::vector<ContinuumPlacement> normalise_placements(const std::map<char, double>& values) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [label, v] : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<ContinuumPlacement> out;
    for (const auto& [label, v] : values) {
        out.push_back({label, hi > lo ? (v - lo) / (hi - lo) : 0.5});
    }
    return out;
}

void SumIntensityResponder::observe(const LabeledPair& pair) { totals_[pair.label.letter] = total_level(pair.spec); }

std::vector<ContinuumPlacement> SumIntensityResponder::place() { return normalise_placements(totals_); }

PerceivedIntensityResponder::PerceivedIntensityResponder(std::function<double(const StimulusSpec&)> intensity,
                                                         double noise_sd, double replay_probability, std::uint64_t seed)
    : intensity_(std::move(intensity)), noise_sd_(noise_sd), replay_probability_(replay_probability), rng_(seed) {}

void PerceivedIntensityResponder::observe(const LabeledPair& pair) {
    std::normal_distribution<double> unit;
    samples_[pair.label.letter].push_back(intensity_(pair.spec) + noise_sd_ * unit(rng_));
}

std::optional<char> PerceivedIntensityResponder::wants_replay() {
    if (!replay_planned_) {
        replay_planned_ = true;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (const auto& [label, s] : samples_) {
            if (u(rng_) < replay_probability_) replay_queue_.push_back(label);
        }
        std::reverse(replay_queue_.begin(), replay_queue_.end());
    }
    if (replay_queue_.empty()) return std::nullopt;
    const char next = replay_queue_.back();
    replay_queue_.pop_back();
    return next;
}

std::vector<ContinuumPlacement> PerceivedIntensityResponder::place() {
    std::map<char, double> means;
    for (const auto& [label, s] : samples_) means[label] = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    return normalise_placements(means);
}

OrderingRun run_ordering_session(const std::vector<LabeledPair>& pairs, OrderingResponder& responder,
                                 std::uint64_t seed) {
    OrderingTask task(pairs, seed);
    while (auto next = task.pending()) {
        responder.observe(*next);
        task.advance();
    }
    while (auto label = responder.wants_replay()) responder.observe(task.replay(*label));
    task.submit(responder.place());

    OrderingRun run{task.order(), task.placements(), {}};
    for (const auto& p : task.pairs()) run.replay_counts[p.label.letter] = task.replay_count(p.label.letter);
    return run;
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigError("kendall_tau_b", "inputs differ in length");
    long long concordant = 0;
    long long discordant = 0;
    long long ties_x = 0;  // tied in x only
    long long ties_y = 0;  // tied in y only
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                ++ties_x;
            } else if (dy == 0.0) {
                ++ties_y;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double denom = std::sqrt(static_cast<double>(concordant + discordant + ties_x) *
                                   static_cast<double>(concordant + discordant + ties_y));
    if (denom == 0.0) return 0.0;
    return static_cast<double>(concordant - discordant) / denom;
}

OrderingMetrics ordering_metrics(const std::vector<ContinuumPlacement>& placements,
                                 const std::vector<LabeledPair>& pairs) {
    std::map<char, double> truth;
    for (const auto& p : pairs) truth[p.label.letter] = total_level(p.spec);
    std::vector<double> x;
    std::vector<double> y;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::map<char, double> pos;
    for (const auto& p : placements) {
        auto it = truth.find(p.label);
        if (it == truth.end()) throw ConfigError("placements", std::string("unknown label '") + p.label + "'");
        x.push_back(p.position);
        y.push_back(it->second);
        pos[p.label] = p.position;
        lo = std::min(lo, p.position);
        hi = std::max(hi, p.position);
    }
    OrderingMetrics m;
    m.kendall_tau_b = kendall_tau_b(x, y);
    m.endpoints_correct = pos.contains('A') && pos.contains('I') && pos['A'] == lo && pos['I'] == hi;
    return m;
}

}  // namespace sumlab
