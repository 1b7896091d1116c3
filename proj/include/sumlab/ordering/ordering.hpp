#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sumlab/core/random.hpp"
#include "sumlab/core/types.hpp"

namespace sumlab {

enum class Anchor : std::uint8_t { Min, Med, Max };

std::string_view to_string(Anchor anchor);

/// One of the nine two-channel pairs, A = (MIN, MIN) through I = (MAX, MAX),
/// first channel varying slowest.
struct PairLabel {
    char letter = 'A';
    Anchor first = Anchor::Min;
    Anchor second = Anchor::Min;

    static PairLabel from_letter(char letter);  // throws ConfigError outside A..I
    static const std::array<PairLabel, 9>& all();

    friend bool operator==(const PairLabel&, const PairLabel&) = default;
};

struct LabeledPair {
    PairLabel label;
    StimulusSpec spec;
};

struct ContinuumPlacement {
    char label = 'A';
    double position = 0.0;  // [0, 1]

    friend bool operator==(const ContinuumPlacement&, const ContinuumPlacement&) = default;
};

/// MIN, MED and MAX are the ASR detection threshold, reference and max
/// comfortable levels. Returns the nine specs in label order.
std::vector<LabeledPair> build_pair_set(const AsrResult* asr, ChannelId first, ChannelId second,
                                        StimulusTiming timing = {});
inline std::vector<LabeledPair> build_pair_set(const AsrResult& asr, ChannelId first = ChannelId{0},
                                               ChannelId second = ChannelId{1}, StimulusTiming timing = {}) {
    return build_pair_set(&asr, first, second, timing);
}

enum class OrderingStatus : std::uint8_t { InProgress, Complete, Aborted };

/// The ordering task as a single-writer state machine. Pairs are presented
/// once each in a seeded random order; any pair may be replayed on request
/// before the placements are submitted.
class OrderingTask {
public:
    OrderingTask(std::vector<LabeledPair> pairs, std::uint64_t seed);

    const std::vector<LabeledPair>& pairs() const noexcept { return pairs_; }
    /// Presentation order, as indices into pairs().
    const std::vector<std::size_t>& order() const noexcept { return order_; }
    OrderingStatus status() const noexcept { return status_; }

    /// Next first-time presentation, or nullopt when all nine have been shown.
    std::optional<LabeledPair> pending() const;
    /// Marks the pending presentation as delivered.
    void advance();
    bool all_presented() const noexcept { return presented_ == order_.size(); }

    /// Re-presents a pair; allowed once it has been presented at least once.
    const LabeledPair& replay(char label);
    int replay_count(char label) const;

    /// Requires all nine labels exactly once, positions in [0, 1], and every
    /// pair presented. Throws ProtocolError otherwise.
    void submit(std::vector<ContinuumPlacement> placements);
    void abort();

    const std::vector<ContinuumPlacement>& placements() const noexcept { return placements_; }

private:
    std::size_t index_of(char label) const;

    std::vector<LabeledPair> pairs_;
    std::vector<std::size_t> order_;
    std::size_t presented_ = 0;
    std::map<char, int> replays_;
    std::vector<ContinuumPlacement> placements_;
    OrderingStatus status_ = OrderingStatus::InProgress;
};

/// A simulated participant for the ordering task. `observe` is called for
/// every presentation (first-time and replay); `wants_replay` may ask for a
/// replay once all pairs are shown; `place` returns the final positions.
/// Min-max scales per-label values onto [0, 1]; all 0.5 when they are equal.
std::vector<ContinuumPlacement> normalise_placements(const std::map<char, double>& values);

class OrderingResponder {
public:
    virtual ~OrderingResponder() = default;
    virtual void observe(const LabeledPair& pair) = 0;
    virtual std::optional<char> wants_replay() { return std::nullopt; }
    virtual std::vector<ContinuumPlacement> place() = 0;
};

/// Places each pair at its normalised total commanded level.
class SumIntensityResponder : public OrderingResponder {
public:
    void observe(const LabeledPair& pair) override;
    std::vector<ContinuumPlacement> place() override;

private:
    std::map<char, double> totals_;
};

/// Places pairs by a noisy intensity judgment. `intensity` supplies the
/// perceived intensity; noise is drawn per observation and averaged over
/// replays. Requests up to one replay per pair with `replay_probability`.
class PerceivedIntensityResponder : public OrderingResponder {
public:
    PerceivedIntensityResponder(std::function<double(const StimulusSpec&)> intensity, double noise_sd,
                                double replay_probability, std::uint64_t seed);

    void observe(const LabeledPair& pair) override;
    std::optional<char> wants_replay() override;
    std::vector<ContinuumPlacement> place() override;

private:
    std::function<double(const StimulusSpec&)> intensity_;
    double noise_sd_;
    double replay_probability_;
    Rng rng_;
    std::map<char, std::vector<double>> samples_;
    std::vector<char> replay_queue_;
    bool replay_planned_ = false;
};

struct OrderingRun {
    std::vector<std::size_t> order;
    std::vector<ContinuumPlacement> placements;
    std::map<char, int> replay_counts;
};

/// Drives an OrderingTask with `responder`.
OrderingRun run_ordering_session(const std::vector<LabeledPair>& pairs, OrderingResponder& responder,
                                 std::uint64_t seed);

struct OrderingMetrics {
    double kendall_tau_b = 0.0;
    bool endpoints_correct = false;

    friend bool operator==(const OrderingMetrics&, const OrderingMetrics&) = default;
};

/// Kendall tau-b (tie-aware in both variables) between a set of positions
/// and a ground-truth score.
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

/// Agreement of the placements with the weak order by total commanded level
/// (sum over both channels). Pairs with equal totals are ties.
OrderingMetrics ordering_metrics(const std::vector<ContinuumPlacement>& placements,
                                 const std::vector<LabeledPair>& pairs);

/// Total commanded level of each pair.
double total_level(const StimulusSpec& spec);

}  // namespace sumlab
