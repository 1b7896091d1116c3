#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "sumlab/core/types.hpp"

namespace sumlab {

/// Engine used for every stochastic draw. mt19937_64 and seed_seq are fully
/// specified by the standard, so raw engine output is portable.
using Rng = std::mt19937_64;

/// Seed of the named substream `name` under the session seed `seed`.
/// Distinct names give statistically independent streams.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

inline Rng make_rng(std::uint64_t seed, std::string_view name) { return Rng{substream_seed(seed, name)}; }

/// Uniform integer in [0, bound) using only raw engine output (rejection
/// sampling), so results do not depend on the standard library's distributions.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

struct PairPresentation {
    StimulusSpec first;
    StimulusSpec second;
    bool reference_first = true;

    friend bool operator==(const PairPresentation&, const PairPresentation&) = default;
};

/// Orders a reference/comparison pair. The order is a pure function of
/// (seed, draw_index): reference first with probability 1/2.
///
/// seed 42 gives comparison-first for draw 0 and reference-first for draws 1 to 3.
PairPresentation make_pair_schedule(const StimulusSpec& reference, const StimulusSpec& comparison,
                                    std::uint64_t seed, std::uint64_t draw_index);

/// The order decision alone.
bool reference_first(std::uint64_t seed, std::uint64_t draw_index);

}  // namespace sumlab
