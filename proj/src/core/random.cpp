#include "sumlab/core/random.hpp"

#include <array>

namespace sumlab {
namespace {

// FNV-1a, 64-bit. std::hash is not stable across implementations.
std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t seed_from_words(std::array<std::uint32_t, 4> words) {
    std::seed_seq seq(words.begin(), words.end());
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (std::uint64_t{out[0]} << 32) | out[1];
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
    const std::uint64_t h = fnv1a(name);
    return seed_from_words({static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                            static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)});
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = Rng::max() - Rng::max() % bound;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % bound;
}

bool reference_first(std::uint64_t seed, std::uint64_t draw_index) {
    Rng rng{seed_from_words({static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                             static_cast<std::uint32_t>(draw_index),
                             static_cast<std::uint32_t>(draw_index >> 32)})};
    return (rng() >> 63) == 0;
}

PairPresentation make_pair_schedule(const StimulusSpec& reference, const StimulusSpec& comparison,
                                    std::uint64_t seed, std::uint64_t draw_index) {
    if (reference_first(seed, draw_index)) return {reference, comparison, true};
    return {comparison, reference, false};
}

}  // namespace sumlab
