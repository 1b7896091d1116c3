#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>

#include "sumlab/core/asr.hpp"
#include "sumlab/core/random.hpp"
#include "sumlab/core/types.hpp"

namespace sumlab {

enum class ObserverInput : std::uint8_t { CommandedLevel, Force };

/// Parameters of the simulated participant.
///
/// Site intensity:     I_i = gain * max(0, L_i - detection_threshold_mm)^transducer_exponent
/// Combined intensity: I   = (sum_i I_i^p)^(1/p), p = summation_exponent; p = inf is max_i I_i
/// Decision noise sd:  weber_fraction * I + noise_floor
struct ObserverParams {
    double gain = 1.6;
    double transducer_exponent = 0.7;
    double detection_threshold_mm = 4.0;
    double max_comfortable_mm = 16.8;
    double summation_exponent = 1.0;
    double weber_fraction = 0.0;
    double noise_floor = 2.0;
    double equality_band = 0.1;
    int base_latency_ms = 700;
    ObserverInput input = ObserverInput::CommandedLevel;
    /// mm-equivalent per newton, used in force-input mode.
    double force_to_mm = 10.4 / 4.3;

    /// Throws ConfigError naming the offending field under `observer.`.
    void validate() const;

    friend bool operator==(const ObserverParams&, const ObserverParams&) = default;
};

inline constexpr double kNoSummation = std::numeric_limits<double>::infinity();

/// Named presets. All are modelling assumptions, not fitted values:
///  - "paper-like":  full summation (p = 1), compressive transducer, fixed noise.
///  - "summing":     full summation with a linear transducer.
///  - "non-summing": the paper-like observer with max-combination (p = inf).
ObserverParams observer_preset(std::string_view name);

/// Standard normal CDF.
double normal_cdf(double z);

class Observer {
public:
    Observer(ObserverParams params, std::uint64_t seed);

    const ObserverParams& params() const noexcept { return params_; }
    /// Restarts the decision-noise stream.
    void reseed(std::uint64_t seed) { rng_.seed(seed); }

    double site_intensity(double level_mm) const;
    /// Deterministic perceived intensity of a stimulus (noise enters only at decision time).
    double perceive(const StimulusSpec& spec) const;
    double noise_sd(double intensity) const;

    /// Noisy comparison of two sequential stimuli. Exactly three normal draws:
    /// one per stimulus, one for latency.
    Response compare(const StimulusSpec& first, const StimulusSpec& second);

    /// Comparison on measured forces (force-input mode).
    Response compare_forces(const std::map<ChannelId, double>& first_n, const std::map<ChannelId, double>& second_n,
                            StimulusTiming timing);

    /// P(comparison judged greater) for uniform stimuli on `channel_count`
    /// channels, with EQUAL scored as incorrect. Closed form of compare().
    double psychometric(double reference_mm, double comparison_mm, int channel_count) const;

    /// P(EQUAL) for the same configuration.
    double equal_probability(double reference_mm, double comparison_mm, int channel_count) const;

    /// Deterministic ascending-series response: detection once any site
    /// reaches the detection threshold, max-comfortable once any site reaches
    /// the comfort limit.
    AsrSignal asr_signal(const StimulusSpec& spec) const;

private:
    double uniform_intensity(double level_mm, int channel_count) const;

    ObserverParams params_;
    Rng rng_;
};

}  // namespace sumlab
