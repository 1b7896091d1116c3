#include "sumlab/observer/observer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sumlab {

void ObserverParams::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(gain)) throw ConfigError("observer.gain", "must be > 0");
    if (!positive(transducer_exponent)) throw ConfigError("observer.transducer_exponent", "must be > 0");
    if (!(detection_threshold_mm >= 0.0) || !std::isfinite(detection_threshold_mm))
        throw ConfigError("observer.detection_threshold_mm", "must be >= 0");
    if (!(max_comfortable_mm > detection_threshold_mm) || !std::isfinite(max_comfortable_mm))
        throw ConfigError("observer.max_comfortable_mm", "must exceed detection_threshold_mm");
    if (!(summation_exponent >= 1.0)) throw ConfigError("observer.summation_exponent", "must be >= 1 (inf allowed)");
    if (!(weber_fraction >= 0.0) || !std::isfinite(weber_fraction))
        throw ConfigError("observer.weber_fraction", "must be >= 0");
    if (!(noise_floor >= 0.0) || !std::isfinite(noise_floor)) throw ConfigError("observer.noise_floor", "must be >= 0");
    if (!(equality_band >= 0.0) || !std::isfinite(equality_band))
        throw ConfigError("observer.equality_band", "must be >= 0");
    if (base_latency_ms < 0) throw ConfigError("observer.base_latency_ms", "must be >= 0");
    if (!positive(force_to_mm)) throw ConfigError("observer.force_to_mm", "must be > 0");
}

ObserverParams observer_preset(std::string_view name) {
    ObserverParams p;
    if (name == "paper-like") return p;
    if (name == "non-summing") {
        p.summation_exponent = kNoSummation;
        return p;
    }
    if (name == "summing") {
        p.gain = 1.0;
        p.transducer_exponent = 1.0;
        p.noise_floor = 3.0;
        return p;
    }
    throw ConfigError("observer.preset", "unknown preset '" + std::string(name) + "'");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Observer::Observer(ObserverParams params, std::uint64_t seed) : params_(params), rng_(seed) { params_.validate(); }

double Observer::site_intensity(double level_mm) const {
    const double above = level_mm - params_.detection_threshold_mm;
    if (above <= 0.0) return 0.0;
    return params_.gain * std::pow(above, params_.transducer_exponent);
}

double Observer::perceive(const StimulusSpec& spec) const {
    const double p = params_.summation_exponent;
    if (std::isinf(p)) {
        double out = 0.0;
        for (const auto& [ch, level] : spec.levels) out = std::max(out, site_intensity(level.mm()));
        return out;
    }
    double sum = 0.0;
    for (const auto& [ch, level] : spec.levels) sum += std::pow(site_intensity(level.mm()), p);
    return p == 1.0 ? sum : std::pow(sum, 1.0 / p);
}

double Observer::noise_sd(double intensity) const { return params_.weber_fraction * intensity + params_.noise_floor; }

Response Observer::compare(const StimulusSpec& first, const StimulusSpec& second) {
    std::normal_distribution<double> unit;
    const double i1 = perceive(first);
    const double i2 = perceive(second);
    const double n1 = i1 + noise_sd(i1) * unit(rng_);
    const double n2 = i2 + noise_sd(i2) * unit(rng_);
    const double latency = params_.base_latency_ms * (1.0 + 0.2 * unit(rng_));

    Response r;
    r.latency_ms = static_cast<int>(std::max(0.0, std::round(latency)));
    const double diff = n1 - n2;
    if (std::abs(diff) < params_.equality_band) {
        r.judgment = Judgment::Equal;
    } else {
        r.judgment = diff > 0.0 ? Judgment::FirstGreater : Judgment::FirstLess;
    }
    return r;
}

Response Observer::compare_forces(const std::map<ChannelId, double>& first_n,
                                  const std::map<ChannelId, double>& second_n, StimulusTiming timing) {
    auto to_spec = [&](const std::map<ChannelId, double>& forces) {
        StimulusSpec spec;
        spec.timing = timing;
        for (const auto& [ch, f] : forces) spec.levels.emplace(ch, StimulusLevel{std::max(0.0, f) * params_.force_to_mm});
        return spec;
    };
    return compare(to_spec(first_n), to_spec(second_n));
}

double Observer::uniform_intensity(double level_mm, int channel_count) const {
    const double site = site_intensity(level_mm);
    const double p = params_.summation_exponent;
    if (std::isinf(p) || channel_count == 1) return site;
    return p == 1.0 ? channel_count * site : std::pow(static_cast<double>(channel_count), 1.0 / p) * site;
}

double Observer::psychometric(double reference_mm, double comparison_mm, int channel_count) const {
    const double ir = uniform_intensity(reference_mm, channel_count);
    const double ic = uniform_intensity(comparison_mm, channel_count);
    const double sd = std::hypot(noise_sd(ir), noise_sd(ic));
    const double margin = ic - ir - params_.equality_band;
    if (sd == 0.0) return margin > 0.0 ? 1.0 : (margin == 0.0 ? 0.5 : 0.0);
    return normal_cdf(margin / sd);
}

double Observer::equal_probability(double reference_mm, double comparison_mm, int channel_count) const {
    const double ir = uniform_intensity(reference_mm, channel_count);
    const double ic = uniform_intensity(comparison_mm, channel_count);
    const double sd = std::hypot(noise_sd(ir), noise_sd(ic));
    const double band = params_.equality_band;
    if (sd == 0.0) return std::abs(ic - ir) < band ? 1.0 : 0.0;
    return normal_cdf((band - (ic - ir)) / sd) - normal_cdf((-band - (ic - ir)) / sd);
}

AsrSignal Observer::asr_signal(const StimulusSpec& spec) const {
    double top = 0.0;
    for (const auto& [ch, level] : spec.levels) top = std::max(top, level.mm());
    if (top >= params_.max_comfortable_mm) return AsrSignal::MaxComfortable;
    if (top >= params_.detection_threshold_mm) return AsrSignal::Detected;
    return AsrSignal::NotDetected;
}

}  // namespace sumlab
