#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sumlab/core/types.hpp"
#include "sumlab/device/params.hpp"
#include "sumlab/observer/observer.hpp"
#include "sumlab/staircase/staircase.hpp"

namespace sumlab {

struct AsrSettings {
    double step_mm = 0.5;
    /// Channels driven together during the ascending series. The measured
    /// range is registered for every procedure configuration of the session.
    ChannelSet channels = make_channel_set({0});

    friend bool operator==(const AsrSettings&, const AsrSettings&) = default;
};

struct StaircaseSettings {
    double step_up_mm = kDefaultStepUpMm;
    double step_ratio = kDefaultStepRatio;
    int reversals_to_stop = 16;
    int reversals_for_estimate = 3;
    EqualPolicy equal_counts_as = EqualPolicy::Incorrect;
    std::optional<double> start_mm;   // default: reference + 0.5 * (ASR max - reference)
    ChannelSet single_site = make_channel_set({0});
    ChannelSet two_site = make_channel_set({0, 1});
    int trial_cap = 10000;

    friend bool operator==(const StaircaseSettings&, const StaircaseSettings&) = default;
};

enum class OrderingResponderKind : std::uint8_t { Perceived, SumIntensity };

struct OrderingSettings {
    ChannelId first_channel{0};
    ChannelId second_channel{1};
    /// Simulated participants only.
    OrderingResponderKind responder = OrderingResponderKind::Perceived;
    double replay_probability = 0.2;

    friend bool operator==(const OrderingSettings&, const OrderingSettings&) = default;
};

struct LoggingSettings {
    /// Force samples logged per second while a stimulus is presented; 0 disables.
    int force_log_hz = 50;
    /// Drive the simulated device during presentations. When false only the
    /// commanded levels are logged.
    bool drive_device = true;

    friend bool operator==(const LoggingSettings&, const LoggingSettings&) = default;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    DeviceParams device;
    StimulusTiming timing;
    AsrSettings asr;
    StaircaseSettings staircase;
    OrderingSettings ordering;
    std::string observer_preset = "paper-like";
    ObserverParams observer = sumlab::observer_preset("paper-like");
    LoggingSettings logging;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses and validates a configuration tree. Missing keys take defaults;
/// unknown keys are rejected. Throws ConfigError with the field path.
ExperimentConfig config_from_json(const nlohmann::json& tree);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sumlab
