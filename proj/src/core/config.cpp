#include "sumlab/core/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace sumlab {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Reads one object level, tracking consumed keys so unknown ones can be reported.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_.contains(key) && !node_.at(key).is_null();
    }

    const json& at(const std::string& key) const { return node_.at(key); }
    std::string field(const std::string& key) const { return join(path_, key); }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (v.is_string() && v.get<std::string>() == "inf") {
            out = std::numeric_limits<double>::infinity();
            return;
        }
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        out = v.get<double>();
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        out = v.get<int>();
    }

    void unsigned64(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError(field(key), "expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        if (!at(key).is_boolean()) throw ConfigError(field(key), "expected true or false");
        out = at(key).get<bool>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        if (!at(key).is_string()) throw ConfigError(field(key), "expected a string");
        out = at(key).get<std::string>();
    }

    void channels(const std::string& key, ChannelSet& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_array() || v.empty()) throw ConfigError(field(key), "expected a non-empty array of channel indices");
        ChannelSet set;
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ConfigError(field(key), "channel indices must be integers");
            try {
                set.insert(ChannelId{e.get<int>()});
            } catch (const ChannelError& err) {
                throw ConfigError(field(key), err.what());
            }
        }
        out = std::move(set);
    }

    void channel(const std::string& key, ChannelId& out) {
        if (!has(key)) return;
        if (!at(key).is_number_integer()) throw ConfigError(field(key), "expected a channel index");
        try {
            out = ChannelId{at(key).get<int>()};
        } catch (const ChannelError& err) {
            throw ConfigError(field(key), err.what());
        }
    }

    std::optional<Reader> child(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return Reader(at(key), field(key));
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.contains(key)) throw ConfigError(field(key), "unknown key");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

json channels_json(const ChannelSet& set) {
    json out = json::array();
    for (ChannelId ch : set) out.push_back(ch.index());
    return out;
}

void read_observer(Reader& r, ObserverParams& o) {
    r.number("gain", o.gain);
    r.number("transducer_exponent", o.transducer_exponent);
    r.number("detection_threshold_mm", o.detection_threshold_mm);
    r.number("max_comfortable_mm", o.max_comfortable_mm);
    r.number("summation_exponent", o.summation_exponent);
    r.number("weber_fraction", o.weber_fraction);
    r.number("noise_floor", o.noise_floor);
    r.number("equality_band", o.equality_band);
    r.integer("base_latency_ms", o.base_latency_ms);
    r.number("force_to_mm", o.force_to_mm);
    std::string input = o.input == ObserverInput::Force ? "force" : "commanded";
    r.string("input", input);
    if (input == "commanded") {
        o.input = ObserverInput::CommandedLevel;
    } else if (input == "force") {
        o.input = ObserverInput::Force;
    } else {
        throw ConfigError(r.field("input"), "expected 'commanded' or 'force'");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    const auto& d = device;
    if (d.channels < 1 || d.channels > kMaxChannels) throw ConfigError("device.channels", "must be in [1, 4]");
    if (!(d.actuator.stroke_mm > 0.0) || !std::isfinite(d.actuator.stroke_mm))
        throw ConfigError("device.stroke_mm", "must be > 0");
    if (!(d.actuator.max_speed_mm_s > 0.0)) throw ConfigError("device.max_speed_mm_s", "must be > 0");
    if (!(d.actuator.time_constant_s > 0.0)) throw ConfigError("device.time_constant_s", "must be > 0");
    if (d.actuator.tick_rate_hz <= 0) throw ConfigError("device.tick_rate_hz", "must be > 0");
    if (static_cast<int>(d.gains.size()) > d.channels) throw ConfigError("device.gains", "more entries than channels");
    for (std::size_t i = 0; i < d.gains.size(); ++i) {
        if (!(d.gains[i].kp > 0.0) || !(d.gains[i].kd >= 0.0))
            throw ConfigError("device.gains[" + std::to_string(i) + "]", "kp must be > 0 and kd >= 0");
    }
    if (!(d.tissue.contact_offset_mm >= 0.0)) throw ConfigError("device.tissue.contact_offset_mm", "must be >= 0");
    if (!(d.tissue.linear_stiffness_n_per_mm > 0.0))
        throw ConfigError("device.tissue.linear_stiffness_n_per_mm", "must be > 0");
    if (!(d.tissue.cubic_coeff_n_per_mm3 >= 0.0)) throw ConfigError("device.tissue.cubic_coeff_n_per_mm3", "must be >= 0");
    if (static_cast<int>(d.site_factors.size()) > d.channels)
        throw ConfigError("device.site_factors", "more entries than channels");
    for (double f : d.site_factors) {
        if (!(f > 0.0)) throw ConfigError("device.site_factors", "factors must be > 0");
    }
    if (!(d.sensor.range_n > 0.0)) throw ConfigError("device.sensor.range_n", "must be > 0");
    if (!(d.sensor.resolution_n > 0.0)) throw ConfigError("device.sensor.resolution_n", "must be > 0");
    if (!(d.sensor.noise_sd_n >= 0.0)) throw ConfigError("device.sensor.noise_sd_n", "must be >= 0");

    if (timing.hold_ms <= 0) throw ConfigError("timing.hold_ms", "must be > 0");
    if (timing.gap_ms < 0) throw ConfigError("timing.gap_ms", "must be >= 0");

    auto check_channels = [&](const ChannelSet& set, const std::string& field) {
        if (set.empty()) throw ConfigError(field, "at least one channel required");
        if (set.rbegin()->index() >= d.channels) throw ConfigError(field, "channel beyond device.channels");
    };
    if (!(asr.step_mm > 0.0)) throw ConfigError("asr.step_mm", "must be > 0");
    check_channels(asr.channels, "asr.channels");

    const auto& s = staircase;
    if (!(s.step_up_mm > 0.0)) throw ConfigError("staircase.step_up_mm", "must be > 0");
    if (!(s.step_ratio > 0.0 && s.step_ratio <= 1.0)) throw ConfigError("staircase.step_ratio", "must be in (0, 1]");
    if (s.reversals_to_stop < 4) throw ConfigError("staircase.reversals_to_stop", "must be >= 4");
    if (s.reversals_for_estimate < 1 || s.reversals_for_estimate > s.reversals_to_stop)
        throw ConfigError("staircase.reversals_for_estimate", "must be in [1, reversals_to_stop]");
    if (s.trial_cap < 1) throw ConfigError("staircase.trial_cap", "must be >= 1");
    check_channels(s.single_site, "staircase.single_site");
    check_channels(s.two_site, "staircase.two_site");

    if (ordering.first_channel == ordering.second_channel)
        throw ConfigError("ordering.channels", "the two ordering channels must differ");
    if (std::max(ordering.first_channel.index(), ordering.second_channel.index()) >= d.channels)
        throw ConfigError("ordering.channels", "channel beyond device.channels");
    if (!(ordering.replay_probability >= 0.0 && ordering.replay_probability <= 1.0))
        throw ConfigError("ordering.replay_probability", "must be in [0, 1]");

    observer.validate();
    if (logging.force_log_hz < 0 || (logging.force_log_hz > 0 && d.actuator.tick_rate_hz % logging.force_log_hz != 0))
        throw ConfigError("logging.force_log_hz", "must be 0 or divide device.tick_rate_hz");
}

ExperimentConfig config_from_json(const json& tree) {
    ExperimentConfig c;
    Reader root(tree, "");
    std::uint64_t version = 1;
    root.unsigned64("version", version);
    if (version != 1) throw ConfigError("version", "unsupported config version");
    root.unsigned64("seed", c.seed);

    if (auto dev = root.child("device")) {
        dev->integer("channels", c.device.channels);
        dev->number("stroke_mm", c.device.actuator.stroke_mm);
        dev->number("max_speed_mm_s", c.device.actuator.max_speed_mm_s);
        dev->number("time_constant_s", c.device.actuator.time_constant_s);
        dev->integer("tick_rate_hz", c.device.actuator.tick_rate_hz);
        if (dev->has("gains")) {
            const json& g = dev->at("gains");
            if (!g.is_array()) throw ConfigError(dev->field("gains"), "expected an array");
            for (std::size_t i = 0; i < g.size(); ++i) {
                Reader gr(g[i], dev->field("gains[" + std::to_string(i) + "]"));
                PdGains gains;
                gr.number("kp", gains.kp);
                gr.number("kd", gains.kd);
                gr.finish();
                c.device.gains.push_back(gains);
            }
        }
        if (dev->has("site_factors")) {
            const json& f = dev->at("site_factors");
            if (!f.is_array()) throw ConfigError(dev->field("site_factors"), "expected an array");
            for (const auto& e : f) {
                if (!e.is_number()) throw ConfigError(dev->field("site_factors"), "expected numbers");
                c.device.site_factors.push_back(e.get<double>());
            }
        }
        if (auto t = dev->child("tissue")) {
            t->number("contact_offset_mm", c.device.tissue.contact_offset_mm);
            t->number("linear_stiffness_n_per_mm", c.device.tissue.linear_stiffness_n_per_mm);
            t->number("cubic_coeff_n_per_mm3", c.device.tissue.cubic_coeff_n_per_mm3);
            t->finish();
        }
        if (auto s = dev->child("sensor")) {
            s->number("range_n", c.device.sensor.range_n);
            s->number("resolution_n", c.device.sensor.resolution_n);
            s->number("noise_sd_n", c.device.sensor.noise_sd_n);
            s->finish();
        }
        if (auto g = dev->child("geometry")) {
            g->number("tactor_diameter_mm", c.device.geometry.tactor_diameter_mm);
            g->number("edge_gap_mm", c.device.geometry.edge_gap_mm);
            g->finish();
        }
        dev->finish();
    }
    if (auto t = root.child("timing")) {
        t->integer("hold_ms", c.timing.hold_ms);
        t->integer("gap_ms", c.timing.gap_ms);
        t->finish();
    }
    if (auto a = root.child("asr")) {
        a->number("step_mm", c.asr.step_mm);
        a->channels("channels", c.asr.channels);
        a->finish();
    }
    if (auto s = root.child("staircase")) {
        s->number("step_up_mm", c.staircase.step_up_mm);
        s->number("step_ratio", c.staircase.step_ratio);
        s->integer("reversals_to_stop", c.staircase.reversals_to_stop);
        s->integer("reversals_for_estimate", c.staircase.reversals_for_estimate);
        std::string policy(to_string(c.staircase.equal_counts_as));
        s->string("equal_counts_as", policy);
        c.staircase.equal_counts_as = equal_policy_from_string(policy);
        if (s->has("start_mm")) {
            double start = 0.0;
            s->number("start_mm", start);
            c.staircase.start_mm = start;
        }
        s->channels("single_site", c.staircase.single_site);
        s->channels("two_site", c.staircase.two_site);
        s->integer("trial_cap", c.staircase.trial_cap);
        s->finish();
    }
    if (auto o = root.child("ordering")) {
        if (o->has("channels")) {
            const json& ch = o->at("channels");
            if (!ch.is_array() || ch.size() != 2 || !ch[0].is_number_integer() || !ch[1].is_number_integer())
                throw ConfigError(o->field("channels"), "expected two channel indices");
            try {
                c.ordering.first_channel = ChannelId{ch[0].get<int>()};
                c.ordering.second_channel = ChannelId{ch[1].get<int>()};
            } catch (const ChannelError& err) {
                throw ConfigError(o->field("channels"), err.what());
            }
        }
        std::string responder = c.ordering.responder == OrderingResponderKind::SumIntensity ? "sum-intensity" : "perceived";
        o->string("responder", responder);
        if (responder == "perceived") {
            c.ordering.responder = OrderingResponderKind::Perceived;
        } else if (responder == "sum-intensity") {
            c.ordering.responder = OrderingResponderKind::SumIntensity;
        } else {
            throw ConfigError(o->field("responder"), "expected 'perceived' or 'sum-intensity'");
        }
        o->number("replay_probability", c.ordering.replay_probability);
        o->finish();
    }
    if (auto o = root.child("observer")) {
        o->string("preset", c.observer_preset);
        try {
            c.observer = observer_preset(c.observer_preset);
        } catch (const ConfigError&) {
            throw ConfigError(o->field("preset"), "unknown preset '" + c.observer_preset + "'");
        }
        read_observer(*o, c.observer);
        o->finish();
    }
    if (auto l = root.child("logging")) {
        l->integer("force_log_hz", c.logging.force_log_hz);
        l->boolean("drive_device", c.logging.drive_device);
        l->finish();
    }
    root.finish();
    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json gains = json::array();
    for (const auto& g : c.device.gains) gains.push_back({{"kp", g.kp}, {"kd", g.kd}});
    json staircase = {
        {"step_up_mm", c.staircase.step_up_mm},
        {"step_ratio", c.staircase.step_ratio},
        {"reversals_to_stop", c.staircase.reversals_to_stop},
        {"reversals_for_estimate", c.staircase.reversals_for_estimate},
        {"equal_counts_as", std::string(to_string(c.staircase.equal_counts_as))},
        {"single_site", channels_json(c.staircase.single_site)},
        {"two_site", channels_json(c.staircase.two_site)},
        {"trial_cap", c.staircase.trial_cap},
    };
    if (c.staircase.start_mm) staircase["start_mm"] = *c.staircase.start_mm;
    const auto& o = c.observer;
    return {
        {"version", 1},
        {"seed", c.seed},
        {"device",
         {{"channels", c.device.channels},
          {"stroke_mm", c.device.actuator.stroke_mm},
          {"max_speed_mm_s", c.device.actuator.max_speed_mm_s},
          {"time_constant_s", c.device.actuator.time_constant_s},
          {"tick_rate_hz", c.device.actuator.tick_rate_hz},
          {"gains", gains},
          {"site_factors", c.device.site_factors},
          {"tissue",
           {{"contact_offset_mm", c.device.tissue.contact_offset_mm},
            {"linear_stiffness_n_per_mm", c.device.tissue.linear_stiffness_n_per_mm},
            {"cubic_coeff_n_per_mm3", c.device.tissue.cubic_coeff_n_per_mm3}}},
          {"sensor",
           {{"range_n", c.device.sensor.range_n},
            {"resolution_n", c.device.sensor.resolution_n},
            {"noise_sd_n", c.device.sensor.noise_sd_n}}},
          {"geometry",
           {{"tactor_diameter_mm", c.device.geometry.tactor_diameter_mm},
            {"edge_gap_mm", c.device.geometry.edge_gap_mm}}}}},
        {"timing", {{"hold_ms", c.timing.hold_ms}, {"gap_ms", c.timing.gap_ms}}},
        {"asr", {{"step_mm", c.asr.step_mm}, {"channels", channels_json(c.asr.channels)}}},
        {"staircase", staircase},
        {"ordering",
         {{"channels", {c.ordering.first_channel.index(), c.ordering.second_channel.index()}},
          {"responder", c.ordering.responder == OrderingResponderKind::SumIntensity ? "sum-intensity" : "perceived"},
          {"replay_probability", c.ordering.replay_probability}}},
        {"observer",
         {{"preset", c.observer_preset},
          {"gain", o.gain},
          {"transducer_exponent", o.transducer_exponent},
          {"detection_threshold_mm", o.detection_threshold_mm},
          {"max_comfortable_mm", o.max_comfortable_mm},
          {"summation_exponent", number_or_inf(o.summation_exponent)},
          {"weber_fraction", o.weber_fraction},
          {"noise_floor", o.noise_floor},
          {"equality_band", o.equality_band},
          {"base_latency_ms", o.base_latency_ms},
          {"force_to_mm", o.force_to_mm},
          {"input", o.input == ObserverInput::Force ? "force" : "commanded"}}},
        {"logging", {{"force_log_hz", c.logging.force_log_hz}, {"drive_device", c.logging.drive_device}}},
    };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    json tree;
    try {
        tree = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", std::string("parse error: ") + e.what());
    }
    return config_from_json(tree);
}

}  // namespace sumlab
