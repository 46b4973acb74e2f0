#pragma once

#include <map>

#include "hannrx/channel.hpp"
#include "hannrx/metrics.hpp"

namespace hannrx {

enum class ReceiverKind { rect, taper, hann };
enum class VarianceMode { estimated, genie };

struct ReceiverSpec {
    std::string id;
    ReceiverKind kind = ReceiverKind::rect;
    std::size_t taper_len = 0;           // K, taper receivers only
    std::size_t iterations = 6;          // hann receivers only
    VarianceMode variance_mode = VarianceMode::estimated;
    bool theory_bound = false;           // genie ICI cancellation curve
};

struct InterfererConfig {
    Numerology numerology;
    std::string tdl_profile = "tdl-c";
    double rms_ds_s = 300e-9;
    double doppler_hz = 0.0;
    double snr_db = 20.0;
    long long sample_offset = 0;
    std::size_t taper_len = 0;  // transmit-side CP taper
};

struct ScenarioConfig {
    std::string id = "scenario";
    Numerology desired;
    std::string desired_tdl_profile = "tdl-a";
    double desired_rms_ds_s = 30e-9;
    double desired_doppler_hz = 0.0;
    rvec snr_grid_db;
    std::vector<InterfererConfig> interferers;
    FrameSchedule frame;
    std::vector<ReceiverSpec> receivers;
    std::size_t trials = 1;
    std::uint64_t master_seed = 1;
    std::size_t cir_support_len = 6;
    double cir_ridge = 1e-4;
    std::size_t num_sinusoids = 32;

    void validate() const;  // throws with a field path on bad config
};

/// "paper-shape" (N=256 desk scale) and "paper-full" (N=1024) presets.
ScenarioConfig preset(const std::string& name);

/// Documented carrier used to convert preset speeds to max Doppler.
constexpr double kPresetCarrierHz = 2.593e9;

struct AggregateKey {
    std::string receiver;
    double snr_db = 0.0;
    std::size_t iteration = 0;
    bool operator<(const AggregateKey& o) const {
        if (receiver != o.receiver) return receiver < o.receiver;
        if (snr_db != o.snr_db) return snr_db < o.snr_db;
        return iteration < o.iteration;
    }
};

struct Aggregate {
    std::size_t errors = 0;
    std::size_t bits = 0;
    double signal_power = 0.0;
    double error_power = 0.0;

    double ber() const { return bits ? double(errors) / double(bits) : 0.0; }
    double sinr_db() const;
};

struct TrialResult {
    std::size_t snr_index = 0;
    std::size_t trial = 0;
    std::uint64_t stream_checksum = 0;  // same y consumed by every receiver
    std::map<AggregateKey, Aggregate> contributions;
};

/// One trial: shared received stream, every configured receiver run on it.
TrialResult run_trial(const ScenarioConfig& config, std::size_t snr_index, std::size_t trial);

struct RunResult {
    std::map<AggregateKey, Aggregate> aggregates;
    std::size_t trials_run = 0;
    std::size_t trials_resumed = 0;
};

/// Full Monte Carlo sweep. out_dir receives ber_curves.csv, a JSON run
/// manifest, and a per-trial journal enabling resume; pass an empty out_dir
/// to keep everything in memory.
RunResult run_scenario(const ScenarioConfig& config, const std::string& out_dir = "");

std::string ber_curves_csv(const std::map<AggregateKey, Aggregate>& aggregates);
std::string config_to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const std::string& text);
std::string psd_curves_csv(const PsdCurve& rect, const PsdCurve& hann);
std::string audit_csv(const OpCountReport& report);

}  // namespace hannrx
