#pragma once

#include <string>

#include "hannrx/waveform.hpp"

namespace hannrx {

/// Tapped-delay-line profile. Delays are rescaled so the continuous-time
/// RMS delay spread hits rms_ds_target before sample quantization.
struct TdlSpec {
    rvec tap_delays_s;    // nonnegative, sorted
    rvec tap_powers;      // linear, sum to 1
    double rms_ds_target_s = 0.0;  // 0 -> use delays as given
    double doppler_hz = 0.0;
    std::uint64_t seed = 0;
    std::size_t num_sinusoids = 32;

    void validate() const;
};

/// Per-tap complex gain time series at integer-sample lags.
/// h_{n,k} is nonzero only where k matches a tap lag.
struct ChannelRealization {
    std::vector<std::size_t> lags;       // integer-sample tap delays
    std::vector<cvec> tap_gains;         // [tap][sample], length = duration
    std::size_t duration = 0;

    cplx gain(std::size_t tap, std::size_t n) const { return tap_gains[tap][n]; }
};

struct UserLink {
    cvec samples;
    double snr_db = 0.0;
    ChannelRealization realization;
    long long sample_offset = 0;  // 0 for the desired user
};

/// Parse "delay_ns power_db" rows ('#' comments allowed); powers renormalized
/// to sum 1. Embedded TDL-A / TDL-C tables are available by name.
TdlSpec tdl_profile(const std::string& name);
void load_tdl_table(const std::string& text, TdlSpec& spec);
/// RMS delay spread of the (continuous) profile.
double rms_delay_spread(const rvec& delays_s, const rvec& powers);

/// Sum-of-sinusoids Jakes synthesizer, unit total average tap energy,
/// per-tap seeds derived from spec.seed. doppler_hz = 0 gives a channel
/// constant in time (still a random draw).
ChannelRealization make_tdl(const TdlSpec& spec, double sample_rate_hz, std::size_t duration);

/// out[n] = sum_k h_{n+start,k} * x[n + start - k + offset], zero-fill
/// outside the stream.
cvec apply_channel(const UserLink& link, std::size_t window_start, std::size_t window_len);

/// y = CN(0,1) noise + sum_j sqrt(10^(snr_db/10)) * H_j x_j over the window.
/// noise_seed == 0 with disable_noise set gives the noiseless limit.
cvec compose_received(const UserLink& desired, const std::vector<UserLink>& interferers,
                      std::uint64_t noise_seed, std::size_t window_start, std::size_t window_len,
                      bool disable_noise = false);

/// Seeded complex standard Gaussian vector (Box-Muller over splitmix64).
cvec complex_awgn(std::size_t count, std::uint64_t seed);

/// Random-QPSK CP-OFDM stream on the interferer's own grid, with a
/// raised-cosine edge taper of taper_len samples at each symbol boundary
/// (transmit windowing of the ISI-free CP samples).
cvec interferer_stream(const Numerology& num, std::size_t num_symbols, std::size_t taper_len,
                       std::uint64_t seed);

}  // namespace hannrx
