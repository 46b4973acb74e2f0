#include "hannrx/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hannrx {

namespace {

constexpr const char* kTdlA = R"(
0.0000 -13.4
0.3819 0.0
0.4025 -2.2
0.5868 -4.0
0.4610 -6.0
0.5375 -8.2
0.6708 -9.9
0.5750 -10.5
0.7618 -7.5
1.5375 -15.9
1.8978 -6.6
2.2242 -16.7
2.1718 -12.4
2.4942 -15.2
2.5119 -10.8
3.0582 -11.3
4.0810 -12.7
4.4579 -16.2
4.5695 -18.3
4.7966 -18.9
5.0066 -16.6
5.3043 -19.9
9.6586 -29.7
)";

constexpr const char* kTdlC = R"(
0.0000 -4.4
0.2099 -1.2
0.2219 -3.5
0.2329 -5.2
0.2176 -2.5
0.6366 0.0
0.6448 -2.2
0.6560 -3.9
0.6584 -7.4
0.7935 -7.1
0.8213 -10.7
0.9336 -11.1
1.2285 -5.1
1.3083 -6.8
2.1704 -8.7
2.7105 -13.2
4.2589 -13.9
4.6003 -13.9
5.4902 -13.6
5.6077 -16.8
6.3065 -17.8
6.6374 -19.6
7.0427 -14.8
8.6523 -21.9
)";

double uniform01(std::uint64_t& state) {
    return double(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace

void TdlSpec::validate() const {
    if (tap_delays_s.empty() || tap_delays_s.size() != tap_powers.size())
        throw std::invalid_argument("TdlSpec: delay/power size mismatch");
    double sum = 0.0;
    for (double p : tap_powers) {
        if (p < 0.0) throw std::invalid_argument("TdlSpec: negative tap power");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("TdlSpec: tap powers must sum to 1");
    if (doppler_hz < 0.0) throw std::invalid_argument("TdlSpec: negative doppler");
    if (num_sinusoids == 0) throw std::invalid_argument("TdlSpec: num_sinusoids must be positive");
}

void load_tdl_table(const std::string& text, TdlSpec& spec) {
    spec.tap_delays_s.clear();
    spec.tap_powers.clear();
    std::istringstream in(text);
    std::string line;
    double power_sum = 0.0;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double delay_ns, power_db;
        if (!(row >> delay_ns >> power_db)) continue;
        spec.tap_delays_s.push_back(delay_ns * 1e-9);
        spec.tap_powers.push_back(std::pow(10.0, power_db / 10.0));
        power_sum += spec.tap_powers.back();
    }
    if (spec.tap_powers.empty()) throw std::invalid_argument("load_tdl_table: no rows");
    for (double& p : spec.tap_powers) p /= power_sum;
}

TdlSpec tdl_profile(const std::string& name) {
    TdlSpec spec;
    if (name == "tdl-a") load_tdl_table(kTdlA, spec);
    else if (name == "tdl-c") load_tdl_table(kTdlC, spec);
    else if (name == "flat") {
        spec.tap_delays_s = {0.0};
        spec.tap_powers = {1.0};
    } else {
        throw std::invalid_argument("tdl_profile: unknown profile " + name);
    }
    return spec;
}

double rms_delay_spread(const rvec& delays_s, const rvec& powers) {
    double mean = 0.0, mom2 = 0.0;
    for (std::size_t i = 0; i < delays_s.size(); ++i) {
        mean += powers[i] * delays_s[i];
        mom2 += powers[i] * delays_s[i] * delays_s[i];
    }
    return std::sqrt(std::max(mom2 - mean * mean, 0.0));
}

ChannelRealization make_tdl(const TdlSpec& spec, double sample_rate_hz, std::size_t duration) {
    spec.validate();
    if (duration == 0) throw std::invalid_argument("make_tdl: zero duration");

    rvec delays = spec.tap_delays_s;
    if (spec.rms_ds_target_s > 0.0) {
        const double current = rms_delay_spread(delays, spec.tap_powers);
        if (current > 0.0) {
            const double scale = spec.rms_ds_target_s / current;
            for (double& d : delays) d *= scale;
        }
    }

    // Quantize to nearest sample; taps landing on the same lag merge powers.
    std::vector<std::size_t> lags;
    rvec powers;
    for (std::size_t i = 0; i < delays.size(); ++i) {
        const auto lag = std::size_t(std::llround(delays[i] * sample_rate_hz));
        if (lag >= duration) throw std::invalid_argument("make_tdl: tap delay beyond duration");
        auto it = std::find(lags.begin(), lags.end(), lag);
        if (it == lags.end()) {
            lags.push_back(lag);
            powers.push_back(spec.tap_powers[i]);
        } else {
            powers[std::size_t(it - lags.begin())] += spec.tap_powers[i];
        }
    }

    ChannelRealization real;
    real.lags = lags;
    real.duration = duration;
    real.tap_gains.resize(lags.size());

    const std::size_t ns = spec.num_sinusoids;
    for (std::size_t t = 0; t < lags.size(); ++t) {
        std::uint64_t tap_state = derive_seed(spec.seed, "tap/" + std::to_string(t));
        // Jakes sum of sinusoids: random arrival angles give the classic
        // U-shaped spectrum with autocorrelation J0(2 pi fd tau).
        std::vector<cplx> phasors(ns), steps(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            const double alpha = 2.0 * std::numbers::pi * uniform01(tap_state);
            const double phi = 2.0 * std::numbers::pi * uniform01(tap_state);
            const double omega =
                2.0 * std::numbers::pi * spec.doppler_hz * std::cos(alpha) / sample_rate_hz;
            phasors[s] = cplx(std::cos(phi), std::sin(phi));
            steps[s] = cplx(std::cos(omega), std::sin(omega));
        }
        const double amp = std::sqrt(powers[t] / double(ns));
        cvec& series = real.tap_gains[t];
        series.resize(duration);
        for (std::size_t n = 0; n < duration; ++n) {
            cplx acc(0.0, 0.0);
            for (std::size_t s = 0; s < ns; ++s) {
                acc += phasors[s];
                phasors[s] *= steps[s];
            }
            series[n] = amp * acc;
        }
    }
    return real;
}

cvec apply_channel(const UserLink& link, std::size_t window_start, std::size_t window_len) {
    const auto& real = link.realization;
    if (window_start + window_len > real.duration)
        throw std::invalid_argument("apply_channel: window out of realization range");
    cvec out(window_len, cplx(0.0, 0.0));
    const long long len = (long long)link.samples.size();
    for (std::size_t t = 0; t < real.lags.size(); ++t) {
        const long long lag = (long long)real.lags[t];
        const cvec& gains = real.tap_gains[t];
        for (std::size_t n = 0; n < window_len; ++n) {
            const long long src = (long long)(window_start + n) - lag + link.sample_offset;
            if (src < 0 || src >= len) continue;
            out[n] += gains[window_start + n] * link.samples[std::size_t(src)];
        }
    }
    return out;
}

cvec complex_awgn(std::size_t count, std::uint64_t seed) {
    cvec out(count);
    std::uint64_t state = seed;
    for (std::size_t i = 0; i < count; ++i) {
        const double u1 = std::max(uniform01(state), 1e-300);
        const double u2 = uniform01(state);
        const double mag = std::sqrt(-std::log(u1));  // per-component var 1/2
        out[i] = mag * cplx(std::cos(2.0 * std::numbers::pi * u2),
                            std::sin(2.0 * std::numbers::pi * u2));
    }
    return out;
}

cvec compose_received(const UserLink& desired, const std::vector<UserLink>& interferers,
                      std::uint64_t noise_seed, std::size_t window_start, std::size_t window_len,
                      bool disable_noise) {
    cvec y = disable_noise ? cvec(window_len, cplx(0.0, 0.0))
                           : complex_awgn(window_len, noise_seed);
    auto add_link = [&](const UserLink& link) {
        const double amp = std::sqrt(std::pow(10.0, link.snr_db / 10.0));
        const cvec contrib = apply_channel(link, window_start, window_len);
        for (std::size_t n = 0; n < window_len; ++n) y[n] += amp * contrib[n];
    };
    if (!desired.samples.empty()) add_link(desired);
    for (const auto& link : interferers) add_link(link);
    return y;
}

cvec interferer_stream(const Numerology& num, std::size_t num_symbols, std::size_t taper_len,
                       std::uint64_t seed) {
    num.validate();
    if (taper_len > num.cp_len) throw std::invalid_argument("interferer_stream: taper too long");
    const std::size_t sym_len = num.symbol_len();
    cvec stream;
    stream.reserve(num_symbols * sym_len);
    for (std::size_t s = 0; s < num_symbols; ++s) {
        const cvec d = random_qpsk(num.data_width, derive_seed(seed, "isym/" + std::to_string(s)));
        cvec sym = ofdm_modulate(num, d);
        for (std::size_t i = 0; i < taper_len; ++i) {
            const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * (double(i) + 0.5) / double(taper_len)));
            sym[i] *= w;                        // ramp up over the CP head
            sym[sym_len - 1 - i] *= w;          // ramp down at the symbol tail
        }
        stream.insert(stream.end(), sym.begin(), sym.end());
    }
    return stream;
}

}  // namespace hannrx
