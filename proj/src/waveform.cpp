#include "hannrx/waveform.hpp"

#include <algorithm>
#include <cmath>

namespace hannrx {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
}

void Numerology::validate() const {
    if (fft_size < 4) throw std::invalid_argument("Numerology: fft_size too small");
    if (cp_len == 0 || cp_len >= fft_size) throw std::invalid_argument("Numerology: need 0 < L < N");
    if (data_width < 2 || data_width > fft_size - 2)
        throw std::invalid_argument("Numerology: need 2 <= D <= N-2");
    if (first_data_bin < 1 || first_data_bin + data_width > fft_size - 1)
        throw std::invalid_argument("Numerology: data band must keep a guard bin to the wrap edge");
}

bool FrameSchedule::is_pilot(std::size_t sym) const {
    return std::binary_search(pilot_symbol_indices.begin(), pilot_symbol_indices.end(), sym);
}

void FrameSchedule::validate() const {
    for (std::size_t i = 0; i < pilot_symbol_indices.size(); ++i) {
        if (pilot_symbol_indices[i] >= symbols_per_frame)
            throw std::invalid_argument("FrameSchedule: pilot index out of frame");
        if (i > 0 && pilot_symbol_indices[i] <= pilot_symbol_indices[i - 1])
            throw std::invalid_argument("FrameSchedule: pilot indices must be strictly increasing");
    }
}

cvec qpsk_modulate(const std::vector<int>& bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_modulate: odd bit count");
    cvec out(bits.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = cplx((1 - 2 * bits[2 * i]) * kInvSqrt2, (1 - 2 * bits[2 * i + 1]) * kInvSqrt2);
    }
    return out;
}

std::vector<int> qpsk_hard_bits(const cvec& symbols) {
    std::vector<int> bits(symbols.size() * 2);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols[i].real() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols[i].imag() < 0.0 ? 1 : 0;
    }
    return bits;
}

rvec qpsk_llr(const cvec& obs, const rvec& noise_var) {
    if (obs.size() != noise_var.size()) throw std::invalid_argument("qpsk_llr: size mismatch");
    rvec llrs(obs.size() * 2);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double v = std::max(noise_var[i], kEps);
        llrs[2 * i] = 2.0 * std::numbers::sqrt2 * obs[i].real() / v;
        llrs[2 * i + 1] = 2.0 * std::numbers::sqrt2 * obs[i].imag() / v;
    }
    return llrs;
}

std::vector<int> bits_from_llrs(const rvec& llrs) {
    std::vector<int> bits(llrs.size());
    for (std::size_t i = 0; i < llrs.size(); ++i) bits[i] = llrs[i] < 0.0 ? 1 : 0;
    return bits;
}

std::vector<int> random_bits(std::size_t count, std::uint64_t seed) {
    std::vector<int> bits(count);
    std::uint64_t state = seed;
    std::uint64_t word = 0;
    int avail = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (avail == 0) {
            word = splitmix64(state);
            avail = 64;
        }
        bits[i] = int(word & 1u);
        word >>= 1;
        --avail;
    }
    return bits;
}

cvec random_qpsk(std::size_t count, std::uint64_t seed) {
    return qpsk_modulate(random_bits(2 * count, seed));
}

cvec subcarrier_map(const Numerology& num, const cvec& d) {
    num.validate();
    if (d.size() != num.data_width) throw std::invalid_argument("subcarrier_map: width mismatch");
    cvec out(num.fft_size, cplx(0.0, 0.0));
    std::copy(d.begin(), d.end(), out.begin() + num.first_data_bin);
    return out;
}

cvec subcarrier_demap(const Numerology& num, const cvec& full) {
    if (full.size() != num.fft_size) throw std::invalid_argument("subcarrier_demap: length mismatch");
    return cvec(full.begin() + num.first_data_bin,
                full.begin() + num.first_data_bin + num.data_width);
}

cvec ofdm_modulate(const Numerology& num, const cvec& d) {
    const cvec body = dft(subcarrier_map(num, d), /*inverse=*/true);
    cvec out(num.symbol_len());
    std::copy(body.end() - num.cp_len, body.end(), out.begin());
    std::copy(body.begin(), body.end(), out.begin() + num.cp_len);
    return out;
}

Frame build_frame(const Numerology& num, const FrameSchedule& schedule,
                  const std::vector<int>& payload_bits) {
    num.validate();
    schedule.validate();
    const std::size_t bits_per_symbol = 2 * num.data_width;
    if (payload_bits.size() != schedule.data_symbol_count() * bits_per_symbol)
        throw std::invalid_argument("build_frame: payload size mismatch");

    Frame frame;
    frame.samples.reserve(schedule.symbols_per_frame * num.symbol_len());
    std::size_t bit_pos = 0;
    std::size_t pilot_idx = 0;
    for (std::size_t sym = 0; sym < schedule.symbols_per_frame; ++sym) {
        cvec d;
        if (schedule.is_pilot(sym)) {
            const std::uint64_t seed =
                derive_seed(schedule.pilot_seed, "pilot/" + std::to_string(pilot_idx));
            d = random_qpsk(num.data_width, seed);
            frame.pilot_symbols.push_back(d);
            ++pilot_idx;
        } else {
            std::vector<int> bits(payload_bits.begin() + bit_pos,
                                  payload_bits.begin() + bit_pos + bits_per_symbol);
            bit_pos += bits_per_symbol;
            d = qpsk_modulate(bits);
            frame.data_bits.push_back(std::move(bits));
            frame.data_symbol_indices.push_back(sym);
        }
        const cvec sym_samples = ofdm_modulate(num, d);
        frame.samples.insert(frame.samples.end(), sym_samples.begin(), sym_samples.end());
    }
    return frame;
}

}  // namespace hannrx
