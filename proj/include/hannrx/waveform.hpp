#pragma once

#include <cstdint>

#include "hannrx/numerics.hpp"
#include "hannrx/types.hpp"

namespace hannrx {

/// OFDM parameter set shared by every module. The data band is kept away
/// from the DC/wrap edge so the extended (D+2)-bin demapper never wraps.
struct Numerology {
    std::size_t fft_size = 0;       // N
    std::size_t cp_len = 0;         // L
    std::size_t data_width = 0;     // D
    std::size_t first_data_bin = 0;
    double scs_hz = 0.0;

    std::size_t symbol_len() const { return fft_size + cp_len; }
    double sample_rate() const { return scs_hz * double(fft_size); }
    void validate() const;
};

struct FrameSchedule {
    std::size_t symbols_per_frame = 0;
    std::vector<std::size_t> pilot_symbol_indices;
    std::uint64_t pilot_seed = 0;

    bool is_pilot(std::size_t sym) const;
    std::size_t data_symbol_count() const { return symbols_per_frame - pilot_symbol_indices.size(); }
    void validate() const;
};

// Gray-mapped unit-energy QPSK; bits (b0,b1) -> ((1-2*b0) + j(1-2*b1))/sqrt(2).
cvec qpsk_modulate(const std::vector<int>& bits);
std::vector<int> qpsk_hard_bits(const cvec& symbols);
/// Approximate per-bit LLRs, 2*sqrt(2)*Re/var and 2*sqrt(2)*Im/var;
/// positive LLR means bit 0.
rvec qpsk_llr(const cvec& obs, const rvec& noise_var);
std::vector<int> bits_from_llrs(const rvec& llrs);

cvec random_qpsk(std::size_t count, std::uint64_t seed);
std::vector<int> random_bits(std::size_t count, std::uint64_t seed);

cvec subcarrier_map(const Numerology& num, const cvec& d);
cvec subcarrier_demap(const Numerology& num, const cvec& full);

/// x0 = A F^H M d: unitary IDFT of the mapped band plus an L-sample CP.
cvec ofdm_modulate(const Numerology& num, const cvec& d);

struct Frame {
    cvec samples;                          // symbols_per_frame * (N+L)
    std::vector<cvec> pilot_symbols;       // one D-vector per pilot index
    std::vector<std::vector<int>> data_bits;  // one 2D-bit vector per data symbol
    std::vector<std::size_t> data_symbol_indices;
};

Frame build_frame(const Numerology& num, const FrameSchedule& schedule,
                  const std::vector<int>& payload_bits);

}  // namespace hannrx
