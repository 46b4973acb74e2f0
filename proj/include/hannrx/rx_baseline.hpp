#pragma once

#include "hannrx/waveform.hpp"

namespace hannrx {

/// Extensionless receive window of tail length K: the last K CP samples are
/// scaled by the taper and the matching K tail samples by its complement.
/// K = 0 is the plain rectangular receiver.
struct RxWindowSpec {
    std::size_t tail_len = 0;  // K
    rvec taper;                // length K, values in [0,1]

    void validate(std::size_t cp_len) const;
};

/// Raised-cosine taper w[i] = (1 - cos(pi*(i+1/2)/K))/2; stand-in for the
/// optimized orthogonal-windowing designs.
RxWindowSpec raised_cosine_window(std::size_t tail_len);

struct CfrEstimate {
    cvec theta;              // per-bin CFR (demapped, length D)
    rvec per_bin_disturbance;  // sigma^2 per bin, >= 0
};

/// N x (N+L) windowed CP removal operator: identity body, taper on the last
/// K CP samples, complement on the final K tail samples.
CMat cp_removal_matrix(const Numerology& num, const RxWindowSpec& spec);

/// r = M^T F_N B_K y without materializing B_K.
cvec receive_windowed(const cvec& y, const Numerology& num, const RxWindowSpec& spec);
/// Full-spectrum version (length N, before demapping).
cvec receive_windowed_full(const cvec& y, const Numerology& num, const RxWindowSpec& spec);

/// Support-restricted ridge LS inversion of diag(pilots) M^T F_N.
struct CirEstimate {
    cvec h;  // length N, nonzero only on the support
    bool ill_conditioned = false;
};
CirEstimate estimate_cir_baseline(const cvec& r_pilot, const cvec& pilots, const Numerology& num,
                                  std::size_t support_len, double ridge = 0.0);

/// theta[b] = sum_k h[k] e^{-j2pi bk/N}: a delta CIR maps to a flat unit
/// CFR, consistent with the unitary modulate/receive pair.
cvec cfr_from_cir(const cvec& h);

/// Per-bin scalar MMSE: d_i = conj(theta_i) r_i / (|theta_i|^2 + sigma_i^2).
cvec equalize_mmse(const cvec& r, const CfrEstimate& est);

/// Pilot-residual disturbance estimate, 3-bin moving average, clamped.
rvec residual_disturbance(const cvec& observed, const cvec& reconstructed);

/// Linear per-tap interpolation of CIR estimates between pilot symbols;
/// endpoints clamp to the nearest pilot.
std::vector<cvec> interpolate_cir(const std::vector<cvec>& pilot_cirs,
                                  const std::vector<std::size_t>& pilot_positions,
                                  std::size_t num_symbols);

}  // namespace hannrx
