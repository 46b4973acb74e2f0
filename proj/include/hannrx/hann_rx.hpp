#pragma once

#include "hannrx/rx_baseline.hpp"

namespace hannrx {

enum class HannVariant { periodic, paper_symmetric };

/// Receive window over the N post-CP samples. The periodic variant
/// w[n] = 1 - cos(2 pi n / N) makes the spectral coupling kernel exactly
/// [1, -1/2] tridiagonal (circulant); the symmetric variant keeps the
/// N-1 denominator closed form with its sum-preserving normalization.
struct HannWindow {
    HannVariant variant = HannVariant::periodic;
    rvec coefficients;  // length N
};

HannWindow hann_window(std::size_t n, HannVariant variant = HannVariant::periodic);

/// The tridiagonal spectral coupling: center 1, first off-diagonals -1/2,
/// with wrap entries present in the full-spectrum (circulant) operator.
struct IciKernel {
    static constexpr double center = 1.0;
    static constexpr double off = -0.5;
};

/// r_tilde = F_N W y: discard the CP, window the body, transform.
cvec hann_receive(const cvec& y, const Numerology& num, const HannWindow& window);

/// max |F diag(w) F^H - circulant([1, -1/2, 0, ..., 0, -1/2])| over all
/// entries, computed from the explicitly formed product matrix.
double ici_operator_check(std::size_t n, const HannWindow& window);

/// Extended demap: bins first-1 .. first+D inclusive (D+2 values).
cvec extended_demap(const cvec& full_spectrum, const Numerology& num);

struct HannCirEstimate {
    cvec h;  // length N, support-restricted
    bool ill_conditioned = false;
    std::vector<std::size_t> near_null_bins;  // extended-bin indices with nulled filtered pilots
};

/// Inverts M_check^T Toep(nu) diag(M d~) F_N on the tap support. The design
/// is the nu-filtered pilot diagonal; filtered pilots may cancel exactly for
/// some pilot patterns, those bins are flagged.
HannCirEstimate estimate_cir_hann(const cvec& pilot_obs, const cvec& pilots, const Numerology& num,
                                  std::size_t support_len, double ridge = 0.0,
                                  const rvec* row_var = nullptr);

/// Per-extended-bin residual power |obs - reconstruction|^2, 3-bin moving
/// average, clamped at 1e-12.
rvec estimate_disturbance(const cvec& pilot_obs, const cvec& reconstructed);

/// Everything the combiner and SIC need for one OFDM symbol.
/// ext_channel is (D+2) x D with three nonzeros per column
/// (theta_d * [-1/2, 1, -1/2]); combiner rows satisfy diag(C H~) = 1;
/// residual_gain G = C H~ - I is pentadiagonal with zero diagonal.
struct MrcOperator {
    std::size_t data_width = 0;            // D
    CMat ext_channel;                      // H~, (D+2) x D
    CMat combiner;                         // C, D x (D+2)
    CMat residual_gain;                    // G, D x D
    rvec residual_power;                   // rho, length D
    std::vector<rvec> sinr;                // gamma~[d][kappa], D x (D+2)
    bool degenerate = false;               // all-zero channel estimate
};

MrcOperator build_mrc(const cvec& theta_hat, const rvec& disturbance_var);

/// d_breve = C d_check (matrix form; the explicit scalar form is
/// mrc_combine_explicit and the two agree to 1e-10 on interior bins).
cvec mrc_combine(const cvec& d_check, const MrcOperator& op);
cvec mrc_combine_explicit(const cvec& d_check, const cvec& theta_hat,
                          const rvec& disturbance_var);

/// Model-predicted post-combining SINR of an arbitrary weight row for
/// subcarrier d under the independent-disturbance model; build_mrc's
/// unequalized weights maximize it.
double weights_model_sinr(const cvec& weights, std::size_t d, const CMat& ext_channel,
                          const rvec& disturbance_var);
cvec mrc_weights_row(const MrcOperator& op, std::size_t d);  // unequalized C~ row

struct SoftSymbolState {
    cvec soft_mean;   // length D
    rvec soft_var;    // in [0,1] for unit-energy QPSK
    rvec llrs;        // 2D per-bit
    std::size_t iteration = 0;
};

/// Gaussian soft parallel interference cancellation. Iteration 0 is the
/// plain MRC output; each pass cancels G * soft_mean and re-derives LLRs
/// against rho + sum |G|^2 soft_var. history[i] is the state after i
/// cancellation passes. residual_power optionally replaces the model's
/// per-subcarrier rho with a calibrated value (e.g. measured on pilots);
/// the model rho underreports the delivered error where the disturbance
/// is correlated across bins, which makes the soft feedback overconfident.
std::vector<SoftSymbolState> sic_decode(const cvec& d_breve, const MrcOperator& op,
                                        std::size_t iterations,
                                        const rvec* residual_power = nullptr);

/// d_breve - G d_true: the perfect-cancellation (Hann-Theory) signal.
cvec genie_bound(const cvec& d_breve, const MrcOperator& op, const cvec& d_true);

/// Hard-decision refinement of a QPSK symbol vector under the exact
/// post-combining likelihood. The combiner output noise is correlated
/// across subcarriers (adjacent combiner rows share extended bins), so the
/// per-row LLR metric the cancellation loop uses cannot distinguish the
/// true pattern from certain locked error patterns; this stage whitens
/// with C diag(sigma) C^H and runs coordinate descent plus an exhaustive
/// search over all 1- and 2-symbol substitutions. Returns the refined
/// unit-energy QPSK vector.
cvec likelihood_refine(const cvec& delta, const cvec& theta, const rvec& disturbance_var,
                       const cvec& seed);

}  // namespace hannrx
