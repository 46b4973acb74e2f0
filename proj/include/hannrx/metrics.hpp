#pragma once

#include <string>

#include "hannrx/hann_rx.hpp"

namespace hannrx {

struct ErrorCount {
    std::size_t errors = 0;
    std::size_t total = 0;
};

ErrorCount count_errors(const std::vector<int>& decided, const std::vector<int>& truth);

/// Wilson score interval for a binomial rate.
struct Interval {
    double low = 0.0;
    double high = 0.0;
};
Interval wilson_interval(std::size_t errors, std::size_t total, double z = 1.96);

/// Averaged zero-padded periodogram of one subcarrier seen through a
/// receive window (power normalized so the peak sits at 0 dB).
struct PsdCurve {
    rvec offsets_scs;   // frequency offset from the subcarrier, in spacings
    rvec power_db;
    std::vector<bool> marker;  // true at integer bin offsets
};

PsdCurve subcarrier_psd(const Numerology& num, std::size_t subcarrier_bin,
                        const rvec& rx_window, std::size_t num_symbols,
                        std::size_t resolution_factor, std::uint64_t seed);

/// Peak power (dB) of a PsdCurve within [lo, hi] subcarrier spacings.
double psd_peak_in_band(const PsdCurve& curve, double lo, double hi);

/// Sample signal power over sample error power, per subcarrier.
struct SinrAccumulator {
    std::vector<double> signal_power;
    std::vector<double> error_power;
    std::size_t symbols = 0;

    void add(const cvec& estimates, const cvec& truth);
    /// dB per subcarrier, capped at +80; insufficient_samples set when any
    /// subcarrier saw fewer than min_symbols contributions.
    rvec sinr_db(std::size_t min_symbols = 1000, bool* insufficient_samples = nullptr) const;
    double aggregate_db() const;
};

/// One row of the complexity audit; measured counts are filled by the
/// instrumented run where available.
struct OpCountStep {
    std::string name;
    long long formula_mults = 0;
    long long formula_adds = 0;
    long long measured_mults = -1;  // -1: not instrumented
    long long measured_adds = -1;
};

struct OpCountReport {
    std::size_t fft_size = 0, data_width = 0, constellation = 0, iterations = 0;
    std::vector<OpCountStep> steps;
    long long mrc_total_mults = 0, mrc_total_adds = 0;
    long long sic_iter_mults_exact = 0, sic_iter_mults_cm = 0, sic_iter_adds = 0;
    /// Per-configuration totals following the published comparison table
    /// (adds column is internally consistent; the mults base is reported
    /// from the same table, not rederived).
    long long total_mults(std::size_t iters) const;
    long long total_adds(std::size_t iters) const;
    std::string to_text() const;
};

struct AuditParams {
    std::size_t fft_size = 1024;
    std::size_t data_width = 12;
    std::size_t constellation = 4;
    std::size_t iterations = 6;
};

/// Evaluates the per-step complexity formulas and runs the instrumented
/// combiner on a random channel draw to report measured counts side by side.
OpCountReport audit_opcounts(const AuditParams& params);

}  // namespace hannrx
