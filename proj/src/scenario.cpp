#include "hannrx/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace hannrx {

namespace {

using nlohmann::json;

std::string receiver_kind_name(ReceiverKind k) {
    switch (k) {
        case ReceiverKind::rect: return "rect";
        case ReceiverKind::taper: return "taper";
        case ReceiverKind::hann: return "hann";
    }
    return "?";
}

rvec real_parts(const cvec& v) {
    rvec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
    return out;
}

cvec to_cvec(const rvec& v) {
    cvec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

std::uint64_t checksum_samples(const cvec& v) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](double d) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        h ^= bits;
        h *= 0x100000001b3ULL;
    };
    for (const cplx& x : v) {
        mix(x.real());
        mix(x.imag());
    }
    return h;
}

}  // namespace

double Aggregate::sinr_db() const {
    const double ratio = signal_power / std::max(error_power, kEps);
    return std::min(10.0 * std::log10(std::max(ratio, 1e-30)), 80.0);
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& path, const std::string& why) {
        throw std::invalid_argument("config." + path + ": " + why);
    };
    try {
        desired.validate();
    } catch (const std::exception& e) {
        fail("desired", e.what());
    }
    if (snr_grid_db.empty()) fail("snr_grid_db", "must be nonempty");
    if (trials < 1) fail("trials", "must be >= 1");
    if (receivers.empty()) fail("receivers", "must be nonempty");
    try {
        frame.validate();
    } catch (const std::exception& e) {
        fail("frame", e.what());
    }
    if (frame.symbols_per_frame == 0) fail("frame.symbols_per_frame", "must be >= 1");
    if (cir_support_len == 0) fail("cir_support_len", "must be >= 1");
    for (std::size_t i = 0; i < interferers.size(); ++i) {
        const auto& itf = interferers[i];
        const std::string path = "interferers[" + std::to_string(i) + "]";
        try {
            itf.numerology.validate();
        } catch (const std::exception& e) {
            fail(path + ".numerology", e.what());
        }
        if (itf.taper_len > itf.numerology.cp_len) fail(path + ".taper_len", "exceeds CP");
        if (std::abs(itf.numerology.sample_rate() - desired.sample_rate()) >
            1e-6 * desired.sample_rate())
            fail(path + ".numerology", "sample rate must match the desired user's");
    }
    for (std::size_t i = 0; i < receivers.size(); ++i) {
        const auto& rx = receivers[i];
        const std::string path = "receivers[" + std::to_string(i) + "]";
        if (rx.id.empty()) fail(path + ".id", "must be nonempty");
        if (rx.kind == ReceiverKind::taper &&
            (rx.taper_len == 0 || rx.taper_len > desired.cp_len))
            fail(path + ".taper_len", "must be in [1, L]");
    }
}

ScenarioConfig preset(const std::string& name) {
    const bool full = name == "paper-full";
    if (!full && name != "paper-shape") throw std::invalid_argument("preset: unknown name " + name);

    // Speeds 120 / 3 km/h at the documented carrier.
    const double fd_desired = (120.0 / 3.6) * kPresetCarrierHz / 299792458.0;
    const double fd_interferer = (3.0 / 3.6) * kPresetCarrierHz / 299792458.0;
    const double guard_hz = 30e3;

    ScenarioConfig cfg;
    cfg.id = name;
    cfg.desired.scs_hz = 60e3;
    cfg.desired.data_width = 12;
    if (full) {
        cfg.desired.fft_size = 1024;
        cfg.desired.cp_len = 72;
        cfg.desired.first_data_bin = 506;
    } else {
        cfg.desired.fft_size = 256;
        cfg.desired.cp_len = 18;
        cfg.desired.first_data_bin = 122;
    }
    cfg.desired_tdl_profile = "tdl-a";
    cfg.desired_rms_ds_s = 10e-9;
    cfg.desired_doppler_hz = fd_desired;
    cfg.snr_grid_db = {10.0, 15.0, 20.0, 25.0, 30.0};
    cfg.trials = full ? 20 : 100;
    cfg.master_seed = 1;
    cfg.cir_support_len = full ? 10 : 3;
    cfg.cir_ridge = 1e-4;

    cfg.frame.symbols_per_frame = 15;
    // every seventh symbol; bracketing pilots keep all data symbols
    // interpolated rather than extrapolated
    cfg.frame.pilot_symbol_indices = {0, 7, 14};
    cfg.frame.pilot_seed = 7;

    // Interfering users on the 15 kHz grid (4x FFT), one band each side.
    InterfererConfig itf;
    itf.numerology.scs_hz = 15e3;
    itf.numerology.fft_size = cfg.desired.fft_size * 4;
    itf.numerology.cp_len = cfg.desired.cp_len * 4;
    itf.numerology.data_width = full ? 1632 : 408;
    itf.tdl_profile = "tdl-c";
    itf.rms_ds_s = 300e-9;
    itf.doppler_hz = fd_interferer;
    itf.snr_db = 20.0;
    itf.sample_offset = full ? 128 : 32;
    itf.taper_len = itf.numerology.cp_len / 2;

    const std::size_t gap = std::size_t(std::llround(guard_hz / itf.numerology.scs_hz));
    // Desired tone centers on the interferers' finer grid. The guard is the
    // spacing between occupied band edges: half a desired subcarrier (2 fine
    // slots) plus the guard plus half an interferer subcarrier.
    const std::size_t tone_lo = cfg.desired.first_data_bin * 4;
    const std::size_t tone_hi = (cfg.desired.first_data_bin + cfg.desired.data_width - 1) * 4;
    const std::size_t edge_offset = 2 + gap + 1;

    InterfererConfig lower = itf;
    lower.numerology.first_data_bin = tone_lo - edge_offset - (lower.numerology.data_width - 1);
    InterfererConfig upper = itf;
    upper.numerology.first_data_bin = tone_hi + edge_offset;
    cfg.interferers = {lower, upper};

    ReceiverSpec rect{.id = "rect", .kind = ReceiverKind::rect};
    ReceiverSpec taper{.id = "taper", .kind = ReceiverKind::taper,
                       .taper_len = cfg.desired.cp_len / 2};
    ReceiverSpec hann{.id = "hann-sic", .kind = ReceiverKind::hann, .iterations = 6,
                      .variance_mode = VarianceMode::estimated};
    ReceiverSpec theory{.id = "hann-theory", .kind = ReceiverKind::hann, .iterations = 0,
                        .variance_mode = VarianceMode::genie, .theory_bound = true};
    cfg.receivers = {rect, taper, hann, theory};
    return cfg;
}

namespace {

struct TrialContext {
    const ScenarioConfig& cfg;
    Frame frame;
    cvec y;        // received stream, shared by every receiver
    cvec y_dist;   // received stream minus the desired contribution
    HannWindow hann_win;
};

// Per-symbol slice of the shared stream.
cvec symbol_slice(const cvec& stream, const Numerology& num, std::size_t sym) {
    const std::size_t len = num.symbol_len();
    return cvec(stream.begin() + sym * len, stream.begin() + (sym + 1) * len);
}

void accumulate(std::map<AggregateKey, Aggregate>& agg, const AggregateKey& key,
                const ErrorCount& errs, const cvec& estimates, const cvec& truth) {
    Aggregate& a = agg[key];
    a.errors += errs.errors;
    a.bits += errs.total;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        a.signal_power += std::norm(truth[i]);
        a.error_power += std::norm(estimates[i] - truth[i]);
    }
}

void run_baseline_receiver(const TrialContext& ctx, const ReceiverSpec& rx, double snr_db,
                           std::map<AggregateKey, Aggregate>& agg) {
    const auto& num = ctx.cfg.desired;
    const RxWindowSpec win = rx.kind == ReceiverKind::rect ? RxWindowSpec{}
                                                           : raised_cosine_window(rx.taper_len);
    std::vector<cvec> pilot_cirs;
    std::vector<cvec> pilot_dists;
    for (std::size_t p = 0; p < ctx.frame.pilot_symbols.size(); ++p) {
        const std::size_t pos = ctx.cfg.frame.pilot_symbol_indices[p];
        const cvec r = receive_windowed(symbol_slice(ctx.y, num, pos), num, win);
        const CirEstimate est = estimate_cir_baseline(r, ctx.frame.pilot_symbols[p], num,
                                                      ctx.cfg.cir_support_len, ctx.cfg.cir_ridge);
        pilot_cirs.push_back(est.h);
        const cvec theta = subcarrier_demap(num, cfr_from_cir(est.h));
        cvec recon(num.data_width);
        for (std::size_t i = 0; i < num.data_width; ++i)
            recon[i] = theta[i] * ctx.frame.pilot_symbols[p][i];
        pilot_dists.push_back(to_cvec(residual_disturbance(r, recon)));
    }
    const auto cirs =
        interpolate_cir(pilot_cirs, ctx.cfg.frame.pilot_symbol_indices, ctx.cfg.frame.symbols_per_frame);
    const auto dists =
        interpolate_cir(pilot_dists, ctx.cfg.frame.pilot_symbol_indices, ctx.cfg.frame.symbols_per_frame);

    const AggregateKey key{rx.id, snr_db, 0};
    for (std::size_t i = 0; i < ctx.frame.data_symbol_indices.size(); ++i) {
        const std::size_t sym = ctx.frame.data_symbol_indices[i];
        const cvec r = receive_windowed(symbol_slice(ctx.y, num, sym), num, win);
        CfrEstimate est;
        est.theta = subcarrier_demap(num, cfr_from_cir(cirs[sym]));
        est.per_bin_disturbance = real_parts(dists[sym]);
        const cvec d_hat = equalize_mmse(r, est);
        const cvec truth = qpsk_modulate(ctx.frame.data_bits[i]);
        accumulate(agg, key, count_errors(qpsk_hard_bits(d_hat), ctx.frame.data_bits[i]), d_hat,
                   truth);
    }
}

void run_hann_receiver(const TrialContext& ctx, const ReceiverSpec& rx, double snr_db,
                       std::map<AggregateKey, Aggregate>& agg) {
    const auto& num = ctx.cfg.desired;
    const std::size_t D = num.data_width;

    // Genie disturbance: average extended-bin power of the stream with the
    // desired contribution removed.
    rvec genie_var(D + 2, 0.0);
    if (rx.variance_mode == VarianceMode::genie) {
        for (std::size_t sym = 0; sym < ctx.cfg.frame.symbols_per_frame; ++sym) {
            const cvec ext = extended_demap(
                hann_receive(symbol_slice(ctx.y_dist, num, sym), num, ctx.hann_win), num);
            for (std::size_t i = 0; i < D + 2; ++i) genie_var[i] += std::norm(ext[i]);
        }
        for (auto& v : genie_var)
            v = std::max(v / double(ctx.cfg.frame.symbols_per_frame), kEps);
    }

    std::vector<cvec> pilot_cirs;
    std::vector<cvec> pilot_dists;
    const auto fit_pilots = [&](const rvec* row_var) {
        pilot_cirs.clear();
        pilot_dists.clear();
        for (std::size_t p = 0; p < ctx.frame.pilot_symbols.size(); ++p) {
            const std::size_t pos = ctx.cfg.frame.pilot_symbol_indices[p];
            const cvec delta = extended_demap(
                hann_receive(symbol_slice(ctx.y, num, pos), num, ctx.hann_win), num);
            const HannCirEstimate est =
                estimate_cir_hann(delta, ctx.frame.pilot_symbols[p], num, ctx.cfg.cir_support_len,
                                  ctx.cfg.cir_ridge, row_var);
            pilot_cirs.push_back(est.h);
            // Reconstruction through the tridiagonal model for the residuals.
            const cvec theta_full = cfr_from_cir(est.h);
            const cvec p_map = subcarrier_map(num, ctx.frame.pilot_symbols[p]);
            cvec recon(D + 2);
            for (std::size_t i = 0; i < D + 2; ++i) {
                const std::size_t b = num.first_data_bin - 1 + i;
                recon[i] =
                    theta_full[b] * p_map[b] -
                    0.5 * (theta_full[b - 1] * p_map[b - 1] + theta_full[b + 1] * p_map[b + 1]);
            }
            pilot_dists.push_back(to_cvec(estimate_disturbance(delta, recon)));
        }
    };

    // Disturbance variance: the per-pilot single-shot residuals are
    // exponentially distributed, so the frame average is the usable
    // estimate; interpolating raw samples badly misweights the band edges.
    rvec sigma2(D + 2, 0.0);
    const auto average_dists = [&] {
        std::fill(sigma2.begin(), sigma2.end(), 0.0);
        for (const auto& pd : pilot_dists)
            for (std::size_t k = 0; k < D + 2; ++k)
                sigma2[k] += pd[k].real() / double(pilot_dists.size());
        for (auto& v : sigma2) v = std::max(v, kEps);
    };

    fit_pilots(nullptr);
    if (rx.variance_mode == VarianceMode::genie) {
        sigma2 = genie_var;
    } else {
        average_dists();
    }
    const auto cirs =
        interpolate_cir(pilot_cirs, ctx.cfg.frame.pilot_symbol_indices, ctx.cfg.frame.symbols_per_frame);

    // Per-subcarrier delivered residual power, measured on the pilots. The
    // diagonal model's rho is optimistic where the disturbance is
    // correlated across extended bins (band edges), and the cancellation
    // loop needs honest confidences to converge.
    const auto calibrate = [&](const std::vector<cvec>& use_cirs, const rvec& s2) {
        rvec calib(D, 0.0);
        for (std::size_t p = 0; p < ctx.frame.pilot_symbols.size(); ++p) {
            const std::size_t pos = ctx.cfg.frame.pilot_symbol_indices[p];
            const cvec th = subcarrier_demap(num, cfr_from_cir(use_cirs[pos]));
            const MrcOperator pop = build_mrc(th, s2);
            const cvec dc = extended_demap(
                hann_receive(symbol_slice(ctx.y, num, pos), num, ctx.hann_win), num);
            const cvec db = mrc_combine(dc, pop);
            const cvec g = genie_bound(db, pop, ctx.frame.pilot_symbols[p]);
            for (std::size_t d = 0; d < D; ++d)
                calib[d] += std::norm(g[d] - ctx.frame.pilot_symbols[p][d]) /
                            double(ctx.frame.pilot_symbols.size());
        }
        for (auto& v : calib) v = std::max(v, kEps);
        return calib;
    };

    // Per-symbol CIR from a full set of symbol decisions, smoothed over a
    // 3-symbol window. The window also absorbs the locally correlated part
    // of the leakage into the channel estimate, which a longer fit cannot.
    const auto dd_cirs_from = [&](const std::vector<cvec>& syms, const rvec& row_var) {
        const std::size_t S = ctx.cfg.frame.symbols_per_frame;
        std::vector<cvec> raw(S);
        for (std::size_t sym = 0; sym < S; ++sym) {
            const cvec delta = extended_demap(
                hann_receive(symbol_slice(ctx.y, num, sym), num, ctx.hann_win), num);
            raw[sym] = estimate_cir_hann(delta, syms[sym], num, ctx.cfg.cir_support_len,
                                         ctx.cfg.cir_ridge, &row_var)
                           .h;
        }
        std::vector<cvec> smooth(S);
        for (std::size_t sym = 0; sym < S; ++sym) {
            const std::size_t lo = sym > 0 ? sym - 1 : 0;
            const std::size_t hi = std::min(sym + 1, S - 1);
            cvec acc(raw[sym].size(), cplx(0.0, 0.0));
            for (std::size_t u = lo; u <= hi; ++u)
                for (std::size_t t = 0; t < acc.size(); ++t)
                    acc[t] += raw[u][t] / double(hi - lo + 1);
            smooth[sym] = acc;
        }
        return smooth;
    };

    std::vector<cvec> frame_syms(ctx.cfg.frame.symbols_per_frame);
    for (std::size_t p = 0; p < ctx.frame.pilot_symbols.size(); ++p)
        frame_syms[ctx.cfg.frame.pilot_symbol_indices[p]] = ctx.frame.pilot_symbols[p];

    if (rx.theory_bound) {
        // Genie side information everywhere: true symbols drive both the
        // per-symbol channel estimate and the cancellation.
        for (std::size_t i = 0; i < ctx.frame.data_symbol_indices.size(); ++i)
            frame_syms[ctx.frame.data_symbol_indices[i]] = qpsk_modulate(ctx.frame.data_bits[i]);
        const auto cirs2 = dd_cirs_from(frame_syms, sigma2);
        for (std::size_t i = 0; i < ctx.frame.data_symbol_indices.size(); ++i) {
            const std::size_t sym = ctx.frame.data_symbol_indices[i];
            const cvec theta = subcarrier_demap(num, cfr_from_cir(cirs2[sym]));
            const MrcOperator op = build_mrc(theta, sigma2);
            const cvec d_check = extended_demap(
                hann_receive(symbol_slice(ctx.y, num, sym), num, ctx.hann_win), num);
            const cvec d_breve = mrc_combine(d_check, op);
            const cvec truth = qpsk_modulate(ctx.frame.data_bits[i]);
            const cvec genie = genie_bound(d_breve, op, truth);
            rvec var(D);
            for (std::size_t d = 0; d < D; ++d) var[d] = std::max(op.residual_power[d], kEps);
            const rvec llrs = qpsk_llr(genie, var);
            accumulate(agg, {rx.id, snr_db, 0},
                       count_errors(bits_from_llrs(llrs), ctx.frame.data_bits[i]), genie, truth);
        }
        return;
    }

    const rvec rho1 = calibrate(cirs, sigma2);

    // First pass: cold-start cancellation; all but the last iteration are
    // reported as-is, the last one yields to the refined second pass.
    constexpr double kHalfSqrt2 = 0.7071067811865475244;
    for (std::size_t i = 0; i < ctx.frame.data_symbol_indices.size(); ++i) {
        const std::size_t sym = ctx.frame.data_symbol_indices[i];
        const cvec theta = subcarrier_demap(num, cfr_from_cir(cirs[sym]));
        const MrcOperator op = build_mrc(theta, sigma2);
        const cvec d_check = extended_demap(
            hann_receive(symbol_slice(ctx.y, num, sym), num, ctx.hann_win), num);
        const cvec d_breve = mrc_combine(d_check, op);
        const cvec truth = qpsk_modulate(ctx.frame.data_bits[i]);
        const auto history = sic_decode(d_breve, op, rx.iterations, &rho1);
        const std::size_t report = rx.iterations == 0 ? history.size() : history.size() - 1;
        for (std::size_t h = 0; h < report; ++h)
            accumulate(agg, {rx.id, snr_db, history[h].iteration},
                       count_errors(bits_from_llrs(history[h].llrs), ctx.frame.data_bits[i]),
                       d_breve, truth);
        cvec dec(D);
        for (std::size_t d = 0; d < D; ++d)
            dec[d] = cplx(history.back().llrs[2 * d] >= 0 ? kHalfSqrt2 : -kHalfSqrt2,
                          history.back().llrs[2 * d + 1] >= 0 ? kHalfSqrt2 : -kHalfSqrt2);
        // The next stage re-estimates the channel from these decisions, so
        // polish them against the likelihood first.
        frame_syms[sym] = likelihood_refine(d_check, theta, sigma2, dec);
    }
    if (rx.iterations == 0) return;

    // Decision-directed rounds: re-estimate the channel and disturbance
    // from the current frame of decisions, cancel again, then refine the
    // hard decisions against the whitened likelihood. Each round is scored
    // hard decisions against the whitened likelihood. Later rounds reuse
    // the now much cleaner decisions for the estimates.
    std::vector<cvec> best_syms = frame_syms;
    rvec sigma_prev = sigma2;
    const std::size_t dd_rounds = 5;
    for (std::size_t round = 0; round < dd_rounds; ++round) {
        std::vector<cvec> cirs2 = dd_cirs_from(frame_syms, sigma_prev);
        // Shrink toward the pilot-interpolated estimate: wrong decisions can
        // steer the decision-directed fit arbitrarily far, and the blend
        // bounds that divergence at a small cost in clean frames.
        const double kDdWeight = 0.75;
        for (std::size_t sym = 0; sym < cirs2.size(); ++sym)
            for (std::size_t t = 0; t < cirs2[sym].size(); ++t)
                cirs2[sym][t] = kDdWeight * cirs2[sym][t] + (1.0 - kDdWeight) * cirs[sym][t];
        // With a full frame of decisions the disturbance variance can be
        // re-measured on every symbol instead of the few pilots; the pilot
        // estimate has only a handful of samples of an exponential variate
        // and its misses at the ACI-heavy outer bins misweight the combiner.
        rvec sigma2_dd(D + 2, 0.0);
        if (rx.variance_mode == VarianceMode::genie) {
            sigma2_dd = sigma2;
        } else {
            const std::size_t S = ctx.cfg.frame.symbols_per_frame;
            std::vector<rvec> res(S);
            for (std::size_t sym = 0; sym < S; ++sym) {
                const cvec delta = extended_demap(
                    hann_receive(symbol_slice(ctx.y, num, sym), num, ctx.hann_win), num);
                const cvec theta_full = cfr_from_cir(cirs2[sym]);
                const cvec s_map = subcarrier_map(num, frame_syms[sym]);
                cvec recon(D + 2);
                for (std::size_t k = 0; k < D + 2; ++k) {
                    const std::size_t b = num.first_data_bin - 1 + k;
                    recon[k] =
                        theta_full[b] * s_map[b] -
                        0.5 * (theta_full[b - 1] * s_map[b - 1] + theta_full[b + 1] * s_map[b + 1]);
                }
                res[sym] = estimate_disturbance(delta, recon);
            }
            // Per-bin median across the frame, rescaled for an exponential
            // variate. A wrong decision injects the full symbol energy into
            // every residual row that touches it, so the handful of symbols
            // with decision errors would dominate a mean and talk the
            // combiner out of otherwise clean subcarriers.
            for (std::size_t k = 0; k < D + 2; ++k) {
                rvec col(S);
                for (std::size_t sym = 0; sym < S; ++sym) col[sym] = res[sym][k];
                std::nth_element(col.begin(), col.begin() + S / 2, col.end());
                sigma2_dd[k] = std::max(col[S / 2] / std::log(2.0), kEps);
            }
        }
        sigma_prev = sigma2_dd;
        const rvec rho2 = calibrate(cirs2, sigma2_dd);
        for (std::size_t i = 0; i < ctx.frame.data_symbol_indices.size(); ++i) {
            const std::size_t sym = ctx.frame.data_symbol_indices[i];
            const cvec theta = subcarrier_demap(num, cfr_from_cir(cirs2[sym]));
            const MrcOperator op = build_mrc(theta, sigma2_dd);
            const cvec d_check = extended_demap(
                hann_receive(symbol_slice(ctx.y, num, sym), num, ctx.hann_win), num);
            const cvec d_breve = mrc_combine(d_check, op);
            const auto history = sic_decode(d_breve, op, rx.iterations, &rho2);
            cvec seed(D);
            for (std::size_t d = 0; d < D; ++d)
                seed[d] = cplx(history.back().llrs[2 * d] >= 0 ? kHalfSqrt2 : -kHalfSqrt2,
                               history.back().llrs[2 * d + 1] >= 0 ? kHalfSqrt2 : -kHalfSqrt2);
            frame_syms[sym] = likelihood_refine(d_check, theta, sigma2_dd, seed);
        }
        best_syms = frame_syms;
    }
    for (std::size_t i = 0; i < ctx.frame.data_symbol_indices.size(); ++i) {
        const std::size_t sym = ctx.frame.data_symbol_indices[i];
        const cvec truth = qpsk_modulate(ctx.frame.data_bits[i]);
        const cvec& out = best_syms[sym];
        std::vector<int> bits(2 * D);
        for (std::size_t d = 0; d < D; ++d) {
            bits[2 * d] = out[d].real() < 0 ? 1 : 0;
            bits[2 * d + 1] = out[d].imag() < 0 ? 1 : 0;
        }
        accumulate(agg, {rx.id, snr_db, rx.iterations},
                   count_errors(bits, ctx.frame.data_bits[i]), out, truth);
    }
}

}  // namespace

TrialResult run_trial(const ScenarioConfig& cfg, std::size_t snr_index, std::size_t trial) {
    cfg.validate();
    if (snr_index >= cfg.snr_grid_db.size()) throw std::invalid_argument("run_trial: bad snr index");
    const double snr_db = cfg.snr_grid_db[snr_index];
    const std::string tag =
        cfg.id + "/snr" + std::to_string(snr_index) + "/trial" + std::to_string(trial);

    TrialContext ctx{.cfg = cfg};
    ctx.hann_win = hann_window(cfg.desired.fft_size, HannVariant::periodic);

    FrameSchedule schedule = cfg.frame;
    schedule.pilot_seed = derive_seed(cfg.master_seed, tag + "/pilots");
    const std::size_t payload =
        schedule.data_symbol_count() * 2 * cfg.desired.data_width;
    ctx.frame =
        build_frame(cfg.desired, schedule, random_bits(payload, derive_seed(cfg.master_seed, tag + "/bits")));

    const std::size_t frame_len = ctx.frame.samples.size();

    // Links keep the raw modulator amplitude under unit-energy channels and
    // unit-variance noise, so snr_db reads directly as per-subcarrier SNR.
    UserLink desired;
    desired.samples = ctx.frame.samples;
    desired.snr_db = snr_db;
    desired.sample_offset = 0;
    {
        TdlSpec spec = tdl_profile(cfg.desired_tdl_profile);
        spec.rms_ds_target_s = cfg.desired_rms_ds_s;
        spec.doppler_hz = cfg.desired_doppler_hz;
        spec.num_sinusoids = cfg.num_sinusoids;
        spec.seed = derive_seed(cfg.master_seed, tag + "/chan0");
        desired.realization = make_tdl(spec, cfg.desired.sample_rate(), frame_len);
    }

    std::vector<UserLink> interferers;
    for (std::size_t j = 0; j < cfg.interferers.size(); ++j) {
        const auto& icfg = cfg.interferers[j];
        UserLink link;
        const std::size_t sym_len = icfg.numerology.symbol_len();
        // Interfering links are asynchronous: jitter the configured offset by
        // a random fraction of the interferer symbol so frame-periodic ACI
        // patterns decorrelate across trials.
        link.sample_offset =
            icfg.sample_offset +
            std::int64_t(derive_seed(cfg.master_seed, tag + "/ioff" + std::to_string(j)) % sym_len);
        const std::size_t need =
            frame_len + std::size_t(std::llabs(link.sample_offset)) + sym_len;
        const std::size_t nsym = need / sym_len + 1;
        link.samples = interferer_stream(icfg.numerology, nsym, icfg.taper_len,
                                         derive_seed(cfg.master_seed, tag + "/itx" + std::to_string(j)));
        link.snr_db = icfg.snr_db;
        TdlSpec spec = tdl_profile(icfg.tdl_profile);
        spec.rms_ds_target_s = icfg.rms_ds_s;
        spec.doppler_hz = icfg.doppler_hz;
        spec.num_sinusoids = cfg.num_sinusoids;
        spec.seed = derive_seed(cfg.master_seed, tag + "/chan" + std::to_string(j + 1));
        link.realization = make_tdl(spec, cfg.desired.sample_rate(), frame_len);
        interferers.push_back(std::move(link));
    }

    ctx.y = compose_received(desired, interferers, derive_seed(cfg.master_seed, tag + "/noise"), 0,
                             frame_len);
    // Disturbance-only stream for genie variance modes.
    ctx.y_dist = ctx.y;
    {
        const cvec own = apply_channel(desired, 0, frame_len);
        const double amp = std::sqrt(std::pow(10.0, snr_db / 10.0));
        for (std::size_t n = 0; n < frame_len; ++n) ctx.y_dist[n] -= amp * own[n];
    }

    TrialResult result;
    result.snr_index = snr_index;
    result.trial = trial;
    result.stream_checksum = checksum_samples(ctx.y);
    for (const auto& rx : cfg.receivers) {
        if (rx.kind == ReceiverKind::hann)
            run_hann_receiver(ctx, rx, snr_db, result.contributions);
        else
            run_baseline_receiver(ctx, rx, snr_db, result.contributions);
    }
    return result;
}

namespace {

json contributions_to_json(const TrialResult& r) {
    json rows = json::array();
    for (const auto& [key, agg] : r.contributions) {
        rows.push_back({{"receiver", key.receiver},
                        {"snr_db", key.snr_db},
                        {"iteration", key.iteration},
                        {"errors", agg.errors},
                        {"bits", agg.bits},
                        {"sig", agg.signal_power},
                        {"err", agg.error_power}});
    }
    return {{"snr_index", r.snr_index},
            {"trial", r.trial},
            {"checksum", r.stream_checksum},
            {"rows", rows}};
}

void merge_contributions(std::map<AggregateKey, Aggregate>& total, const json& line) {
    for (const auto& row : line.at("rows")) {
        AggregateKey key{row.at("receiver").get<std::string>(), row.at("snr_db").get<double>(),
                         row.at("iteration").get<std::size_t>()};
        Aggregate& a = total[key];
        a.errors += row.at("errors").get<std::size_t>();
        a.bits += row.at("bits").get<std::size_t>();
        a.signal_power += row.at("sig").get<double>();
        a.error_power += row.at("err").get<double>();
    }
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    namespace fs = std::filesystem;
    std::string journal_path;
    std::map<std::pair<std::size_t, std::size_t>, json> completed;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        journal_path = (fs::path(out_dir) / "journal.jsonl").string();
        std::ifstream in(journal_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            completed[{j.at("snr_index").get<std::size_t>(), j.at("trial").get<std::size_t>()}] = j;
        }
    }

    RunResult result;
    std::ofstream journal;
    if (!journal_path.empty()) journal.open(journal_path, std::ios::app);

    for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si) {
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            const auto it = completed.find({si, t});
            if (it != completed.end()) {
                merge_contributions(result.aggregates, it->second);
                ++result.trials_resumed;
                continue;
            }
            const TrialResult trial = run_trial(cfg, si, t);
            for (const auto& [key, agg] : trial.contributions) {
                Aggregate& a = result.aggregates[key];
                a.errors += agg.errors;
                a.bits += agg.bits;
                a.signal_power += agg.signal_power;
                a.error_power += agg.error_power;
            }
            ++result.trials_run;
            if (journal.is_open()) {
                journal << contributions_to_json(trial).dump() << "\n";
                journal.flush();
            }
        }
    }

    if (!out_dir.empty()) {
        {
            std::ofstream out(fs::path(out_dir) / "ber_curves.csv");
            if (!out) throw std::runtime_error("run_scenario: cannot write " + out_dir);
            out << ber_curves_csv(result.aggregates);
        }
        const auto elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json manifest = {{"scenario", cfg.id},
                         {"master_seed", cfg.master_seed},
                         {"trials", cfg.trials},
                         {"snr_grid_db", cfg.snr_grid_db},
                         {"receivers", json::array()},
                         {"wall_time_s", elapsed},
                         {"version", "1.0"}};
        for (const auto& rx : cfg.receivers)
            manifest["receivers"].push_back({{"id", rx.id},
                                             {"kind", receiver_kind_name(rx.kind)},
                                             {"iterations", rx.iterations}});
        manifest["config"] = json::parse(config_to_json(cfg));
        std::ofstream mout(fs::path(out_dir) / "manifest.json");
        mout << manifest.dump(2) << "\n";
    }
    return result;
}

std::string ber_curves_csv(const std::map<AggregateKey, Aggregate>& aggregates) {
    std::ostringstream out;
    out << "receiver,snr_db,iteration,ber,ci_low,ci_high,errors,bits,sinr_db\n";
    out.precision(12);
    for (const auto& [key, agg] : aggregates) {
        const Interval ci = wilson_interval(agg.errors, agg.bits);
        out << key.receiver << "," << key.snr_db << "," << key.iteration << "," << agg.ber() << ","
            << ci.low << "," << ci.high << "," << agg.errors << "," << agg.bits << ","
            << agg.sinr_db() << "\n";
    }
    return out.str();
}

std::string psd_curves_csv(const PsdCurve& rect, const PsdCurve& hann) {
    std::ostringstream out;
    out << "window,offset_scs,power_db,marker\n";
    out.precision(10);
    auto emit = [&](const char* name, const PsdCurve& c) {
        for (std::size_t k = 0; k < c.offsets_scs.size(); ++k)
            out << name << "," << c.offsets_scs[k] << "," << c.power_db[k] << ","
                << (c.marker[k] ? 1 : 0) << "\n";
    };
    emit("rect", rect);
    emit("hann", hann);
    return out.str();
}

std::string audit_csv(const OpCountReport& report) { return report.to_text(); }

// --------------------------------------------------------------------------
// Config (de)serialization.
// --------------------------------------------------------------------------

namespace {

json numerology_to_json(const Numerology& n) {
    return {{"fft_size", n.fft_size},
            {"cp_len", n.cp_len},
            {"data_width", n.data_width},
            {"first_data_bin", n.first_data_bin},
            {"scs_hz", n.scs_hz}};
}

Numerology numerology_from_json(const json& j) {
    Numerology n;
    n.fft_size = j.at("fft_size").get<std::size_t>();
    n.cp_len = j.at("cp_len").get<std::size_t>();
    n.data_width = j.at("data_width").get<std::size_t>();
    n.first_data_bin = j.at("first_data_bin").get<std::size_t>();
    n.scs_hz = j.at("scs_hz").get<double>();
    return n;
}

}  // namespace

std::string config_to_json(const ScenarioConfig& cfg) {
    json j;
    j["id"] = cfg.id;
    j["desired"] = numerology_to_json(cfg.desired);
    j["desired_tdl_profile"] = cfg.desired_tdl_profile;
    j["desired_rms_ds_s"] = cfg.desired_rms_ds_s;
    j["desired_doppler_hz"] = cfg.desired_doppler_hz;
    j["snr_grid_db"] = cfg.snr_grid_db;
    j["frame"] = {{"symbols_per_frame", cfg.frame.symbols_per_frame},
                  {"pilot_symbol_indices", cfg.frame.pilot_symbol_indices},
                  {"pilot_seed", cfg.frame.pilot_seed}};
    j["trials"] = cfg.trials;
    j["master_seed"] = cfg.master_seed;
    j["cir_support_len"] = cfg.cir_support_len;
    j["cir_ridge"] = cfg.cir_ridge;
    j["num_sinusoids"] = cfg.num_sinusoids;
    j["interferers"] = json::array();
    for (const auto& itf : cfg.interferers)
        j["interferers"].push_back({{"numerology", numerology_to_json(itf.numerology)},
                                    {"tdl_profile", itf.tdl_profile},
                                    {"rms_ds_s", itf.rms_ds_s},
                                    {"doppler_hz", itf.doppler_hz},
                                    {"snr_db", itf.snr_db},
                                    {"sample_offset", itf.sample_offset},
                                    {"taper_len", itf.taper_len}});
    j["receivers"] = json::array();
    for (const auto& rx : cfg.receivers)
        j["receivers"].push_back(
            {{"id", rx.id},
             {"kind", receiver_kind_name(rx.kind)},
             {"taper_len", rx.taper_len},
             {"iterations", rx.iterations},
             {"variance_mode", rx.variance_mode == VarianceMode::genie ? "genie" : "estimated"},
             {"theory_bound", rx.theory_bound}});
    return j.dump(2);
}

ScenarioConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    ScenarioConfig cfg;
    cfg.id = j.value("id", std::string("scenario"));
    cfg.desired = numerology_from_json(j.at("desired"));
    cfg.desired_tdl_profile = j.value("desired_tdl_profile", std::string("tdl-a"));
    cfg.desired_rms_ds_s = j.value("desired_rms_ds_s", 30e-9);
    cfg.desired_doppler_hz = j.value("desired_doppler_hz", 0.0);
    cfg.snr_grid_db = j.at("snr_grid_db").get<rvec>();
    const json& f = j.at("frame");
    cfg.frame.symbols_per_frame = f.at("symbols_per_frame").get<std::size_t>();
    cfg.frame.pilot_symbol_indices = f.at("pilot_symbol_indices").get<std::vector<std::size_t>>();
    cfg.frame.pilot_seed = f.value("pilot_seed", 7ULL);
    cfg.trials = j.value("trials", 1ULL);
    cfg.master_seed = j.value("master_seed", 1ULL);
    cfg.cir_support_len = j.value("cir_support_len", 6ULL);
    cfg.cir_ridge = j.value("cir_ridge", 1e-4);
    cfg.num_sinusoids = j.value("num_sinusoids", 32ULL);
    for (const auto& ij : j.value("interferers", json::array())) {
        InterfererConfig itf;
        itf.numerology = numerology_from_json(ij.at("numerology"));
        itf.tdl_profile = ij.value("tdl_profile", std::string("tdl-c"));
        itf.rms_ds_s = ij.value("rms_ds_s", 300e-9);
        itf.doppler_hz = ij.value("doppler_hz", 0.0);
        itf.snr_db = ij.value("snr_db", 20.0);
        itf.sample_offset = ij.value("sample_offset", 0LL);
        itf.taper_len = ij.value("taper_len", 0ULL);
        cfg.interferers.push_back(itf);
    }
    for (const auto& rj : j.at("receivers")) {
        ReceiverSpec rx;
        rx.id = rj.at("id").get<std::string>();
        const std::string kind = rj.value("kind", std::string("rect"));
        if (kind == "rect") rx.kind = ReceiverKind::rect;
        else if (kind == "taper") rx.kind = ReceiverKind::taper;
        else if (kind == "hann") rx.kind = ReceiverKind::hann;
        else throw std::invalid_argument("config.receivers: unknown kind " + kind);
        rx.taper_len = rj.value("taper_len", 0ULL);
        rx.iterations = rj.value("iterations", 6ULL);
        rx.variance_mode = rj.value("variance_mode", std::string("estimated")) == "genie"
                               ? VarianceMode::genie
                               : VarianceMode::estimated;
        rx.theory_bound = rj.value("theory_bound", false);
        cfg.receivers.push_back(rx);
    }
    return cfg;
}

}  // namespace hannrx
