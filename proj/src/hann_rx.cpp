#include "hannrx/hann_rx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hannrx {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kLlrClip = 8.0;
}

HannWindow hann_window(std::size_t n, HannVariant variant) {
    if (n < 3) throw std::invalid_argument("hann_window: N too small");
    HannWindow win;
    win.variant = variant;
    win.coefficients.resize(n);
    if (variant == HannVariant::periodic) {
        for (std::size_t i = 0; i < n; ++i)
            win.coefficients[i] = 1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(n));
    } else {
        const double nn = double(n);
        const double scale =
            4.0 * nn /
            (2.0 * nn +
             std::sin((std::numbers::pi - 2.0 * std::numbers::pi * nn) / (nn - 1.0)) /
                 std::sin(std::numbers::pi / (nn - 1.0)) -
             1.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = std::sin(std::numbers::pi * double(i) / (nn - 1.0));
            win.coefficients[i] = scale * s * s;
        }
    }
    return win;
}

cvec hann_receive(const cvec& y, const Numerology& num, const HannWindow& window) {
    num.validate();
    const std::size_t N = num.fft_size, L = num.cp_len;
    if (y.size() != N + L) throw std::invalid_argument("hann_receive: length mismatch");
    if (window.coefficients.size() != N)
        throw std::invalid_argument("hann_receive: window length mismatch");
    cvec body(N);
    for (std::size_t i = 0; i < N; ++i) body[i] = window.coefficients[i] * y[L + i];
    return dft(body);
}

double ici_operator_check(std::size_t n, const HannWindow& window) {
    if (n < 4 || window.coefficients.size() != n)
        throw std::invalid_argument("ici_operator_check: bad size");
    // Column k of F diag(w) F^H is F (w . conj(F) e_k); assembled via the
    // transform rather than an O(N^3) triple product.
    double max_dev = 0.0;
    cvec col_in(n);
    const double inv_sqrt_n = 1.0 / std::sqrt(double(n));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = 2.0 * std::numbers::pi * double((m * k) % n) / double(n);
            col_in[m] = window.coefficients[m] * cplx(std::cos(ang), std::sin(ang)) * inv_sqrt_n;
        }
        const cvec col = dft(col_in);
        for (std::size_t m = 0; m < n; ++m) {
            const std::size_t diff = (m + n - k) % n;
            cplx expect(0.0, 0.0);
            if (diff == 0) expect = IciKernel::center;
            else if (diff == 1 || diff == n - 1) expect = IciKernel::off;
            max_dev = std::max(max_dev, std::abs(col[m] - expect));
        }
    }
    return max_dev;
}

cvec extended_demap(const cvec& full_spectrum, const Numerology& num) {
    num.validate();
    if (full_spectrum.size() != num.fft_size)
        throw std::invalid_argument("extended_demap: length mismatch");
    const std::size_t first = num.first_data_bin - 1;
    return cvec(full_spectrum.begin() + first,
                full_spectrum.begin() + first + num.data_width + 2);
}

HannCirEstimate estimate_cir_hann(const cvec& pilot_obs, const cvec& pilots, const Numerology& num,
                                  std::size_t support_len, double ridge, const rvec* row_var) {
    num.validate();
    const std::size_t N = num.fft_size, D = num.data_width;
    if (pilot_obs.size() != D + 2 || pilots.size() != D)
        throw std::invalid_argument("estimate_cir_hann: expected (D+2)/D vectors");
    if (support_len == 0 || support_len > N)
        throw std::invalid_argument("estimate_cir_hann: bad support length");

    const cvec p = subcarrier_map(num, pilots);  // pilots on the full grid

    HannCirEstimate est;
    // Row strength is the nu-filtered pilot; exact cancellations happen for
    // particular pilot patterns and those rows carry no information.
    rvec strength(D + 2);
    double max_strength = 0.0;
    for (std::size_t i = 0; i < D + 2; ++i) {
        const std::size_t b = num.first_data_bin - 1 + i;
        const cplx f = p[b] - 0.5 * (p[b - 1] + (b + 1 < N ? p[b + 1] : cplx(0.0, 0.0)));
        strength[i] = std::abs(f);
        max_strength = std::max(max_strength, strength[i]);
    }
    for (std::size_t i = 0; i < D + 2; ++i)
        if (strength[i] < 0.01 * max_strength) est.near_null_bins.push_back(i);

    // Only the interior extended bins enter the fit: the outermost two face
    // the adjacent bands directly and soak up out-of-band interference that
    // would otherwise bias the solution.
    LsProblem problem;
    problem.design = CMat(D, support_len);
    problem.observations.resize(D);
    for (std::size_t i = 1; i <= D; ++i) {
        const std::size_t b = num.first_data_bin - 1 + i;
        for (std::size_t k = 0; k < support_len; ++k) {
            cplx acc(0.0, 0.0);
            for (long long db = -1; db <= 1; ++db) {
                const std::size_t bb = std::size_t((long long)b + db);
                if (bb >= N) continue;
                if (p[bb] == cplx(0.0, 0.0)) continue;
                const double coeff = (db == 0) ? 1.0 : -0.5;
                const double ang = -2.0 * std::numbers::pi * double((bb * k) % N) / double(N);
                acc += coeff * p[bb] * cplx(std::cos(ang), std::sin(ang));
            }
            problem.design(i - 1, k) = acc;
        }
        problem.observations[i - 1] = pilot_obs[i];
        // Whiten heteroscedastic rows when per-bin disturbance powers are
        // known: band-edge bins soaked in adjacent-band power would
        // otherwise pull the fit and smear their error across the band.
        if (row_var) {
            const double w = 1.0 / std::sqrt(std::max((*row_var)[i], kEps));
            for (std::size_t k = 0; k < support_len; ++k) problem.design(i - 1, k) *= w;
            problem.observations[i - 1] *= w;
        }
    }
    problem.support.resize(support_len);
    for (std::size_t k = 0; k < support_len; ++k) problem.support[k] = k;
    problem.ridge = ridge;

    const LsResult sol = solve_ls(problem);
    est.h.assign(N, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < support_len; ++k) est.h[k] = sol.solution[k];
    est.ill_conditioned = sol.ill_conditioned;
    return est;
}

rvec estimate_disturbance(const cvec& pilot_obs, const cvec& reconstructed) {
    return residual_disturbance(pilot_obs, reconstructed);
}

MrcOperator build_mrc(const cvec& theta_hat, const rvec& disturbance_var) {
    const std::size_t D = theta_hat.size();
    if (D < 2) throw std::invalid_argument("build_mrc: need D >= 2");
    if (disturbance_var.size() != D + 2)
        throw std::invalid_argument("build_mrc: disturbance must have D+2 bins");
    for (double v : disturbance_var)
        if (!(v > 0.0)) throw std::invalid_argument("build_mrc: disturbance must be positive");

    MrcOperator op;
    op.data_width = D;
    op.ext_channel = CMat(D + 2, D);
    double theta_energy = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
        op.ext_channel(d, d) = -0.5 * theta_hat[d];
        op.ext_channel(d + 1, d) = theta_hat[d];
        op.ext_channel(d + 2, d) = -0.5 * theta_hat[d];
        theta_energy += std::norm(theta_hat[d]);
    }
    op.degenerate = theta_energy <= kEps;

    // sigma_k: signal-plus-ICI power landing on extended bin k.
    rvec bin_power(D + 2, 0.0);
    for (std::size_t k = 0; k < D + 2; ++k)
        for (std::size_t d = 0; d < D; ++d) bin_power[k] += std::norm(op.ext_channel(k, d));

    op.sinr.assign(D, rvec(D + 2, 0.0));
    CMat unequalized(D, D + 2);  // C~
    for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t k = d; k <= d + 2; ++k) {
            const double own = std::norm(op.ext_channel(k, d));
            const double other =
                std::max(disturbance_var[k] + bin_power[k] - own, kEps);  // Sigma-hat entry
            op.sinr[d][k] = own / other;
            // Ratio-squarer weight: branch channel conjugate over branch
            // disturbance. This is the argmax of the independent-disturbance
            // SINR model (the gamma-weighted variant is not when the three
            // branch gains differ, which they always do here).
            unequalized(d, k) = std::conj(op.ext_channel(k, d)) / other;
        }
    }

    op.combiner = CMat(D, D + 2);
    for (std::size_t d = 0; d < D; ++d) {
        cplx norm(0.0, 0.0);
        for (std::size_t k = d; k <= d + 2; ++k) norm += unequalized(d, k) * op.ext_channel(k, d);
        const double denom = std::max(norm.real(), kEps);
        for (std::size_t k = d; k <= d + 2; ++k) op.combiner(d, k) = unequalized(d, k) / denom;
    }

    op.residual_gain = matmul(op.combiner, op.ext_channel);
    for (std::size_t d = 0; d < D; ++d) op.residual_gain(d, d) -= 1.0;

    op.residual_power.assign(D, 0.0);
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t k = d; k <= d + 2; ++k)
            op.residual_power[d] += std::norm(op.combiner(d, k)) * disturbance_var[k];

    return op;
}

cvec mrc_combine(const cvec& d_check, const MrcOperator& op) {
    if (d_check.size() != op.data_width + 2)
        throw std::invalid_argument("mrc_combine: expected D+2 observations");
    return matvec(op.combiner, d_check);
}

cvec mrc_combine_explicit(const cvec& d_check, const cvec& theta_hat,
                          const rvec& disturbance_var) {
    const std::size_t D = theta_hat.size();
    if (d_check.size() != D + 2) throw std::invalid_argument("mrc_combine_explicit: size mismatch");
    // Scalar form: per subcarrier, combine the three coupled bins weighted
    // by the per-bin SINR of that symbol.
    cvec h_col(3);
    cvec out(D);
    rvec bin_power(D + 2, 0.0);
    for (std::size_t d = 0; d < D; ++d) {
        bin_power[d] += 0.25 * std::norm(theta_hat[d]);
        bin_power[d + 1] += std::norm(theta_hat[d]);
        bin_power[d + 2] += 0.25 * std::norm(theta_hat[d]);
    }
    for (std::size_t d = 0; d < D; ++d) {
        h_col[0] = -0.5 * theta_hat[d];
        h_col[1] = theta_hat[d];
        h_col[2] = -0.5 * theta_hat[d];
        cplx num(0.0, 0.0);
        double den = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            const std::size_t kappa = d + j;
            const double own = std::norm(h_col[j]);
            const double rest = std::max(disturbance_var[kappa] + bin_power[kappa] - own, kEps);
            num += (std::conj(h_col[j]) / rest) * d_check[kappa];
            den += own / rest;  // sum of the per-branch SINRs
        }
        out[d] = num / std::max(den, kEps);
    }
    return out;
}

double weights_model_sinr(const cvec& weights, std::size_t d, const CMat& ext_channel,
                          const rvec& disturbance_var) {
    const std::size_t D = ext_channel.cols;
    if (weights.size() != D + 2 || d >= D)
        throw std::invalid_argument("weights_model_sinr: bad arguments");
    rvec bin_power(D + 2, 0.0);
    for (std::size_t k = 0; k < D + 2; ++k)
        for (std::size_t m = 0; m < D; ++m) bin_power[k] += std::norm(ext_channel(k, m));
    cplx signal(0.0, 0.0);
    double noise = 0.0;
    for (std::size_t k = 0; k < D + 2; ++k) {
        signal += weights[k] * ext_channel(k, d);
        const double other = std::max(
            disturbance_var[k] + bin_power[k] - std::norm(ext_channel(k, d)), kEps);
        noise += std::norm(weights[k]) * other;
    }
    return std::norm(signal) / std::max(noise, kEps);
}

cvec mrc_weights_row(const MrcOperator& op, std::size_t d) {
    if (d >= op.data_width) throw std::invalid_argument("mrc_weights_row: bad subcarrier");
    cvec row(op.data_width + 2, cplx(0.0, 0.0));
    for (std::size_t k = d; k <= d + 2; ++k)
        row[k] = std::conj(op.ext_channel(k, d)) * op.sinr[d][k] /
                 std::max(std::norm(op.ext_channel(k, d)), kEps);
    return row;
}

namespace {

void soft_stats_from_llrs(SoftSymbolState& state) {
    const std::size_t D = state.soft_mean.size();
    for (std::size_t d = 0; d < D; ++d) {
        const double mi = std::tanh(0.5 * state.llrs[2 * d]) * kInvSqrt2;
        const double mq = std::tanh(0.5 * state.llrs[2 * d + 1]) * kInvSqrt2;
        state.soft_mean[d] = cplx(mi, mq);
        state.soft_var[d] = std::max(1.0 - (mi * mi + mq * mq), 0.0);
    }
}

}  // namespace

std::vector<SoftSymbolState> sic_decode(const cvec& d_breve, const MrcOperator& op,
                                        std::size_t iterations,
                                        const rvec* residual_power) {
    const std::size_t D = op.data_width;
    if (d_breve.size() != D) throw std::invalid_argument("sic_decode: size mismatch");
    if (residual_power && residual_power->size() != D)
        throw std::invalid_argument("sic_decode: residual override size mismatch");
    const auto rho = [&](std::size_t d) {
        return residual_power ? (*residual_power)[d] : op.residual_power[d];
    };

    rvec gain_sq(D * D);
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t k = 0; k < D; ++k) gain_sq[d * D + k] = std::norm(op.residual_gain(d, k));

    std::vector<SoftSymbolState> history;
    history.reserve(iterations + 1);

    SoftSymbolState state;
    state.soft_mean.assign(D, cplx(0.0, 0.0));
    state.soft_var.assign(D, 1.0);
    state.iteration = 0;
    // Iteration 0: uninformative priors, residual ICI at full symbol power.
    rvec eff_var(D);
    for (std::size_t d = 0; d < D; ++d) {
        double v = rho(d);
        for (std::size_t k = 0; k < D; ++k) v += gain_sq[d * D + k];
        eff_var[d] = std::max(v, kEps);
    }
    state.llrs = qpsk_llr(d_breve, eff_var);
    soft_stats_from_llrs(state);
    history.push_back(state);

    // Serial (Gauss-Seidel) schedule: each subcarrier is cancelled with the
    // freshest neighbor statistics within the pass. A fully parallel update
    // tends to flip-flop between two decision patterns and stalls at an
    // error floor; in-place updates break the oscillation at identical cost.
    for (std::size_t it = 1; it <= iterations; ++it) {
        SoftSymbolState next = history.back();
        next.iteration = it;
        for (std::size_t d = 0; d < D; ++d) {
            cplx ici(0.0, 0.0);
            double v = rho(d);
            for (std::size_t k = 0; k < D; ++k) {
                ici += op.residual_gain(d, k) * next.soft_mean[k];
                v += gain_sq[d * D + k] * next.soft_var[k];
            }
            const cvec one{d_breve[d] - ici};
            const rvec llr = qpsk_llr(one, rvec{std::max(v, kEps)});
            next.llrs[2 * d] = llr[0];
            next.llrs[2 * d + 1] = llr[1];
            // Clipped feedback: a saturated-but-wrong decision would other-
            // wise zero its soft variance and lock its neighbors in.
            const double ci = std::clamp(llr[0], -kLlrClip, kLlrClip);
            const double cq = std::clamp(llr[1], -kLlrClip, kLlrClip);
            const double mi = std::tanh(0.5 * ci) * kInvSqrt2;
            const double mq = std::tanh(0.5 * cq) * kInvSqrt2;
            next.soft_mean[d] = cplx(mi, mq);
            next.soft_var[d] = std::max(1.0 - (mi * mi + mq * mq), 0.0);
        }
        history.push_back(std::move(next));
    }
    return history;
}

cvec likelihood_refine(const cvec& delta, const cvec& theta, const rvec& disturbance_var,
                       const cvec& seed) {
    const std::size_t D = theta.size();
    if (seed.size() != D || delta.size() != D + 2 || disturbance_var.size() != D + 2)
        throw std::invalid_argument("likelihood_refine: size mismatch");
    const std::size_t E = D + 2;

    // Work on the raw extended-bin observation. The window's spectral
    // kernel [-1/2, 1, -1/2] shapes whatever enters the FFT, so the
    // disturbance seen on neighbouring extended bins is strongly
    // correlated: a locally white input gives the normalized pentadiagonal
    // covariance [1/6, -2/3, 1, -2/3, 1/6]. Scale that by the measured
    // per-bin powers and whiten, rather than pretending the bins are
    // independent (or folding them through the lossy combiner projection).
    const double kcorr[3] = {1.0, -2.0 / 3.0, 1.0 / 6.0};
    std::vector<cplx> cov(E * E, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < E; ++i)
        for (std::size_t j = 0; j < E; ++j) {
            const std::size_t lag = i > j ? i - j : j - i;
            if (lag <= 2)
                cov[i * E + j] =
                    kcorr[lag] * std::sqrt(std::max(disturbance_var[i], kEps) *
                                           std::max(disturbance_var[j], kEps));
        }
    for (std::size_t i = 0; i < E; ++i) cov[i * E + i] += 1e-6 * cov[i * E + i].real() + 1e-12;

    std::vector<cplx> chol(E * E, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < E; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cplx sum = cov[i * E + j];
            for (std::size_t k = 0; k < j; ++k) sum -= chol[i * E + k] * std::conj(chol[j * E + k]);
            if (i == j)
                chol[i * E + j] = std::sqrt(std::max(sum.real(), kEps));
            else
                chol[i * E + j] = sum / chol[j * E + j].real();
        }
    const auto fwd_solve = [&](const cvec& rhs) {
        cvec x(E);
        for (std::size_t i = 0; i < E; ++i) {
            cplx sum = rhs[i];
            for (std::size_t k = 0; k < i; ++k) sum -= chol[i * E + k] * x[k];
            x[i] = sum / chol[i * E + i].real();
        }
        return x;
    };

    // Whitened model z = M s + unit noise. Column d of the tridiagonal mix
    // is zero above extended row d, and the whitening is lower triangular,
    // so whitened row i still depends only on symbols up to index i: a
    // left-to-right beam search finalizes row d when symbol d is chosen.
    const cvec z = fwd_solve(delta);
    std::vector<cvec> m_col(D);
    for (std::size_t d = 0; d < D; ++d) {
        cvec h_col(E, cplx(0.0, 0.0));
        h_col[d] = -0.5 * theta[d];
        h_col[d + 1] = theta[d];
        h_col[d + 2] = -0.5 * theta[d];
        m_col[d] = fwd_solve(h_col);
    }
    const auto row_resid = [&](const cvec& sym, std::size_t i) {
        cplx r = z[i];
        const std::size_t lim = std::min(sym.size(), D);
        for (std::size_t d = 0; d < lim; ++d) r -= m_col[d][i] * sym[d];
        return std::norm(r);
    };

    const cplx cands[4] = {cplx(kInvSqrt2, kInvSqrt2), cplx(kInvSqrt2, -kInvSqrt2),
                           cplx(-kInvSqrt2, kInvSqrt2), cplx(-kInvSqrt2, -kInvSqrt2)};
    struct Path {
        cvec sym;
        double metric;
    };
    const std::size_t kBeam = 128;
    std::vector<Path> beam{{cvec{}, 0.0}};
    std::vector<Path> next;
    for (std::size_t d = 0; d < D; ++d) {
        next.clear();
        for (const Path& p : beam)
            for (const cplx& c : cands) {
                Path q = p;
                q.sym.push_back(c);
                q.metric += row_resid(q.sym, d);
                next.push_back(std::move(q));
            }
        if (next.size() > kBeam) {
            std::nth_element(next.begin(), next.begin() + kBeam, next.end(),
                             [](const Path& a, const Path& b) { return a.metric < b.metric; });
            next.resize(kBeam);
        }
        beam.swap(next);
    }
    for (Path& p : beam) {
        p.metric += row_resid(p.sym, D);
        p.metric += row_resid(p.sym, D + 1);
    }
    cvec s(D);
    for (std::size_t d = 0; d < D; ++d)
        s[d] = cplx(seed[d].real() >= 0 ? kInvSqrt2 : -kInvSqrt2,
                    seed[d].imag() >= 0 ? kInvSqrt2 : -kInvSqrt2);
    double seed_l = 0.0;
    for (std::size_t i = 0; i < E; ++i) seed_l += row_resid(s, i);
    beam.push_back({s, seed_l});

    // Bitwise posterior decisions over the survivor list: a sequence-level
    // near-miss flips several bits at once, while summing the candidate
    // likelihoods per bit keeps the bits the contending candidates agree
    // on and lets clusters of runners-up outvote a lone best sequence.
    double mmin = 1e300;
    for (const Path& p : beam) mmin = std::min(mmin, p.metric);
    cvec out(D);
    for (std::size_t d = 0; d < D; ++d) {
        double mass[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        for (const Path& p : beam) {
            const double w = std::exp(mmin - p.metric);
            mass[0][p.sym[d].real() < 0 ? 1 : 0] += w;
            mass[1][p.sym[d].imag() < 0 ? 1 : 0] += w;
        }
        out[d] = cplx(mass[0][0] >= mass[0][1] ? kInvSqrt2 : -kInvSqrt2,
                      mass[1][0] >= mass[1][1] ? kInvSqrt2 : -kInvSqrt2);
    }
    return out;
}

cvec genie_bound(const cvec& d_breve, const MrcOperator& op, const cvec& d_true) {
    const std::size_t D = op.data_width;
    if (d_breve.size() != D || d_true.size() != D)
        throw std::invalid_argument("genie_bound: size mismatch");
    cvec out(D);
    for (std::size_t d = 0; d < D; ++d) {
        cplx ici(0.0, 0.0);
        for (std::size_t k = 0; k < D; ++k) ici += op.residual_gain(d, k) * d_true[k];
        out[d] = d_breve[d] - ici;
    }
    return out;
}

}  // namespace hannrx
