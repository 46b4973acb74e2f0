#include "hannrx/rx_baseline.hpp"

#include <cmath>
#include <numbers>

namespace hannrx {

void RxWindowSpec::validate(std::size_t cp_len) const {
    if (tail_len > cp_len) throw std::invalid_argument("RxWindowSpec: K > L");
    if (taper.size() != tail_len) throw std::invalid_argument("RxWindowSpec: taper length != K");
    for (double w : taper)
        if (w < 0.0 || w > 1.0) throw std::invalid_argument("RxWindowSpec: taper outside [0,1]");
}

RxWindowSpec raised_cosine_window(std::size_t tail_len) {
    RxWindowSpec spec;
    spec.tail_len = tail_len;
    spec.taper.resize(tail_len);
    for (std::size_t i = 0; i < tail_len; ++i)
        spec.taper[i] =
            0.5 * (1.0 - std::cos(std::numbers::pi * (double(i) + 0.5) / double(tail_len)));
    return spec;
}

CMat cp_removal_matrix(const Numerology& num, const RxWindowSpec& spec) {
    num.validate();
    spec.validate(num.cp_len);
    const std::size_t N = num.fft_size, L = num.cp_len, K = spec.tail_len;
    CMat b(N, N + L);
    // Body rows: identity starting at column L.
    for (std::size_t i = 0; i < N - K; ++i) b(i, L + i) = 1.0;
    // Tapered rows: weight on the CP copy, complement on the matching tail
    // samples; the pair represents body sample N-K+i.
    for (std::size_t i = 0; i < K; ++i) {
        b(N - K + i, L - K + i) = spec.taper[i];
        b(N - K + i, N + L - K + i) = 1.0 - spec.taper[i];
    }
    return b;
}

cvec receive_windowed_full(const cvec& y, const Numerology& num, const RxWindowSpec& spec) {
    num.validate();
    spec.validate(num.cp_len);
    const std::size_t N = num.fft_size, L = num.cp_len, K = spec.tail_len;
    if (y.size() != N + L) throw std::invalid_argument("receive_windowed: length mismatch");
    cvec body(N);
    for (std::size_t i = 0; i < N - K; ++i) body[i] = y[L + i];
    for (std::size_t i = 0; i < K; ++i)
        body[N - K + i] =
            spec.taper[i] * y[L - K + i] + (1.0 - spec.taper[i]) * y[N + L - K + i];
    return dft(body);
}

cvec receive_windowed(const cvec& y, const Numerology& num, const RxWindowSpec& spec) {
    return subcarrier_demap(num, receive_windowed_full(y, num, spec));
}

CirEstimate estimate_cir_baseline(const cvec& r_pilot, const cvec& pilots, const Numerology& num,
                                  std::size_t support_len, double ridge) {
    num.validate();
    const std::size_t N = num.fft_size, D = num.data_width;
    if (r_pilot.size() != D || pilots.size() != D)
        throw std::invalid_argument("estimate_cir_baseline: expected D-vectors");
    if (support_len == 0 || support_len > N)
        throw std::invalid_argument("estimate_cir_baseline: bad support length");

    LsProblem problem;
    problem.design = CMat(D, support_len);
    for (std::size_t i = 0; i < D; ++i) {
        const std::size_t bin = num.first_data_bin + i;
        for (std::size_t k = 0; k < support_len; ++k) {
            const double ang =
                -2.0 * std::numbers::pi * double((bin * k) % N) / double(N);
            problem.design(i, k) = pilots[i] * cplx(std::cos(ang), std::sin(ang));
        }
    }
    problem.observations = r_pilot;
    problem.support.resize(support_len);
    for (std::size_t k = 0; k < support_len; ++k) problem.support[k] = k;
    problem.ridge = ridge;

    const LsResult sol = solve_ls(problem);
    CirEstimate est;
    est.h.assign(N, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < support_len; ++k) est.h[k] = sol.solution[k];
    est.ill_conditioned = sol.ill_conditioned;
    return est;
}

cvec cfr_from_cir(const cvec& h) {
    cvec theta = dft(h);
    const double scale = std::sqrt(double(h.size()));
    for (auto& t : theta) t *= scale;
    return theta;
}

cvec equalize_mmse(const cvec& r, const CfrEstimate& est) {
    if (r.size() != est.theta.size() || r.size() != est.per_bin_disturbance.size())
        throw std::invalid_argument("equalize_mmse: size mismatch");
    cvec out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double denom =
            std::max(std::norm(est.theta[i]) + est.per_bin_disturbance[i], kEps);
        out[i] = std::conj(est.theta[i]) * r[i] / denom;
    }
    return out;
}

rvec residual_disturbance(const cvec& observed, const cvec& reconstructed) {
    if (observed.size() != reconstructed.size())
        throw std::invalid_argument("residual_disturbance: size mismatch");
    const std::size_t n = observed.size();
    rvec raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = std::norm(observed[i] - reconstructed[i]);
    rvec smooth(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = raw[i];
        double cnt = 1.0;
        if (i > 0) { acc += raw[i - 1]; cnt += 1.0; }
        if (i + 1 < n) { acc += raw[i + 1]; cnt += 1.0; }
        smooth[i] = std::max(acc / cnt, kEps);
    }
    return smooth;
}

std::vector<cvec> interpolate_cir(const std::vector<cvec>& pilot_cirs,
                                  const std::vector<std::size_t>& pilot_positions,
                                  std::size_t num_symbols) {
    if (pilot_cirs.empty() || pilot_cirs.size() != pilot_positions.size())
        throw std::invalid_argument("interpolate_cir: pilot data mismatch");
    std::vector<cvec> out(num_symbols);
    for (std::size_t sym = 0; sym < num_symbols; ++sym) {
        if (sym <= pilot_positions.front()) { out[sym] = pilot_cirs.front(); continue; }
        if (sym >= pilot_positions.back()) { out[sym] = pilot_cirs.back(); continue; }
        std::size_t hi = 1;
        while (pilot_positions[hi] < sym) ++hi;
        const std::size_t lo = hi - 1;
        const double t = double(sym - pilot_positions[lo]) /
                         double(pilot_positions[hi] - pilot_positions[lo]);
        cvec mix(pilot_cirs[lo].size());
        for (std::size_t k = 0; k < mix.size(); ++k)
            mix[k] = (1.0 - t) * pilot_cirs[lo][k] + t * pilot_cirs[hi][k];
        out[sym] = std::move(mix);
    }
    return out;
}

}  // namespace hannrx
