#include "hannrx/metrics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace hannrx {

ErrorCount count_errors(const std::vector<int>& decided, const std::vector<int>& truth) {
    if (decided.size() != truth.size()) throw std::invalid_argument("count_errors: length mismatch");
    ErrorCount c;
    c.total = truth.size();
    for (std::size_t i = 0; i < truth.size(); ++i)
        if ((decided[i] != 0) != (truth[i] != 0)) ++c.errors;
    return c;
}

Interval wilson_interval(std::size_t errors, std::size_t total, double z) {
    if (total == 0) return {0.0, 1.0};
    const double n = double(total);
    const double p = double(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(center - half, 0.0), std::min(center + half, 1.0)};
}

PsdCurve subcarrier_psd(const Numerology& num, std::size_t subcarrier_bin,
                        const rvec& rx_window, std::size_t num_symbols,
                        std::size_t resolution_factor, std::uint64_t seed) {
    num.validate();
    const std::size_t N = num.fft_size;
    if (rx_window.size() != N) throw std::invalid_argument("subcarrier_psd: window length mismatch");
    if (resolution_factor < 4) throw std::invalid_argument("subcarrier_psd: resolution factor < 4");
    if (subcarrier_bin >= N) throw std::invalid_argument("subcarrier_psd: bad bin");

    const std::size_t padded = N * resolution_factor;
    rvec accum(padded, 0.0);
    for (std::size_t s = 0; s < num_symbols; ++s) {
        // Unit-magnitude symbol on the probed subcarrier, all others idle.
        const cplx sym = random_qpsk(1, derive_seed(seed, "psdsym/" + std::to_string(s)))[0];
        cvec d(N, cplx(0.0, 0.0));
        d[subcarrier_bin] = sym;
        const cvec body = dft(d, /*inverse=*/true);
        cvec padded_sig(padded, cplx(0.0, 0.0));
        for (std::size_t n = 0; n < N; ++n) padded_sig[n] = rx_window[n] * body[n];
        const cvec spec = dft(padded_sig);
        for (std::size_t k = 0; k < padded; ++k) accum[k] += std::norm(spec[k]);
    }

    double peak = 0.0;
    for (double v : accum) peak = std::max(peak, v);
    if (peak <= 0.0) peak = 1.0;

    PsdCurve curve;
    curve.offsets_scs.resize(padded);
    curve.power_db.resize(padded);
    curve.marker.resize(padded);
    for (std::size_t k = 0; k < padded; ++k) {
        // Signed offset from the probed subcarrier, wrap-aware.
        double off = double(k) / double(resolution_factor) - double(subcarrier_bin);
        if (off > double(N) / 2.0) off -= double(N);
        if (off < -double(N) / 2.0) off += double(N);
        curve.offsets_scs[k] = off;
        curve.power_db[k] = 10.0 * std::log10(std::max(accum[k] / peak, 1e-30));
        curve.marker[k] = (k % resolution_factor) == 0;
    }
    return curve;
}

double psd_peak_in_band(const PsdCurve& curve, double lo, double hi) {
    double best = -1e30;
    for (std::size_t k = 0; k < curve.offsets_scs.size(); ++k) {
        const double off = curve.offsets_scs[k];
        if (off >= lo && off <= hi) best = std::max(best, curve.power_db[k]);
    }
    return best;
}

void SinrAccumulator::add(const cvec& estimates, const cvec& truth) {
    if (estimates.size() != truth.size())
        throw std::invalid_argument("SinrAccumulator: size mismatch");
    if (signal_power.empty()) {
        signal_power.assign(truth.size(), 0.0);
        error_power.assign(truth.size(), 0.0);
    }
    if (signal_power.size() != truth.size())
        throw std::invalid_argument("SinrAccumulator: width changed");
    for (std::size_t i = 0; i < truth.size(); ++i) {
        signal_power[i] += std::norm(truth[i]);
        error_power[i] += std::norm(estimates[i] - truth[i]);
    }
    ++symbols;
}

rvec SinrAccumulator::sinr_db(std::size_t min_symbols, bool* insufficient_samples) const {
    if (insufficient_samples) *insufficient_samples = symbols < min_symbols;
    rvec out(signal_power.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double ratio = signal_power[i] / std::max(error_power[i], kEps);
        out[i] = std::min(10.0 * std::log10(std::max(ratio, 1e-30)), 80.0);
    }
    return out;
}

double SinrAccumulator::aggregate_db() const {
    double s = 0.0, e = 0.0;
    for (std::size_t i = 0; i < signal_power.size(); ++i) {
        s += signal_power[i];
        e += error_power[i];
    }
    return std::min(10.0 * std::log10(std::max(s / std::max(e, kEps), 1e-30)), 80.0);
}

// ---------------------------------------------------------------------------
// Operation-count audit.
//
// Accounting rules (also stated in the report header):
//   complex x complex   -> 4 mults, 2 adds
//   real x complex      -> 2 mults
//   real x real, divide -> 1 mult each
//   complex / real      -> 2 mults
//   |x|^2               -> 2 mults, 1 add
//   complex add -> 2 adds; real add -> 1 add
// |H~|^2 entries and the FFT are excluded, as is forming H~ itself (the
// off-diagonals are shifted copies of the CFR).
// ---------------------------------------------------------------------------

namespace {

struct OpCounter {
    long long mults = 0;
    long long adds = 0;

    cplx cmul(cplx a, cplx b) { mults += 4; adds += 2; return a * b; }
    cplx rcmul(double a, cplx b) { mults += 2; return a * b; }
    cplx cadd(cplx a, cplx b) { adds += 2; return a + b; }
    double radd(double a, double b) { adds += 1; return a + b; }
    double rmul(double a, double b) { mults += 1; return a * b; }
    double rdiv(double a, double b) { mults += 1; return a / b; }
    cplx cdivr(cplx a, double b) { mults += 2; return a / b; }
    double magsq(cplx a) { mults += 2; adds += 1; return std::norm(a); }
};

// One interior subcarrier's worth of the four combiner steps, executed with
// counted primitive operations. |H~|^2 values arrive precomputed (free).
struct InteriorStepCosts {
    OpCounter sinr, combine, gains, disruption;
};

InteriorStepCosts run_instrumented_subcarrier(const cvec& theta, const rvec& sigma2,
                                              std::size_t d) {
    InteriorStepCosts costs;
    const std::size_t D = theta.size();
    const cvec d_check = random_qpsk(D + 2, 77);  // arbitrary observations

    // Free context: |theta|^2 per bin and the per-bin signal power sums
    // (the sigma row is shared across subcarriers; its cost is not listed
    // as a per-subcarrier step in the audit).
    rvec mag2(D);
    for (std::size_t i = 0; i < D; ++i) mag2[i] = std::norm(theta[i]);
    rvec bin_power(D + 2, 0.0);
    for (std::size_t i = 0; i < D; ++i) {
        bin_power[i] += 0.25 * mag2[i];
        bin_power[i + 1] += mag2[i];
        bin_power[i + 2] += 0.25 * mag2[i];
    }
    auto h_entry = [&](std::size_t kappa) -> cplx {  // H~(kappa, d), kappa in d..d+2
        return kappa == d + 1 ? theta[d] : -0.5 * theta[d];
    };
    auto own_power = [&](std::size_t kappa) -> double {
        return kappa == d + 1 ? mag2[d] : 0.25 * mag2[d];
    };

    // SINR step: three ratios, two adds in each denominator.
    rvec gamma(3), other(3);
    for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t kappa = d + j;
        auto& c = costs.sinr;
        other[j] = c.radd(c.radd(sigma2[kappa], bin_power[kappa]), -own_power(kappa));
        gamma[j] = c.rdiv(own_power(kappa), other[j]);
    }

    // Combine step: ratio-squarer weights (branch conjugate over branch
    // disturbance, the side branches sharing the -theta*/2 factor), then the
    // weighted sum normalized by the accumulated SINR.
    cplx d_breve;
    double denom;
    cvec weights(3);
    {
        auto& c = costs.combine;
        const cplx side = c.rcmul(-0.5, std::conj(theta[d]));
        weights[0] = c.cdivr(side, other[0]);
        weights[1] = c.cdivr(std::conj(theta[d]), other[1]);
        weights[2] = c.cdivr(side, other[2]);
        cplx num = c.cmul(weights[0], d_check[d]);
        num = c.cadd(num, c.cmul(weights[1], d_check[d + 1]));
        num = c.cadd(num, c.cmul(weights[2], d_check[d + 2]));
        denom = c.radd(c.radd(gamma[0], gamma[1]), gamma[2]);
        d_breve = c.cdivr(num, denom);
    }

    // Equalized combiner row for this subcarrier (cost carried by the
    // combine step above; reused here without recounting).
    cvec c_row(3);
    for (std::size_t j = 0; j < 3; ++j) c_row[j] = weights[j] / denom;

    // Post-combining gain step: four off-diagonal entries per subcarrier,
    // two or one overlapping products each.
    {
        auto& c = costs.gains;
        for (long long delta : {-2LL, -1LL, 1LL, 2LL}) {
            const long long m = (long long)d + delta;  // interfering subcarrier
            cplx g(0.0, 0.0);
            bool first = true;
            for (std::size_t j = 0; j < 3; ++j) {
                const long long kappa = (long long)d + (long long)j;  // observed bin
                // H~(kappa, m) nonzero iff kappa - m in {0,1,2}.
                const long long rel = kappa - m;
                if (rel < 0 || rel > 2) continue;
                const cplx hv = (rel == 1) ? theta[std::size_t(m)] : -0.5 * theta[std::size_t(m)];
                const cplx prod = c.cmul(c_row[j], hv);
                g = first ? prod : c.cadd(g, prod);
                first = false;
            }
        }
    }

    // Disruption power step: |C|^2 against the disturbance variances.
    {
        auto& c = costs.disruption;
        double rho = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double w = c.rmul(c.magsq(c_row[j]), sigma2[d + j]);
            rho = (j == 0) ? w : c.radd(rho, w);
        }
        (void)rho;
    }

    (void)d_breve;
    return costs;
}

}  // namespace

long long OpCountReport::total_mults(std::size_t iters) const {
    return mrc_total_mults + (long long)iters * sic_iter_mults_cm;
}

long long OpCountReport::total_adds(std::size_t iters) const {
    return mrc_total_adds + (long long)iters * sic_iter_adds;
}

OpCountReport audit_opcounts(const AuditParams& params) {
    if (params.fft_size == 0 || params.data_width == 0 || params.constellation == 0)
        throw std::invalid_argument("audit_opcounts: parameters must be positive");
    const long long N = (long long)params.fft_size;
    const long long D = (long long)params.data_width;
    const long long M = (long long)params.constellation;

    OpCountReport report;
    report.fft_size = params.fft_size;
    report.data_width = params.data_width;
    report.constellation = params.constellation;
    report.iterations = params.iterations;

    // Instrumented pass over one random channel draw: every interior
    // subcarrier costs the same, so one is measured and scaled by D.
    const cvec theta = [&] {
        cvec t = random_qpsk(params.data_width, 1234);
        const cvec jitter = random_qpsk(params.data_width, 4321);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += 0.3 * jitter[i];
        return t;
    }();
    rvec sigma2(params.data_width + 2, 0.0);
    std::uint64_t st = 99;
    for (auto& v : sigma2) v = 0.2 + 0.6 * double(splitmix64(st) >> 11) * 0x1.0p-53;
    const InteriorStepCosts costs =
        run_instrumented_subcarrier(theta, sigma2, params.data_width / 2);

    report.steps = {
        {"windowed reception", 2 * N, 0, 2 * N, 0},
        {"per-bin SINR", 3 * D, 6 * D, D * costs.sinr.mults, D * costs.sinr.adds},
        {"MRC output", 22 * D, 12 * D, D * costs.combine.mults, D * costs.combine.adds},
        {"post-MRC ICI gains", 24 * D, 16 * D, D * costs.gains.mults, D * costs.gains.adds},
        {"disruption power", 9 * D, 5 * D, D * costs.disruption.mults, D * costs.disruption.adds},
        {"a-priori probabilities", 4 * M * D, 3 * M * D, -1, -1},
    };
    report.mrc_total_mults = 2 * N + (58 + 4 * M) * D;
    report.mrc_total_adds = (39 + 3 * M) * D;
    report.sic_iter_mults_exact = (22 + 4 * M) * D;
    report.sic_iter_mults_cm = (22 + 3 * M) * D;
    report.sic_iter_adds = (19 + 3 * M) * D;
    return report;
}

std::string OpCountReport::to_text() const {
    std::ostringstream out;
    out << "# operation accounting: cmul=4m2a cadd=2a rmul/rdiv=1m radd=1a "
           "c/r div=2m |x|^2=2m1a; FFT and |H~|^2 excluded\n";
    out << "# N=" << fft_size << " D=" << data_width << " M=" << constellation
        << " iterations=" << iterations << "\n";
    out << "step,formula_mults,formula_adds,measured_mults,measured_adds\n";
    for (const auto& s : steps) {
        out << s.name << "," << s.formula_mults << "," << s.formula_adds << ",";
        if (s.measured_mults >= 0) out << s.measured_mults;
        out << ",";
        if (s.measured_adds >= 0) out << s.measured_adds;
        out << "\n";
    }
    out << "equalized MRC total," << mrc_total_mults << "," << mrc_total_adds << ",,\n";
    out << "each SIC iteration (exact)," << sic_iter_mults_exact << "," << sic_iter_adds << ",,\n";
    out << "each SIC iteration (const-modulus)," << sic_iter_mults_cm << "," << sic_iter_adds
        << ",,\n";
    return out.str();
}

}  // namespace hannrx
