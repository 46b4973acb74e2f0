#include "hannrx/numerics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

namespace hannrx {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey, unscaled.
void fft_radix2(cvec& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / double(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace

cvec dft(const cvec& v, bool inverse) {
    const std::size_t n = v.size();
    if (n == 0) throw std::invalid_argument("dft: empty input");
    cvec out;
    if (is_pow2(n)) {
        out = v;
        fft_radix2(out, inverse);
    } else {
        out.assign(n, cplx(0.0, 0.0));
        const double sgn = inverse ? 2.0 : -2.0;
        for (std::size_t k = 0; k < n; ++k) {
            cplx acc(0.0, 0.0);
            for (std::size_t m = 0; m < n; ++m) {
                const double ang = sgn * std::numbers::pi * double((k * m) % n) / double(n);
                acc += v[m] * cplx(std::cos(ang), std::sin(ang));
            }
            out[k] = acc;
        }
    }
    const double scale = 1.0 / std::sqrt(double(n));
    for (auto& x : out) x *= scale;
    return out;
}

cvec apply_banded(cplx center, cplx off, const cvec& v, bool circular) {
    const std::size_t n = v.size();
    if (n < 3) throw std::invalid_argument("apply_banded: length must be >= 3");
    cvec out(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc = center * v[i];
        if (i > 0) acc += off * v[i - 1];
        else if (circular) acc += off * v[n - 1];
        if (i + 1 < n) acc += off * v[i + 1];
        else if (circular) acc += off * v[0];
        out[i] = acc;
    }
    return out;
}

LsResult solve_ls(const LsProblem& problem) {
    const auto& A = problem.design;
    const auto& b = problem.observations;
    if (A.rows != b.size()) throw std::invalid_argument("solve_ls: row/observation mismatch");
    if (problem.support.empty()) throw std::invalid_argument("solve_ls: empty support");
    for (auto s : problem.support)
        if (s >= A.cols) throw std::invalid_argument("solve_ls: support index out of range");
    if (problem.ridge < 0.0) throw std::invalid_argument("solve_ls: negative ridge");

    const std::size_t m = A.rows, s = problem.support.size();
    Eigen::MatrixXcd as(m, s);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < s; ++c) as(r, c) = A(r, problem.support[c]);
    Eigen::VectorXcd bv(m);
    for (std::size_t r = 0; r < m; ++r) bv(r) = b[r];

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(as, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;

    LsResult res;
    res.condition = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
    res.ill_conditioned = problem.ridge == 0.0 && res.condition > 1e8;

    // x = V diag(s/(s^2+ridge)) U^H b; ridge=0 with tiny singular values
    // truncated -> minimum-norm solution.
    Eigen::VectorXcd uhb = svd.matrixU().adjoint() * bv;
    Eigen::VectorXcd y(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        const double sg = sv(i);
        if (problem.ridge == 0.0) {
            y(i) = (sg > smax * 1e-13) ? uhb(i) / sg : cplx(0.0, 0.0);
        } else {
            y(i) = uhb(i) * sg / (sg * sg + problem.ridge);
        }
    }
    Eigen::VectorXcd xs = svd.matrixV() * y;

    res.solution.assign(A.cols, cplx(0.0, 0.0));
    for (std::size_t c = 0; c < s; ++c) res.solution[problem.support[c]] = xs(c);
    return res;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t state = master ^ h;
    return splitmix64(state);
}

}  // namespace hannrx
