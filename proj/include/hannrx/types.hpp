#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hannrx {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

/// Dense row-major complex matrix. Sizes in this project are small
/// (at most N x N with N <= 4096), so a plain buffer is enough.
struct CMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    cvec data;

    CMat() = default;
    CMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    cplx& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline cvec matvec(const CMat& m, const cvec& v) {
    if (v.size() != m.cols) throw std::invalid_argument("matvec: size mismatch");
    cvec out(m.rows, cplx(0.0, 0.0));
    for (std::size_t r = 0; r < m.rows; ++r) {
        cplx acc(0.0, 0.0);
        const cplx* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

inline CMat matmul(const CMat& a, const CMat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: size mismatch");
    CMat out(a.rows, b.cols);
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const cplx av = a(r, k);
            if (av == cplx(0.0, 0.0)) continue;
            for (std::size_t c = 0; c < b.cols; ++c) out(r, c) += av * b(k, c);
        }
    return out;
}

constexpr double kEps = 1e-12;  // guard on all divisions / variance clamps

}  // namespace hannrx
