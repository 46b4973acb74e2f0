#pragma once

#include <cstdint>
#include <optional>

#include "hannrx/types.hpp"

namespace hannrx {

/// Unitary DFT, forward kernel e^{-j2*pi*nk/N}, 1/sqrt(N) scaling in both
/// directions so Parseval holds without bookkeeping. Radix-2 when the size
/// is a power of two, direct evaluation otherwise (interferer grids are
/// 4x the desired user's and need not be powers of two).
cvec dft(const cvec& v, bool inverse = false);

/// out[n] = off*v[n-1] + center*v[n] + off*v[n+1]; wraparound iff circular.
cvec apply_banded(cplx center, cplx off, const cvec& v, bool circular);

/// Support-restricted ridge least squares:
/// minimize |design*x - obs|^2 + ridge*|x|^2 with x zero off-support.
struct LsProblem {
    CMat design;
    cvec observations;
    std::vector<std::size_t> support;  // columns allowed nonzero
    double ridge = 0.0;
};

struct LsResult {
    cvec solution;           // length design.cols, zero off-support
    bool ill_conditioned = false;  // condition estimate > 1e8
    double condition = 0.0;
};

LsResult solve_ls(const LsProblem& problem);

/// Deterministic seed mixing (splitmix64 over an FNV-1a string hash);
/// how every per-trial / per-tap child seed is derived.
std::uint64_t derive_seed(std::uint64_t master, const std::string& tag);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace hannrx
