#pragma once

#include "dncalc/common.hpp"

#include <span>

namespace dncalc::fft {

/// Unnormalized DFT, out_k = sum_m in_m exp(sign * 2 pi i k.m / n).
/// rank 1 or 2 (n x n, last index fastest); howmany contiguous transforms.
/// Plans are cached; calls are safe from several threads.
void transform(int rank, int n, int howmany, int sign, std::span<const cplx> in,
               std::span<cplx> out);

inline void forward(int rank, int n, std::span<const cplx> in, std::span<cplx> out) {
    transform(rank, n, 1, -1, in, out);
}
inline void backward(int rank, int n, std::span<const cplx> in, std::span<cplx> out) {
    transform(rank, n, 1, +1, in, out);
}

}  // namespace dncalc::fft
