// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "irs_parafac/tensor_core.hpp"

namespace irs_parafac {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Folds a sequence of 64-bit words into one seed: h <- mix64(h ^ word).
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = 0;
    for (auto w : words) h = mix64(h ^ w);
    return h;
}

/// Counter-based substream for one Monte-Carlo trial. The key is the master
/// seed, the IRS size, the raw bits of the SNR value and the trial index, so
/// a trial's randomness does not depend on which worker runs it or when.
inline Rng trial_stream(std::uint64_t master_seed, int n_elements, double snr_db, std::uint64_t trial_index) {
    const std::uint64_t snr_bits = std::bit_cast<std::uint64_t>(snr_db);
    return Rng(derive_seed({master_seed, static_cast<std::uint64_t>(n_elements), snr_bits, trial_index}));
}

/// One CN(0,1) sample: independent N(0, 1/2) real and imaginary parts.
inline Complex draw_cn(Rng& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    const double re = gauss(rng);
    const double im = gauss(rng);
    return {re, im};
}

/// rows x cols matrix of i.i.d. CN(0,1) entries, filled in column-major order.
inline ComplexMatrix draw_cn_matrix(Index rows, Index cols, Rng& rng) {
    ComplexMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = draw_cn(rng);
    return m;
}

} // namespace irs_parafac
