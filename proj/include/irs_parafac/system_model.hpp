// SPDX-License-Identifier: Apache-2.0
//
// IRS-assisted MIMO training model. The coherence time is split into K blocks
// of T slots; the IRS phase vector is held for a block and the T pilot
// vectors repeat every block, so slice k of the received tensor is
//
//     Y[k] = G diag(S(k, :)) H X^T + N[k].
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "irs_parafac/errors.hpp"
#include "irs_parafac/rng.hpp"
#include "irs_parafac/tensor_core.hpp"

namespace irs_parafac {

struct ScenarioDims {
    int M = 0; ///< BS antennas
    int L = 0; ///< UT antennas
    int N = 0; ///< IRS elements
    int T = 0; ///< pilot slots per block
    int K = 0; ///< blocks per coherence time

    int coherence_slots() const noexcept { return K * T; }

    void validate() const {
        if (M <= 0 || L <= 0 || N <= 0 || T <= 0 || K <= 0) {
            throw InvalidArgument("ScenarioDims: M, L, N, T, K must all be positive (got M=" + std::to_string(M) +
                                  " L=" + std::to_string(L) + " N=" + std::to_string(N) + " T=" +
                                  std::to_string(T) + " K=" + std::to_string(K) + ")");
        }
    }

    friend bool operator==(const ScenarioDims&, const ScenarioDims&) = default;
};

enum class PhaseDesign {
    unit_modulus, ///< |s_kn| = 1, S^H S = K I when K >= N
    semi_unitary, ///< S^H S = I, entries of modulus 1/sqrt(K)
};

inline std::string to_string(PhaseDesign d) {
    return d == PhaseDesign::unit_modulus ? "unit_modulus" : "semi_unitary";
}

inline PhaseDesign parse_phase_design(const std::string& s) {
    if (s == "unit_modulus") return PhaseDesign::unit_modulus;
    if (s == "semi_unitary") return PhaseDesign::semi_unitary;
    throw InvalidArgument("unknown s_design '" + s + "' (expected unit_modulus or semi_unitary)");
}

struct TrainingPair {
    ComplexMatrix X; ///< T x M pilots, X^H X = I
    ComplexMatrix S; ///< K x N IRS phase shifts
    PhaseDesign design = PhaseDesign::unit_modulus;
};

struct ChannelPair {
    ComplexMatrix H; ///< N x M, BS -> IRS
    ComplexMatrix G; ///< L x N, IRS -> UT
};

/// Returns c when S^H S = c I to within a relative tolerance, nothing otherwise.
inline std::optional<double> orthogonality_scale(const ComplexMatrix& S, double rel_tol = 1e-10) {
    if (S.cols() == 0 || S.rows() < S.cols()) return std::nullopt;
    const ComplexMatrix gram = S.adjoint() * S;
    const double c = gram.diagonal().real().mean();
    if (!(c > 0.0)) return std::nullopt;
    const ComplexMatrix residual = gram - c * ComplexMatrix::Identity(S.cols(), S.cols());
    if (residual.cwiseAbs().maxCoeff() > rel_tol * c) return std::nullopt;
    return c;
}

/// First `cols` columns of the rows-point unitary DFT matrix,
/// entry (r, c) = exp(-j 2 pi r c / rows) / sqrt(rows).
inline ComplexMatrix dft_training(int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw InvalidArgument("dft_training: dimensions must be positive");
    if (rows < cols) {
        throw InvalidArgument("dft_training: rows (" + std::to_string(rows) + ") < cols (" + std::to_string(cols) +
                              "), no semi-unitary matrix exists");
    }
    ComplexMatrix out(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            // reduce the exponent mod rows to keep the angle small
            const auto idx = static_cast<double>((static_cast<long long>(r) * c) % rows);
            out(r, c) = std::polar(scale, -2.0 * std::numbers::pi * idx / rows);
        }
    }
    return out;
}

/// K x N IRS phase matrix.
///
/// With K >= N this is the truncated K-point DFT, scaled to unit modulus or
/// left semi-unitary according to `design`. With K < N no column-orthogonal
/// choice exists; the unit-modulus design then uses the first K rows of the
/// N-point DFT (a Vandermonde matrix with distinct nodes, so any K columns
/// are independent).
inline ComplexMatrix irs_phase_matrix(int K, int N, PhaseDesign design) {
    if (K >= N) {
        ComplexMatrix s = dft_training(K, N);
        if (design == PhaseDesign::unit_modulus) s *= std::sqrt(static_cast<double>(K));
        return s;
    }
    if (design == PhaseDesign::semi_unitary) {
        throw InvalidArgument("irs_phase_matrix: semi_unitary design needs K >= N (K=" + std::to_string(K) +
                              ", N=" + std::to_string(N) + ")");
    }
    return dft_training(N, N).topRows(K) * std::sqrt(static_cast<double>(N));
}

/// Applies an on/off activation pattern s_{n,k} in {0,1} to an IRS phase
/// matrix (element-wise product). The default designer keeps all elements on.
inline ComplexMatrix apply_activation_mask(const ComplexMatrix& S, const Eigen::MatrixXi& mask) {
    if (mask.rows() != S.rows() || mask.cols() != S.cols()) {
        throw InvalidArgument("apply_activation_mask: mask shape differs from S");
    }
    if ((mask.array() != 0 && mask.array() != 1).any()) {
        throw InvalidArgument("apply_activation_mask: mask entries must be 0 or 1");
    }
    return S.cwiseProduct(mask.cast<double>().cast<Complex>());
}

inline TrainingPair make_training(const ScenarioDims& dims, PhaseDesign design = PhaseDesign::unit_modulus) {
    dims.validate();
    return TrainingPair{dft_training(dims.T, dims.M), irs_phase_matrix(dims.K, dims.N, design), design};
}

/// i.i.d. CN(0,1) channels. H is drawn first, then G, both column-major.
inline ChannelPair gen_channels(const ScenarioDims& dims, Rng& rng) {
    dims.validate();
    ChannelPair ch;
    ch.H = draw_cn_matrix(dims.N, dims.M, rng);
    ch.G = draw_cn_matrix(dims.L, dims.N, rng);
    return ch;
}

/// Noiseless received tensor, slice k = G diag(S(k,:)) H X^T.
inline SignalTensor synthesize_noiseless(const ChannelPair& ch, const TrainingPair& tr) {
    const Index n = ch.H.rows();
    if (ch.G.cols() != n || tr.S.cols() != n) {
        throw InvalidArgument("synthesize_noiseless: IRS size mismatch between H (" + std::to_string(n) +
                              "), G (" + std::to_string(ch.G.cols()) + ") and S (" + std::to_string(tr.S.cols()) +
                              ")");
    }
    if (tr.X.cols() != ch.H.cols()) {
        throw InvalidArgument("synthesize_noiseless: X has " + std::to_string(tr.X.cols()) +
                              " columns, H has " + std::to_string(ch.H.cols()));
    }
    const ComplexMatrix z_t = ch.H * tr.X.transpose(); // (X H^T)^T, N x T
    SignalTensor y(ch.G.rows(), tr.X.rows(), tr.S.rows());
    for (Index k = 0; k < tr.S.rows(); ++k) {
        y.slice(k) = ch.G * tr.S.row(k).transpose().asDiagonal() * z_t;
    }
    return y;
}

struct NoisyObservation {
    SignalTensor noisy;
    SignalTensor noise;
};

inline constexpr double noiseless_snr = std::numeric_limits<double>::infinity();

/// Adds CN(0,1) noise rescaled so that 10 log10(||clean||^2 / ||noise||^2)
/// equals snr_db for this realization. snr_db = +inf adds nothing.
inline NoisyObservation add_noise(const SignalTensor& clean, double snr_db, Rng& rng) {
    const double signal = frobenius_norm_sq(clean);
    if (signal == 0.0) throw DegenerateInput("add_noise: SNR is undefined for a zero tensor");
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
        throw InvalidArgument("add_noise: snr_db must be finite or +inf");
    }
    SignalTensor noise(clean.dim_l(), clean.dim_t(), clean.dim_k());
    if (std::isinf(snr_db)) return {clean, noise};

    for (Index k = 0; k < clean.dim_k(); ++k) {
        noise.slice(k) = draw_cn_matrix(clean.dim_l(), clean.dim_t(), rng);
    }
    const double target = signal / std::pow(10.0, snr_db / 10.0);
    noise *= std::sqrt(target / frobenius_norm_sq(noise));
    return {clean + noise, noise};
}

inline double realized_snr_db(const SignalTensor& clean, const SignalTensor& noise) {
    return 10.0 * std::log10(frobenius_norm_sq(clean) / frobenius_norm_sq(noise));
}

} // namespace irs_parafac
