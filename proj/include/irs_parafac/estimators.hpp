// SPDX-License-Identifier: Apache-2.0
//
// Channel estimators for the trilinear model Y = [[G, X H^T, S]] with known
// pilots X and IRS phase matrix S:
//
//   * LSKRF: bilinear filtering of the mode-3 unfolding gives W ~ H^T (.) G,
//     then each column of W is split by a rank-1 truncated SVD.
//   * BALS: alternating exact least-squares updates of G (mode-1 unfolding)
//     and H (mode-2 unfolding) from a random start.
//
// Both return H and G up to per-element scalings that cancel in the cascaded
// channel G H.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "irs_parafac/errors.hpp"
#include "irs_parafac/rng.hpp"
#include "irs_parafac/system_model.hpp"
#include "irs_parafac/tensor_core.hpp"

namespace irs_parafac {

enum class Method { lskrf, bals };

inline std::string to_string(Method m) { return m == Method::lskrf ? "lskrf" : "bals"; }

inline Method parse_method(const std::string& s) {
    if (s == "lskrf" || s == "LSKRF") return Method::lskrf;
    if (s == "bals" || s == "BALS") return Method::bals;
    throw InvalidArgument("unknown estimator '" + s + "' (expected lskrf or bals)");
}

struct IdentifiabilityReport {
    std::vector<std::string> violations;

    bool ok() const noexcept { return violations.empty(); }
    explicit operator bool() const noexcept { return ok(); }

    std::string summary() const {
        std::string out;
        for (const auto& v : violations) {
            if (!out.empty()) out += "; ";
            out += v;
        }
        return out;
    }
};

/// LSKRF needs column-orthogonal S and X (K >= N, T >= M). BALS needs the
/// Khatri-Rao systems of both LS steps to be tall (K min(T, L) >= N) and a
/// left-invertible X (T >= M).
inline IdentifiabilityReport check_identifiability(const ScenarioDims& d, Method method) {
    IdentifiabilityReport r;
    auto need = [&](bool cond, std::string what) {
        if (!cond) r.violations.push_back(std::move(what));
    };
    const std::string k = std::to_string(d.K), n = std::to_string(d.N);
    const std::string t = std::to_string(d.T), m = std::to_string(d.M);
    if (method == Method::lskrf) {
        need(d.K >= d.N, "K >= N violated (K=" + k + ", N=" + n + ")");
        need(d.T >= d.M, "T >= M violated (T=" + t + ", M=" + m + ")");
    } else {
        const int dof = d.K * std::min(d.T, d.L);
        need(dof >= d.N, "K*min(T,L) >= N violated (K*min(T,L)=" + std::to_string(dof) + ", N=" + n + ")");
        need(d.T >= d.M, "T >= M violated (T=" + t + ", M=" + m + ")");
    }
    return r;
}

struct ChannelEstimate {
    ComplexMatrix H_hat;     ///< N x M
    ComplexMatrix G_hat;     ///< L x N
    ComplexMatrix H_cascaded; ///< L x M, G_hat H_hat
    int iterations = 0;
    std::vector<double> error_trace;
    std::chrono::duration<double> wall_time{0};
    bool converged = true;
    bool fast_path_used = false;
};

struct BalsSettings {
    double tolerance = 1e-6;
    int max_iterations = 200;
    bool normalize_error = true;
    bool fast_path = true;
    std::uint64_t init_seed = 0;
    int starts = 1; ///< random initializations; the lowest final error wins

    void validate() const {
        if (!(tolerance > 0.0)) throw InvalidArgument("BalsSettings: tolerance must be positive");
        if (max_iterations < 1) throw InvalidArgument("BalsSettings: max_iterations must be >= 1");
        if (starts < 1) throw InvalidArgument("BalsSettings: starts must be >= 1");
    }
};

inline ComplexMatrix cascaded_channel(const ChannelEstimate& est) { return est.G_hat * est.H_hat; }

namespace detail {

using Clock = std::chrono::steady_clock;

inline ComplexVector inverse_diagonal_gram(const Eigen::VectorXd& gram_diag, Index rows, const char* step) {
    const double largest = std::sqrt(gram_diag.maxCoeff());
    const double smallest = std::sqrt(gram_diag.minCoeff());
    if (largest == 0.0 || smallest < rank_tolerance(rows, gram_diag.size(), largest)) {
        throw RankDeficiency(std::string("BALS ") + step + ": Khatri-Rao system is not full column rank");
    }
    return gram_diag.cwiseInverse().cast<Complex>();
}

// (S (.) Z)^H (S (.) Z) = (S^H S) o (Z^H Z) = c diag(||z_n||^2) when S^H S = c I.
inline ComplexMatrix fast_step_g(const ComplexMatrix& y1, const ComplexMatrix& s, const ComplexMatrix& z, double c) {
    const ComplexMatrix kr = khatri_rao(s, z);
    const Eigen::VectorXd gram = c * z.colwise().squaredNorm().transpose();
    return y1 * kr.conjugate() * inverse_diagonal_gram(gram, kr.rows(), "step 3").asDiagonal();
}

inline ComplexMatrix generic_step_g(const ComplexMatrix& y1, const ComplexMatrix& s, const ComplexMatrix& z) {
    return ls_solve(khatri_rao(s, z), y1.transpose(), "BALS step 3").transpose();
}

inline ComplexMatrix fast_step_h(const ComplexMatrix& y2, const ComplexMatrix& s, const ComplexMatrix& g,
                                 const ComplexMatrix& x, double c_s, double c_x) {
    const ComplexMatrix kr = khatri_rao(s, g);
    const Eigen::VectorXd gram = c_s * g.colwise().squaredNorm().transpose();
    const ComplexVector inv = inverse_diagonal_gram(gram, kr.rows(), "step 4");
    const ComplexMatrix h_t = (x.adjoint() / c_x) * y2 * kr.conjugate() * inv.asDiagonal();
    return h_t.transpose();
}

inline ComplexMatrix generic_step_h(const ComplexMatrix& y2, const ComplexMatrix& s, const ComplexMatrix& g,
                                    const ComplexMatrix& x) {
    const ComplexMatrix filtered = ls_solve(x, y2, "BALS step 4 (pilot inverse)"); // M x LK
    return ls_solve(khatri_rao(s, g), filtered.transpose(), "BALS step 4");
}

} // namespace detail

/// W^T = S^H Y3 (conj(X) (x) I_L) / c, where S^H S = c I. Without an explicit
/// scale, c is measured from S and a non-orthogonal S is rejected.
inline ComplexMatrix bilinear_filter(const ComplexMatrix& y3, const ComplexMatrix& s, const ComplexMatrix& x,
                                     std::optional<double> s_scale = std::nullopt) {
    if (y3.rows() != s.rows()) {
        throw InvalidArgument("bilinear_filter: Y3 has " + std::to_string(y3.rows()) + " rows but S has " +
                              std::to_string(s.rows()));
    }
    const Index t = x.rows();
    if (t == 0 || y3.cols() % t != 0) {
        throw InvalidArgument("bilinear_filter: Y3 column count " + std::to_string(y3.cols()) +
                              " is not a multiple of T=" + std::to_string(t));
    }
    const Index l = y3.cols() / t;
    if (!s_scale) {
        s_scale = orthogonality_scale(s);
        if (!s_scale) throw PreconditionError("bilinear_filter: S is not column-orthogonal (S^H S != c I)");
    }
    const ComplexMatrix w_t = s.adjoint() * y3 * kronecker(x.conjugate(), ComplexMatrix::Identity(l, l));
    return w_t.transpose() / *s_scale;
}

/// Least-squares Khatri-Rao factorization of W (ML x N) into H^T (.) G.
/// Column n is reshaped (column stacking) to the L x M matrix g_n h_n^T and
/// split with its dominant singular triplet.
inline ChannelEstimate lskrf(const ComplexMatrix& w, Index l, Index m) {
    const auto start = detail::Clock::now();
    if (l <= 0 || m <= 0 || w.rows() != l * m) {
        throw InvalidArgument("lskrf: W has " + std::to_string(w.rows()) + " rows, expected L*M=" +
                              std::to_string(l * m));
    }
    if (w.cols() < 1) throw InvalidArgument("lskrf: W has no columns");
    const Index n_el = w.cols();
    ChannelEstimate est;
    est.H_hat.resize(n_el, m);
    est.G_hat.resize(l, n_el);
    for (Index n = 0; n < n_el; ++n) {
        const ComplexMatrix block = w.col(n).reshaped(l, m);
        if (block.cwiseAbs2().maxCoeff() == 0.0) {
            throw DegenerateInput("lskrf: column " + std::to_string(n) + " of W is all zero");
        }
        const Rank1Svd r1 = rank1_truncated_svd(block);
        const double root = std::sqrt(r1.sigma);
        est.H_hat.row(n) = root * r1.v.conjugate().transpose();
        est.G_hat.col(n) = root * r1.u;
    }
    est.H_cascaded = cascaded_channel(est);
    est.iterations = 0;
    est.wall_time = detail::Clock::now() - start;
    return est;
}

/// G update of BALS using the diagonal Gram matrix available when S^H S = c I.
inline ComplexMatrix bals_fast_step_g(const ComplexMatrix& y1, const ComplexMatrix& s, const ComplexMatrix& z) {
    const auto c = orthogonality_scale(s);
    if (!c) throw PreconditionError("bals_fast_step_g: S is not column-orthogonal (S^H S != c I)");
    if (y1.cols() != s.rows() * z.rows() || s.cols() != z.cols()) {
        throw InvalidArgument("bals_fast_step_g: dimension mismatch");
    }
    return detail::fast_step_g(y1, s, z, *c);
}

/// G update of BALS through the generic pseudo-inverse, G = Y1 [(S (.) Z)^T]^+.
inline ComplexMatrix bals_step_g(const ComplexMatrix& y1, const ComplexMatrix& s, const ComplexMatrix& z) {
    if (y1.cols() != s.rows() * z.rows() || s.cols() != z.cols()) {
        throw InvalidArgument("bals_step_g: dimension mismatch");
    }
    return detail::generic_step_g(y1, s, z);
}

/// H update of BALS, H^T = X^+ Y2 [(S (.) G)^T]^+.
inline ComplexMatrix bals_step_h(const ComplexMatrix& y2, const ComplexMatrix& s, const ComplexMatrix& g,
                                 const ComplexMatrix& x) {
    if (y2.rows() != x.rows() || y2.cols() != s.rows() * g.rows() || s.cols() != g.cols()) {
        throw InvalidArgument("bals_step_h: dimension mismatch");
    }
    return detail::generic_step_h(y2, s, g, x);
}

/// Bilinear alternating least squares on the mode-1 (L x TK) and mode-2
/// (T x LK) unfoldings. Stops when successive reconstruction errors differ by
/// at most settings.tolerance, or after max_iterations (reported through
/// `converged`, not an error).
inline ChannelEstimate bals(const ComplexMatrix& y1, const ComplexMatrix& y2, const ComplexMatrix& s,
                            const ComplexMatrix& x, const BalsSettings& settings) {
    const auto start = detail::Clock::now();
    settings.validate();

    const ScenarioDims dims{static_cast<int>(x.cols()), static_cast<int>(y1.rows()), static_cast<int>(s.cols()),
                            static_cast<int>(x.rows()), static_cast<int>(s.rows())};
    const Index l = dims.L, t = dims.T, k = dims.K;
    if (y1.cols() != t * k) {
        throw InvalidArgument("bals: Y1 is " + std::to_string(y1.rows()) + "x" + std::to_string(y1.cols()) +
                              ", expected L x T*K with T*K=" + std::to_string(t * k));
    }
    if (y2.rows() != t || y2.cols() != l * k) {
        throw InvalidArgument("bals: Y2 is " + std::to_string(y2.rows()) + "x" + std::to_string(y2.cols()) +
                              ", expected " + std::to_string(t) + "x" + std::to_string(l * k));
    }
    if (const auto report = check_identifiability(dims, Method::bals); !report) {
        throw PreconditionError("bals: " + report.summary());
    }
    const double y_norm = frobenius_norm_sq(y1);
    if (y_norm == 0.0) throw DegenerateInput("bals: received tensor is zero");

    std::optional<double> c_s, c_x;
    if (settings.fast_path) {
        c_s = orthogonality_scale(s);
        c_x = orthogonality_scale(x);
    }
    const bool fast = c_s.has_value() && c_x.has_value();

    auto run_from = [&](std::uint64_t seed) {
        Rng rng(seed);
        ComplexMatrix h = draw_cn_matrix(dims.N, dims.M, rng);
        ComplexMatrix g;
        ChannelEstimate est;
        est.fast_path_used = fast;
        est.converged = false;
        for (int i = 1; i <= settings.max_iterations; ++i) {
            const ComplexMatrix z = x * h.transpose();
            g = fast ? detail::fast_step_g(y1, s, z, *c_s) : detail::generic_step_g(y1, s, z);
            h = fast ? detail::fast_step_h(y2, s, g, x, *c_s, *c_x) : detail::generic_step_h(y2, s, g, x);

            const ComplexMatrix model = g * khatri_rao(s, x * h.transpose()).transpose();
            double e = (y1 - model).squaredNorm();
            if (settings.normalize_error) e /= y_norm;
            est.error_trace.push_back(e);
            est.iterations = i;
            if (i >= 2 && std::abs(e - est.error_trace[est.error_trace.size() - 2]) <= settings.tolerance) {
                est.converged = true;
                break;
            }
        }
        est.H_hat = std::move(h);
        est.G_hat = std::move(g);
        return est;
    };

    ChannelEstimate est = run_from(settings.init_seed);
    for (int r = 1; r < settings.starts; ++r) {
        ChannelEstimate other = run_from(derive_seed({settings.init_seed, static_cast<std::uint64_t>(r)}));
        if (other.error_trace.back() < est.error_trace.back()) est = std::move(other);
    }
    est.H_cascaded = cascaded_channel(est);
    est.wall_time = detail::Clock::now() - start;
    return est;
}

/// LSKRF from the received tensor: mode-3 unfolding, bilinear filtering with
/// the scale of the training design, rank-1 factorization. Timed end to end.
inline ChannelEstimate estimate_lskrf(const SignalTensor& y, const TrainingPair& tr) {
    const auto start = detail::Clock::now();
    const ScenarioDims dims{static_cast<int>(tr.X.cols()), static_cast<int>(y.dim_l()), static_cast<int>(tr.S.cols()),
                            static_cast<int>(tr.X.rows()), static_cast<int>(tr.S.rows())};
    if (const auto report = check_identifiability(dims, Method::lskrf); !report) {
        throw PreconditionError("lskrf: " + report.summary());
    }
    const double scale = tr.design == PhaseDesign::unit_modulus ? static_cast<double>(dims.K) : 1.0;
    const ComplexMatrix w = bilinear_filter(unfold(y, 3), tr.S, tr.X, scale);
    ChannelEstimate est = lskrf(w, y.dim_l(), tr.X.cols());
    est.wall_time = detail::Clock::now() - start;
    return est;
}

/// BALS from the received tensor (mode-1 and mode-2 unfoldings). Timed end to end.
inline ChannelEstimate estimate_bals(const SignalTensor& y, const TrainingPair& tr, const BalsSettings& settings) {
    const auto start = detail::Clock::now();
    ChannelEstimate est = bals(unfold(y, 1), unfold(y, 2), tr.S, tr.X, settings);
    est.wall_time = detail::Clock::now() - start;
    return est;
}

/// Removes the per-element scaling ambiguity against a known truth: column n
/// of G_hat is multiplied by alpha_n = g_hat_n^H g_n / ||g_hat_n||^2 and row n
/// of H_hat divided by it. The cascaded channel is carried over unchanged.
inline ChannelEstimate resolve_scaling(const ChannelEstimate& est, const ChannelPair& truth) {
    if (est.G_hat.rows() != truth.G.rows() || est.G_hat.cols() != truth.G.cols() ||
        est.H_hat.rows() != truth.H.rows() || est.H_hat.cols() != truth.H.cols()) {
        throw InvalidArgument("resolve_scaling: estimate and truth dimensions differ");
    }
    ChannelEstimate out = est;
    for (Index n = 0; n < est.G_hat.cols(); ++n) {
        const double energy = est.G_hat.col(n).squaredNorm();
        if (energy == 0.0) {
            throw DegenerateInput("resolve_scaling: estimated column " + std::to_string(n) + " of G is zero");
        }
        const Complex alpha = est.G_hat.col(n).dot(truth.G.col(n)) / energy; // dot() conjugates the left side
        out.G_hat.col(n) *= alpha;
        out.H_hat.row(n) /= alpha;
    }
    return out;
}

} // namespace irs_parafac
