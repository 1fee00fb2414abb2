// SPDX-License-Identifier: Apache-2.0
//
// Seeded Monte-Carlo runner. A trial is a pure function of
// (config, N, snr_db, trial_index): its random stream comes from
// trial_stream(), so trials may execute on any worker in any order and the
// per-cell aggregates are folded in ascending trial order.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "irs_parafac/errors.hpp"
#include "irs_parafac/estimators.hpp"
#include "irs_parafac/rng.hpp"
#include "irs_parafac/system_model.hpp"
#include "irs_parafac/tensor_core.hpp"

namespace irs_parafac {

struct ScenarioConfig {
    ScenarioDims dims{3, 2, 10, 4, 50}; ///< dims.N is overridden per cell by n_values
    std::vector<int> n_values{10, 40};
    std::vector<double> snr_grid_db{0, 5, 10, 15, 20, 25, 30};
    int trials = 200;
    std::vector<Method> estimators{Method::lskrf, Method::bals};
    BalsSettings bals{};
    PhaseDesign s_design = PhaseDesign::unit_modulus;
    std::uint64_t seed = 0;
    std::string output_path;

    ScenarioDims dims_for(int n) const {
        ScenarioDims d = dims;
        d.N = n;
        return d;
    }
};

/// Every problem that would stop a sweep, one message per failed check.
/// Identifiability problems name the (estimator, N) cell.
inline std::vector<std::string> validate_config(const ScenarioConfig& cfg) {
    std::vector<std::string> problems;
    if (cfg.dims.M <= 0 || cfg.dims.L <= 0 || cfg.dims.T <= 0 || cfg.dims.K <= 0) {
        problems.emplace_back("dims: M, L, T, K must be positive");
    }
    if (cfg.n_values.empty()) problems.emplace_back("dims.N: at least one IRS size is required");
    for (int n : cfg.n_values) {
        if (n <= 0) problems.push_back("dims.N: IRS size must be positive (got " + std::to_string(n) + ")");
    }
    if (cfg.snr_grid_db.empty()) problems.emplace_back("snr_grid_db: grid is empty");
    for (double snr : cfg.snr_grid_db) {
        if (std::isnan(snr) || snr == -std::numeric_limits<double>::infinity()) {
            problems.emplace_back("snr_grid_db: values must be finite or +inf");
        }
    }
    if (cfg.trials < 1) problems.emplace_back("trials: must be >= 1");
    if (cfg.estimators.empty()) problems.emplace_back("estimators: at least one estimator is required");
    if (!(cfg.bals.tolerance > 0.0)) problems.emplace_back("bals.tolerance: must be positive");
    if (cfg.bals.max_iterations < 1) problems.emplace_back("bals.max_iterations: must be >= 1");
    if (cfg.bals.starts < 1) problems.emplace_back("bals.starts: must be >= 1");
    if (!problems.empty()) return problems;

    for (Method m : cfg.estimators) {
        for (int n : cfg.n_values) {
            const ScenarioDims d = cfg.dims_for(n);
            const auto report = check_identifiability(d, m);
            if (!report) {
                problems.push_back("cell (estimator=" + to_string(m) + ", N=" + std::to_string(n) +
                                   "): " + report.summary());
            }
            if (cfg.s_design == PhaseDesign::semi_unitary && d.K < d.N) {
                problems.push_back("cell (estimator=" + to_string(m) + ", N=" + std::to_string(n) +
                                   "): semi_unitary S design needs K >= N");
            }
        }
    }
    return problems;
}

/// ||truth - estimate||_F^2 / ||truth||_F^2
inline double relative_sq_error(const ComplexMatrix& estimate, const ComplexMatrix& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
        throw InvalidArgument("relative_sq_error: dimension mismatch");
    }
    return (truth - estimate).squaredNorm() / truth.squaredNorm();
}

/// Mean of relative squared Frobenius errors over estimate/truth pairs.
inline double nmse(std::span<const ComplexMatrix> estimates, std::span<const ComplexMatrix> truths) {
    if (estimates.empty() || estimates.size() != truths.size()) {
        throw InvalidArgument("nmse: need equally sized, non-empty lists (got " + std::to_string(estimates.size()) +
                              " and " + std::to_string(truths.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < estimates.size(); ++r) acc += relative_sq_error(estimates[r], truths[r]);
    return acc / static_cast<double>(estimates.size());
}

/// Everything an estimator sees in one trial, regenerated from its substream.
struct TrialInputs {
    ChannelPair channels;
    TrainingPair training;
    SignalTensor clean;
    SignalTensor noisy;
    std::uint64_t bals_init_seed = 0;
};

/// Draw order on the trial stream: H, G, noise, BALS init seed.
inline TrialInputs make_trial_inputs(const ScenarioConfig& cfg, int n, double snr_db, std::uint64_t trial_index) {
    const ScenarioDims dims = cfg.dims_for(n);
    Rng rng = trial_stream(cfg.seed, n, snr_db, trial_index);
    TrialInputs in;
    in.channels = gen_channels(dims, rng);
    in.training = make_training(dims, cfg.s_design);
    in.clean = synthesize_noiseless(in.channels, in.training);
    in.noisy = add_noise(in.clean, snr_db, rng).noisy;
    in.bals_init_seed = derive_seed({cfg.bals.init_seed, rng()});
    return in;
}

struct EstimatorOutcome {
    Method method = Method::lskrf;
    double err_H = 0.0;  ///< after resolve_scaling
    double err_G = 0.0;  ///< after resolve_scaling
    double err_Hc = 0.0; ///< no scaling applied
    int iterations = 0;
    double runtime_s = 0.0;
    bool converged = true;
    std::optional<std::string> error;

    friend bool operator==(const EstimatorOutcome&, const EstimatorOutcome&) = default;
};

struct TrialRecord {
    int N = 0;
    double snr_db = 0.0;
    std::uint64_t trial_index = 0;
    std::vector<EstimatorOutcome> outcomes; ///< in cfg.estimators order

    const EstimatorOutcome* find(Method m) const {
        for (const auto& o : outcomes)
            if (o.method == m) return &o;
        return nullptr;
    }
};

inline EstimatorOutcome evaluate_estimate(Method m, const ChannelEstimate& est, const ChannelPair& truth) {
    EstimatorOutcome out;
    out.method = m;
    const ChannelEstimate aligned = resolve_scaling(est, truth);
    out.err_H = relative_sq_error(aligned.H_hat, truth.H);
    out.err_G = relative_sq_error(aligned.G_hat, truth.G);
    out.err_Hc = relative_sq_error(est.H_cascaded, truth.G * truth.H);
    out.iterations = est.iterations;
    out.runtime_s = est.wall_time.count();
    out.converged = est.converged;
    return out;
}

/// Runs every configured estimator on the same noisy tensor. Estimator
/// failures are recorded in the outcome, not thrown.
inline TrialRecord run_trial(const ScenarioConfig& cfg, int n, double snr_db, std::uint64_t trial_index) {
    TrialRecord rec{n, snr_db, trial_index, {}};
    const TrialInputs in = make_trial_inputs(cfg, n, snr_db, trial_index);
    for (Method m : cfg.estimators) {
        try {
            ChannelEstimate est;
            if (m == Method::lskrf) {
                est = estimate_lskrf(in.noisy, in.training);
            } else {
                BalsSettings s = cfg.bals;
                s.init_seed = in.bals_init_seed;
                est = estimate_bals(in.noisy, in.training, s);
            }
            rec.outcomes.push_back(evaluate_estimate(m, est, in.channels));
        } catch (const std::exception& e) {
            EstimatorOutcome failed;
            failed.method = m;
            failed.converged = false;
            failed.error = e.what();
            rec.outcomes.push_back(std::move(failed));
        }
    }
    return rec;
}

struct SweepRow {
    Method estimator = Method::lskrf;
    int N = 0;
    double snr_db = 0.0;
    double nmse_H = 0.0;
    double nmse_G = 0.0;
    double nmse_Hc = 0.0;
    double mean_iterations = 0.0;
    double mean_runtime_s = 0.0; ///< 0 when timing is not recorded
    int trials = 0;

    // diagnostics, carried in the manifest only
    int failed_trials = 0;
    int nonconverged_trials = 0;
    double measured_runtime_s = 0.0;
    std::vector<std::string> error_samples;
};

struct SweepResult {
    std::vector<SweepRow> rows;

    const SweepRow* find(Method m, int n, double snr_db) const {
        for (const auto& r : rows)
            if (r.estimator == m && r.N == n && r.snr_db == snr_db) return &r;
        return nullptr;
    }

    int total_failed_trials() const {
        int acc = 0;
        for (const auto& r : rows) acc += r.failed_trials;
        return acc;
    }
};

struct RunOptions {
    unsigned workers = 1;
    /// Writes measured wall time into mean_runtime_s. Off keeps the result a
    /// pure function of the configuration.
    bool record_timing = true;
};

/// Median of the means of up to 10 contiguous groups of trials.
inline double median_of_means(std::span<const double> samples) {
    if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t groups = std::min<std::size_t>(10, samples.size());
    std::vector<double> means;
    means.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t lo = g * samples.size() / groups;
        const std::size_t hi = (g + 1) * samples.size() / groups;
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += samples[i];
        means.push_back(acc / static_cast<double>(hi - lo));
    }
    std::sort(means.begin(), means.end());
    const std::size_t mid = means.size() / 2;
    return means.size() % 2 == 1 ? means[mid] : 0.5 * (means[mid - 1] + means[mid]);
}

namespace detail {

inline SweepRow aggregate_cell(Method m, int n, double snr_db, std::span<const TrialRecord> records,
                               bool record_timing) {
    SweepRow row;
    row.estimator = m;
    row.N = n;
    row.snr_db = snr_db;
    row.trials = static_cast<int>(records.size());
    double sum_h = 0.0, sum_g = 0.0, sum_hc = 0.0, sum_it = 0.0;
    std::vector<double> runtimes;
    int ok = 0;
    for (const auto& rec : records) {
        const EstimatorOutcome* o = rec.find(m);
        if (o == nullptr) continue;
        if (o->error) {
            ++row.failed_trials;
            if (row.error_samples.size() < 3) {
                row.error_samples.push_back("trial " + std::to_string(rec.trial_index) + ": " + *o->error);
            }
            continue;
        }
        ++ok;
        if (!o->converged) ++row.nonconverged_trials;
        sum_h += o->err_H;
        sum_g += o->err_G;
        sum_hc += o->err_Hc;
        sum_it += o->iterations;
        runtimes.push_back(o->runtime_s);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.nmse_H = ok > 0 ? sum_h / ok : nan;
    row.nmse_G = ok > 0 ? sum_g / ok : nan;
    row.nmse_Hc = ok > 0 ? sum_hc / ok : nan;
    row.mean_iterations = ok > 0 ? sum_it / ok : nan;
    row.measured_runtime_s = median_of_means(runtimes);
    row.mean_runtime_s = record_timing ? row.measured_runtime_s : 0.0;
    return row;
}

} // namespace detail

/// Full cross product estimator x N x SNR with cfg.trials trials per cell.
/// Rows are ordered estimator-major, then N, then SNR, as configured.
inline SweepResult run_sweep(const ScenarioConfig& cfg, const RunOptions& opts = {}) {
    if (const auto problems = validate_config(cfg); !problems.empty()) {
        std::string msg = "run_sweep: invalid configuration";
        for (const auto& p : problems) msg += "\n  " + p;
        throw PreconditionError(msg);
    }
    const std::size_t n_snr = cfg.snr_grid_db.size();
    const auto trials = static_cast<std::size_t>(cfg.trials);
    const std::size_t total = cfg.n_values.size() * n_snr * trials;
    std::vector<TrialRecord> records(total);

    auto job = [&](std::size_t idx) {
        const std::size_t trial = idx % trials;
        const std::size_t cell = idx / trials;
        const int n = cfg.n_values[cell / n_snr];
        const double snr = cfg.snr_grid_db[cell % n_snr];
        try {
            records[idx] = run_trial(cfg, n, snr, trial);
        } catch (const std::exception& e) {
            TrialRecord rec{n, snr, trial, {}};
            for (Method m : cfg.estimators) {
                EstimatorOutcome o;
                o.method = m;
                o.error = std::string("trial setup: ") + e.what();
                rec.outcomes.push_back(std::move(o));
            }
            records[idx] = std::move(rec);
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(total)));
    if (workers == 1) {
        for (std::size_t i = 0; i < total; ++i) job(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) job(i);
            });
        }
    }

    SweepResult result;
    for (Method m : cfg.estimators) {
        for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
            for (std::size_t si = 0; si < n_snr; ++si) {
                const std::size_t first = (ni * n_snr + si) * trials;
                result.rows.push_back(detail::aggregate_cell(
                    m, cfg.n_values[ni], cfg.snr_grid_db[si],
                    std::span<const TrialRecord>(records).subspan(first, trials), opts.record_timing));
            }
        }
    }
    return result;
}

} // namespace irs_parafac
