// SPDX-License-Identifier: Apache-2.0
//
// One channel realization, both estimators, at a single SNR.
#include <cstdlib>
#include <iostream>

#include "irs_parafac/irs_parafac.hpp"

int main(int argc, char** argv) {
    using namespace irs_parafac;

    const double snr_db = argc > 1 ? std::atof(argv[1]) : 20.0;
    const ScenarioDims dims{3, 2, 10, 4, 50};

    Rng rng(2024);
    const ChannelPair truth = gen_channels(dims, rng);
    const TrainingPair training = make_training(dims);
    const SignalTensor clean = synthesize_noiseless(truth, training);
    const SignalTensor noisy = add_noise(clean, snr_db, rng).noisy;

    const ComplexMatrix cascade = truth.G * truth.H;
    const ChannelEstimate closed_form = estimate_lskrf(noisy, training);
    const ChannelEstimate iterative = estimate_bals(noisy, training, BalsSettings{});

    for (const auto& [name, est] : {std::pair{"LSKRF", &closed_form}, std::pair{"BALS", &iterative}}) {
        const ChannelEstimate aligned = resolve_scaling(*est, truth);
        std::cout << name << ": NMSE(H)=" << relative_sq_error(aligned.H_hat, truth.H)
                  << " NMSE(G)=" << relative_sq_error(aligned.G_hat, truth.G)
                  << " NMSE(Hc)=" << relative_sq_error(est->H_cascaded, cascade) << " iterations=" << est->iterations
                  << " time=" << est->wall_time.count() * 1e6 << "us\n";
    }
    return 0;
}
