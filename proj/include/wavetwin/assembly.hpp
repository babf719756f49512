#pragma once

#include "wavetwin/block_toeplitz.hpp"
#include "wavetwin/prior.hpp"
#include "wavetwin/wave_model.hpp"

namespace wavetwin {

/// Phase 1: one transposed march per sensor fills the block column of the
/// parameter-to-observable map.  The impulse sits at the final data step
/// and lags are read backwards: block[k].row(j) = march_output[N_t-1-k].
/// Exactly n_sensors marches are taken (asserted via the march counter).
BlockToeplitzMap assemble_p2o(const WaveModel& model);

/// Same construction for the parameter-to-QoI map, stored at the QoI
/// temporal rate: each block has n_qoi rows and n_param*qoi_subsample
/// columns (the column blocks aggregate the data-rate parameter slices of
/// one QoI interval), so its matvec on a regrouped parameter field yields
/// the QoI trace directly.
BlockToeplitzMap assemble_p2q(const WaveModel& model);

/// Prior-smoothed companion of a map: blocks F_k * Gamma_prior (prior
/// applied spatially to each block row, batched over lags).  The adjoint
/// matvec of the result applies Gamma_prior * F^adj exactly.
/// `chunks` is the number of data-rate slices aggregated per block column
/// (1 for the p2o map, qoi_subsample for the p2q map).
BlockToeplitzMap build_prior_smoothed(const BlockToeplitzMap& map,
                                      const EllipticPrior& prior, int chunks = 1);

struct Phase1Maps {
   BlockToeplitzMap p2o;
   BlockToeplitzMap p2q;
   BlockToeplitzMap p2o_prior;  // F * Gamma_prior
   BlockToeplitzMap p2q_prior;  // F_q * Gamma_prior
};

Phase1Maps run_phase1(const WaveModel& model, const EllipticPrior& prior);

}  // namespace wavetwin
