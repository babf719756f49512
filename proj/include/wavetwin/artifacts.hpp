#pragma once

#include <string>

#include "wavetwin/assembly.hpp"
#include "wavetwin/bayes.hpp"
#include "wavetwin/config.hpp"
#include "wavetwin/pipeline.hpp"

namespace wavetwin {

/// Artifact directory layout:
///   metadata.json            config hash, dims, phase flags
///   p2o.btop p2q.btop p2o_prior.btop p2q_prior.btop      (phase 1)
///   data_cov_chol.bin qoi_cov.bin d2q.bin noise_var.bin
///   param_prior_contrib.bin qoi_prior_contrib.bin        (phases 2-3)
/// Loaders reject a directory whose config hash does not match the live
/// configuration.

void save_phase1(const std::string& dir, const Phase1Maps& maps, const RunConfig& config);
Phase1Maps load_phase1(const std::string& dir, const RunConfig& config);

void save_posterior(const std::string& dir, const PosteriorArtifacts& art,
                    const RunConfig& config);
PosteriorArtifacts load_posterior(const std::string& dir, const RunConfig& config);

QoiPredictor load_qoi_predictor(const std::string& dir, const RunConfig& config);

bool phase1_present(const std::string& dir);
bool phase2_present(const std::string& dir);

}  // namespace wavetwin
