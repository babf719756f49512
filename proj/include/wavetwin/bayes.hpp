#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wavetwin/assembly.hpp"
#include "wavetwin/block_toeplitz.hpp"
#include "wavetwin/prior.hpp"

namespace wavetwin {

/// Diagonal observation-noise covariance.  Entries are indexed time-major
/// (t * n_sensors + j), matching the data field layout.
struct NoiseModel {
   Eigen::VectorXd variances;
   double noise_level = 0.0;
   bool floored = false;  // true when the variance floor kicked in
};

/// Per-sensor noise std is noise_level times the max absolute value of the
/// sensor's trace, floored at 1e-12 of the largest sensor std (1e-15
/// absolute if every trace is zero) so dead sensors keep the noise
/// covariance invertible.
NoiseModel calibrate_noise(const SpaceTimeField& d_true, double noise_level);

/// Everything the offline phases precompute.  The maps are immutable and
/// all online operations are read-only, so shared concurrent use is safe.
struct PosteriorArtifacts {
   BlockToeplitzMap p2o;        // parameter -> sensor data
   BlockToeplitzMap p2q;        // parameter (grouped) -> QoI
   BlockToeplitzMap p2o_prior;  // p2o * Gamma_prior; adjoint smooths data into parameter space
   BlockToeplitzMap p2q_prior;  // p2q * Gamma_prior
   EllipticPrior prior;
   SpaceTimeField prior_mean;   // parameter-space prior mean (data rate)
   NoiseModel noise;

   Eigen::MatrixXd data_cov_chol;  // lower Cholesky factor of the data-space matrix
   Eigen::MatrixXd qoi_cov;        // posterior QoI covariance
   Eigen::MatrixXd d2q;            // dense data-to-QoI map
   SpaceTimeField param_prior_contrib;  // prior-mean contribution to the parameter estimate
   SpaceTimeField qoi_prior_contrib;    // its QoI push-forward

   std::uint64_t config_hash = 0;
   int qoi_subsample = 1;

   int n_sensors() const { return p2o.rows_per_block(); }
   int n_param() const { return p2o.cols_per_block(); }
   int n_steps() const { return p2o.lag_count(); }
   int n_qoi() const { return p2q.rows_per_block(); }
   int n_qoi_steps() const { return p2q.lag_count(); }
   double data_dt() const { return prior_mean.dt; }
};

/// Data-space matrix: noise covariance plus the prior-propagated data
/// covariance, assembled column-by-column with a fast matvec pair per
/// column and symmetrized (asymmetry beyond 1e-10 relative signals broken
/// adjoint consistency and is an error).
Eigen::MatrixXd assemble_data_cov(const BlockToeplitzMap& p2o,
                                  const BlockToeplitzMap& p2o_prior,
                                  const NoiseModel& noise, double data_dt);

/// Lower Cholesky factor; throws NumericError when the input is not PD.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& spd);

/// Two triangular solves with the cached factor.
Eigen::VectorXd data_cov_solve(const Eigen::MatrixXd& chol, const Eigen::VectorXd& rhs);

/// v - G_adj K^-1 F v on a parameter-space field (the data-space reduction
/// applied around the identity).
SpaceTimeField posterior_identity_chain(const PosteriorArtifacts& art,
                                        const SpaceTimeField& v);

/// Posterior covariance action: prior apply, forward map, data-space
/// solves, smoothed adjoint, subtraction -- in that order.  No time
/// marches are involved.
SpaceTimeField posterior_cov_matvec(const PosteriorArtifacts& art, const SpaceTimeField& v);

/// diag entries of the posterior covariance at the given (time, space)
/// parameter indices.
std::vector<double> posterior_pointwise_variance(
   const PosteriorArtifacts& art, const std::vector<std::pair<int, int>>& time_space_indices);

/// Posterior QoI covariance via the fast operator chain, symmetrized
/// (tolerance 1e-8) and PSD-checked.
Eigen::MatrixXd compute_qoi_posterior_cov(const PosteriorArtifacts& art);

/// Dense data-to-QoI map: applying it to observed data gives the QoI
/// estimate directly (plus the precomputed prior contribution).
Eigen::MatrixXd build_d2q(const PosteriorArtifacts& art);

/// Dense data-to-parameter map, exposed behind the entry cap; not used by
/// the online path.
Eigen::MatrixXd build_d2p(const PosteriorArtifacts& art,
                          std::int64_t dense_cap = BlockToeplitzMap::kDefaultDenseCap);

/// Prior-mean contributions to the parameter estimate and its QoI
/// push-forward, computed once offline.
std::pair<SpaceTimeField, SpaceTimeField> prior_mean_contributions(
   const PosteriorArtifacts& art, const SpaceTimeField& prior_mean);

/// Runs phases 2 and 3 on top of assembled maps.
PosteriorArtifacts build_posterior_artifacts(Phase1Maps maps, EllipticPrior prior,
                                             SpaceTimeField prior_mean, NoiseModel noise,
                                             std::uint64_t config_hash, int qoi_subsample);

// field <-> flat vector helpers (time-major on both sides)
Eigen::VectorXd field_to_vector(const SpaceTimeField& f);
SpaceTimeField field_from_vector(const Eigen::VectorXd& v, int n_space, int n_time, double dt);

}  // namespace wavetwin
