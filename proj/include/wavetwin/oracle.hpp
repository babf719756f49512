#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wavetwin/bayes.hpp"
#include "wavetwin/config.hpp"
#include "wavetwin/wave_model.hpp"

namespace wavetwin {

/// Dense brute-force reference routes.  Everything here goes through
/// explicit dense assembly or time marches and stays independent of the
/// FFT/data-space fast paths it is used to check.

/// Forward-assembled dense p2o map: one simulate per unit parameter
/// impulse (column by column).
Eigen::MatrixXd dense_forward_p2o(const WaveModel& model);
Eigen::MatrixXd dense_forward_p2q(const WaveModel& model);

/// Dense prior covariance of one spatial slice: (M^2)^-1.
Eigen::MatrixXd dense_prior_cov(const EllipticPrior& prior);
/// Dense prior precision of one spatial slice: M^2.
Eigen::MatrixXd dense_prior_precision(const EllipticPrior& prior);

/// Dense regularized normal-equations matrix over all time steps:
/// F^T Gn^-1 F + blockdiag(M^2).
Eigen::MatrixXd dense_hessian(const Eigen::MatrixXd& f_dense, const NoiseModel& noise,
                              const EllipticPrior& prior, int n_time);

/// Dense solve of the normal equations for the parameter estimate.
Eigen::VectorXd dense_map_estimate(const Eigen::MatrixXd& f_dense, const NoiseModel& noise,
                                   const EllipticPrior& prior, int n_time,
                                   const Eigen::VectorXd& d_obs, const Eigen::VectorXd& m_prior);

/// Randomized small configuration for oracle runs; index varies dims,
/// locations, prior strength and noise level deterministically.
RunConfig make_tiny_config(std::uint64_t seed, int index);

struct OracleCheck {
   std::string name;
   double observed = 0.0;
   double tolerance = 0.0;
   bool pass = false;
};

struct OracleReport {
   std::vector<OracleCheck> checks;
   bool all_pass() const {
      for (const auto& c : checks) {
         if (!c.pass) { return false; }
      }
      return true;
   }
};

/// Runs the dense-oracle equivalence suite on a tiny configuration:
/// FFT matvecs vs dense products, adjoint- vs forward-assembled maps,
/// data-space posterior actions and estimates vs dense normal-equation
/// solves, QoI covariance and prediction-path identities.
OracleReport run_oracle_suite(const RunConfig& config, std::uint64_t seed);

}  // namespace wavetwin
