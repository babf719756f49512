#pragma once

#include <map>
#include <string>

#include "wavetwin/bayes.hpp"
#include "wavetwin/synthetic_source.hpp"
#include "wavetwin/wave_model.hpp"

namespace wavetwin {

struct SynthData {
   SpaceTimeField m_true;
   SpaceTimeField d_true;
   SpaceTimeField d_obs;
   SpaceTimeField q_true;
   NoiseModel noise;
};

/// Simulates the configured source, calibrates per-sensor noise from the
/// clean traces and adds i.i.d. Gaussian noise per sample (skipped entirely
/// at noise_level 0, so the observed data equal the clean data bitwise).
/// Deterministic for a fixed seed.
SynthData synth_data(const WaveModel& model, const SyntheticSource& source,
                     double noise_level, std::uint64_t seed);

/// Online parameter estimate: noise-weighted data smoothed into parameter
/// space, reduced through the data-space solve, plus the precomputed
/// prior-mean contribution.  Performs no time marches and no prior
/// factorizations.
SpaceTimeField infer_map(const PosteriorArtifacts& art, const SpaceTimeField& d_obs);

/// Online QoI estimate straight from the data through the dense
/// data-to-QoI map (runnable with only that matrix loaded).
SpaceTimeField predict_qoi(const PosteriorArtifacts& art, const SpaceTimeField& d_obs);

/// QoI estimate by pushing a parameter estimate through the p2q map; agrees
/// with predict_qoi to solver precision.
SpaceTimeField predict_qoi_pushforward(const PosteriorArtifacts& art,
                                       const SpaceTimeField& m_map);

/// Central credible intervals q +- z*sqrt(diag cov).  Small negative
/// diagonal entries (>= -1e-10 relative) are clamped to zero; anything
/// lower is an error.
struct CredibleIntervals {
   SpaceTimeField lo;
   SpaceTimeField hi;
};
CredibleIntervals credible_intervals(const SpaceTimeField& q_map, const Eigen::MatrixXd& qoi_cov,
                                     double level = 0.95);

/// L2 relative errors of the estimates; the reconstruction error compares
/// the data traces implied by the two parameter fields.  The displacement
/// error is the same metric on the time-integrated parameter fields.
struct RelativeErrors {
   double param_err = 0.0;
   double qoi_err = 0.0;
   double reconstruction_err = 0.0;
   double displacement_err = 0.0;
};
RelativeErrors relative_errors(const PosteriorArtifacts& art, const SpaceTimeField& m_true,
                               const SpaceTimeField& q_true, const SpaceTimeField& m_map,
                               const SpaceTimeField& q_map);

/// Relative norm of the regularized normal-equations residual at m_map; a
/// first-order optimality diagnostic.
double optimality_residual(const PosteriorArtifacts& art, const SpaceTimeField& m_map,
                           const SpaceTimeField& d_obs);

struct InferenceResult {
   SpaceTimeField m_map;
   SpaceTimeField q_map;
   SpaceTimeField credible_lo;
   SpaceTimeField credible_hi;
   std::map<std::string, double> timings_s;
   double optimality = -1.0;  // filled when diagnostics are requested
};

/// Full online phase: parameter estimate, QoI prediction, credible
/// intervals, per-stage wall-clock timings.
InferenceResult run_inference(const PosteriorArtifacts& art, const SpaceTimeField& d_obs,
                              double level = 0.95, bool diagnostics = false);

/// The QoI-only online subset (what a laptop needs): dense map, prior
/// contribution, covariance diagonal.
struct QoiPredictor {
   Eigen::MatrixXd d2q;
   SpaceTimeField qoi_prior_contrib;
   Eigen::MatrixXd qoi_cov;

   SpaceTimeField predict(const SpaceTimeField& d_obs) const;
};

}  // namespace wavetwin
