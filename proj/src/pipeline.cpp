#include "wavetwin/pipeline.hpp"

#include <cmath>
#include <random>

#include "wavetwin/errors.hpp"
#include "wavetwin/util.hpp"

namespace wavetwin {

SynthData synth_data(const WaveModel& model, const SyntheticSource& source,
                     double noise_level, std::uint64_t seed) {
   SynthData out;
   out.m_true = synth_source_eval(source, model.grid(), model.n_data_steps(),
                                  model.observation().data_dt);
   out.d_true = model.simulate_p2o(out.m_true);
   out.q_true = model.simulate_p2q(out.m_true);
   out.noise = calibrate_noise(out.d_true, noise_level);

   out.d_obs = out.d_true;
   if (noise_level > 0.0) {
      std::mt19937_64 rng(sub_seed(seed, "obs-noise"));
      std::normal_distribution<double> normal(0.0, 1.0);
      const int n_d = out.d_true.n_space;
      for (int t = 0; t < out.d_true.n_time; ++t) {
         for (int j = 0; j < n_d; ++j) {
            const double sigma = std::sqrt(out.noise.variances[std::int64_t(t) * n_d + j]);
            out.d_obs.at(t, j) += sigma * normal(rng);
         }
      }
   }
   return out;
}

SpaceTimeField infer_map(const PosteriorArtifacts& art, const SpaceTimeField& d_obs) {
   if (d_obs.n_space != art.n_sensors() || d_obs.n_time != art.n_steps()) {
      throw DimensionError("infer_map: observed data dims do not match artifacts");
   }
   // Since K - F G_adj equals the noise covariance, the textbook chain
   // (I - G_adj K^-1 F) G_adj Gn^-1 collapses to G_adj K^-1 exactly.  The
   // collapsed form is used here: it avoids the noise-weighted intermediate
   // whose cancellation grows unbounded as the noise level shrinks.
   Eigen::VectorXd solved = data_cov_solve(art.data_cov_chol, field_to_vector(d_obs));
   SpaceTimeField m_map = art.p2o_prior.adjoint_matvec(
      field_from_vector(solved, art.n_sensors(), art.n_steps(), d_obs.dt));
   for (std::size_t i = 0; i < m_map.values.size(); ++i) {
      m_map.values[i] += art.param_prior_contrib.values[i];
   }
   return m_map;
}

SpaceTimeField predict_qoi(const PosteriorArtifacts& art, const SpaceTimeField& d_obs) {
   if (d_obs.n_space != art.n_sensors() || d_obs.n_time != art.n_steps()) {
      throw DimensionError("predict_qoi: observed data dims do not match artifacts");
   }
   Eigen::VectorXd q = art.d2q * field_to_vector(d_obs);
   SpaceTimeField q_map = field_from_vector(q, art.n_qoi(), art.n_qoi_steps(),
                                            art.data_dt() * art.qoi_subsample);
   for (std::size_t i = 0; i < q_map.values.size(); ++i) {
      q_map.values[i] += art.qoi_prior_contrib.values[i];
   }
   return q_map;
}

SpaceTimeField predict_qoi_pushforward(const PosteriorArtifacts& art,
                                       const SpaceTimeField& m_map) {
   return art.p2q.matvec(m_map.regrouped(art.qoi_subsample));
}

SpaceTimeField QoiPredictor::predict(const SpaceTimeField& d_obs) const {
   Eigen::VectorXd q = d2q * Eigen::Map<const Eigen::VectorXd>(d_obs.values.data(), d_obs.size());
   SpaceTimeField q_map = qoi_prior_contrib;
   for (std::size_t i = 0; i < q_map.values.size(); ++i) { q_map.values[i] += q[Eigen::Index(i)]; }
   return q_map;
}

CredibleIntervals credible_intervals(const SpaceTimeField& q_map, const Eigen::MatrixXd& qoi_cov,
                                     double level) {
   if (qoi_cov.rows() != qoi_cov.cols() || qoi_cov.rows() != q_map.size()) {
      throw DimensionError("credible_intervals: covariance dims do not match estimate");
   }
   const double z = (level == 0.95) ? kNormalQuantile975 : normal_quantile(0.5 + level / 2.0);

   const double scale = std::max(1.0, qoi_cov.cwiseAbs().maxCoeff());
   CredibleIntervals out{q_map, q_map};
   for (std::int64_t i = 0; i < q_map.size(); ++i) {
      double var = qoi_cov(i, i);
      if (var < -1e-10 * scale) {
         throw NumericError("credible_intervals: negative variance beyond tolerance");
      }
      var = std::max(var, 0.0);
      const double half = z * std::sqrt(var);
      out.lo.values[std::size_t(i)] -= half;
      out.hi.values[std::size_t(i)] += half;
   }
   return out;
}

namespace {

double rel_l2(const SpaceTimeField& truth, const SpaceTimeField& est) {
   const double denom = norm2(truth);
   if (denom == 0.0) { throw NumericError("relative error: zero-norm truth"); }
   double acc = 0.0;
   for (std::size_t i = 0; i < truth.values.size(); ++i) {
      const double d = est.values[i] - truth.values[i];
      acc += d * d;
   }
   return std::sqrt(acc) / denom;
}

SpaceTimeField time_integral(const SpaceTimeField& m) {
   // cumulative displacement: sum of rate slices times dt (final slice)
   SpaceTimeField out(m.n_space, 1, m.dt);
   for (int t = 0; t < m.n_time; ++t) {
      for (int s = 0; s < m.n_space; ++s) { out.at(0, s) += m.at(t, s) * m.dt; }
   }
   return out;
}

}  // namespace

RelativeErrors relative_errors(const PosteriorArtifacts& art, const SpaceTimeField& m_true,
                               const SpaceTimeField& q_true, const SpaceTimeField& m_map,
                               const SpaceTimeField& q_map) {
   RelativeErrors errs;
   errs.param_err = rel_l2(m_true, m_map);
   errs.qoi_err = rel_l2(q_true, q_map);
   SpaceTimeField d_rec_true = art.p2o.matvec(m_true);
   SpaceTimeField d_rec_map = art.p2o.matvec(m_map);
   errs.reconstruction_err = rel_l2(d_rec_true, d_rec_map);
   errs.displacement_err = rel_l2(time_integral(m_true), time_integral(m_map));
   return errs;
}

double optimality_residual(const PosteriorArtifacts& art, const SpaceTimeField& m_map,
                           const SpaceTimeField& d_obs) {
   // residual of the normal equations:
   //   F^T Gn^-1 (F m - d) + Gp^-1 (m - m_prior), relative to the rhs norm
   SpaceTimeField misfit = art.p2o.matvec(m_map);
   for (std::int64_t i = 0; i < misfit.size(); ++i) {
      misfit.values[std::size_t(i)] =
         (misfit.values[std::size_t(i)] - d_obs.values[std::size_t(i)]) / art.noise.variances[i];
   }
   SpaceTimeField grad = art.p2o.adjoint_matvec(misfit);

   SpaceTimeField centered = m_map;
   for (std::size_t i = 0; i < centered.values.size(); ++i) {
      centered.values[i] -= art.prior_mean.values[i];
   }
   SpaceTimeField reg = art.prior.precision_apply(centered);
   for (std::size_t i = 0; i < grad.values.size(); ++i) { grad.values[i] += reg.values[i]; }

   SpaceTimeField weighted = d_obs;
   for (std::int64_t i = 0; i < weighted.size(); ++i) {
      weighted.values[std::size_t(i)] /= art.noise.variances[i];
   }
   SpaceTimeField rhs = art.p2o.adjoint_matvec(weighted);
   SpaceTimeField rhs_prior = art.prior.precision_apply(art.prior_mean);
   for (std::size_t i = 0; i < rhs.values.size(); ++i) { rhs.values[i] += rhs_prior.values[i]; }

   const double rhs_norm = norm2(rhs);
   return rhs_norm > 0.0 ? norm2(grad) / rhs_norm : norm2(grad);
}

InferenceResult run_inference(const PosteriorArtifacts& art, const SpaceTimeField& d_obs,
                              double level, bool diagnostics) {
   InferenceResult res;
   WallTimer total;

   WallTimer t_infer;
   res.m_map = infer_map(art, d_obs);
   res.timings_s["infer_map"] = t_infer.seconds();

   WallTimer t_predict;
   res.q_map = predict_qoi(art, d_obs);
   res.timings_s["predict_qoi"] = t_predict.seconds();

   WallTimer t_ci;
   CredibleIntervals ci = credible_intervals(res.q_map, art.qoi_cov, level);
   res.credible_lo = std::move(ci.lo);
   res.credible_hi = std::move(ci.hi);
   res.timings_s["credible_intervals"] = t_ci.seconds();

   res.timings_s["online_total"] = total.seconds();

   if (diagnostics) { res.optimality = optimality_residual(art, res.m_map, d_obs); }
   return res;
}

}  // namespace wavetwin
