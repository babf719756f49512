#include "wavetwin/bayes.hpp"

#include <algorithm>
#include <cmath>

#include "wavetwin/errors.hpp"

namespace wavetwin {

NoiseModel calibrate_noise(const SpaceTimeField& d_true, double noise_level) {
   if (noise_level < 0.0) { throw ConfigError("noise_level must be non-negative"); }
   const int n_d = d_true.n_space;
   const int n_t = d_true.n_time;

   std::vector<double> sigma(n_d, 0.0);
   for (int j = 0; j < n_d; ++j) {
      double peak = 0.0;
      for (int t = 0; t < n_t; ++t) { peak = std::max(peak, std::fabs(d_true.at(t, j))); }
      sigma[j] = noise_level * peak;
   }
   const double sigma_max = *std::max_element(sigma.begin(), sigma.end());

   NoiseModel noise;
   noise.noise_level = noise_level;
   if (sigma_max == 0.0) {
      std::fill(sigma.begin(), sigma.end(), 1e-15);
      noise.floored = true;
   } else {
      const double floor = 1e-12 * sigma_max;
      for (double& s : sigma) {
         if (s < floor) {
            s = floor;
            noise.floored = true;
         }
      }
   }

   noise.variances.resize(std::int64_t(n_d) * n_t);
   for (int t = 0; t < n_t; ++t) {
      for (int j = 0; j < n_d; ++j) { noise.variances[std::int64_t(t) * n_d + j] = sigma[j] * sigma[j]; }
   }
   return noise;
}

Eigen::VectorXd field_to_vector(const SpaceTimeField& f) {
   return Eigen::Map<const Eigen::VectorXd>(f.values.data(), f.size());
}

SpaceTimeField field_from_vector(const Eigen::VectorXd& v, int n_space, int n_time, double dt) {
   if (v.size() != std::int64_t(n_space) * n_time) {
      throw DimensionError("field_from_vector: size mismatch");
   }
   SpaceTimeField f(n_space, n_time, dt);
   Eigen::Map<Eigen::VectorXd>(f.values.data(), v.size()) = v;
   return f;
}

Eigen::MatrixXd assemble_data_cov(const BlockToeplitzMap& p2o,
                                  const BlockToeplitzMap& p2o_prior,
                                  const NoiseModel& noise, double data_dt) {
   const int n_d = p2o.rows_per_block();
   const int n_t = p2o.lag_count();
   const std::int64_t n = std::int64_t(n_d) * n_t;
   if (noise.variances.size() != n) {
      throw DimensionError("assemble_data_cov: noise diagonal size mismatch");
   }

   Eigen::MatrixXd cov(n, n);
#pragma omp parallel for schedule(dynamic)
   for (std::int64_t c = 0; c < n; ++c) {
      SpaceTimeField e(n_d, n_t, data_dt);
      e.values[std::size_t(c)] = 1.0;
      SpaceTimeField smoothed = p2o_prior.adjoint_matvec(e);
      SpaceTimeField col = p2o.matvec(smoothed);
      for (std::int64_t r = 0; r < n; ++r) { cov(r, c) = col.values[std::size_t(r)]; }
      cov(c, c) += noise.variances[c];
   }

   const double scale = cov.cwiseAbs().maxCoeff();
   const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
   if (scale > 0.0 && asym > 1e-10 * scale) {
      throw NumericError("assemble_data_cov: asymmetry beyond tolerance (adjoint inconsistency)");
   }
   cov = 0.5 * (cov + cov.transpose()).eval();
   return cov;
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& spd) {
   Eigen::LLT<Eigen::MatrixXd> llt(spd);
   if (llt.info() != Eigen::Success) {
      throw NumericError("cholesky_lower: matrix is not positive definite");
   }
   return llt.matrixL();
}

Eigen::VectorXd data_cov_solve(const Eigen::MatrixXd& chol, const Eigen::VectorXd& rhs) {
   Eigen::VectorXd y = chol.triangularView<Eigen::Lower>().solve(rhs);
   return chol.transpose().triangularView<Eigen::Upper>().solve(y);
}

SpaceTimeField posterior_identity_chain(const PosteriorArtifacts& art, const SpaceTimeField& v) {
   SpaceTimeField data = art.p2o.matvec(v);
   Eigen::VectorXd solved = data_cov_solve(art.data_cov_chol, field_to_vector(data));
   SpaceTimeField back = art.p2o_prior.adjoint_matvec(
      field_from_vector(solved, art.n_sensors(), art.n_steps(), v.dt));
   SpaceTimeField out = v;
   for (std::size_t i = 0; i < out.values.size(); ++i) { out.values[i] -= back.values[i]; }
   return out;
}

SpaceTimeField posterior_cov_matvec(const PosteriorArtifacts& art, const SpaceTimeField& v) {
   if (v.n_space != art.n_param() || v.n_time != art.n_steps()) {
      throw DimensionError("posterior_cov_matvec: field dims do not match artifacts");
   }
   SpaceTimeField smoothed = art.prior.cov_apply(v);
   return posterior_identity_chain(art, smoothed);
}

std::vector<double> posterior_pointwise_variance(
   const PosteriorArtifacts& art, const std::vector<std::pair<int, int>>& time_space_indices) {
   std::vector<double> out;
   out.reserve(time_space_indices.size());
   for (auto [t, s] : time_space_indices) {
      if (t < 0 || t >= art.n_steps() || s < 0 || s >= art.n_param()) {
         throw DimensionError("posterior_pointwise_variance: index out of range");
      }
      SpaceTimeField e(art.n_param(), art.n_steps(), art.data_dt());
      e.at(t, s) = 1.0;
      const double var = posterior_cov_matvec(art, e).at(t, s);
      const double prior_var = art.prior.pointwise_variance(s);
      if (var < -1e-10 * std::max(1.0, prior_var) || var > prior_var * (1.0 + 1e-8) + 1e-30) {
         throw NumericError("posterior_pointwise_variance: value outside [0, prior] bounds");
      }
      out.push_back(var);
   }
   return out;
}

Eigen::MatrixXd compute_qoi_posterior_cov(const PosteriorArtifacts& art) {
   const int n_q = art.n_qoi();
   const int n_tq = art.n_qoi_steps();
   const std::int64_t n = std::int64_t(n_q) * n_tq;
   const double qoi_dt = art.data_dt() * art.qoi_subsample;

   // Tolerances below are taken relative to the prior QoI covariance: the
   // posterior shrinks towards zero for near-noiseless data while the
   // roundoff of the chain stays on the prior's scale.
   Eigen::MatrixXd cov(n, n);
   Eigen::VectorXd prior_diag(n);
#pragma omp parallel for schedule(dynamic)
   for (std::int64_t c = 0; c < n; ++c) {
      SpaceTimeField e(n_q, n_tq, qoi_dt);
      e.values[std::size_t(c)] = 1.0;
      SpaceTimeField smoothed = art.p2q_prior.adjoint_matvec(e).split(art.qoi_subsample);
      prior_diag[c] =
         art.p2q.matvec(smoothed.regrouped(art.qoi_subsample)).values[std::size_t(c)];
      SpaceTimeField chained = posterior_identity_chain(art, smoothed);
      SpaceTimeField col = art.p2q.matvec(chained.regrouped(art.qoi_subsample));
      for (std::int64_t r = 0; r < n; ++r) { cov(r, c) = col.values[std::size_t(r)]; }
   }

   const double scale = std::max(cov.cwiseAbs().maxCoeff(), prior_diag.cwiseAbs().maxCoeff());
   const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
   if (scale > 0.0 && asym > 1e-8 * scale) {
      throw NumericError("qoi posterior covariance: asymmetry beyond tolerance");
   }
   cov = 0.5 * (cov + cov.transpose()).eval();

   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
   if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, scale)) {
      throw NumericError("qoi posterior covariance: not positive semidefinite");
   }
   return cov;
}

// For the data-to-estimate maps the textbook chain
// (I - G_adj K^-1 F) G_adj Gn^-1 is collapsed to the algebraically
// identical G_adj K^-1 (K - F G_adj is exactly the noise covariance);
// the collapsed form stays stable for arbitrarily small noise.

Eigen::MatrixXd build_d2q(const PosteriorArtifacts& art) {
   const std::int64_t n_data = std::int64_t(art.n_sensors()) * art.n_steps();
   const std::int64_t n_qoi = std::int64_t(art.n_qoi()) * art.n_qoi_steps();

   Eigen::MatrixXd d2q(n_qoi, n_data);
#pragma omp parallel for schedule(dynamic)
   for (std::int64_t c = 0; c < n_data; ++c) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n_data);
      e[c] = 1.0;
      Eigen::VectorXd solved = data_cov_solve(art.data_cov_chol, e);
      SpaceTimeField smoothed = art.p2o_prior.adjoint_matvec(
         field_from_vector(solved, art.n_sensors(), art.n_steps(), art.data_dt()));
      SpaceTimeField col = art.p2q.matvec(smoothed.regrouped(art.qoi_subsample));
      for (std::int64_t r = 0; r < n_qoi; ++r) { d2q(r, c) = col.values[std::size_t(r)]; }
   }
   return d2q;
}

Eigen::MatrixXd build_d2p(const PosteriorArtifacts& art, std::int64_t dense_cap) {
   const std::int64_t n_data = std::int64_t(art.n_sensors()) * art.n_steps();
   const std::int64_t n_param = std::int64_t(art.n_param()) * art.n_steps();
   if (n_data * n_param > dense_cap) {
      throw NumericError("build_d2p: dense data-to-parameter map exceeds entry cap");
   }

   Eigen::MatrixXd d2p(n_param, n_data);
#pragma omp parallel for schedule(dynamic)
   for (std::int64_t c = 0; c < n_data; ++c) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n_data);
      e[c] = 1.0;
      Eigen::VectorXd solved = data_cov_solve(art.data_cov_chol, e);
      SpaceTimeField smoothed = art.p2o_prior.adjoint_matvec(
         field_from_vector(solved, art.n_sensors(), art.n_steps(), art.data_dt()));
      for (std::int64_t r = 0; r < n_param; ++r) { d2p(r, c) = smoothed.values[std::size_t(r)]; }
   }
   return d2p;
}

std::pair<SpaceTimeField, SpaceTimeField> prior_mean_contributions(
   const PosteriorArtifacts& art, const SpaceTimeField& prior_mean) {
   if (prior_mean.n_space != art.n_param() || prior_mean.n_time != art.n_steps()) {
      throw DimensionError("prior_mean_contributions: prior mean dims mismatch");
   }
   SpaceTimeField m_contrib = posterior_identity_chain(art, prior_mean);
   SpaceTimeField q_contrib = art.p2q.matvec(m_contrib.regrouped(art.qoi_subsample));
   return {std::move(m_contrib), std::move(q_contrib)};
}

PosteriorArtifacts build_posterior_artifacts(Phase1Maps maps, EllipticPrior prior,
                                             SpaceTimeField prior_mean, NoiseModel noise,
                                             std::uint64_t config_hash, int qoi_subsample) {
   PosteriorArtifacts art{std::move(maps.p2o),       std::move(maps.p2q),
                          std::move(maps.p2o_prior), std::move(maps.p2q_prior),
                          std::move(prior),          std::move(prior_mean),
                          std::move(noise),          {}, {}, {}, {}, {},
                          config_hash,               qoi_subsample};
   art.p2o.precompute_fourier();
   art.p2q.precompute_fourier();
   art.p2o_prior.precompute_fourier();
   art.p2q_prior.precompute_fourier();

   Eigen::MatrixXd data_cov =
      assemble_data_cov(art.p2o, art.p2o_prior, art.noise, art.data_dt());
   art.data_cov_chol = cholesky_lower(data_cov);
   art.qoi_cov = compute_qoi_posterior_cov(art);
   art.d2q = build_d2q(art);
   auto [m_contrib, q_contrib] = prior_mean_contributions(art, art.prior_mean);
   art.param_prior_contrib = std::move(m_contrib);
   art.qoi_prior_contrib = std::move(q_contrib);
   return art;
}

}  // namespace wavetwin
