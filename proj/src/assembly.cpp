#include "wavetwin/assembly.hpp"

#include <vector>

#include "wavetwin/errors.hpp"

namespace wavetwin {

BlockToeplitzMap assemble_p2o(const WaveModel& model) {
   const int n_d = model.n_sensors();
   const int n_m = model.n_param();
   const int n_t = model.n_data_steps();

   const long long marches_before = model.marches();
   std::vector<double> blocks(std::size_t(n_t) * n_d * n_m, 0.0);

#pragma omp parallel for schedule(dynamic)
   for (int j = 0; j < n_d; ++j) {
      SpaceTimeField impulse(n_d, n_t, model.observation().data_dt);
      impulse.at(n_t - 1, j) = 1.0;
      SpaceTimeField m_tilde = model.simulate_p2o_transpose(impulse);
      for (int k = 0; k < n_t; ++k) {
         const double* src = m_tilde.slice(n_t - 1 - k);
         double* row = blocks.data() + (std::size_t(k) * n_d + j) * n_m;
         for (int s = 0; s < n_m; ++s) { row[s] = src[s]; }
      }
   }

   if (model.marches() - marches_before != n_d) {
      throw NumericError("assemble_p2o: unexpected march count");
   }
   return BlockToeplitzMap(n_d, n_m, n_t, std::move(blocks));
}

BlockToeplitzMap assemble_p2q(const WaveModel& model) {
   const int n_q = model.n_qoi();
   const int n_m = model.n_param();
   const int sub = model.observation().qoi_subsample;
   const int n_tq = model.n_qoi_steps();
   const int cols = n_m * sub;

   const long long marches_before = model.marches();
   std::vector<double> blocks(std::size_t(n_tq) * n_q * cols, 0.0);

#pragma omp parallel for schedule(dynamic)
   for (int j = 0; j < n_q; ++j) {
      SpaceTimeField impulse(n_q, n_tq, model.observation().data_dt * sub);
      impulse.at(n_tq - 1, j) = 1.0;
      SpaceTimeField grouped = model.simulate_p2q_transpose(impulse).regrouped(sub);
      for (int k = 0; k < n_tq; ++k) {
         const double* src = grouped.slice(n_tq - 1 - k);
         double* row = blocks.data() + (std::size_t(k) * n_q + j) * cols;
         for (int s = 0; s < cols; ++s) { row[s] = src[s]; }
      }
   }

   if (model.marches() - marches_before != n_q) {
      throw NumericError("assemble_p2q: unexpected march count");
   }
   return BlockToeplitzMap(n_q, cols, n_tq, std::move(blocks));
}

BlockToeplitzMap build_prior_smoothed(const BlockToeplitzMap& map,
                                      const EllipticPrior& prior, int chunks) {
   const int rows = map.rows_per_block();
   const int cols = map.cols_per_block();
   const int lags = map.lag_count();
   if (chunks < 1 || cols % chunks != 0 || cols / chunks != prior.n_nodes()) {
      throw DimensionError("build_prior_smoothed: block width does not match prior grid");
   }
   const int n_m = cols / chunks;

   // All block rows (split per data-rate chunk) become columns of one
   // multi-RHS covariance solve.
   const std::int64_t n_rhs = std::int64_t(lags) * rows * chunks;
   Eigen::MatrixXd rhs(n_m, n_rhs);
   std::int64_t col_idx = 0;
   for (int k = 0; k < lags; ++k) {
      for (int r = 0; r < rows; ++r) {
         for (int c = 0; c < chunks; ++c) {
            for (int s = 0; s < n_m; ++s) {
               rhs(s, col_idx) = map.block_entry(k, r, c * n_m + s);
            }
            ++col_idx;
         }
      }
   }

   Eigen::MatrixXd smoothed = prior.cov_apply(rhs);

   std::vector<double> blocks(std::size_t(lags) * rows * cols, 0.0);
   col_idx = 0;
   for (int k = 0; k < lags; ++k) {
      for (int r = 0; r < rows; ++r) {
         for (int c = 0; c < chunks; ++c) {
            double* dst = blocks.data() + (std::size_t(k) * rows + r) * cols + c * n_m;
            for (int s = 0; s < n_m; ++s) { dst[s] = smoothed(s, col_idx); }
            ++col_idx;
         }
      }
   }
   return BlockToeplitzMap(rows, cols, lags, std::move(blocks));
}

Phase1Maps run_phase1(const WaveModel& model, const EllipticPrior& prior) {
   BlockToeplitzMap p2o = assemble_p2o(model);
   BlockToeplitzMap p2q = assemble_p2q(model);
   BlockToeplitzMap p2o_prior = build_prior_smoothed(p2o, prior, 1);
   BlockToeplitzMap p2q_prior =
      build_prior_smoothed(p2q, prior, model.observation().qoi_subsample);
   p2o.precompute_fourier();
   p2q.precompute_fourier();
   p2o_prior.precompute_fourier();
   p2q_prior.precompute_fourier();
   return Phase1Maps{std::move(p2o), std::move(p2q), std::move(p2o_prior), std::move(p2q_prior)};
}

}  // namespace wavetwin
