#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/test_helpers.hpp"
#include "wavetwin/artifacts.hpp"
#include "wavetwin/oracle.hpp"
#include "wavetwin/pipeline.hpp"
#include "wavetwin/util.hpp"

using namespace wavetwin;
using namespace wavetwin::testing;

namespace {

struct Setup {
   RunConfig config;
   WaveModel model;
   EllipticPrior prior;
   PosteriorArtifacts art;
   SynthData data;
};

Setup make_setup(int index) {
   RunConfig c = make_tiny_config(55, index);
   WaveModel model = c.build_model();
   EllipticPrior prior = c.build_prior();
   Phase1Maps maps = run_phase1(model, prior);
   SynthData data = synth_data(model, c.source, c.noise_level, c.seed);
   PosteriorArtifacts art =
      build_posterior_artifacts(std::move(maps), prior, c.prior_mean_field(), data.noise,
                                config_hash(c), c.obs.qoi_subsample);
   return Setup{std::move(c), std::move(model), std::move(prior), std::move(art),
                std::move(data)};
}

}  // namespace

TEST_CASE("synthetic source evaluation") {
   SUBCASE("reference value at the bump center and half rise time") {
      GaussianBump b;
      b.amplitude = 4.0;
      b.rise_time = 20.0;
      b.rise_width_x = 16000.0;
      b.rise_width_y = 32000.0;
      b.center_x = 64000.0;
      b.center_y = 64000.0;
      CHECK(b.eval(64000.0, 64000.0, 10.0, 2) == doctest::Approx(M_PI / 10.0).epsilon(1e-14));
   }
   SUBCASE("the temporal factor vanishes after the rise time") {
      GaussianBump b;
      b.rise_time = 10.0;
      CHECK(b.temporal_factor(10.0 + 1e-9) == 0.0);
      CHECK(b.eval(0.0, 0.0, 11.0, 1) == 0.0);
   }
   SUBCASE("the temporal factor integrates to one at the data rate") {
      GaussianBump b;
      b.rise_time = 20.0;
      const double dt = 0.5;
      double integral = 0.0;
      const int n = int(b.rise_time / dt);
      for (int i = 0; i <= n; ++i) {
         const double w = (i == 0 || i == n) ? 0.5 : 1.0;
         integral += w * b.temporal_factor(i * dt) * dt;
      }
      CHECK(std::abs(integral - 1.0) <= 1e-3);
   }
   SUBCASE("grid evaluation samples the data-step start times") {
      GridSpec grid;
      grid.nx = 5;
      grid.nz = 3;
      grid.dx = 1000.0;
      grid.dz = 100.0;
      SyntheticSource src;
      GaussianBump b;
      b.amplitude = 2.0;
      b.rise_time = 8.0;
      b.rise_width_x = 2000.0;
      b.center_x = 2500.0;
      src.bumps = {b};
      SpaceTimeField m = synth_source_eval(src, grid, 4, 1.0);
      CHECK(m.at(0, 2) == 0.0);  // sin(0)
      CHECK(m.at(2, 2) ==
            doctest::Approx(b.eval(grid.column_x(2), 0.0, 2.0, 1)).epsilon(1e-14));
   }
   SUBCASE("bump outside the domain is rejected") {
      GridSpec grid;
      grid.nx = 5;
      grid.nz = 3;
      SyntheticSource src;
      GaussianBump b;
      b.center_x = -10.0;
      src.bumps = {b};
      CHECK_THROWS_AS(src.validate(grid), ConfigError);
   }
}

TEST_CASE("synthetic data generation") {
   SUBCASE("zero noise level returns the clean traces bitwise") {
      Setup s = make_setup(0);
      SynthData clean = synth_data(s.model, s.config.source, 0.0, s.config.seed);
      CHECK(clean.d_obs.values == clean.d_true.values);
   }
   SUBCASE("fixed seed is bitwise reproducible, different seed is not") {
      Setup s = make_setup(0);
      SynthData a = synth_data(s.model, s.config.source, 0.05, 99);
      SynthData b = synth_data(s.model, s.config.source, 0.05, 99);
      SynthData c = synth_data(s.model, s.config.source, 0.05, 100);
      CHECK(a.d_obs.values == b.d_obs.values);
      CHECK(a.d_obs.values != c.d_obs.values);
   }
   SUBCASE("empirical noise std matches the calibrated sigma") {
      Setup s = make_setup(1);
      const double level = 0.05;
      SynthData ref = synth_data(s.model, s.config.source, level, 1);
      const int n_redraw = 10000;
      const int n_d = s.model.n_sensors();
      const int n_t = s.config.obs.n_steps;
      std::vector<double> sq(n_d, 0.0);
      // redraw only the noise: same clean traces, fresh seeds
      for (int r = 0; r < n_redraw; ++r) {
         std::mt19937_64 rng(sub_seed(12345, "obs-noise", r));
         std::normal_distribution<double> normal;
         for (int t = 0; t < n_t; ++t) {
            for (int j = 0; j < n_d; ++j) {
               const double draw =
                  std::sqrt(ref.noise.variances[std::int64_t(t) * n_d + j]) * normal(rng);
               sq[j] += draw * draw;
            }
         }
      }
      for (int j = 0; j < n_d; ++j) {
         const double emp = std::sqrt(sq[j] / (double(n_redraw) * n_t));
         const double want = std::sqrt(ref.noise.variances[j]);
         CHECK(emp == doctest::Approx(want).epsilon(0.03));
      }
   }
   SUBCASE("the relative data perturbation lands in the predicted band") {
      Setup s = make_setup(2);
      const double level = 0.06;
      // expected squared perturbation: sum of per-sample variances
      SynthData ref = synth_data(s.model, s.config.source, level, 5);
      const double expect_sq = ref.noise.variances.sum();
      double mean_ratio = 0.0;
      const int n_rep = 50;
      for (int r = 0; r < n_rep; ++r) {
         SynthData sd = synth_data(s.model, s.config.source, level, 1000 + r);
         double diff_sq = 0.0;
         for (std::size_t i = 0; i < sd.d_obs.values.size(); ++i) {
            const double d = sd.d_obs.values[i] - sd.d_true.values[i];
            diff_sq += d * d;
         }
         mean_ratio += diff_sq / expect_sq;
      }
      mean_ratio /= n_rep;
      // chi^2 concentration: the averaged ratio sits tightly around 1
      CHECK(mean_ratio == doctest::Approx(1.0).epsilon(0.1));
   }
}

TEST_CASE("online inference") {
   SUBCASE("zero data and zero prior mean give a zero estimate") {
      Setup s = make_setup(0);  // even index: zero prior mean
      SpaceTimeField zero(s.model.n_sensors(), s.config.obs.n_steps, s.config.obs.data_dt);
      SpaceTimeField m_map = infer_map(s.art, zero);
      CHECK(norm2(m_map) == 0.0);
      SpaceTimeField q_map = predict_qoi(s.art, zero);
      CHECK(norm2(q_map) == 0.0);
   }
   SUBCASE("matches the dense normal-equations solve") {
      Setup s = make_setup(3);  // odd index: nonzero prior mean
      Eigen::MatrixXd f = s.art.p2o.to_dense();
      Eigen::VectorXd want =
         dense_map_estimate(f, s.art.noise, s.prior, s.config.obs.n_steps,
                            to_vec(s.data.d_obs), to_vec(s.art.prior_mean));
      SpaceTimeField m_map = infer_map(s.art, s.data.d_obs);
      CHECK(rel_err(want, to_vec(m_map)) <= 1e-8);
   }
   SUBCASE("first-order optimality holds at the estimate") {
      Setup s = make_setup(1);
      SpaceTimeField m_map = infer_map(s.art, s.data.d_obs);
      CHECK(optimality_residual(s.art, m_map, s.data.d_obs) <= 1e-6);
   }
   SUBCASE("both prediction paths agree") {
      Setup s = make_setup(1);
      SpaceTimeField m_map = infer_map(s.art, s.data.d_obs);
      SpaceTimeField via_push = predict_qoi_pushforward(s.art, m_map);
      SpaceTimeField direct = predict_qoi(s.art, s.data.d_obs);
      CHECK(rel_err(to_vec(via_push), to_vec(direct)) <= 1e-8);
   }
   SUBCASE("the QoI-only predictor reproduces the full path bitwise") {
      Setup s = make_setup(1);
      QoiPredictor pred{s.art.d2q, s.art.qoi_prior_contrib, s.art.qoi_cov};
      SpaceTimeField a = predict_qoi(s.art, s.data.d_obs);
      SpaceTimeField b = pred.predict(s.data.d_obs);
      CHECK(a.values == b.values);
   }
}

TEST_CASE("noiseless exactly-determined recovery") {
   // sensors at every seafloor column and a short window keep the
   // data-space matrix well conditioned, so with the noise floor in place
   // the estimate reproduces the truth to solver precision
   RunConfig c = make_tiny_config(55, 0);
   c.grid.nx = 9;
   c.grid.nz = 3;
   c.grid.dx = 500.0;
   c.grid.dz = 250.0;
   c.obs.n_steps = 2;
   c.obs.qoi_subsample = 2;
   c.obs.sensor_indices = {0, 1, 2, 3, 4, 5, 6, 7, 8};
   c.obs.qoi_indices = {4, 6};
   c.prior.alpha1 = 1.0;
   c.prior.alpha2 = 1.0 * 500.0 * 500.0;
   c.prior.mean_constant = 0.0;
   GaussianBump b;
   b.amplitude = 2.0;
   b.rise_time = 2.0;
   b.rise_width_x = 1200.0;
   b.rise_width_y = 1200.0;
   b.center_x = 2250.0;
   b.center_y = 2250.0;
   c.source.bumps = {b};
   c.noise_level = 0.0;

   WaveModel model = c.build_model();
   EllipticPrior prior = c.build_prior();
   Phase1Maps maps = run_phase1(model, prior);
   SynthData data = synth_data(model, c.source, 0.0, c.seed);
   CHECK(data.noise.floored);
   PosteriorArtifacts art =
      build_posterior_artifacts(std::move(maps), prior, c.prior_mean_field(), data.noise,
                                config_hash(c), c.obs.qoi_subsample);
   SpaceTimeField m_map = infer_map(art, data.d_obs);
   SpaceTimeField q_map = predict_qoi(art, data.d_obs);
   RelativeErrors e = relative_errors(art, data.m_true, data.q_true, m_map, q_map);
   CHECK(e.param_err <= 1e-6);
   CHECK(e.qoi_err <= 1e-6);
}

TEST_CASE("credible intervals") {
   SUBCASE("zero variance collapses the band") {
      SpaceTimeField q(2, 3, 1.0);
      q.at(1, 1) = 2.5;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(6, 6);
      CredibleIntervals ci = credible_intervals(q, cov);
      CHECK(ci.lo.values == q.values);
      CHECK(ci.hi.values == q.values);
   }
   SUBCASE("unit variance uses the two-sided 95% quantile") {
      SpaceTimeField q(1, 1, 1.0);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(1, 1);
      CredibleIntervals ci = credible_intervals(q, cov, 0.95);
      CHECK(ci.hi.at(0, 0) == doctest::Approx(1.959963984540054).epsilon(1e-15));
      CHECK(ci.lo.at(0, 0) == doctest::Approx(-1.959963984540054).epsilon(1e-15));
   }
   SUBCASE("other levels go through the rational quantile approximation") {
      CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
      CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(normal_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-9));
      SpaceTimeField q(1, 1, 1.0);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(1, 1);
      CredibleIntervals ci = credible_intervals(q, cov, 0.99);
      CHECK(ci.hi.at(0, 0) == doctest::Approx(2.5758293035489004).epsilon(1e-8));
   }
   SUBCASE("a genuinely negative variance is an error") {
      SpaceTimeField q(1, 1, 1.0);
      Eigen::MatrixXd cov = -Eigen::MatrixXd::Identity(1, 1);
      CHECK_THROWS_AS(credible_intervals(q, cov), NumericError);
   }
}

TEST_CASE("relative errors") {
   Setup s = make_setup(1);
   SUBCASE("a perfect estimate has zero errors") {
      RelativeErrors e =
         relative_errors(s.art, s.data.m_true, s.data.q_true, s.data.m_true, s.data.q_true);
      CHECK(e.param_err == 0.0);
      CHECK(e.qoi_err == 0.0);
      CHECK(e.reconstruction_err == 0.0);
      CHECK(e.displacement_err == 0.0);
   }
   SUBCASE("a zero estimate has unit errors") {
      SpaceTimeField zm(s.model.n_param(), s.config.obs.n_steps, s.config.obs.data_dt);
      SpaceTimeField zq(s.model.n_qoi(), s.model.n_qoi_steps(),
                        s.config.obs.data_dt * s.config.obs.qoi_subsample);
      RelativeErrors e = relative_errors(s.art, s.data.m_true, s.data.q_true, zm, zq);
      CHECK(e.param_err == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(e.qoi_err == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(e.reconstruction_err == doctest::Approx(1.0).epsilon(1e-12));
   }
   SUBCASE("zero-norm truth is rejected") {
      SpaceTimeField zm(s.model.n_param(), s.config.obs.n_steps, s.config.obs.data_dt);
      SpaceTimeField zq(s.model.n_qoi(), s.model.n_qoi_steps(),
                        s.config.obs.data_dt * s.config.obs.qoi_subsample);
      CHECK_THROWS_AS(relative_errors(s.art, zm, zq, zm, zq), NumericError);
   }
}

TEST_CASE("determinism and online purity") {
   SUBCASE("a fixed configuration and seed reproduce the result bitwise") {
      Setup s1 = make_setup(2);
      Setup s2 = make_setup(2);
      InferenceResult r1 = run_inference(s1.art, s1.data.d_obs);
      InferenceResult r2 = run_inference(s2.art, s2.data.d_obs);
      CHECK(r1.m_map.values == r2.m_map.values);
      CHECK(r1.q_map.values == r2.q_map.values);
      CHECK(r1.credible_lo.values == r2.credible_lo.values);
      CHECK(r1.credible_hi.values == r2.credible_hi.values);
   }
   SUBCASE("the online phase runs no marches and no factorizations") {
      Setup s = make_setup(1);
      const long long steps = s.model.solver_steps();
      const long long facts = EllipticPrior::factorization_count();
      InferenceResult res = run_inference(s.art, s.data.d_obs);
      CHECK(s.model.solver_steps() == steps);
      CHECK(EllipticPrior::factorization_count() == facts);
      CHECK(res.timings_s.count("infer_map") == 1);
      CHECK(res.timings_s.count("predict_qoi") == 1);
      CHECK(res.timings_s.count("credible_intervals") == 1);
      for (std::size_t i = 0; i < res.q_map.values.size(); ++i) {
         CHECK(res.credible_lo.values[i] <= res.q_map.values[i]);
         CHECK(res.q_map.values[i] <= res.credible_hi.values[i]);
      }
   }
}
