// wavetwin: offline/online Bayesian inference and QoI forecasting for the
// built-in acoustic-gravity wave model.
//
// The work splits into four phases:
//   assemble  - one transposed march per sensor/QoI location fills the
//               block-Toeplitz forward maps (offline)
//   factorize - data-space covariance assembly + Cholesky, QoI posterior
//               covariance, dense data-to-QoI map (offline)
//   synth     - synthetic truth, clean traces and noisy observations
//   infer     - online estimate of the seafloor motion and QoI forecast
//               with credible intervals (no PDE marches)
// plus predict (QoI-only online path), bench, spectrum and oracle-check.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "wavetwin/artifacts.hpp"
#include "wavetwin/container_io.hpp"
#include "wavetwin/oracle.hpp"
#include "wavetwin/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wavetwin;

namespace {

struct CommonArgs {
   std::string config_path;
   std::string out_dir;
   std::uint64_t seed = 0;
   bool seed_set = false;
   int threads = 0;
   std::vector<std::string> overrides;
   std::string data_path;
   int repeats = 5;
};

RunConfig make_config(const CommonArgs& args) {
   RunConfig config = load_config(args.config_path, args.overrides);
   if (args.seed_set) { config.seed = args.seed; }
   if (!args.out_dir.empty()) { config.paths.output_dir = args.out_dir; }
   if (args.threads > 0) {
#ifdef _OPENMP
      omp_set_num_threads(args.threads);
#endif
   }
   return config;
}

void write_json(const std::string& path, const json& j) {
   std::ofstream os(path);
   if (!os) { throw IoError("cannot write " + path); }
   os << j.dump(2) << "\n";
}

// observations arrive either as CSV or as a dense binary container; sniff
// the magic bytes
SpaceTimeField load_observations_any(const std::string& path, const RunConfig& config) {
   std::ifstream is(path, std::ios::binary);
   if (!is) { throw IoError("cannot open observations: " + path); }
   char magic[4] = {0, 0, 0, 0};
   is.read(magic, 4);
   is.close();
   SpaceTimeField d;
   if (std::string(magic, 4) == "D2QM") {
      d = load_field(path, config.obs.data_dt);
      if (d.n_space != int(config.obs.sensor_indices.size())) {
         throw ConfigError(path + ": sensor count does not match configuration");
      }
      d.validate("observations");
   } else {
      d = load_observations_csv(path, config.obs.sensor_indices, config.obs.data_dt);
   }
   if (d.n_time != config.obs.n_steps) {
      throw ConfigError("observed data has " + std::to_string(d.n_time) +
                        " steps, configuration expects " + std::to_string(config.obs.n_steps));
   }
   return d;
}

void save_qoi_csv(const std::string& path, const SpaceTimeField& q_map,
                  const SpaceTimeField& lo, const SpaceTimeField& hi,
                  const std::vector<int>& qoi_ids) {
   std::ofstream os(path);
   if (!os) { throw IoError("cannot write " + path); }
   os << "time";
   for (int id : qoi_ids) { os << ",q" << id << ",q" << id << "_lo,q" << id << "_hi"; }
   os << "\n";
   os.precision(17);
   for (int t = 0; t < q_map.n_time; ++t) {
      os << (t + 1) * q_map.dt;
      for (int s = 0; s < q_map.n_space; ++s) {
         os << "," << q_map.at(t, s) << "," << lo.at(t, s) << "," << hi.at(t, s);
      }
      os << "\n";
   }
}

int cmd_assemble(const CommonArgs& args) {
   RunConfig config = make_config(args);
   WaveModel model = config.build_model();
   EllipticPrior prior = config.build_prior();

   std::printf("assemble: grid %dx%dx%d, %d sensors, %d QoI locations, %d data steps (S=%d)\n",
               config.grid.nx, config.grid.ny, config.grid.nz, model.n_sensors(), model.n_qoi(),
               model.n_data_steps(), model.substeps_per_data_step());

   WallTimer timer;
   Phase1Maps maps = run_phase1(model, prior);
   const double t_assemble = timer.seconds();

   save_phase1(config.paths.artifact_dir, maps, config);
   std::printf("assemble: %lld transposed marches in %.3f s -> %s\n",
               model.marches(), t_assemble, config.paths.artifact_dir.c_str());
   return 0;
}

int cmd_factorize(const CommonArgs& args) {
   RunConfig config = make_config(args);
   Phase1Maps maps = load_phase1(config.paths.artifact_dir, config);
   WaveModel model = config.build_model();
   EllipticPrior prior = config.build_prior();

   // Noise calibration from the clean traces of the configured source; this
   // matches what synth writes, so the artifacts and the generated data
   // agree exactly.
   SpaceTimeField m_true =
      synth_source_eval(config.source, config.grid, config.obs.n_steps, config.obs.data_dt);
   SpaceTimeField d_true = model.simulate_p2o(m_true);
   NoiseModel noise = calibrate_noise(d_true, config.noise_level);
   if (noise.floored) {
      std::fprintf(stderr, "warning: noise variance floor applied (zero or tiny traces)\n");
   }

   WallTimer timer;
   PosteriorArtifacts art =
      build_posterior_artifacts(std::move(maps), std::move(prior), config.prior_mean_field(),
                                std::move(noise), config_hash(config), config.obs.qoi_subsample);
   const double t_factorize = timer.seconds();
   save_posterior(config.paths.artifact_dir, art, config);

   const Eigen::VectorXd diag = art.data_cov_chol.diagonal();
   std::printf("factorize: data-space dim %lld, chol diag range [%.6e, %.6e] in %.3f s\n",
               static_cast<long long>(art.data_cov_chol.rows()), diag.minCoeff(), diag.maxCoeff(),
               t_factorize);
   return 0;
}

int cmd_synth(const CommonArgs& args) {
   RunConfig config = make_config(args);
   WaveModel model = config.build_model();
   SynthData data = synth_data(model, config.source, config.noise_level, config.seed);
   if (data.noise.floored) {
      std::fprintf(stderr, "warning: noise variance floor applied (zero or tiny traces)\n");
   }

   fs::create_directories(config.paths.output_dir);
   const fs::path out(config.paths.output_dir);
   save_observations_csv((out / "d_obs.csv").string(), data.d_obs, config.obs.sensor_indices);
   save_field((out / "d_obs.bin").string(), data.d_obs);
   save_observations_csv((out / "d_true.csv").string(), data.d_true, config.obs.sensor_indices);
   save_field((out / "m_true.bin").string(), data.m_true);
   save_field((out / "q_true.bin").string(), data.q_true);

   json noise_json;
   noise_json["noise_level"] = config.noise_level;
   noise_json["seed"] = config.seed;
   std::vector<double> sigma(config.obs.sensor_indices.size());
   for (std::size_t j = 0; j < sigma.size(); ++j) {
      sigma[j] = std::sqrt(data.noise.variances[Eigen::Index(j)]);
   }
   noise_json["sigma_per_sensor"] = sigma;
   write_json((out / "noise.json").string(), noise_json);

   std::printf("synth: wrote d_obs.csv, d_true.csv, m_true.bin, q_true.bin to %s\n",
               config.paths.output_dir.c_str());
   return 0;
}

int cmd_infer(const CommonArgs& args) {
   RunConfig config = make_config(args);

   WallTimer t_load;
   PosteriorArtifacts art = load_posterior(config.paths.artifact_dir, config);
   const double load_s = t_load.seconds();

   const fs::path out(config.paths.output_dir);
   const std::string data_path =
      args.data_path.empty() ? (out / "d_obs.csv").string() : args.data_path;
   SpaceTimeField d_obs = load_observations_any(data_path, config);

   InferenceResult res = run_inference(art, d_obs, 0.95, /*diagnostics=*/true);

   fs::create_directories(config.paths.output_dir);
   save_field((out / "m_map.bin").string(), res.m_map);
   save_qoi_csv((out / "q_map.csv").string(), res.q_map, res.credible_lo, res.credible_hi,
                config.obs.qoi_indices);

   // timing comparison: one matrix-free normal-equations matvec (forward +
   // transposed march pair) against the precomputed fast path
   WaveModel model = config.build_model();
   SpaceTimeField probe(model.n_param(), model.n_data_steps(), config.obs.data_dt);
   std::mt19937_64 rng(sub_seed(config.seed, "bench-probe"));
   std::normal_distribution<double> normal(0.0, 1.0);
   for (double& v : probe.values) { v = normal(rng); }

   WallTimer t_march;
   SpaceTimeField fwd = model.simulate_p2o(probe);
   for (std::int64_t i = 0; i < fwd.size(); ++i) {
      fwd.values[std::size_t(i)] /= art.noise.variances[i];
   }
   SpaceTimeField adj = model.simulate_p2o_transpose(fwd);
   const double march_pair_s = t_march.seconds();

   WallTimer t_fft;
   SpaceTimeField cov_v = posterior_cov_matvec(art, probe);
   const double fft_path_s = t_fft.seconds();

   json metrics;
   metrics["timings_s"] = {{"load_artifacts", load_s},
                           {"infer_map", res.timings_s.at("infer_map")},
                           {"predict_qoi", res.timings_s.at("predict_qoi")},
                           {"credible_intervals", res.timings_s.at("credible_intervals")},
                           {"online_total", res.timings_s.at("online_total")}};
   metrics["comparison"] = {{"matrix_free_hessian_matvec_s", march_pair_s},
                            {"fft_path_posterior_matvec_s", fft_path_s}};
   metrics["diagnostics"] = {{"optimality_residual", res.optimality}};

   // report errors when the synthetic truth sits next to the observations
   const fs::path truth_m = fs::path(data_path).parent_path() / "m_true.bin";
   const fs::path truth_q = fs::path(data_path).parent_path() / "q_true.bin";
   if (fs::exists(truth_m) && fs::exists(truth_q)) {
      SpaceTimeField m_true = load_field(truth_m.string(), config.obs.data_dt);
      SpaceTimeField q_true =
         load_field(truth_q.string(), config.obs.data_dt * config.obs.qoi_subsample);
      RelativeErrors errs = relative_errors(art, m_true, q_true, res.m_map, res.q_map);
      metrics["relative_errors"] = {{"param", errs.param_err},
                                    {"qoi", errs.qoi_err},
                                    {"reconstruction", errs.reconstruction_err},
                                    {"displacement", errs.displacement_err}};
      std::printf("errors: param %.4f | qoi %.4f | reconstruction %.4f\n", errs.param_err,
                  errs.qoi_err, errs.reconstruction_err);
   }
   write_json((out / "metrics.json").string(), metrics);

   std::printf("timings: load %.3f s | infer %.3f ms | predict %.3f ms | intervals %.3f ms\n",
               load_s, 1e3 * res.timings_s.at("infer_map"), 1e3 * res.timings_s.at("predict_qoi"),
               1e3 * res.timings_s.at("credible_intervals"));
   std::printf("comparison: matrix-free Hessian matvec %.2f ms | FFT-path %.2f ms\n",
               1e3 * march_pair_s, 1e3 * fft_path_s);
   (void)adj;
   (void)cov_v;
   return 0;
}

int cmd_predict(const CommonArgs& args) {
   RunConfig config = make_config(args);
   WallTimer t_load;
   QoiPredictor pred = load_qoi_predictor(config.paths.artifact_dir, config);
   const double load_s = t_load.seconds();

   const fs::path out(config.paths.output_dir);
   const std::string data_path =
      args.data_path.empty() ? (out / "d_obs.csv").string() : args.data_path;
   SpaceTimeField d_obs = load_observations_any(data_path, config);

   WallTimer t_pred;
   SpaceTimeField q_map = pred.predict(d_obs);
   CredibleIntervals ci = credible_intervals(q_map, pred.qoi_cov, 0.95);
   const double pred_s = t_pred.seconds();

   fs::create_directories(config.paths.output_dir);
   save_qoi_csv((out / "q_map.csv").string(), q_map, ci.lo, ci.hi, config.obs.qoi_indices);
   write_json((out / "predict_timings.json").string(),
              json{{"load_s", load_s}, {"predict_s", pred_s}});
   std::printf("predict: %lld QoI values in %.3f ms (load %.3f s)\n",
               static_cast<long long>(q_map.size()), 1e3 * pred_s, load_s);
   return 0;
}

int cmd_bench(const CommonArgs& args) {
   RunConfig config = make_config(args);
   WaveModel model = config.build_model();
   EllipticPrior prior = config.build_prior();

   std::printf("bench: building artifacts in memory...\n");
   Phase1Maps maps = run_phase1(model, prior);
   SynthData data = synth_data(model, config.source, config.noise_level, config.seed);
   PosteriorArtifacts art =
      build_posterior_artifacts(std::move(maps), std::move(prior), config.prior_mean_field(),
                                data.noise, config_hash(config), config.obs.qoi_subsample);

   std::mt19937_64 rng(sub_seed(config.seed, "bench"));
   std::normal_distribution<double> normal(0.0, 1.0);
   SpaceTimeField v(model.n_param(), model.n_data_steps(), config.obs.data_dt);
   for (double& x : v.values) { x = normal(rng); }

   auto median_of = [&](auto&& fn) {
      std::vector<double> times;
      for (int i = 0; i < args.repeats; ++i) {
         WallTimer t;
         fn();
         times.push_back(t.seconds());
      }
      std::sort(times.begin(), times.end());
      return times[times.size() / 2];
   };

   const double t_march = median_of([&] {
      volatile double sink = model.simulate_p2o(v).values[0];
      (void)sink;
   });
   const double t_fft = median_of([&] {
      volatile double sink = art.p2o.matvec(v).values[0];
      (void)sink;
   });
   const double t_direct = median_of([&] {
      volatile double sink = art.p2o.matvec_direct(v).values[0];
      (void)sink;
   });
   const double t_post = median_of([&] {
      volatile double sink = posterior_cov_matvec(art, v).values[0];
      (void)sink;
   });
   const double t_online = median_of([&] {
      SpaceTimeField m_map = infer_map(art, data.d_obs);
      SpaceTimeField q_map = predict_qoi(art, data.d_obs);
      volatile double sink = m_map.values[0] + q_map.values[0];
      (void)sink;
   });
   const double t_hessian = median_of([&] {
      SpaceTimeField fwd = model.simulate_p2o(v);
      for (std::int64_t i = 0; i < fwd.size(); ++i) {
         fwd.values[std::size_t(i)] /= art.noise.variances[i];
      }
      volatile double sink = model.simulate_p2o_transpose(fwd).values[0];
      (void)sink;
   });

   std::printf("%-42s %12.4f ms\n", "matrix-free p2o matvec (time march)", 1e3 * t_march);
   std::printf("%-42s %12.4f ms  (%.0fx vs march)\n", "fast p2o matvec (FFT)", 1e3 * t_fft,
               t_march / t_fft);
   std::printf("%-42s %12.4f ms  (serial reference)\n", "direct p2o matvec (time domain)",
               1e3 * t_direct);
   std::printf("%-42s %12.4f ms\n", "posterior covariance matvec (fast path)", 1e3 * t_post);
   std::printf("%-42s %12.4f ms\n", "matrix-free Hessian matvec (march pair)", 1e3 * t_hessian);
   std::printf("%-42s %12.4f ms  (%.0fx vs Hessian matvec)\n", "online infer + predict",
               1e3 * t_online, t_hessian / t_online);

   fs::create_directories(config.paths.output_dir);
   write_json((fs::path(config.paths.output_dir) / "bench.json").string(),
              json{{"march_matvec_s", t_march},
                   {"fft_matvec_s", t_fft},
                   {"direct_matvec_s", t_direct},
                   {"posterior_matvec_s", t_post},
                   {"hessian_matvec_s", t_hessian},
                   {"online_s", t_online},
                   {"speedup_fft_vs_march", t_march / t_fft},
                   {"speedup_online_vs_hessian", t_hessian / t_online},
                   {"repeats", args.repeats}});
   return 0;
}

int cmd_spectrum(const CommonArgs& args) {
   RunConfig config = make_config(args);
   BlockToeplitzMap p2o = phase1_present(config.paths.artifact_dir)
                             ? load_phase1(config.paths.artifact_dir, config).p2o
                             : assemble_p2o(config.build_model());
   Eigen::VectorXd sv = p2o.singular_values(config.dense_cap);

   fs::create_directories(config.paths.output_dir);
   const std::string path = (fs::path(config.paths.output_dir) / "spectrum.csv").string();
   std::ofstream os(path);
   if (!os) { throw IoError("cannot write " + path); }
   os << "rank,singular_value\n";
   os.precision(17);
   for (Eigen::Index i = 0; i < sv.size(); ++i) { os << i << "," << sv[i] << "\n"; }

   const Eigen::Index idx = Eigen::Index(std::ceil(0.9 * double(sv.size()))) - 1;
   const double ratio = (sv[0] > 0.0) ? (sv[idx] * sv[idx]) / (sv[0] * sv[0]) : 0.0;
   std::printf("spectrum: %lld singular values -> %s\n", static_cast<long long>(sv.size()),
               path.c_str());
   std::printf("spectrum: decay ratio sigma^2[ceil(0.9n)]/sigma^2[1] = %.6e\n", ratio);
   return 0;
}

int cmd_oracle_check(const CommonArgs& args) {
   RunConfig config = make_config(args);
   const std::int64_t problem_size = std::int64_t(config.grid.n_columns()) * config.obs.n_steps;
   RunConfig tiny = config;
   if (problem_size > 2000) {
      std::printf("oracle-check: configured problem too large for dense oracles, "
                  "using a built-in tiny configuration\n");
      tiny = make_tiny_config(config.seed, 0);
   }
   OracleReport report = run_oracle_suite(tiny, config.seed);
   for (const auto& chk : report.checks) {
      std::printf("[%s] %-48s %.3e (tol %.1e)\n", chk.pass ? "PASS" : "FAIL", chk.name.c_str(),
                  chk.observed, chk.tolerance);
   }
   if (!report.all_pass()) {
      std::fprintf(stderr, "oracle-check: FAILED\n");
      return static_cast<int>(ErrorCategory::numeric);
   }
   std::printf("oracle-check: all checks passed\n");
   return 0;
}

}  // namespace

int main(int argc, char** argv) {
   CLI::App app{"wavetwin: precomputed Bayesian inference and QoI forecasting "
                "for linear wave dynamics"};
   app.require_subcommand(1);
   app.fallthrough(true);

   CommonArgs args;
   app.add_option("--config", args.config_path, "JSON configuration file")->required();
   app.add_option("--out", args.out_dir, "output directory (overrides paths.output_dir)");
   auto* seed_opt = app.add_option("--seed", args.seed, "override the configured seed");
   app.add_option("--threads", args.threads, "cap the OpenMP worker count");
   app.add_option("--set", args.overrides,
                  "override a config entry, e.g. --set model.grid.nx=65 (repeatable)");

   auto* sub_assemble = app.add_subcommand("assemble", "phase 1: precompute the forward maps");
   auto* sub_factorize =
      app.add_subcommand("factorize", "phases 2-3: data-space factorization and QoI maps");
   auto* sub_synth = app.add_subcommand("synth", "generate synthetic observations");
   auto* sub_infer = app.add_subcommand("infer", "phase 4: online inference and prediction");
   auto* sub_predict = app.add_subcommand("predict", "QoI-only online prediction");
   auto* sub_bench = app.add_subcommand("bench", "timing comparison of the operator paths");
   auto* sub_spectrum = app.add_subcommand("spectrum", "singular spectrum of the p2o map");
   auto* sub_oracle = app.add_subcommand("oracle-check", "dense-oracle equivalence suite");

   sub_infer->add_option("--data", args.data_path, "observation CSV (default: <out>/d_obs.csv)");
   sub_predict->add_option("--data", args.data_path, "observation CSV");
   sub_bench->add_option("--repeats", args.repeats, "timing repetitions per row");

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : static_cast<int>(ErrorCategory::config);
   }

   try {
      args.seed_set = seed_opt->count() > 0;
      if (sub_assemble->parsed()) { return cmd_assemble(args); }
      if (sub_factorize->parsed()) { return cmd_factorize(args); }
      if (sub_synth->parsed()) { return cmd_synth(args); }
      if (sub_infer->parsed()) { return cmd_infer(args); }
      if (sub_predict->parsed()) { return cmd_predict(args); }
      if (sub_bench->parsed()) { return cmd_bench(args); }
      if (sub_spectrum->parsed()) { return cmd_spectrum(args); }
      if (sub_oracle->parsed()) { return cmd_oracle_check(args); }
   } catch (const Error& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return e.exit_code();
   } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return static_cast<int>(ErrorCategory::numeric);
   }
   return 0;
}
