#include "wavetwin/artifacts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wavetwin/container_io.hpp"
#include "wavetwin/errors.hpp"

namespace wavetwin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hash_hex(std::uint64_t h) {
   std::ostringstream ss;
   ss << std::hex << h;
   return ss.str();
}

json read_metadata(const std::string& dir) {
   const fs::path path = fs::path(dir) / "metadata.json";
   std::ifstream is(path);
   if (!is) {
      throw IoError("missing artifact metadata: " + path.string() +
                    " (run 'wavetwin assemble' first)");
   }
   json j;
   try {
      is >> j;
   } catch (const json::exception& e) {
      throw IoError("corrupt artifact metadata: " + std::string(e.what()));
   }
   return j;
}

void check_hash(const json& meta, const RunConfig& config, const std::string& dir) {
   const std::string want = hash_hex(config_hash(config));
   const std::string have = meta.value("config_hash", std::string());
   if (want != have) {
      throw ConfigError("artifact directory " + dir +
                        " was built from a different configuration (hash " + have +
                        ", current " + want + "); re-run assemble/factorize");
   }
}

json base_metadata(const RunConfig& config, const WaveModel& model) {
   json j;
   j["format"] = "wavetwin-artifacts";
   j["version"] = 1;
   j["config_hash"] = hash_hex(config_hash(config));
   j["phases"] = {{"phase1", true}, {"phase2", false}};
   j["dims"] = {{"n_sensors", model.n_sensors()},
                {"n_param", model.n_param()},
                {"n_steps", model.n_data_steps()},
                {"n_qoi", model.n_qoi()},
                {"n_qoi_steps", model.n_qoi_steps()},
                {"qoi_subsample", config.obs.qoi_subsample}};
   j["data_dt"] = config.obs.data_dt;
   j["noise_level"] = config.noise_level;
   return j;
}

void write_metadata(const std::string& dir, const json& meta) {
   std::ofstream os(fs::path(dir) / "metadata.json");
   if (!os) { throw IoError("cannot write metadata in " + dir); }
   os << meta.dump(2) << "\n";
}

}  // namespace

bool phase1_present(const std::string& dir) {
   return fs::exists(fs::path(dir) / "metadata.json") && fs::exists(fs::path(dir) / "p2o.btop");
}

bool phase2_present(const std::string& dir) {
   return phase1_present(dir) && fs::exists(fs::path(dir) / "d2q.bin");
}

void save_phase1(const std::string& dir, const Phase1Maps& maps, const RunConfig& config) {
   fs::create_directories(dir);
   WaveModel model = config.build_model();
   save_btop((fs::path(dir) / "p2o.btop").string(), maps.p2o);
   save_btop((fs::path(dir) / "p2q.btop").string(), maps.p2q);
   save_btop((fs::path(dir) / "p2o_prior.btop").string(), maps.p2o_prior);
   save_btop((fs::path(dir) / "p2q_prior.btop").string(), maps.p2q_prior);
   write_metadata(dir, base_metadata(config, model));
}

Phase1Maps load_phase1(const std::string& dir, const RunConfig& config) {
   if (!phase1_present(dir)) {
      throw IoError("phase 1 artifacts not found in " + dir + " (run 'wavetwin assemble')");
   }
   json meta = read_metadata(dir);
   check_hash(meta, config, dir);
   Phase1Maps maps{load_btop((fs::path(dir) / "p2o.btop").string()),
                   load_btop((fs::path(dir) / "p2q.btop").string()),
                   load_btop((fs::path(dir) / "p2o_prior.btop").string()),
                   load_btop((fs::path(dir) / "p2q_prior.btop").string())};
   maps.p2o.precompute_fourier();
   maps.p2q.precompute_fourier();
   maps.p2o_prior.precompute_fourier();
   maps.p2q_prior.precompute_fourier();
   return maps;
}

void save_posterior(const std::string& dir, const PosteriorArtifacts& art,
                    const RunConfig& config) {
   fs::create_directories(dir);
   Phase1Maps maps{art.p2o, art.p2q, art.p2o_prior, art.p2q_prior};
   save_phase1(dir, maps, config);

   save_dense((fs::path(dir) / "data_cov_chol.bin").string(), art.data_cov_chol);
   save_dense((fs::path(dir) / "qoi_cov.bin").string(), art.qoi_cov);
   save_dense((fs::path(dir) / "d2q.bin").string(), art.d2q);
   save_dense_vector((fs::path(dir) / "noise_var.bin").string(), art.noise.variances);
   save_field((fs::path(dir) / "param_prior_contrib.bin").string(), art.param_prior_contrib);
   save_field((fs::path(dir) / "qoi_prior_contrib.bin").string(), art.qoi_prior_contrib);

   WaveModel model = config.build_model();
   json meta = base_metadata(config, model);
   meta["phases"]["phase2"] = true;
   write_metadata(dir, meta);
}

PosteriorArtifacts load_posterior(const std::string& dir, const RunConfig& config) {
   if (!phase2_present(dir)) {
      throw IoError("phase 2-3 artifacts not found in " + dir + " (run 'wavetwin factorize')");
   }
   json meta = read_metadata(dir);
   check_hash(meta, config, dir);
   if (!meta["phases"].value("phase2", false)) {
      throw IoError("metadata in " + dir + " does not record phase 2 (run 'wavetwin factorize')");
   }

   Phase1Maps maps = load_phase1(dir, config);
   NoiseModel noise;
   noise.variances = load_dense_vector((fs::path(dir) / "noise_var.bin").string());
   noise.noise_level = meta.value("noise_level", 0.0);

   PosteriorArtifacts art{std::move(maps.p2o),
                          std::move(maps.p2q),
                          std::move(maps.p2o_prior),
                          std::move(maps.p2q_prior),
                          config.build_prior(),
                          config.prior_mean_field(),
                          std::move(noise),
                          load_dense((fs::path(dir) / "data_cov_chol.bin").string()),
                          load_dense((fs::path(dir) / "qoi_cov.bin").string()),
                          load_dense((fs::path(dir) / "d2q.bin").string()),
                          load_field((fs::path(dir) / "param_prior_contrib.bin").string(),
                                     config.obs.data_dt),
                          load_field((fs::path(dir) / "qoi_prior_contrib.bin").string(),
                                     config.obs.data_dt * config.obs.qoi_subsample),
                          config_hash(config),
                          config.obs.qoi_subsample};

   // structural consistency between metadata dims and loaded payloads
   const json& dims = meta["dims"];
   if (art.n_sensors() != dims.value("n_sensors", -1) ||
       art.n_param() != dims.value("n_param", -1) || art.n_steps() != dims.value("n_steps", -1) ||
       art.n_qoi() != dims.value("n_qoi", -1)) {
      throw IoError("artifact payload dims disagree with metadata in " + dir);
   }
   return art;
}

QoiPredictor load_qoi_predictor(const std::string& dir, const RunConfig& config) {
   if (!phase2_present(dir)) {
      throw IoError("phase 2-3 artifacts not found in " + dir + " (run 'wavetwin factorize')");
   }
   json meta = read_metadata(dir);
   check_hash(meta, config, dir);
   QoiPredictor pred{load_dense((fs::path(dir) / "d2q.bin").string()),
                     load_field((fs::path(dir) / "qoi_prior_contrib.bin").string(),
                                config.obs.data_dt * config.obs.qoi_subsample),
                     load_dense((fs::path(dir) / "qoi_cov.bin").string())};
   return pred;
}

}  // namespace wavetwin
