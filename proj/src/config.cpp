#include "wavetwin/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wavetwin/errors.hpp"
#include "wavetwin/util.hpp"

namespace wavetwin {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& context) {
   if (!obj.is_object()) { throw ConfigError(context + ": expected a JSON object"); }
   for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) {
         throw ConfigError(context + ": unknown key '" + it.key() + "'");
      }
   }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& context) {
   if (!obj.contains(key)) { return fallback; }
   try {
      return obj.at(key).get<T>();
   } catch (const json::exception&) {
      throw ConfigError(context + ": bad value for '" + key + "'");
   }
}

GridSpec parse_grid(const json& j) {
   reject_unknown(j, {"seafloor_dim", "nx", "ny", "nz", "dx", "dy", "dz", "state_cap"}, "grid");
   GridSpec g;
   g.seafloor_dim = get_or(j, "seafloor_dim", g.seafloor_dim, "grid");
   g.nx = get_or(j, "nx", g.nx, "grid");
   g.ny = get_or(j, "ny", g.ny, "grid");
   g.nz = get_or(j, "nz", g.nz, "grid");
   g.dx = get_or(j, "dx", g.dx, "grid");
   g.dy = get_or(j, "dy", g.dy, "grid");
   g.dz = get_or(j, "dz", g.dz, "grid");
   g.state_cap = get_or(j, "state_cap", g.state_cap, "grid");
   return g;
}

PhysicalConstants parse_constants(const json& j) {
   reject_unknown(j, {"rho", "bulk_modulus", "gravity"}, "constants");
   PhysicalConstants c;
   c.rho = get_or(j, "rho", c.rho, "constants");
   c.bulk_modulus = get_or(j, "bulk_modulus", c.bulk_modulus, "constants");
   c.gravity = get_or(j, "gravity", c.gravity, "constants");
   return c;
}

ObservationSpec parse_observation(const json& j) {
   reject_unknown(j, {"data_dt", "n_steps", "qoi_subsample", "sensor_indices", "qoi_indices"},
                  "observation");
   ObservationSpec o;
   o.data_dt = get_or(j, "data_dt", o.data_dt, "observation");
   o.n_steps = get_or(j, "n_steps", o.n_steps, "observation");
   o.qoi_subsample = get_or(j, "qoi_subsample", o.qoi_subsample, "observation");
   o.sensor_indices = get_or(j, "sensor_indices", std::vector<int>{}, "observation");
   o.qoi_indices = get_or(j, "qoi_indices", std::vector<int>{}, "observation");
   return o;
}

PriorSpec parse_prior(const json& j) {
   reject_unknown(j, {"alpha1", "alpha2", "robin_coeff", "mean_constant"}, "prior");
   PriorSpec p;
   p.alpha1 = get_or(j, "alpha1", p.alpha1, "prior");
   p.alpha2 = get_or(j, "alpha2", p.alpha2, "prior");
   p.robin_coeff = get_or(j, "robin_coeff", p.robin_coeff, "prior");
   p.mean_constant = get_or(j, "mean_constant", p.mean_constant, "prior");
   return p;
}

SyntheticSource parse_source(const json& j) {
   reject_unknown(j, {"gaussians"}, "source");
   SyntheticSource s;
   if (!j.contains("gaussians")) { return s; }
   for (const auto& gj : j.at("gaussians")) {
      reject_unknown(gj,
                     {"amplitude", "rise_time", "rise_width_x", "rise_width_y", "center_x",
                      "center_y"},
                     "source.gaussians[]");
      GaussianBump b;
      b.amplitude = get_or(gj, "amplitude", b.amplitude, "source");
      b.rise_time = get_or(gj, "rise_time", b.rise_time, "source");
      b.rise_width_x = get_or(gj, "rise_width_x", b.rise_width_x, "source");
      b.rise_width_y = get_or(gj, "rise_width_y", b.rise_width_y, "source");
      b.center_x = get_or(gj, "center_x", b.center_x, "source");
      b.center_y = get_or(gj, "center_y", b.center_y, "source");
      s.bumps.push_back(b);
   }
   return s;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
   json j;
   try {
      j = json::parse(text);
   } catch (const json::exception& e) {
      throw ConfigError(std::string("config: JSON parse error: ") + e.what());
   }

   for (const std::string& ov : overrides) {
      const auto eq = ov.find('=');
      if (eq == std::string::npos) {
         throw ConfigError("--set expects key.path=value, got '" + ov + "'");
      }
      const std::string path = ov.substr(0, eq);
      const std::string value = ov.substr(eq + 1);
      json parsed;
      try {
         parsed = json::parse(value);
      } catch (const json::exception&) {
         parsed = value;  // bare strings are allowed
      }
      json* node = &j;
      std::stringstream ss(path);
      std::string part;
      std::vector<std::string> parts;
      while (std::getline(ss, part, '.')) { parts.push_back(part); }
      if (parts.empty()) { throw ConfigError("--set: empty key path"); }
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) { node = &((*node)[parts[i]]); }
      (*node)[parts.back()] = parsed;
   }

   reject_unknown(j, {"model", "prior", "source", "noise_level", "seed", "dense_cap", "paths"},
                  "config");
   RunConfig c;
   if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(m, {"grid", "constants", "observation", "cfl_safety"}, "model");
      if (m.contains("grid")) { c.grid = parse_grid(m.at("grid")); }
      if (m.contains("constants")) { c.constants = parse_constants(m.at("constants")); }
      if (m.contains("observation")) { c.obs = parse_observation(m.at("observation")); }
      c.cfl_safety = get_or(m, "cfl_safety", c.cfl_safety, "model");
   }
   if (j.contains("prior")) { c.prior = parse_prior(j.at("prior")); }
   if (j.contains("source")) { c.source = parse_source(j.at("source")); }
   c.noise_level = get_or(j, "noise_level", c.noise_level, "config");
   c.seed = get_or(j, "seed", c.seed, "config");
   c.dense_cap = get_or(j, "dense_cap", c.dense_cap, "config");
   if (j.contains("paths")) {
      const json& p = j.at("paths");
      reject_unknown(p, {"artifact_dir", "output_dir"}, "paths");
      c.paths.artifact_dir = get_or(p, "artifact_dir", c.paths.artifact_dir, "paths");
      c.paths.output_dir = get_or(p, "output_dir", c.paths.output_dir, "paths");
   }

   // surface the structural errors early
   c.grid.validate();
   c.constants.validate();
   c.obs.validate(c.grid);
   c.prior.validate();
   c.source.validate(c.grid);
   if (c.noise_level < 0.0) { throw ConfigError("config: noise_level must be >= 0"); }
   return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
   std::ifstream is(path);
   if (!is) { throw IoError("cannot open config: " + path); }
   std::stringstream ss;
   ss << is.rdbuf();
   return parse_config_text(ss.str(), overrides);
}

std::string canonical_config_text(const RunConfig& c) {
   json j;
   j["model"]["grid"] = {{"seafloor_dim", c.grid.seafloor_dim}, {"nx", c.grid.nx},
                         {"ny", c.grid.ny},   {"nz", c.grid.nz},
                         {"dx", c.grid.dx},   {"dy", c.grid.dy},
                         {"dz", c.grid.dz}};
   j["model"]["constants"] = {{"rho", c.constants.rho},
                              {"bulk_modulus", c.constants.bulk_modulus},
                              {"gravity", c.constants.gravity}};
   j["model"]["observation"] = {{"data_dt", c.obs.data_dt},
                                {"n_steps", c.obs.n_steps},
                                {"qoi_subsample", c.obs.qoi_subsample},
                                {"sensor_indices", c.obs.sensor_indices},
                                {"qoi_indices", c.obs.qoi_indices}};
   j["model"]["cfl_safety"] = c.cfl_safety;
   j["prior"] = {{"alpha1", c.prior.alpha1},
                 {"alpha2", c.prior.alpha2},
                 {"robin_coeff", c.prior.effective_robin()},
                 {"mean_constant", c.prior.mean_constant}};
   json bumps = json::array();
   for (const auto& b : c.source.bumps) {
      bumps.push_back({{"amplitude", b.amplitude},
                       {"rise_time", b.rise_time},
                       {"rise_width_x", b.rise_width_x},
                       {"rise_width_y", b.rise_width_y},
                       {"center_x", b.center_x},
                       {"center_y", b.center_y}});
   }
   j["source"]["gaussians"] = bumps;
   j["noise_level"] = c.noise_level;
   return j.dump();
}

std::uint64_t config_hash(const RunConfig& config) {
   return fnv1a64(canonical_config_text(config));
}

std::string default_desk_config_text() {
   return R"({
  "model": {
    "grid": {"seafloor_dim": 1, "nx": 65, "ny": 1, "nz": 33,
             "dx": 250.0, "dy": 250.0, "dz": 125.0},
    "constants": {"rho": 1000.0, "bulk_modulus": 2.25e9, "gravity": 9.81},
    "observation": {
      "data_dt": 0.5, "n_steps": 24, "qoi_subsample": 4,
      "sensor_indices": [8, 16, 24, 32, 40, 48, 56],
      "qoi_indices": [32, 40, 48, 56]
    },
    "cfl_safety": 0.5
  },
  "prior": {"alpha1": 0.3, "alpha2": 1237792.96875, "mean_constant": 0.0},
  "source": {"gaussians": [
    {"amplitude": 4.0, "rise_time": 20.0, "rise_width_x": 2031.25,
     "rise_width_y": 4062.5, "center_x": 8125.0, "center_y": 8125.0},
    {"amplitude": 1.0, "rise_time": 10.0, "rise_width_x": 507.8125,
     "rise_width_y": 507.8125, "center_x": 8125.0, "center_y": 11171.875},
    {"amplitude": -0.5, "rise_time": 10.0, "rise_width_x": 507.8125,
     "rise_width_y": 1015.625, "center_x": 8886.71875, "center_y": 7109.375}
  ]},
  "noise_level": 0.04,
  "seed": 20260810,
  "dense_cap": 100000000,
  "paths": {"artifact_dir": "artifacts", "output_dir": "out"}
})";
}

RunConfig default_desk_config() { return parse_config_text(default_desk_config_text()); }

}  // namespace wavetwin
