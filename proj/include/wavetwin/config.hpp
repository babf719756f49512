#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavetwin/prior.hpp"
#include "wavetwin/synthetic_source.hpp"
#include "wavetwin/wave_model.hpp"

namespace wavetwin {

struct Paths {
   std::string artifact_dir = "artifacts";
   std::string output_dir = "out";
};

/// One JSON document drives every command.  Unknown keys are rejected;
/// omitted keys take the documented defaults.  All randomness flows from
/// `seed` via the sub-seed scheme in util.hpp.
struct RunConfig {
   GridSpec grid;
   PhysicalConstants constants;
   ObservationSpec obs;
   double cfl_safety = 0.5;
   PriorSpec prior;
   SyntheticSource source;
   double noise_level = 0.04;
   std::uint64_t seed = 1;
   std::int64_t dense_cap = 100'000'000;
   Paths paths;

   WaveModel build_model() const { return WaveModel(grid, constants, obs, cfl_safety); }
   EllipticPrior build_prior() const { return EllipticPrior(grid, prior); }
   SpaceTimeField prior_mean_field() const {
      SpaceTimeField m(grid.n_columns(), obs.n_steps, obs.data_dt);
      if (prior.mean_constant != 0.0) {
         std::fill(m.values.begin(), m.values.end(), prior.mean_constant);
      }
      return m;
   }
};

/// Load, validate and apply `--set key.path=value` overrides (values parsed
/// as JSON).
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});

/// Canonical JSON for the model-relevant subtree (everything except seed
/// and paths); identical configs hash identically across runs.
std::string canonical_config_text(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

/// The default desk-scale configuration shipped with the tool.
RunConfig default_desk_config();
std::string default_desk_config_text();

}  // namespace wavetwin
