#pragma once

#include <cmath>
#include <vector>

#include "wavetwin/space_time_field.hpp"
#include "wavetwin/wave_model.hpp"

namespace wavetwin {

/// One Gaussian component of the synthetic seafloor-motion rate: spatial
/// Gaussian envelope times a half-sine ramp in time that integrates to one
/// over (0, rise_time), so the total displacement per component equals its
/// amplitude.
struct GaussianBump {
   double amplitude = 1.0;     // m
   double rise_time = 10.0;    // s
   double rise_width_x = 1.0;  // m
   double rise_width_y = 1.0;  // m (unused for a 2D slice)
   double center_x = 0.0;      // m
   double center_y = 0.0;      // m

   void validate(const GridSpec& grid) const {
      if (!(rise_time > 0.0) || !(rise_width_x > 0.0) || !(rise_width_y > 0.0)) {
         throw ConfigError("source: rise time and widths must be positive");
      }
      if (center_x < 0.0 || center_x > grid.extent_x()) {
         throw ConfigError("source: center_x outside domain");
      }
      if (grid.seafloor_dim == 2 && (center_y < 0.0 || center_y > grid.extent_y())) {
         throw ConfigError("source: center_y outside domain");
      }
   }

   double temporal_factor(double t) const {
      if (t < 0.0 || t > rise_time) { return 0.0; }
      return (M_PI / (2.0 * rise_time)) * std::sin(M_PI * t / rise_time);
   }

   double eval(double x, double y, double t, int seafloor_dim) const {
      double arg = std::pow((x - center_x) / rise_width_x, 2);
      if (seafloor_dim == 2) { arg += std::pow((y - center_y) / rise_width_y, 2); }
      return amplitude * std::exp(-arg) * temporal_factor(t);
   }
};

struct SyntheticSource {
   std::vector<GaussianBump> bumps;

   void validate(const GridSpec& grid) const {
      for (const auto& b : bumps) { b.validate(grid); }
   }
};

/// Pointwise evaluation of the source on the seafloor grid at the data-step
/// start times t_k = k * data_dt (zero-order hold convention).
inline SpaceTimeField synth_source_eval(const SyntheticSource& source, const GridSpec& grid,
                                        int n_steps, double data_dt) {
   source.validate(grid);
   SpaceTimeField m(grid.n_columns(), n_steps, data_dt);
   for (int t = 0; t < n_steps; ++t) {
      const double time = t * data_dt;
      for (int s = 0; s < grid.n_columns(); ++s) {
         double v = 0.0;
         for (const auto& b : source.bumps) {
            v += b.eval(grid.column_x(s), grid.column_y(s), time, grid.seafloor_dim);
         }
         m.at(t, s) = v;
      }
   }
   return m;
}

}  // namespace wavetwin
