#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "wavetwin/errors.hpp"

namespace wavetwin {

/// A real field sampled on a (time x space) grid, stored time-major:
/// values[t*n_space + s].  Used for parameter, data and QoI vectors.
struct SpaceTimeField {
   int n_space = 0;
   int n_time = 0;
   double dt = 0.0;
   std::vector<double> values;

   SpaceTimeField() = default;
   SpaceTimeField(int space, int time, double step)
      : n_space(space), n_time(time), dt(step),
        values(static_cast<std::size_t>(space) * time, 0.0) {}

   static SpaceTimeField zeros(int space, int time, double step) {
      return SpaceTimeField(space, time, step);
   }

   double& at(int t, int s) { return values[static_cast<std::size_t>(t) * n_space + s]; }
   double at(int t, int s) const { return values[static_cast<std::size_t>(t) * n_space + s]; }

   double* slice(int t) { return values.data() + static_cast<std::size_t>(t) * n_space; }
   const double* slice(int t) const { return values.data() + static_cast<std::size_t>(t) * n_space; }

   std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }

   /// Reinterpret groups of `factor` consecutive time slices as one wider
   /// slice.  The flat buffer is unchanged; only the (time, space) split moves.
   SpaceTimeField regrouped(int factor) const {
      if (factor < 1 || n_time % factor != 0) {
         throw DimensionError("regrouped: factor must divide n_time");
      }
      SpaceTimeField out;
      out.n_space = n_space * factor;
      out.n_time = n_time / factor;
      out.dt = dt * factor;
      out.values = values;
      return out;
   }

   /// Inverse of regrouped: split each slice into `factor` narrower slices.
   SpaceTimeField split(int factor) const {
      if (factor < 1 || n_space % factor != 0) {
         throw DimensionError("split: factor must divide n_space");
      }
      SpaceTimeField out;
      out.n_space = n_space / factor;
      out.n_time = n_time * factor;
      out.dt = dt / factor;
      out.values = values;
      return out;
   }

   /// Checks the field invariants: finite entries, positive time step.
   void validate(const char* what = "field") const {
      if (dt <= 0.0) {
         throw ConfigError(std::string(what) + ": dt must be positive");
      }
      for (double v : values) {
         if (!std::isfinite(v)) {
            throw NumericError(std::string(what) + ": non-finite entry");
         }
      }
   }
};

inline double dot(const SpaceTimeField& a, const SpaceTimeField& b) {
   if (a.values.size() != b.values.size()) {
      throw DimensionError("dot: size mismatch");
   }
   double acc = 0.0;
   for (std::size_t i = 0; i < a.values.size(); ++i) { acc += a.values[i] * b.values[i]; }
   return acc;
}

inline double norm2(const SpaceTimeField& a) {
   double acc = 0.0;
   for (double v : a.values) { acc += v * v; }
   return std::sqrt(acc);
}

}  // namespace wavetwin
