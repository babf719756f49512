#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "wavetwin/space_time_field.hpp"

namespace wavetwin {

/// Seawater constants for the acoustic-gravity system.  Sound speed and
/// impedance are derived on demand, so they are exactly consistent with
/// rho and the bulk modulus.
struct PhysicalConstants {
   double rho = 1000.0;           // kg/m^3
   double bulk_modulus = 2.25e9;  // Pa
   double gravity = 9.81;         // m/s^2

   double sound_speed() const;    // c = sqrt(K/rho)
   double impedance() const;      // Z = rho*c

   void validate() const;
};

/// Structured grid of cells: nx*ny horizontal columns, nz layers.  The
/// parameter field lives on the seafloor (one value per column), the
/// surface height on the top boundary (one value per column).
/// seafloor_dim selects a 2D x-z slice (ny must be 1) or a full 3D box.
struct GridSpec {
   int seafloor_dim = 1;  // 1 or 2 horizontal dimensions
   int nx = 65;
   int ny = 1;
   int nz = 9;
   double dx = 250.0;
   double dy = 250.0;
   double dz = 125.0;
   std::int64_t state_cap = 100'000'000;

   int n_columns() const { return nx * ny; }
   double extent_x() const { return nx * dx; }
   double extent_y() const { return ny * dy; }
   double extent_z() const { return nz * dz; }
   /// Center coordinates of horizontal column s.
   double column_x(int s) const { return (s % nx + 0.5) * dx; }
   double column_y(int s) const { return (s / nx + 0.5) * dy; }

   void validate() const;
};

/// Sensor and QoI locations are horizontal column indices (seafloor grid
/// for sensors, surface grid for QoIs).  Parameters and data share the
/// coarse step data_dt; QoIs are sampled every qoi_subsample data steps.
struct ObservationSpec {
   std::vector<int> sensor_indices;
   std::vector<int> qoi_indices;
   double data_dt = 0.5;
   int n_steps = 40;       // number of data steps N_t
   int qoi_subsample = 5;  // N_t / N_t^q

   int n_sensors() const { return int(sensor_indices.size()); }
   int n_qoi() const { return int(qoi_indices.size()); }
   int n_qoi_steps() const { return n_steps / qoi_subsample; }

   void validate(const GridSpec& grid) const;
};

/// Flat state vector: [u_x | u_y | u_z | p | eta].  Component views are
/// provided by the owning WaveModel.
struct WaveState {
   std::vector<double> data;

   void set_zero() { std::fill(data.begin(), data.end(), 0.0); }
   std::size_t size() const { return data.size(); }
};

/// Explicit staggered-grid discretization of the linear acoustic-gravity
/// wave system with RK4 time stepping and zero-order hold of the seafloor
/// forcing within each solver substep.
///
/// Unknowns: pressure per cell, normal velocity per interior face plus the
/// surface faces, and the surface height per column.  Boundary closures:
///   - seafloor faces carry the forcing (u.n given by the parameter),
///   - surface pressure is rho*g*eta with d(eta)/dt the surface face
///     velocity,
///   - lateral faces are impedance-absorbing (u.n = p/Z), including the
///     cells adjoining the surface and bottom corners (same closure per
///     face; validated through the transpose tests).
///
/// One step is exactly affine in (state, forcing), so the map is a discrete
/// LTI system; transposed steps apply the exact transpose of the same
/// matrices.  Spatial loops are parallelized over independent outputs only,
/// so results do not depend on the thread count.
class WaveModel {
public:
   WaveModel(GridSpec grid, PhysicalConstants constants, ObservationSpec obs,
             double cfl_safety = 0.5);

   // counters are carried across copies/moves by value
   WaveModel(const WaveModel& other)
      : grid_(other.grid_), constants_(other.constants_), obs_(other.obs_),
        cfl_safety_(other.cfl_safety_), solver_dt_(other.solver_dt_),
        substeps_(other.substeps_), n_ux_(other.n_ux_), n_uy_(other.n_uy_),
        n_uz_(other.n_uz_), n_p_(other.n_p_), n_eta_(other.n_eta_),
        state_size_(other.state_size_), solver_steps_(other.solver_steps_.load()),
        marches_(other.marches_.load()) {}
   WaveModel(WaveModel&& other) noexcept : WaveModel(other) {}

   const GridSpec& grid() const { return grid_; }
   const PhysicalConstants& constants() const { return constants_; }
   const ObservationSpec& observation() const { return obs_; }

   /// Stability-limited solver step for this scheme.
   double cfl_max_dt() const;
   double solver_dt() const { return solver_dt_; }
   int substeps_per_data_step() const { return substeps_; }
   double cfl_safety() const { return cfl_safety_; }

   int n_param() const { return grid_.n_columns(); }
   int n_sensors() const { return obs_.n_sensors(); }
   int n_qoi() const { return obs_.n_qoi(); }
   int n_data_steps() const { return obs_.n_steps; }
   int n_qoi_steps() const { return obs_.n_qoi_steps(); }
   int state_size() const { return state_size_; }

   WaveState make_state() const;

   // Component views of a state vector.
   double* velocity_x(WaveState& w) const { return w.data.data(); }
   double* velocity_y(WaveState& w) const { return w.data.data() + n_ux_; }
   double* velocity_z(WaveState& w) const { return w.data.data() + n_ux_ + n_uy_; }
   double* pressure(WaveState& w) const { return w.data.data() + n_ux_ + n_uy_ + n_uz_; }
   double* surface_height(WaveState& w) const {
      return w.data.data() + n_ux_ + n_uy_ + n_uz_ + n_p_;
   }
   const double* pressure(const WaveState& w) const {
      return w.data.data() + n_ux_ + n_uy_ + n_uz_;
   }
   const double* surface_height(const WaveState& w) const {
      return w.data.data() + n_ux_ + n_uy_ + n_uz_ + n_p_;
   }

   /// One RK4 substep: w <- A w + C m, with m (length n_param) held constant
   /// over the substep.  Pass nullptr for zero forcing.
   void step(WaveState& w, const double* m_slice) const;

   /// One transposed substep: w <- A^T w.
   void step_transpose(WaveState& w) const;

   /// C^T applied to an adjoint state; returns a seafloor slice (length
   /// n_param).
   std::vector<double> collect_source_transpose(const WaveState& adj) const;

   void observe(const WaveState& w, double* out) const;
   void observe_qoi(const WaveState& w, double* out) const;
   void observe_transpose_add(WaveState& w, const double* data_slice) const;
   void observe_qoi_transpose_add(WaveState& w, const double* qoi_slice) const;

   /// Forward map: seafloor forcing (n_param x n_steps at data_dt) to
   /// sensor pressures (n_sensors x n_steps).
   SpaceTimeField simulate_p2o(const SpaceTimeField& m) const;
   /// Forward map to surface heights at QoI columns, sampled every
   /// qoi_subsample data steps.
   SpaceTimeField simulate_p2q(const SpaceTimeField& m) const;
   /// Exact transposes of the two maps, realized as reverse-time transposed
   /// marches.
   SpaceTimeField simulate_p2o_transpose(const SpaceTimeField& d_tilde) const;
   SpaceTimeField simulate_p2q_transpose(const SpaceTimeField& q_tilde) const;

   /// Total RK4 substeps taken (forward and transposed); each simulate call
   /// adds exactly n_steps * substeps_per_data_step().
   long long solver_steps() const { return solver_steps_.load(); }
   long long marches() const { return marches_.load(); }

   double energy(const WaveState& w) const;

private:
   struct Workspace {
      WaveState k1, k2, k3, k4, u;
   };

   void rhs_apply(const WaveState& w, WaveState& out) const;
   void rhs_transpose_apply(const WaveState& w, WaveState& out) const;
   void add_source(const double* m_slice, WaveState& out) const;
   void source_transpose_dot(const WaveState& w, double scale, double* m_out) const;
   void step_ws(WaveState& w, const double* m_slice, Workspace& ws) const;
   /// Fused transposed coarse substep: accumulates C^T contributions into
   /// m_acc and advances w <- A^T w.
   void transposed_substep_collect(WaveState& w, double* m_acc, Workspace& ws) const;
   void check_finite(const WaveState& w, int data_step) const;

   GridSpec grid_;
   PhysicalConstants constants_;
   ObservationSpec obs_;
   double cfl_safety_;
   double solver_dt_;
   int substeps_;

   int n_ux_ = 0, n_uy_ = 0, n_uz_ = 0, n_p_ = 0, n_eta_ = 0;
   int state_size_ = 0;

   mutable std::atomic<long long> solver_steps_{0};
   mutable std::atomic<long long> marches_{0};
};

}  // namespace wavetwin
