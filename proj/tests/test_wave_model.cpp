#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/test_helpers.hpp"
#include "wavetwin/errors.hpp"
#include "wavetwin/wave_model.hpp"

using namespace wavetwin;
using namespace wavetwin::testing;

namespace {

// small 2D slice shared by most cases
WaveModel small_model() {
   GridSpec grid;
   grid.nx = 13;
   grid.nz = 5;
   grid.dx = 500.0;
   grid.dz = 250.0;
   ObservationSpec obs;
   obs.sensor_indices = {2, 6, 10};
   obs.qoi_indices = {4, 8};
   obs.data_dt = 0.5;
   obs.n_steps = 8;
   obs.qoi_subsample = 4;
   return WaveModel(grid, PhysicalConstants{}, obs);
}

WaveState random_state(const WaveModel& model, std::mt19937_64& rng) {
   std::normal_distribution<double> normal;
   WaveState w = model.make_state();
   for (double& v : w.data) { v = normal(rng); }
   return w;
}

double state_dot(const WaveState& a, const WaveState& b) {
   double acc = 0.0;
   for (std::size_t i = 0; i < a.data.size(); ++i) { acc += a.data[i] * b.data[i]; }
   return acc;
}

}  // namespace

TEST_CASE("constants and validation") {
   PhysicalConstants c;
   CHECK(c.sound_speed() == doctest::Approx(1500.0).epsilon(1e-14));
   CHECK(c.impedance() == doctest::Approx(1000.0 * 1500.0).epsilon(1e-14));
   PhysicalConstants bad;
   bad.rho = -1.0;
   CHECK_THROWS_AS(bad.validate(), ConfigError);

   GridSpec grid;
   grid.nx = 2;
   CHECK_THROWS_AS(grid.validate(), ConfigError);

   ObservationSpec obs;
   obs.sensor_indices = {1, 1};
   obs.qoi_indices = {0};
   CHECK_THROWS_AS(obs.validate(GridSpec{}), ConfigError);
}

TEST_CASE("cfl scaling") {
   GridSpec grid;
   grid.nx = 9;
   grid.nz = 5;
   grid.dx = 400.0;
   grid.dz = 200.0;
   ObservationSpec obs;
   obs.sensor_indices = {4};
   obs.qoi_indices = {4};
   obs.n_steps = 4;
   obs.qoi_subsample = 2;

   PhysicalConstants c;
   WaveModel base(grid, c, obs);

   SUBCASE("doubling the sound speed halves the limit") {
      PhysicalConstants fast = c;
      fast.bulk_modulus *= 4.0;  // c = sqrt(K/rho) doubles
      WaveModel faster(grid, fast, obs);
      CHECK(faster.cfl_max_dt() == doctest::Approx(base.cfl_max_dt() / 2.0).epsilon(1e-14));
   }
   SUBCASE("halving the smallest spacing halves the limit") {
      GridSpec fine = grid;
      fine.dz = 100.0;
      WaveModel finer(fine, c, obs);
      CHECK(finer.cfl_max_dt() == doctest::Approx(base.cfl_max_dt() / 2.0).epsilon(1e-14));
   }
   SUBCASE("long-run energy stays bounded at the default safety factor") {
      WaveModel model = small_model();
      std::mt19937_64 rng(11);
      WaveState w = random_state(model, rng);
      const double e0 = model.energy(w);
      for (int i = 0; i < 2000; ++i) { model.step(w, nullptr); }
      CHECK(model.energy(w) <= 1e3 * e0);
   }
}

TEST_CASE("single step") {
   WaveModel model = small_model();
   std::mt19937_64 rng(12);

   SUBCASE("zero state and forcing stay exactly zero") {
      WaveState w = model.make_state();
      std::vector<double> m(model.n_param(), 0.0);
      for (int i = 0; i < 50; ++i) { model.step(w, m.data()); }
      for (double v : w.data) { CHECK(v == 0.0); }
   }
   SUBCASE("the step is affine-linear in (state, forcing)") {
      std::normal_distribution<double> normal;
      WaveState w1 = random_state(model, rng);
      WaveState w2 = random_state(model, rng);
      std::vector<double> m1(model.n_param()), m2(model.n_param()), m12(model.n_param());
      for (int i = 0; i < model.n_param(); ++i) {
         m1[i] = normal(rng);
         m2[i] = normal(rng);
         m12[i] = m1[i] + m2[i];
      }
      WaveState sum = model.make_state();
      for (std::size_t i = 0; i < sum.data.size(); ++i) { sum.data[i] = w1.data[i] + w2.data[i]; }

      WaveState a = w1, b = w2, ab = sum, zero = model.make_state();
      model.step(a, m1.data());
      model.step(b, m2.data());
      model.step(ab, m12.data());
      model.step(zero, nullptr);

      double err = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < ab.data.size(); ++i) {
         err = std::max(err, std::abs(ab.data[i] - a.data[i] - b.data[i] + zero.data[i]));
         scale = std::max(scale, std::abs(ab.data[i]));
      }
      CHECK(err <= 1e-12 * scale);
   }
   SUBCASE("impulse response respects the causal cone") {
      GridSpec grid;
      grid.nx = 65;
      grid.nz = 5;
      grid.dx = 500.0;
      grid.dz = 250.0;
      ObservationSpec obs;
      obs.sensor_indices = {2};
      obs.qoi_indices = {2};
      obs.n_steps = 4;
      obs.qoi_subsample = 2;
      WaveModel model2(grid, PhysicalConstants{}, obs);
      std::vector<double> m(model2.n_param(), 0.0);
      m[32] = 1.0;  // impulse at the central seafloor column

      // one substep can spread at most one cell horizontally
      WaveState w1 = model2.make_state();
      model2.step(w1, m.data());
      const double* p1 = model2.pressure(w1);
      for (int k = 0; k < 5; ++k) {
         for (int i = 0; i < 65; ++i) {
            if (std::abs(i - 32) >= 2) { CHECK(p1[i + 65 * k] == 0.0); }
         }
      }

      // after 16 substeps the physical cone is about two cells wide; the
      // tails beyond cone + stencil margin drop super-exponentially
      WaveState w = model2.make_state();
      for (int i = 0; i < 16; ++i) { model2.step(w, m.data()); }
      const double cone_cells = 1500.0 * 16.0 * model2.solver_dt() / grid.dx;
      CHECK(cone_cells < 3.0);
      const double* p = model2.pressure(w);
      double peak = 0.0;
      for (int i = 0; i < 65 * 5; ++i) { peak = std::max(peak, std::abs(p[i])); }
      for (int k = 0; k < 5; ++k) {
         for (int i = 0; i < 65; ++i) {
            const int dist = std::abs(i - 32);
            if (dist >= 6) { CHECK(std::abs(p[i + 65 * k]) <= 1e-4 * peak); }
            if (dist >= 8) { CHECK(std::abs(p[i + 65 * k]) <= 1e-8 * peak); }
            if (dist >= 12) { CHECK(std::abs(p[i + 65 * k]) <= 1e-14 * peak); }
         }
      }
   }
}

TEST_CASE("transposed operators") {
   WaveModel model = small_model();
   std::mt19937_64 rng(13);

   SUBCASE("state propagator dot test") {
      for (int trial = 0; trial < 10; ++trial) {
         WaveState w = random_state(model, rng);
         WaveState lam = random_state(model, rng);
         WaveState aw = w, atl = lam;
         model.step(aw, nullptr);
         model.step_transpose(atl);
         const double lhs = state_dot(aw, lam);
         const double rhs = state_dot(w, atl);
         CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
      }
   }
   SUBCASE("forcing injection dot test") {
      std::normal_distribution<double> normal;
      for (int trial = 0; trial < 10; ++trial) {
         std::vector<double> m(model.n_param());
         for (double& v : m) { v = normal(rng); }
         WaveState lam = random_state(model, rng);
         WaveState cm = model.make_state();
         model.step(cm, m.data());
         std::vector<double> ct = model.collect_source_transpose(lam);
         const double lhs = state_dot(cm, lam);
         double rhs = 0.0;
         for (int i = 0; i < model.n_param(); ++i) { rhs += m[i] * ct[i]; }
         CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
      }
   }
   SUBCASE("zero adjoint state gives zero output") {
      WaveState lam = model.make_state();
      model.step_transpose(lam);
      for (double v : lam.data) { CHECK(v == 0.0); }
      std::vector<double> ct = model.collect_source_transpose(lam);
      for (double v : ct) { CHECK(v == 0.0); }
   }
}

TEST_CASE("observation operators") {
   WaveModel model = small_model();
   std::mt19937_64 rng(14);

   SUBCASE("zero state observes to zero") {
      WaveState w = model.make_state();
      std::vector<double> d(model.n_sensors()), q(model.n_qoi());
      model.observe(w, d.data());
      model.observe_qoi(w, q.data());
      for (double v : d) { CHECK(v == 0.0); }
      for (double v : q) { CHECK(v == 0.0); }
   }
   SUBCASE("unit pressure at a sensor column extracts a unit vector") {
      WaveState w = model.make_state();
      model.pressure(w)[6] = 1.0;  // bottom cell of sensor 1's column
      std::vector<double> d(model.n_sensors());
      model.observe(w, d.data());
      CHECK(d[0] == 0.0);
      CHECK(d[1] == 1.0);
      CHECK(d[2] == 0.0);
   }
   SUBCASE("extraction/scatter dot test") {
      std::normal_distribution<double> normal;
      WaveState w = random_state(model, rng);
      std::vector<double> y(model.n_sensors()), bw(model.n_sensors());
      for (double& v : y) { v = normal(rng); }
      model.observe(w, bw.data());
      WaveState scat = model.make_state();
      model.observe_transpose_add(scat, y.data());
      double lhs = 0.0;
      for (int j = 0; j < model.n_sensors(); ++j) { lhs += bw[j] * y[j]; }
      const double rhs = state_dot(w, scat);
      CHECK(std::abs(lhs - rhs) <= 1e-14 * std::abs(lhs));
   }
}

TEST_CASE("forward and transposed marches") {
   WaveModel model = small_model();
   std::mt19937_64 rng(15);
   const double dt = model.observation().data_dt;
   const int n_t = model.n_data_steps();

   SUBCASE("zero forcing gives zero output") {
      SpaceTimeField m(model.n_param(), n_t, dt);
      CHECK(norm2(model.simulate_p2o(m)) == 0.0);
      CHECK(norm2(model.simulate_p2q(m)) == 0.0);
   }
   SUBCASE("solver-step counter advances by n_steps * substeps per march") {
      SpaceTimeField m = random_field(model.n_param(), n_t, dt, rng);
      const long long before = model.solver_steps();
      model.simulate_p2o(m);
      CHECK(model.solver_steps() - before ==
            (long long)n_t * model.substeps_per_data_step());
   }
   SUBCASE("time-shift invariance") {
      SpaceTimeField m = random_field(model.n_param(), n_t, dt, rng);
      for (int s = 0; s < model.n_param(); ++s) {
         for (int t = n_t - 2; t < n_t; ++t) { m.at(t, s) = 0.0; }
      }
      const int shift = 2;
      SpaceTimeField m_shift(model.n_param(), n_t, dt);
      for (int t = 0; t + shift < n_t; ++t) {
         for (int s = 0; s < model.n_param(); ++s) { m_shift.at(t + shift, s) = m.at(t, s); }
      }
      SpaceTimeField d = model.simulate_p2o(m);
      SpaceTimeField d_shift = model.simulate_p2o(m_shift);
      double scale = 0.0;
      for (double v : d.values) { scale = std::max(scale, std::abs(v)); }
      for (int t = 0; t < shift; ++t) {
         for (int j = 0; j < model.n_sensors(); ++j) {
            CHECK(std::abs(d_shift.at(t, j)) <= 1e-12 * scale);
         }
      }
      for (int t = 0; t + shift < n_t; ++t) {
         for (int j = 0; j < model.n_sensors(); ++j) {
            CHECK(std::abs(d_shift.at(t + shift, j) - d.at(t, j)) <= 1e-12 * scale);
         }
      }
   }
   SUBCASE("causality is bitwise in the march") {
      SpaceTimeField m = random_field(model.n_param(), n_t, dt, rng);
      SpaceTimeField m_pert = m;
      const int k = 5;
      m_pert.at(k, 3) += 1.0;
      SpaceTimeField d = model.simulate_p2o(m);
      SpaceTimeField d_pert = model.simulate_p2o(m_pert);
      for (int t = 0; t < k; ++t) {
         for (int j = 0; j < model.n_sensors(); ++j) {
            CHECK(d.at(t, j) == d_pert.at(t, j));
         }
      }
   }
   SUBCASE("global transpose identities") {
      for (int trial = 0; trial < 5; ++trial) {
         SpaceTimeField m = random_field(model.n_param(), n_t, dt, rng);
         SpaceTimeField d = random_field(model.n_sensors(), n_t, dt, rng);
         const double lhs = dot(model.simulate_p2o(m), d);
         const double rhs = dot(m, model.simulate_p2o_transpose(d));
         CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));

         SpaceTimeField q = random_field(model.n_qoi(), model.n_qoi_steps(),
                                         dt * model.observation().qoi_subsample, rng);
         const double lhs_q = dot(model.simulate_p2q(m), q);
         const double rhs_q = dot(m, model.simulate_p2q_transpose(q));
         CHECK(std::abs(lhs_q - rhs_q) <= 1e-12 * std::abs(lhs_q));
      }
   }
   SUBCASE("transposing a zero source gives zero") {
      SpaceTimeField d(model.n_sensors(), n_t, dt);
      CHECK(norm2(model.simulate_p2o_transpose(d)) == 0.0);
   }
}

TEST_CASE("3D slab variant") {
   GridSpec grid;
   grid.seafloor_dim = 2;
   grid.nx = 7;
   grid.ny = 5;
   grid.nz = 4;
   grid.dx = 500.0;
   grid.dy = 500.0;
   grid.dz = 250.0;
   ObservationSpec obs;
   obs.sensor_indices = {8, 16, 24};
   obs.qoi_indices = {17};
   obs.data_dt = 0.5;
   obs.n_steps = 4;
   obs.qoi_subsample = 2;
   WaveModel model(grid, PhysicalConstants{}, obs);
   std::mt19937_64 rng(16);

   SUBCASE("step transpose dot test") {
      WaveState w = random_state(model, rng);
      WaveState lam = random_state(model, rng);
      WaveState aw = w, atl = lam;
      model.step(aw, nullptr);
      model.step_transpose(atl);
      const double lhs = state_dot(aw, lam);
      const double rhs = state_dot(w, atl);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
   }
   SUBCASE("march transpose dot test") {
      SpaceTimeField m = random_field(model.n_param(), 4, 0.5, rng);
      SpaceTimeField d = random_field(model.n_sensors(), 4, 0.5, rng);
      const double lhs = dot(model.simulate_p2o(m), d);
      const double rhs = dot(m, model.simulate_p2o_transpose(d));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
   }
}
