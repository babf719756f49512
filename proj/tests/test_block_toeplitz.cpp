#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "support/test_helpers.hpp"
#include "wavetwin/block_toeplitz.hpp"
#include "wavetwin/errors.hpp"

using namespace wavetwin;
using namespace wavetwin::testing;

TEST_CASE("construction and dense layout") {
   SUBCASE("1x1 identity block") {
      BlockToeplitzMap map(1, 1, 1, {1.0});
      Eigen::MatrixXd dense = map.to_dense();
      CHECK(dense.rows() == 1);
      CHECK(dense(0, 0) == 1.0);
   }
   SUBCASE("two lags lay out as lower-triangular Toeplitz") {
      BlockToeplitzMap map(1, 1, 2, {1.0, 2.0});
      Eigen::MatrixXd dense = map.to_dense();
      CHECK(dense(0, 0) == 1.0);
      CHECK(dense(0, 1) == 0.0);
      CHECK(dense(1, 0) == 2.0);
      CHECK(dense(1, 1) == 1.0);
   }
   SUBCASE("random blocks match the triangular assembly oracle entrywise") {
      std::mt19937_64 rng(1);
      auto blocks = random_blocks(2, 2, 3, rng);
      BlockToeplitzMap map(2, 2, 3, blocks);
      Eigen::MatrixXd expect = dense_from_blocks(2, 2, 3, blocks);
      CHECK((map.to_dense() - expect).cwiseAbs().maxCoeff() == 0.0);
   }
   SUBCASE("dimension mismatch is a structured error") {
      CHECK_THROWS_AS(BlockToeplitzMap(2, 2, 2, {1.0, 2.0}), DimensionError);
      CHECK_THROWS_AS(BlockToeplitzMap(0, 1, 1, {}), DimensionError);
   }
   SUBCASE("non-finite block entries are rejected") {
      CHECK_THROWS_AS(BlockToeplitzMap(1, 1, 1, {std::nan("")}), NumericError);
   }
}

TEST_CASE("fourier precompute") {
   SUBCASE("single impulse lag gives a constant spectrum") {
      const double c = 3.25;
      BlockToeplitzMap map(1, 1, 1, {c});
      map.precompute_fourier();
      CHECK(map.embed_length() == 2);
      for (int f = 0; f < map.bin_count(); ++f) {
         CHECK(map.fourier_block(f)[0].real() == doctest::Approx(c).epsilon(1e-15));
         CHECK(map.fourier_block(f)[0].imag() == doctest::Approx(0.0).epsilon(1e-15));
      }
   }
   SUBCASE("embedding length below 2*lags-1 is rejected") {
      BlockToeplitzMap map(1, 1, 4, std::vector<double>(4, 1.0));
      CHECK_THROWS_AS(map.precompute_fourier(6), DimensionError);
      map.precompute_fourier(7);  // minimum valid length
      CHECK(map.embed_length() == 7);
   }
   SUBCASE("inverse DFT of the cache reproduces the padded block sequence") {
      std::mt19937_64 rng(2);
      const int rows = 2, cols = 3, lags = 5;
      auto blocks = random_blocks(rows, cols, lags, rng);
      BlockToeplitzMap map(rows, cols, lags, blocks);
      map.precompute_fourier();
      const int L = map.embed_length();

      // naive inverse DFT per block entry, reconstructing the full complex
      // spectrum from the half-spectrum by conjugate symmetry
      double max_err = 0.0, scale = 0.0;
      for (int r = 0; r < rows; ++r) {
         for (int c = 0; c < cols; ++c) {
            for (int t = 0; t < L; ++t) {
               std::complex<double> acc{0.0, 0.0};
               for (int f = 0; f < L; ++f) {
                  std::complex<double> coef =
                     (f <= L / 2) ? map.fourier_block(f)[r * cols + c]
                                  : std::conj(map.fourier_block(L - f)[r * cols + c]);
                  const double ang = 2.0 * M_PI * f * t / L;
                  acc += coef * std::complex<double>(std::cos(ang), std::sin(ang));
               }
               const double want =
                  (t < lags) ? blocks[(std::size_t(t) * rows + r) * cols + c] : 0.0;
               max_err = std::max(max_err, std::abs(acc / double(L) - want));
               scale = std::max(scale, std::abs(want));
            }
         }
      }
      CHECK(max_err <= 1e-12 * scale);
   }
   SUBCASE("precompute is idempotent and keeps the blocks") {
      std::mt19937_64 rng(3);
      auto blocks = random_blocks(2, 2, 3, rng);
      BlockToeplitzMap map(2, 2, 3, blocks);
      map.precompute_fourier();
      map.precompute_fourier();
      CHECK(map.blocks() == blocks);
   }
}

TEST_CASE("matvec against the dense oracle") {
   std::mt19937_64 rng(4);
   SUBCASE("zero input maps to zero") {
      BlockToeplitzMap map(2, 3, 4, random_blocks(2, 3, 4, rng));
      SpaceTimeField x(3, 4, 0.5);
      CHECK(norm2(map.matvec(x)) == 0.0);
   }
   SUBCASE("single-lag identity block is the identity") {
      BlockToeplitzMap map(2, 2, 1, {1.0, 0.0, 0.0, 1.0});
      SpaceTimeField x = random_field(2, 1, 0.5, rng);
      SpaceTimeField y = map.matvec(x);
      for (int s = 0; s < 2; ++s) { CHECK(y.at(0, s) == doctest::Approx(x.at(0, s)).epsilon(1e-14)); }
   }
   SUBCASE("random 4-lag map matches the triple-loop oracle") {
      auto blocks = random_blocks(3, 5, 4, rng);
      BlockToeplitzMap map(3, 5, 4, blocks);
      Eigen::MatrixXd dense = dense_from_blocks(3, 5, 4, blocks);
      SpaceTimeField x = random_field(5, 4, 0.5, rng);
      CHECK(rel_err(dense * to_vec(x), to_vec(map.matvec(x))) <= 1e-10);
      CHECK(rel_err(dense * to_vec(x), to_vec(map.matvec_direct(x))) <= 1e-14);
   }
   SUBCASE("dimension mismatch") {
      BlockToeplitzMap map(2, 3, 4, random_blocks(2, 3, 4, rng));
      SpaceTimeField bad(2, 4, 0.5);
      CHECK_THROWS_AS(map.matvec(bad), DimensionError);
      SpaceTimeField bad2(3, 3, 0.5);
      CHECK_THROWS_AS(map.matvec(bad2), DimensionError);
   }
}

TEST_CASE("fft matvec equals dense across lag counts") {
   std::mt19937_64 rng(5);
   for (int lags : {1, 2, 3, 8, 17, 100}) {
      const int rows = 1 + int(rng() % 8);
      const int cols = 1 + int(rng() % 32);
      auto blocks = random_blocks(rows, cols, lags, rng);
      BlockToeplitzMap map(rows, cols, lags, blocks);
      Eigen::MatrixXd dense = dense_from_blocks(rows, cols, lags, blocks);
      SpaceTimeField x = random_field(cols, lags, 0.25, rng);
      SpaceTimeField y = random_field(rows, lags, 0.25, rng);
      CHECK(rel_err(dense * to_vec(x), to_vec(map.matvec(x))) <= 1e-10);
      CHECK(rel_err(dense.transpose() * to_vec(y), to_vec(map.adjoint_matvec(y))) <= 1e-10);
   }
}

TEST_CASE("adjoint identity") {
   std::mt19937_64 rng(6);
   SUBCASE("dot-product test over 100 random trials") {
      for (int trial = 0; trial < 100; ++trial) {
         const int rows = 1 + int(rng() % 6);
         const int cols = 1 + int(rng() % 6);
         const int lags = 1 + int(rng() % 12);
         BlockToeplitzMap map(rows, cols, lags, random_blocks(rows, cols, lags, rng));
         SpaceTimeField x = random_field(cols, lags, 0.5, rng);
         SpaceTimeField y = random_field(rows, lags, 0.5, rng);
         const double lhs = dot(map.matvec(x), y);
         const double rhs = dot(x, map.adjoint_matvec(y));
         CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
      }
   }
   SUBCASE("single-lag adjoint equals the transposed dense matvec") {
      auto blocks = random_blocks(3, 4, 1, rng);
      BlockToeplitzMap map(3, 4, 1, blocks);
      Eigen::MatrixXd dense = dense_from_blocks(3, 4, 1, blocks);
      SpaceTimeField y = random_field(3, 1, 0.5, rng);
      CHECK(rel_err(dense.transpose() * to_vec(y), to_vec(map.adjoint_matvec(y))) <= 1e-12);
   }
   SUBCASE("zero input maps to zero") {
      BlockToeplitzMap map(2, 3, 4, random_blocks(2, 3, 4, rng));
      SpaceTimeField y(2, 4, 0.5);
      CHECK(norm2(map.adjoint_matvec(y)) == 0.0);
   }
}

TEST_CASE("operator properties") {
   std::mt19937_64 rng(7);
   SUBCASE("causality: inputs zero before k give outputs zero before k") {
      const int lags = 9, rows = 2, cols = 3, k = 4;
      BlockToeplitzMap map(rows, cols, lags, random_blocks(rows, cols, lags, rng));
      SpaceTimeField x(cols, lags, 0.5);
      std::normal_distribution<double> normal;
      for (int t = k; t < lags; ++t) {
         for (int s = 0; s < cols; ++s) { x.at(t, s) = normal(rng); }
      }
      SpaceTimeField y_direct = map.matvec_direct(x);
      SpaceTimeField y_fft = map.matvec(x);
      double late = 0.0;
      for (double v : y_fft.values) { late = std::max(late, std::abs(v)); }
      for (int t = 0; t < k; ++t) {
         for (int s = 0; s < rows; ++s) {
            CHECK(y_direct.at(t, s) == 0.0);  // exact for the reference path
            CHECK(std::abs(y_fft.at(t, s)) <= 1e-12 * late);
         }
      }
   }
   SUBCASE("linearity") {
      const int lags = 6, rows = 3, cols = 2;
      BlockToeplitzMap map(rows, cols, lags, random_blocks(rows, cols, lags, rng));
      SpaceTimeField x = random_field(cols, lags, 0.5, rng);
      SpaceTimeField y = random_field(cols, lags, 0.5, rng);
      const double a = 1.7, b = -0.4;
      SpaceTimeField combo(cols, lags, 0.5);
      for (std::size_t i = 0; i < combo.values.size(); ++i) {
         combo.values[i] = a * x.values[i] + b * y.values[i];
      }
      Eigen::VectorXd lhs = to_vec(map.matvec(combo));
      Eigen::VectorXd rhs = a * to_vec(map.matvec(x)) + b * to_vec(map.matvec(y));
      CHECK(rel_err(rhs, lhs) <= 1e-12);
   }
}

TEST_CASE("concurrent matvecs on a shared precomputed map") {
   std::mt19937_64 rng(9);
   const int rows = 3, cols = 5, lags = 16;
   BlockToeplitzMap map(rows, cols, lags, random_blocks(rows, cols, lags, rng));
   map.precompute_fourier();

   std::vector<SpaceTimeField> inputs;
   std::vector<SpaceTimeField> expected;
   for (int i = 0; i < 8; ++i) {
      inputs.push_back(random_field(cols, lags, 0.5, rng));
      expected.push_back(map.matvec(inputs.back()));
   }

   std::vector<SpaceTimeField> got(8);
#pragma omp parallel for num_threads(4) schedule(dynamic)
   for (int i = 0; i < 8; ++i) { got[std::size_t(i)] = map.matvec(inputs[std::size_t(i)]); }

   for (int i = 0; i < 8; ++i) {
      CHECK(got[std::size_t(i)].values == expected[std::size_t(i)].values);
   }
}

TEST_CASE("singular values") {
   SUBCASE("single-lag identity has unit spectrum") {
      BlockToeplitzMap map(3, 3, 1,
                           {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0});
      Eigen::VectorXd sv = map.singular_values();
      for (Eigen::Index i = 0; i < sv.size(); ++i) {
         CHECK(sv[i] == doctest::Approx(1.0).epsilon(1e-12));
      }
   }
   SUBCASE("zero map has zero spectrum") {
      BlockToeplitzMap map = BlockToeplitzMap::zero(2, 3, 4);
      CHECK(map.singular_values().maxCoeff() == 0.0);
   }
   SUBCASE("spectrum is descending") {
      std::mt19937_64 rng(8);
      BlockToeplitzMap map(2, 3, 5, random_blocks(2, 3, 5, rng));
      Eigen::VectorXd sv = map.singular_values();
      for (Eigen::Index i = 1; i < sv.size(); ++i) { CHECK(sv[i] <= sv[i - 1]); }
   }
   SUBCASE("dense cap is enforced") {
      BlockToeplitzMap map = BlockToeplitzMap::zero(4, 4, 10);
      CHECK_THROWS_AS(map.to_dense(100), NumericError);
   }
}
