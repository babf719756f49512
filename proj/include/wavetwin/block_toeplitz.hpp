#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "wavetwin/space_time_field.hpp"

namespace wavetwin {

/// Causal block-lower-triangular Toeplitz operator, stored as its first
/// block column: block at lag k has shape rows_per_block x cols_per_block,
/// and the dense expansion places block[i-j] at block position (i,j) for
/// i >= j (zero above the diagonal).
///
/// Fast matvecs embed the block sequence in a block circulant of length L
/// (default: next power of two >= 2*lag_count) and apply one complex
/// block-matrix product per frequency bin.  Adjoint matvecs reuse the same
/// cache with conjugate-transposed bins; no separate adjoint storage.
///
/// Concurrency/determinism: the per-bin products are parallelized over
/// frequency bins only; within a bin the accumulation order is fixed
/// (ascending column index for matvec, ascending row index for adjoint),
/// so results are bitwise independent of the thread count.  A map is
/// immutable once the Fourier cache exists; concurrent matvecs on a shared
/// precomputed map are safe.
class BlockToeplitzMap {
public:
   static constexpr std::int64_t kDefaultDenseCap = 100'000'000;

   /// Builds the operator from its first block column, lag-major layout
   /// blocks[lag][row][col].
   BlockToeplitzMap(int rows_per_block, int cols_per_block, int lag_count,
                    std::vector<double> blocks);

   static BlockToeplitzMap zero(int rows_per_block, int cols_per_block, int lag_count);

   int rows_per_block() const { return rows_; }
   int cols_per_block() const { return cols_; }
   int lag_count() const { return lags_; }

   std::int64_t output_size() const { return std::int64_t(rows_) * lags_; }
   std::int64_t input_size() const { return std::int64_t(cols_) * lags_; }

   double block_entry(int lag, int r, int c) const {
      return blocks_[(std::size_t(lag) * rows_ + r) * cols_ + c];
   }
   double& block_entry(int lag, int r, int c) {
      return blocks_[(std::size_t(lag) * rows_ + r) * cols_ + c];
   }
   const std::vector<double>& blocks() const { return blocks_; }

   /// Smallest valid circulant embedding length for this map.
   int min_embed_length() const { return 2 * lags_ - 1; }
   /// Default embedding length: next power of two >= 2*lag_count.
   int default_embed_length() const;

   /// Populates the frequency-domain cache.  Idempotent for the same L;
   /// re-precomputing with a different valid L replaces the cache.
   void precompute_fourier();
   void precompute_fourier(int embed_length);

   bool fourier_ready() const { return cache_ != nullptr; }
   int embed_length() const;
   int bin_count() const;
   /// Frequency-domain block at bin f (rows x cols, row-major).
   const std::complex<double>* fourier_block(int bin) const;

   /// y = F x through the Fourier cache (auto-built with the default length
   /// if absent; that first build is not thread-safe).
   SpaceTimeField matvec(const SpaceTimeField& x) const;
   /// x = F* y through the same cache with conjugated bins.
   SpaceTimeField adjoint_matvec(const SpaceTimeField& y) const;

   /// Serial time-domain reference implementations (block convolution).
   SpaceTimeField matvec_direct(const SpaceTimeField& x) const;
   SpaceTimeField adjoint_matvec_direct(const SpaceTimeField& y) const;

   /// Dense expansion; guarded by an entry-count cap.
   Eigen::MatrixXd to_dense(std::int64_t dense_cap = kDefaultDenseCap) const;

   /// Singular values of the dense expansion, descending.
   Eigen::VectorXd singular_values(std::int64_t dense_cap = kDefaultDenseCap) const;

   BlockToeplitzMap(const BlockToeplitzMap& other);
   BlockToeplitzMap& operator=(const BlockToeplitzMap& other);
   BlockToeplitzMap(BlockToeplitzMap&&) noexcept;
   BlockToeplitzMap& operator=(BlockToeplitzMap&&) noexcept;
   ~BlockToeplitzMap();

private:
   struct FourierCache;

   void ensure_fourier() const;

   int rows_ = 0;
   int cols_ = 0;
   int lags_ = 0;
   std::vector<double> blocks_;              // [lag][row][col]
   mutable std::unique_ptr<FourierCache> cache_;
};

}  // namespace wavetwin
