#include "wavetwin/block_toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>

#include "wavetwin/errors.hpp"

namespace wavetwin {

namespace {

// The FFTW planner is not thread-safe; plan creation/destruction is
// serialized globally.  Execution via the new-array interface is safe.
std::mutex& planner_mutex() {
   static std::mutex m;
   return m;
}

struct PlanDeleter {
   void operator()(fftw_plan p) const {
      if (p) {
         std::lock_guard<std::mutex> lock(planner_mutex());
         fftw_destroy_plan(p);
      }
   }
};

using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

// Batched 1-D r2c plan over `howmany` interleaved sequences of length n:
// real layout [n][howmany], complex layout [n/2+1][howmany].
PlanPtr make_r2c(int n, int howmany) {
   std::vector<double> in(std::size_t(n) * howmany);
   std::vector<std::complex<double>> out(std::size_t(n / 2 + 1) * howmany);
   std::lock_guard<std::mutex> lock(planner_mutex());
   fftw_plan p = fftw_plan_many_dft_r2c(
      1, &n, howmany,
      in.data(), nullptr, howmany, 1,
      reinterpret_cast<fftw_complex*>(out.data()), nullptr, howmany, 1,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
   return PlanPtr(p);
}

PlanPtr make_c2r(int n, int howmany) {
   std::vector<std::complex<double>> in(std::size_t(n / 2 + 1) * howmany);
   std::vector<double> out(std::size_t(n) * howmany);
   std::lock_guard<std::mutex> lock(planner_mutex());
   fftw_plan p = fftw_plan_many_dft_c2r(
      1, &n, howmany,
      reinterpret_cast<fftw_complex*>(in.data()), nullptr, howmany, 1,
      out.data(), nullptr, howmany, 1,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
   return PlanPtr(p);
}

int next_pow2(int n) {
   int p = 1;
   while (p < n) { p *= 2; }
   return p;
}

}  // namespace

struct BlockToeplitzMap::FourierCache {
   int embed_len = 0;
   int bins = 0;
   // DFT along the lag axis of the zero-padded block sequence, [bin][row][col].
   std::vector<std::complex<double>> spectrum;
   PlanPtr fwd_cols;   // r2c on [L][cols]
   PlanPtr inv_rows;   // c2r on [bins][rows]
   PlanPtr fwd_rows;   // r2c on [L][rows]   (adjoint path)
   PlanPtr inv_cols;   // c2r on [bins][cols]
};

BlockToeplitzMap::BlockToeplitzMap(int rows_per_block, int cols_per_block, int lag_count,
                                   std::vector<double> blocks)
   : rows_(rows_per_block), cols_(cols_per_block), lags_(lag_count), blocks_(std::move(blocks)) {
   if (rows_ <= 0 || cols_ <= 0 || lags_ <= 0) {
      throw DimensionError("BlockToeplitzMap: block dims and lag count must be positive");
   }
   const std::size_t expect = std::size_t(rows_) * cols_ * lags_;
   if (blocks_.size() != expect) {
      throw DimensionError("BlockToeplitzMap: block buffer size does not match dims");
   }
   for (double v : blocks_) {
      if (!std::isfinite(v)) {
         throw NumericError("BlockToeplitzMap: non-finite block entry");
      }
   }
}

BlockToeplitzMap BlockToeplitzMap::zero(int rows_per_block, int cols_per_block, int lag_count) {
   return BlockToeplitzMap(rows_per_block, cols_per_block, lag_count,
                           std::vector<double>(std::size_t(rows_per_block) * cols_per_block * lag_count, 0.0));
}

BlockToeplitzMap::~BlockToeplitzMap() = default;
BlockToeplitzMap::BlockToeplitzMap(BlockToeplitzMap&&) noexcept = default;
BlockToeplitzMap& BlockToeplitzMap::operator=(BlockToeplitzMap&&) noexcept = default;

BlockToeplitzMap::BlockToeplitzMap(const BlockToeplitzMap& other)
   : rows_(other.rows_), cols_(other.cols_), lags_(other.lags_), blocks_(other.blocks_) {
   if (other.cache_) { precompute_fourier(other.cache_->embed_len); }
}

BlockToeplitzMap& BlockToeplitzMap::operator=(const BlockToeplitzMap& other) {
   if (this != &other) {
      rows_ = other.rows_;
      cols_ = other.cols_;
      lags_ = other.lags_;
      blocks_ = other.blocks_;
      cache_.reset();
      if (other.cache_) { precompute_fourier(other.cache_->embed_len); }
   }
   return *this;
}

int BlockToeplitzMap::default_embed_length() const { return next_pow2(2 * lags_); }

void BlockToeplitzMap::precompute_fourier() { precompute_fourier(default_embed_length()); }

void BlockToeplitzMap::precompute_fourier(int embed_length) {
   if (embed_length < min_embed_length()) {
      throw DimensionError("precompute_fourier: embedding length below 2*lag_count-1");
   }
   if (cache_ && cache_->embed_len == embed_length) { return; }

   auto cache = std::make_unique<FourierCache>();
   cache->embed_len = embed_length;
   cache->bins = embed_length / 2 + 1;

   const int bs = rows_ * cols_;
   std::vector<double> padded(std::size_t(embed_length) * bs, 0.0);
   std::copy(blocks_.begin(), blocks_.end(), padded.begin());
   cache->spectrum.assign(std::size_t(cache->bins) * bs, {0.0, 0.0});

   PlanPtr block_plan = make_r2c(embed_length, bs);
   if (!block_plan) { throw NumericError("precompute_fourier: FFTW planning failed"); }
   fftw_execute_dft_r2c(block_plan.get(), padded.data(),
                        reinterpret_cast<fftw_complex*>(cache->spectrum.data()));

   cache->fwd_cols = make_r2c(embed_length, cols_);
   cache->inv_rows = make_c2r(embed_length, rows_);
   cache->fwd_rows = make_r2c(embed_length, rows_);
   cache->inv_cols = make_c2r(embed_length, cols_);
   if (!cache->fwd_cols || !cache->inv_rows || !cache->fwd_rows || !cache->inv_cols) {
      throw NumericError("precompute_fourier: FFTW planning failed");
   }

   cache_ = std::move(cache);
}

void BlockToeplitzMap::ensure_fourier() const {
   if (!cache_) { const_cast<BlockToeplitzMap*>(this)->precompute_fourier(); }
}

int BlockToeplitzMap::embed_length() const {
   return cache_ ? cache_->embed_len : 0;
}

int BlockToeplitzMap::bin_count() const {
   return cache_ ? cache_->bins : 0;
}

const std::complex<double>* BlockToeplitzMap::fourier_block(int bin) const {
   return cache_->spectrum.data() + std::size_t(bin) * rows_ * cols_;
}

SpaceTimeField BlockToeplitzMap::matvec(const SpaceTimeField& x) const {
   if (x.n_space != cols_ || x.n_time != lags_) {
      throw DimensionError("bt matvec: input field dims do not match map");
   }
   ensure_fourier();
   const FourierCache& c = *cache_;
   const int L = c.embed_len;
   const int bins = c.bins;

   std::vector<double> pad_in(std::size_t(L) * cols_, 0.0);
   std::copy(x.values.begin(), x.values.end(), pad_in.begin());
   std::vector<std::complex<double>> spec_in(std::size_t(bins) * cols_);
   fftw_execute_dft_r2c(c.fwd_cols.get(), pad_in.data(),
                        reinterpret_cast<fftw_complex*>(spec_in.data()));

   std::vector<std::complex<double>> spec_out(std::size_t(bins) * rows_);
#pragma omp parallel for schedule(static) if (std::size_t(bins) * rows_ * cols_ > 16384)
   for (int f = 0; f < bins; ++f) {
      const std::complex<double>* B = c.spectrum.data() + std::size_t(f) * rows_ * cols_;
      const std::complex<double>* xin = spec_in.data() + std::size_t(f) * cols_;
      std::complex<double>* yout = spec_out.data() + std::size_t(f) * rows_;
      for (int r = 0; r < rows_; ++r) {
         std::complex<double> acc{0.0, 0.0};
         const std::complex<double>* row = B + std::size_t(r) * cols_;
         for (int cc = 0; cc < cols_; ++cc) { acc += row[cc] * xin[cc]; }
         yout[r] = acc;
      }
   }

   std::vector<double> pad_out(std::size_t(L) * rows_);
   fftw_execute_dft_c2r(c.inv_rows.get(),
                        reinterpret_cast<fftw_complex*>(spec_out.data()), pad_out.data());

   SpaceTimeField y(rows_, lags_, x.dt);
   const double scale = 1.0 / L;
   for (std::size_t i = 0; i < y.values.size(); ++i) { y.values[i] = pad_out[i] * scale; }
   return y;
}

SpaceTimeField BlockToeplitzMap::adjoint_matvec(const SpaceTimeField& y) const {
   if (y.n_space != rows_ || y.n_time != lags_) {
      throw DimensionError("bt adjoint matvec: input field dims do not match map");
   }
   ensure_fourier();
   const FourierCache& c = *cache_;
   const int L = c.embed_len;
   const int bins = c.bins;

   std::vector<double> pad_in(std::size_t(L) * rows_, 0.0);
   std::copy(y.values.begin(), y.values.end(), pad_in.begin());
   std::vector<std::complex<double>> spec_in(std::size_t(bins) * rows_);
   fftw_execute_dft_r2c(c.fwd_rows.get(), pad_in.data(),
                        reinterpret_cast<fftw_complex*>(spec_in.data()));

   std::vector<std::complex<double>> spec_out(std::size_t(bins) * cols_);
#pragma omp parallel for schedule(static) if (std::size_t(bins) * rows_ * cols_ > 16384)
   for (int f = 0; f < bins; ++f) {
      const std::complex<double>* B = c.spectrum.data() + std::size_t(f) * rows_ * cols_;
      const std::complex<double>* yin = spec_in.data() + std::size_t(f) * rows_;
      std::complex<double>* xout = spec_out.data() + std::size_t(f) * cols_;
      for (int cc = 0; cc < cols_; ++cc) { xout[cc] = {0.0, 0.0}; }
      for (int r = 0; r < rows_; ++r) {
         const std::complex<double>* row = B + std::size_t(r) * cols_;
         const std::complex<double> yr = yin[r];
         for (int cc = 0; cc < cols_; ++cc) { xout[cc] += std::conj(row[cc]) * yr; }
      }
   }

   std::vector<double> pad_out(std::size_t(L) * cols_);
   fftw_execute_dft_c2r(c.inv_cols.get(),
                        reinterpret_cast<fftw_complex*>(spec_out.data()), pad_out.data());

   SpaceTimeField x(cols_, lags_, y.dt);
   const double scale = 1.0 / L;
   for (std::size_t i = 0; i < x.values.size(); ++i) { x.values[i] = pad_out[i] * scale; }
   return x;
}

SpaceTimeField BlockToeplitzMap::matvec_direct(const SpaceTimeField& x) const {
   if (x.n_space != cols_ || x.n_time != lags_) {
      throw DimensionError("bt matvec_direct: input field dims do not match map");
   }
   SpaceTimeField y(rows_, lags_, x.dt);
   for (int t = 0; t < lags_; ++t) {
      double* out = y.slice(t);
      for (int j = 0; j <= t; ++j) {
         const double* B = blocks_.data() + std::size_t(t - j) * rows_ * cols_;
         const double* xin = x.slice(j);
         for (int r = 0; r < rows_; ++r) {
            double acc = 0.0;
            const double* row = B + std::size_t(r) * cols_;
            for (int cc = 0; cc < cols_; ++cc) { acc += row[cc] * xin[cc]; }
            out[r] += acc;
         }
      }
   }
   return y;
}

SpaceTimeField BlockToeplitzMap::adjoint_matvec_direct(const SpaceTimeField& y) const {
   if (y.n_space != rows_ || y.n_time != lags_) {
      throw DimensionError("bt adjoint_matvec_direct: input field dims do not match map");
   }
   SpaceTimeField x(cols_, lags_, y.dt);
   for (int j = 0; j < lags_; ++j) {
      double* out = x.slice(j);
      for (int t = j; t < lags_; ++t) {
         const double* B = blocks_.data() + std::size_t(t - j) * rows_ * cols_;
         const double* yin = y.slice(t);
         for (int r = 0; r < rows_; ++r) {
            const double* row = B + std::size_t(r) * cols_;
            const double yr = yin[r];
            for (int cc = 0; cc < cols_; ++cc) { out[cc] += row[cc] * yr; }
         }
      }
   }
   return x;
}

Eigen::MatrixXd BlockToeplitzMap::to_dense(std::int64_t dense_cap) const {
   const std::int64_t entries = output_size() * input_size();
   if (entries > dense_cap) {
      throw NumericError("to_dense: dense expansion exceeds entry cap");
   }
   Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(output_size(), input_size());
   for (int i = 0; i < lags_; ++i) {
      for (int j = 0; j <= i; ++j) {
         const double* B = blocks_.data() + std::size_t(i - j) * rows_ * cols_;
         for (int r = 0; r < rows_; ++r) {
            for (int cc = 0; cc < cols_; ++cc) {
               dense(std::int64_t(i) * rows_ + r, std::int64_t(j) * cols_ + cc) =
                  B[std::size_t(r) * cols_ + cc];
            }
         }
      }
   }
   return dense;
}

Eigen::VectorXd BlockToeplitzMap::singular_values(std::int64_t dense_cap) const {
   Eigen::MatrixXd dense = to_dense(dense_cap);
   Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
   return svd.singularValues();
}

}  // namespace wavetwin
