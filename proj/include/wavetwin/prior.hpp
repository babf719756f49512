#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "wavetwin/space_time_field.hpp"
#include "wavetwin/wave_model.hpp"

namespace wavetwin {

/// Matern-type Gaussian prior on the seafloor parameter field: the
/// covariance is the squared inverse of M = alpha1*I + alpha2*(-Lap_h)
/// with a Robin-type boundary contribution, assembled symmetrically on the
/// seafloor grid.  The prior acts spatially only and is applied
/// independently per time slice.
struct PriorSpec {
   double alpha1 = 1.0;
   double alpha2 = 1.0;     // m^2
   double robin_coeff = -1.0;  // 1/m scale; negative means default sqrt(alpha1*alpha2)
   double mean_constant = 0.0; // constant prior mean on the parameter field

   double effective_robin() const {
      return robin_coeff >= 0.0 ? robin_coeff : std::sqrt(alpha1 * alpha2);
   }
   void validate() const;
};

class EllipticPrior {
public:
   using SparseMat = Eigen::SparseMatrix<double>;

   EllipticPrior(const GridSpec& grid, const PriorSpec& spec);

   EllipticPrior(const EllipticPrior& other);
   EllipticPrior& operator=(const EllipticPrior& other);
   EllipticPrior(EllipticPrior&&) noexcept = default;
   EllipticPrior& operator=(EllipticPrior&&) noexcept = default;

   int n_nodes() const { return n_; }
   const PriorSpec& spec() const { return spec_; }
   const SparseMat& matrix() const { return mat_; }

   /// Covariance apply on one spatial slice: out = M^-1 M^-1 v.
   void cov_apply(const double* v, double* out) const;
   /// Precision apply: out = M M v.
   void precision_apply(const double* v, double* out) const;

   /// Blockwise-in-time application to a space-time field.
   SpaceTimeField cov_apply(const SpaceTimeField& v) const;
   SpaceTimeField precision_apply(const SpaceTimeField& v) const;

   /// Batched covariance apply on the columns of a dense matrix.
   Eigen::MatrixXd cov_apply(const Eigen::MatrixXd& v) const;

   /// Zero-mean Gaussian sample with covariance M^-2, drawn independently
   /// per time slice: slice = M^-1 xi with xi standard normal per node.
   /// Deterministic for a fixed seed.
   SpaceTimeField sample(int n_time, double dt, std::uint64_t seed) const;

   /// Marginal prior variance of node s: (M^-2)_ss.
   double pointwise_variance(int s) const;

   /// Number of sparse factorizations performed process-wide; the online
   /// phase must leave this unchanged.
   static long long factorization_count() { return factorizations().load(); }

private:
   static std::atomic<long long>& factorizations();

   PriorSpec spec_;
   int n_ = 0;
   SparseMat mat_;
   // unique_ptr because Eigen's solver type is pinned in place; the prior
   // itself stays movable
   std::unique_ptr<Eigen::SimplicialLLT<SparseMat>> llt_;
};

}  // namespace wavetwin
