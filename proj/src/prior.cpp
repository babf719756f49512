#include "wavetwin/prior.hpp"

#include <random>
#include <vector>

#include "wavetwin/errors.hpp"

namespace wavetwin {

void PriorSpec::validate() const {
   if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) {
      throw ConfigError("prior: alpha1 and alpha2 must be positive");
   }
}

std::atomic<long long>& EllipticPrior::factorizations() {
   static std::atomic<long long> count{0};
   return count;
}

EllipticPrior::EllipticPrior(const GridSpec& grid, const PriorSpec& spec) : spec_(spec) {
   spec_.validate();
   n_ = grid.n_columns();
   const int nx = grid.nx;
   const int ny = grid.ny;
   const double beta = spec_.effective_robin();

   // M = alpha1*I + alpha2 * D^T D / h^2 per direction (Neumann stencil)
   // plus beta/h on boundary-node diagonals (Robin contribution).  The
   // graph-Laplacian form keeps M exactly symmetric; with beta = 0 constants
   // are in the nullspace of the second term.
   std::vector<Eigen::Triplet<double>> trip;
   trip.reserve(std::size_t(n_) * 5);
   auto node = [nx](int i, int j) { return i + nx * j; };

   for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
         const int s = node(i, j);
         double diag = spec_.alpha1;

         const double wx = spec_.alpha2 / (grid.dx * grid.dx);
         if (i > 0) {
            diag += wx;
            trip.emplace_back(s, node(i - 1, j), -wx);
         } else {
            diag += beta / grid.dx;
         }
         if (i < nx - 1) {
            diag += wx;
            trip.emplace_back(s, node(i + 1, j), -wx);
         } else {
            diag += beta / grid.dx;
         }

         if (ny > 1) {
            const double wy = spec_.alpha2 / (grid.dy * grid.dy);
            if (j > 0) {
               diag += wy;
               trip.emplace_back(s, node(i, j - 1), -wy);
            } else {
               diag += beta / grid.dy;
            }
            if (j < ny - 1) {
               diag += wy;
               trip.emplace_back(s, node(i, j + 1), -wy);
            } else {
               diag += beta / grid.dy;
            }
         }

         trip.emplace_back(s, s, diag);
      }
   }

   mat_.resize(n_, n_);
   mat_.setFromTriplets(trip.begin(), trip.end());
   mat_.makeCompressed();

   llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMat>>();
   llt_->compute(mat_);
   factorizations().fetch_add(1, std::memory_order_relaxed);
   if (llt_->info() != Eigen::Success) {
      throw NumericError("prior: elliptic operator is not positive definite");
   }
}

EllipticPrior::EllipticPrior(const EllipticPrior& other)
   : spec_(other.spec_), n_(other.n_), mat_(other.mat_) {
   llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMat>>();
   llt_->compute(mat_);
   factorizations().fetch_add(1, std::memory_order_relaxed);
   if (llt_->info() != Eigen::Success) {
      throw NumericError("prior: elliptic operator is not positive definite");
   }
}

EllipticPrior& EllipticPrior::operator=(const EllipticPrior& other) {
   if (this != &other) {
      spec_ = other.spec_;
      n_ = other.n_;
      mat_ = other.mat_;
      llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMat>>();
      llt_->compute(mat_);
      factorizations().fetch_add(1, std::memory_order_relaxed);
      if (llt_->info() != Eigen::Success) {
         throw NumericError("prior: elliptic operator is not positive definite");
      }
   }
   return *this;
}

void EllipticPrior::cov_apply(const double* v, double* out) const {
   Eigen::Map<const Eigen::VectorXd> vin(v, n_);
   Eigen::VectorXd once = llt_->solve(vin);
   Eigen::VectorXd twice = llt_->solve(once);
   Eigen::Map<Eigen::VectorXd>(out, n_) = twice;
}

void EllipticPrior::precision_apply(const double* v, double* out) const {
   Eigen::Map<const Eigen::VectorXd> vin(v, n_);
   Eigen::VectorXd once = mat_ * vin;
   Eigen::Map<Eigen::VectorXd>(out, n_) = mat_ * once;
}

SpaceTimeField EllipticPrior::cov_apply(const SpaceTimeField& v) const {
   if (v.n_space != n_) { throw DimensionError("prior cov_apply: field width mismatch"); }
   SpaceTimeField out(v.n_space, v.n_time, v.dt);
   for (int t = 0; t < v.n_time; ++t) { cov_apply(v.slice(t), out.slice(t)); }
   return out;
}

SpaceTimeField EllipticPrior::precision_apply(const SpaceTimeField& v) const {
   if (v.n_space != n_) { throw DimensionError("prior precision_apply: field width mismatch"); }
   SpaceTimeField out(v.n_space, v.n_time, v.dt);
   for (int t = 0; t < v.n_time; ++t) { precision_apply(v.slice(t), out.slice(t)); }
   return out;
}

Eigen::MatrixXd EllipticPrior::cov_apply(const Eigen::MatrixXd& v) const {
   if (v.rows() != n_) { throw DimensionError("prior cov_apply: matrix height mismatch"); }
   Eigen::MatrixXd once = llt_->solve(v);
   return llt_->solve(once);
}

SpaceTimeField EllipticPrior::sample(int n_time, double dt, std::uint64_t seed) const {
   std::mt19937_64 rng(seed);
   std::normal_distribution<double> normal(0.0, 1.0);
   SpaceTimeField out(n_, n_time, dt);
   Eigen::VectorXd xi(n_);
   for (int t = 0; t < n_time; ++t) {
      for (int s = 0; s < n_; ++s) { xi[s] = normal(rng); }
      Eigen::VectorXd draw = llt_->solve(xi);
      for (int s = 0; s < n_; ++s) { out.at(t, s) = draw[s]; }
   }
   return out;
}

double EllipticPrior::pointwise_variance(int s) const {
   if (s < 0 || s >= n_) { throw DimensionError("prior pointwise_variance: node out of range"); }
   std::vector<double> e(n_, 0.0), out(n_);
   e[std::size_t(s)] = 1.0;
   cov_apply(e.data(), out.data());
   return out[std::size_t(s)];
}

}  // namespace wavetwin
