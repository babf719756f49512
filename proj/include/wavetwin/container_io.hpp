#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wavetwin/block_toeplitz.hpp"
#include "wavetwin/space_time_field.hpp"

namespace wavetwin {

/// Binary containers, little-endian on any host.
///
/// BTOP (block Toeplitz operator):
///   magic "BTOP" | format version u32 | rows_per_block u64 | cols_per_block u64
///   | lag_count u64 | blocks f64[lag][row][col]
/// The Fourier cache is never serialized.
///
/// D2QM (dense matrix container, also used for vectors as n x 1):
///   magic "D2QM" | format version u32 | n_rows u64 | n_cols u64
///   | entries f64 row-major
constexpr std::uint32_t kContainerVersion = 1;

void save_btop(const std::string& path, const BlockToeplitzMap& map);
BlockToeplitzMap load_btop(const std::string& path);

void save_dense(const std::string& path, const Eigen::MatrixXd& mat);
Eigen::MatrixXd load_dense(const std::string& path);

void save_dense_vector(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd load_dense_vector(const std::string& path);

/// Fields are stored as dense matrices with n_time rows and n_space columns;
/// dt travels in the artifact metadata.
void save_field(const std::string& path, const SpaceTimeField& f);
SpaceTimeField load_field(const std::string& path, double dt);

/// Observation CSV: header "time,<id0>,<id1>,..." then one row per time step.
void save_observations_csv(const std::string& path, const SpaceTimeField& d,
                           const std::vector<int>& sensor_ids);
/// Reads an observation CSV and checks the header ids against the expected
/// sensor ids.
SpaceTimeField load_observations_csv(const std::string& path,
                                     const std::vector<int>& expected_ids,
                                     double dt);

}  // namespace wavetwin
