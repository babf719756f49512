#include "wavetwin/container_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wavetwin/errors.hpp"

namespace wavetwin {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
   unsigned char b[4];
   for (int i = 0; i < 4; ++i) { b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff); }
   os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
   unsigned char b[8];
   for (int i = 0; i < 8; ++i) { b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff); }
   os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& is) {
   unsigned char b[4];
   is.read(reinterpret_cast<char*>(b), 4);
   std::uint32_t v = 0;
   for (int i = 0; i < 4; ++i) { v |= std::uint32_t(b[i]) << (8 * i); }
   return v;
}

std::uint64_t get_u64(std::istream& is) {
   unsigned char b[8];
   is.read(reinterpret_cast<char*>(b), 8);
   std::uint64_t v = 0;
   for (int i = 0; i < 8; ++i) { v |= std::uint64_t(b[i]) << (8 * i); }
   return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

void write_magic(std::ostream& os, const char magic[4]) { os.write(magic, 4); }

void check_magic(std::istream& is, const char magic[4], const std::string& path) {
   char buf[4];
   is.read(buf, 4);
   if (!is || std::memcmp(buf, magic, 4) != 0) {
      throw IoError(path + ": bad magic (expected " + std::string(magic, 4) + ")");
   }
}

std::ofstream open_out(const std::string& path) {
   std::ofstream os(path, std::ios::binary);
   if (!os) { throw IoError("cannot open for writing: " + path); }
   return os;
}

std::ifstream open_in(const std::string& path) {
   std::ifstream is(path, std::ios::binary);
   if (!is) { throw IoError("cannot open for reading: " + path); }
   return is;
}

}  // namespace

void save_btop(const std::string& path, const BlockToeplitzMap& map) {
   std::ofstream os = open_out(path);
   write_magic(os, "BTOP");
   put_u32(os, kContainerVersion);
   put_u64(os, std::uint64_t(map.rows_per_block()));
   put_u64(os, std::uint64_t(map.cols_per_block()));
   put_u64(os, std::uint64_t(map.lag_count()));
   for (double v : map.blocks()) { put_f64(os, v); }
   if (!os) { throw IoError("write failed: " + path); }
}

BlockToeplitzMap load_btop(const std::string& path) {
   std::ifstream is = open_in(path);
   check_magic(is, "BTOP", path);
   const std::uint32_t version = get_u32(is);
   if (version != kContainerVersion) {
      throw IoError(path + ": unsupported BTOP version");
   }
   const auto rows = get_u64(is);
   const auto cols = get_u64(is);
   const auto lags = get_u64(is);
   if (!is || rows == 0 || cols == 0 || lags == 0 || rows * cols * lags > (1ull << 33)) {
      throw IoError(path + ": corrupt BTOP header");
   }
   std::vector<double> blocks(rows * cols * lags);
   for (double& v : blocks) { v = get_f64(is); }
   if (!is) { throw IoError(path + ": truncated BTOP payload"); }
   return BlockToeplitzMap(int(rows), int(cols), int(lags), std::move(blocks));
}

void save_dense(const std::string& path, const Eigen::MatrixXd& mat) {
   std::ofstream os = open_out(path);
   write_magic(os, "D2QM");
   put_u32(os, kContainerVersion);
   put_u64(os, std::uint64_t(mat.rows()));
   put_u64(os, std::uint64_t(mat.cols()));
   for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) { put_f64(os, mat(r, c)); }
   }
   if (!os) { throw IoError("write failed: " + path); }
}

Eigen::MatrixXd load_dense(const std::string& path) {
   std::ifstream is = open_in(path);
   check_magic(is, "D2QM", path);
   const std::uint32_t version = get_u32(is);
   if (version != kContainerVersion) {
      throw IoError(path + ": unsupported D2QM version");
   }
   const auto rows = get_u64(is);
   const auto cols = get_u64(is);
   if (!is || rows * cols > (1ull << 33)) {
      throw IoError(path + ": corrupt D2QM header");
   }
   Eigen::MatrixXd mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
   for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) { mat(r, c) = get_f64(is); }
   }
   if (!is) { throw IoError(path + ": truncated D2QM payload"); }
   return mat;
}

void save_dense_vector(const std::string& path, const Eigen::VectorXd& v) {
   save_dense(path, Eigen::MatrixXd(v));
}

Eigen::VectorXd load_dense_vector(const std::string& path) {
   Eigen::MatrixXd m = load_dense(path);
   if (m.cols() != 1) { throw IoError(path + ": expected a single-column container"); }
   return Eigen::VectorXd(m.col(0));
}

void save_field(const std::string& path, const SpaceTimeField& f) {
   Eigen::MatrixXd m(f.n_time, f.n_space);
   for (int t = 0; t < f.n_time; ++t) {
      for (int s = 0; s < f.n_space; ++s) { m(t, s) = f.at(t, s); }
   }
   save_dense(path, m);
}

SpaceTimeField load_field(const std::string& path, double dt) {
   Eigen::MatrixXd m = load_dense(path);
   SpaceTimeField f(int(m.cols()), int(m.rows()), dt);
   for (int t = 0; t < f.n_time; ++t) {
      for (int s = 0; s < f.n_space; ++s) { f.at(t, s) = m(t, s); }
   }
   return f;
}

void save_observations_csv(const std::string& path, const SpaceTimeField& d,
                           const std::vector<int>& sensor_ids) {
   if (int(sensor_ids.size()) != d.n_space) {
      throw DimensionError("save_observations_csv: sensor id count mismatch");
   }
   std::ofstream os(path);
   if (!os) { throw IoError("cannot open for writing: " + path); }
   os << "time";
   for (int id : sensor_ids) { os << ",s" << id; }
   os << "\n";
   os.precision(17);
   for (int t = 0; t < d.n_time; ++t) {
      os << (t + 1) * d.dt;
      for (int s = 0; s < d.n_space; ++s) { os << "," << d.at(t, s); }
      os << "\n";
   }
   if (!os) { throw IoError("write failed: " + path); }
}

SpaceTimeField load_observations_csv(const std::string& path,
                                     const std::vector<int>& expected_ids,
                                     double dt) {
   std::ifstream is(path);
   if (!is) { throw IoError("cannot open for reading: " + path); }
   std::string header;
   if (!std::getline(is, header)) { throw IoError(path + ": empty file"); }

   std::vector<std::string> cols;
   {
      std::stringstream ss(header);
      std::string tok;
      while (std::getline(ss, tok, ',')) { cols.push_back(tok); }
   }
   if (cols.empty() || cols[0] != "time") {
      throw IoError(path + ": first CSV column must be 'time'");
   }
   if (cols.size() != expected_ids.size() + 1) {
      throw ConfigError(path + ": sensor column count does not match configuration");
   }
   for (std::size_t i = 0; i < expected_ids.size(); ++i) {
      const std::string want = "s" + std::to_string(expected_ids[i]);
      if (cols[i + 1] != want) {
         throw ConfigError(path + ": sensor id mismatch in column " + std::to_string(i + 1) +
                           " (expected " + want + ", got " + cols[i + 1] + ")");
      }
   }

   std::vector<double> rows;
   std::string line;
   int n_time = 0;
   while (std::getline(is, line)) {
      if (line.empty()) { continue; }
      std::stringstream ss(line);
      std::string tok;
      int col = 0;
      while (std::getline(ss, tok, ',')) {
         if (col > 0) { rows.push_back(std::stod(tok)); }
         ++col;
      }
      if (col != int(expected_ids.size()) + 1) {
         throw IoError(path + ": ragged CSV row");
      }
      ++n_time;
   }
   SpaceTimeField d(int(expected_ids.size()), n_time, dt);
   d.values = std::move(rows);
   d.validate("observations");
   return d;
}

}  // namespace wavetwin
