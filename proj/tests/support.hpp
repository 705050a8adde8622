#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <Eigen/Dense>

#include "sd/rng.hpp"

namespace sdtest {

inline sd::Rng rng(std::uint64_t seed) { return sd::Rng(seed, sd::Stream::kTest); }

inline Eigen::MatrixXd normal_matrix(sd::Rng& r, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = scale * r.normal();
  return out;
}

inline Eigen::VectorXd normal_vector(sd::Rng& r, Eigen::Index n, double scale = 1.0) {
  return normal_matrix(r, n, 1, scale).col(0);
}

/// Random symmetric PSD matrix B B^T / rank with the given rank.
inline Eigen::MatrixXd random_psd(sd::Rng& r, Eigen::Index m, Eigen::Index rank) {
  const Eigen::MatrixXd b = normal_matrix(r, m, rank);
  Eigen::MatrixXd d = b * b.transpose() / static_cast<double>(rank);
  return 0.5 * (d + d.transpose());
}

inline double rel_err(double got, double want, double floor = 1e-300) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sdtest_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace sdtest
