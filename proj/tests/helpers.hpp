#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "addgxe/dataset.hpp"

namespace testing {

inline addgxe::Dataset make_binary(std::vector<int> d, std::vector<double> a1, std::vector<double> a2,
                                   Eigen::MatrixXd x = {}) {
  const auto n = static_cast<Eigen::Index>(d.size());
  if (x.size() == 0) x = Eigen::MatrixXd(n, 0);
  return addgxe::Dataset({std::move(d), std::move(a1), std::move(a2), std::move(x), std::nullopt},
                         addgxe::ExposureKind::binary(), addgxe::ExposureKind::binary());
}

/// Expands a table of (d, a1, a2, count) rows into records.
inline addgxe::Dataset from_counts(const std::vector<std::array<int, 4>>& rows) {
  std::vector<int> d;
  std::vector<double> a1, a2;
  for (const auto& r : rows)
    for (int k = 0; k < r[3]; ++k) {
      d.push_back(r[0]);
      a1.push_back(r[1]);
      a2.push_back(r[2]);
    }
  return make_binary(std::move(d), std::move(a1), std::move(a2));
}

/// Fresh directory under the system temp path, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("addgxe_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
            std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testing
