#pragma once

#include <initializer_list>

#include "pathsample/net.hpp"

namespace fixtures {

inline pathsample::Matrix mat(std::size_t rows, std::size_t cols, std::initializer_list<double> v) {
  pathsample::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  auto it = v.begin();
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = *it++;
  return m;
}

inline pathsample::Vector vec(std::initializer_list<double> v) {
  pathsample::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// 1-1-1 chain with weights (2), (-3).
inline pathsample::Network chain_net() {
  return {{mat(1, 1, {2.0}), mat(1, 1, {-3.0})}, pathsample::Activation::relu()};
}

}  // namespace fixtures
