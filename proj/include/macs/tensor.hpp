#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "macs/rng.hpp"

namespace macs {

// Dense row-major tensor of doubles. Shapes are small (at most 2-D in
// practice) and all learned parameters live in these.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dim");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& operator()(int i) { return data[static_cast<std::size_t>(i)]; }
  double operator()(int i) const { return data[static_cast<std::size_t>(i)]; }
  double& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols() + c];
  }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols() + c];
  }

  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols(); }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols(); }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void add(const Tensor& other) {
    if (other.data.size() != data.size())
      throw std::invalid_argument("Tensor::add: size mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
  }

  // Kaiming-style uniform init scaled by fan-in.
  void init_uniform(Rng& rng, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
    for (double& v : data) v = (2.0 * rng.uniform() - 1.0) * bound;
  }

  void init_normal(Rng& rng, double stddev) {
    for (double& v : data) v = rng.normal() * stddev;
  }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const std::string& where) {
  if (a.shape != b.shape) throw std::invalid_argument(where + ": shape mismatch");
}

}  // namespace macs
