#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "motionnet/errors.hpp"

namespace motionnet {

/// Dense n-dimensional array of 64-bit floats with an optional gradient
/// buffer of identical shape. Data is row-major (last extent fastest).
///
/// Tensors are treated as immutable once produced by a forward pass; the
/// only sanctioned mutation afterwards is gradient accumulation. A tensor
/// may be handed to another thread when no compute graph references it.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until ensure_grad(); same length as data otherwise
  bool requires_grad = false;

  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, double value);
  static Tensor from(std::vector<int64_t> shape, std::vector<double> values);

  int64_t numel() const {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
  }

  int ndim() const { return static_cast<int>(shape.size()); }

  int64_t dim(int i) const;

  /// Element access for 4-d tensors, used by tests and generators.
  double& at4(int64_t n, int64_t c, int64_t i, int64_t j);
  double at4(int64_t n, int64_t c, int64_t i, int64_t j) const;

  void ensure_grad();
  void zero_grad();

  bool all_finite() const;
  /// Throws NumericError naming `context` and the first offending index.
  void check_finite(const std::string& context) const;

  std::string shape_str() const;
};

using TensorPtr = std::shared_ptr<Tensor>;

/// Leaf tensor that does not require gradients (inputs, constants).
TensorPtr make_value(Tensor t);

/// Leaf tensor that accumulates gradients (trainable parameters).
TensorPtr make_param(Tensor t);

std::string shape_str(const std::vector<int64_t>& shape);

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape) {
    throw ConfigError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace motionnet
