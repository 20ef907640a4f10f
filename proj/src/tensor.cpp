#include "motionnet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace motionnet {

namespace {
int64_t checked_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e <= 0) throw ConfigError("tensor extent must be positive, got " + shape_str(shape));
    n *= e;
  }
  return n;
}
}  // namespace

Tensor Tensor::zeros(std::vector<int64_t> shape) {
  Tensor t;
  int64_t n = checked_numel(shape);
  t.shape = std::move(shape);
  t.data.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t.data) v = value;
  return t;
}

Tensor Tensor::from(std::vector<int64_t> shape, std::vector<double> values) {
  int64_t n = checked_numel(shape);
  if (n != static_cast<int64_t>(values.size())) {
    throw ConfigError("tensor data length " + std::to_string(values.size()) +
                      " does not match shape " + motionnet::shape_str(shape));
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::move(values);
  return t;
}

int64_t Tensor::dim(int i) const {
  if (i < 0 || i >= ndim()) {
    throw ConfigError("dimension index " + std::to_string(i) + " out of range for " + shape_str());
  }
  return shape[static_cast<size_t>(i)];
}

double& Tensor::at4(int64_t n, int64_t c, int64_t i, int64_t j) {
  return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + i) * shape[3] + j)];
}

double Tensor::at4(int64_t n, int64_t c, int64_t i, int64_t j) const {
  return data[static_cast<size_t>(((n * shape[1] + c) * shape[2] + i) * shape[3] + j)];
}

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  for (double& g : grad) g = 0.0;
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::check_finite(const std::string& context) const {
  for (size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericError(context + ": non-finite value at flat index " + std::to_string(i) +
                         " in tensor " + shape_str());
    }
  }
}

std::string Tensor::shape_str() const { return motionnet::shape_str(shape); }

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

TensorPtr make_value(Tensor t) {
  auto p = std::make_shared<Tensor>(std::move(t));
  p->requires_grad = false;
  return p;
}

TensorPtr make_param(Tensor t) {
  auto p = std::make_shared<Tensor>(std::move(t));
  p->requires_grad = true;
  return p;
}

}  // namespace motionnet
