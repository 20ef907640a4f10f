#include "motionnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "motionnet/errors.hpp"
#include "motionnet/kernels.hpp"

namespace motionnet {

namespace {

TensorPtr result(std::vector<int64_t> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>(Tensor::zeros(std::move(shape)));
  t->requires_grad = requires_grad;
  return t;
}

void require_4d(const Tensor& t, const char* op) {
  if (t.ndim() != 4) {
    throw ConfigError(std::string(op) + ": expected a 4-d [N,C,H,W] tensor, got " + t.shape_str());
  }
}

}  // namespace

TensorPtr Graph::record(std::string name, std::vector<TensorPtr> inputs, TensorPtr output,
                        std::function<void()> backward) {
  // Anything on the tape is differentiable from downstream ops' perspective.
  output->requires_grad = true;
  nodes_.push_back(Node{std::move(name), std::move(inputs), output, std::move(backward)});
  return nodes_.back().output;
}

void Graph::backward(const TensorPtr& root) {
  if (!root) throw ConfigError("backward: null root");
  if (root->numel() != 1) {
    throw ConfigError("backward: root must be scalar, got shape " + root->shape_str());
  }
  for (auto& n : nodes_) n.output->ensure_grad();
  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backward) it->backward();
  }
}

void Graph::clear() { nodes_.clear(); }

// -- elementwise --------------------------------------------------------------

TensorPtr Graph::add(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(*a, *b, "add");
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = result(a->shape, rg);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
  if (!rg) return out;
  return record("add", {a, b}, out, [a, b, out, n] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) b->grad[i] += out->grad[i];
    }
  });
}

TensorPtr Graph::sub(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(*a, *b, "sub");
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = result(a->shape, rg);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] - b->data[i];
  if (!rg) return out;
  return record("sub", {a, b}, out, [a, b, out, n] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) b->grad[i] -= out->grad[i];
    }
  });
}

TensorPtr Graph::mul(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(*a, *b, "mul");
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = result(a->shape, rg);
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] * b->data[i];
  if (!rg) return out;
  return record("mul", {a, b}, out, [a, b, out, n] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] * b->data[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) b->grad[i] += out->grad[i] * a->data[i];
    }
  });
}

TensorPtr Graph::div(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(*a, *b, "div");
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = result(a->shape, rg);
  const int64_t n = a->numel();
  // Caller guarantees nonzero denominators (loss denominators are floored by
  // the SSIM constants); a zero still surfaces via the finiteness checks.
  for (int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] / b->data[i];
  if (!rg) return out;
  return record("div", {a, b}, out, [a, b, out, n] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] / b->data[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) b->grad[i] -= out->grad[i] * out->data[i] / b->data[i];
    }
  });
}

TensorPtr Graph::scale(const TensorPtr& x, double s) {
  const bool rg = x->requires_grad;
  auto out = result(x->shape, rg);
  const int64_t n = x->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = s * x->data[i];
  if (!rg) return out;
  return record("scale", {x}, out, [x, out, n, s] {
    x->ensure_grad();
    for (int64_t i = 0; i < n; ++i) x->grad[i] += s * out->grad[i];
  });
}

TensorPtr Graph::add_scalar(const TensorPtr& x, double s) {
  const bool rg = x->requires_grad;
  auto out = result(x->shape, rg);
  const int64_t n = x->numel();
  for (int64_t i = 0; i < n; ++i) out->data[i] = x->data[i] + s;
  if (!rg) return out;
  return record("add_scalar", {x}, out, [x, out, n] {
    x->ensure_grad();
    for (int64_t i = 0; i < n; ++i) x->grad[i] += out->grad[i];
  });
}

TensorPtr Graph::leaky_relu(const TensorPtr& x, double slope) {
  if (!(slope >= 0.0 && slope < 1.0)) {
    throw ConfigError("leaky_relu: slope must be in [0,1), got " + std::to_string(slope));
  }
  const bool rg = x->requires_grad;
  auto out = result(x->shape, rg);
  const int64_t n = x->numel();
  for (int64_t i = 0; i < n; ++i) {
    const double v = x->data[i];
    out->data[i] = v >= 0.0 ? v : slope * v;
  }
  if (!rg) return out;
  return record("leaky_relu", {x}, out, [x, out, n, slope] {
    x->ensure_grad();
    for (int64_t i = 0; i < n; ++i) {
      x->grad[i] += out->grad[i] * (x->data[i] >= 0.0 ? 1.0 : slope);
    }
  });
}

TensorPtr Graph::charbonnier(const TensorPtr& x, double eps, double alpha) {
  if (!(eps > 0.0)) throw ConfigError("charbonnier: epsilon must be positive, got " + std::to_string(eps));
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("charbonnier: alpha must be in (0,1], got " + std::to_string(alpha));
  }
  const bool rg = x->requires_grad;
  auto out = result(x->shape, rg);
  const int64_t n = x->numel();
  const double e2 = eps * eps;
  for (int64_t i = 0; i < n; ++i) {
    const double v = x->data[i];
    out->data[i] = std::pow(v * v + e2, alpha);
  }
  if (!rg) return out;
  return record("charbonnier", {x}, out, [x, out, n, e2, alpha] {
    x->ensure_grad();
    for (int64_t i = 0; i < n; ++i) {
      const double v = x->data[i];
      // d/dv (v^2+e^2)^a = 2av (v^2+e^2)^(a-1); exactly 0 at v = 0.
      x->grad[i] += out->grad[i] * 2.0 * alpha * v * std::pow(v * v + e2, alpha - 1.0);
    }
  });
}

// -- convolution ---------------------------------------------------------------

TensorPtr Graph::conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                        int64_t stride, int64_t pad) {
  require_4d(*x, "conv2d");
  require_4d(*w, "conv2d weight");
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1, got " + std::to_string(stride));
  if (pad < 0) throw ConfigError("conv2d: padding must be >= 0, got " + std::to_string(pad));
  if (w->dim(1) != x->dim(1)) {
    throw ConfigError("conv2d: weight expects " + std::to_string(w->dim(1)) +
                      " input channels but input has " + std::to_string(x->dim(1)) +
                      " (input " + x->shape_str() + ", weight " + w->shape_str() + ")");
  }
  if (b->ndim() != 1 || b->dim(0) != w->dim(0)) {
    throw ConfigError("conv2d: bias must have shape [" + std::to_string(w->dim(0)) + "], got " +
                      b->shape_str());
  }
  kernels::ConvShape s;
  s.n = x->dim(0);
  s.c_in = x->dim(1);
  s.h_in = x->dim(2);
  s.w_in = x->dim(3);
  s.c_out = w->dim(0);
  s.kh = w->dim(2);
  s.kw = w->dim(3);
  s.stride = stride;
  s.pad = pad;
  if (s.kh > s.h_in + 2 * pad || s.kw > s.w_in + 2 * pad) {
    throw ConfigError("conv2d: kernel " + std::to_string(s.kh) + "x" + std::to_string(s.kw) +
                      " exceeds padded input " + std::to_string(s.h_in + 2 * pad) + "x" +
                      std::to_string(s.w_in + 2 * pad));
  }
  const bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
  auto out = result({s.n, s.c_out, s.h_out(), s.w_out()}, rg);
  kernels::conv2d_forward(x->data.data(), w->data.data(), b->data.data(), out->data.data(), s);
  if (!rg) return out;
  return record("conv2d", {x, w, b}, out, [x, w, b, out, s] {
    const double* gy = out->grad.data();
    if (x->requires_grad) {
      x->ensure_grad();
      kernels::conv2d_grad_input(gy, w->data.data(), x->grad.data(), s);
    }
    if (w->requires_grad) {
      w->ensure_grad();
      kernels::conv2d_grad_weight(x->data.data(), gy, w->grad.data(), s);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      kernels::conv2d_grad_bias(gy, b->grad.data(), s);
    }
  });
}

TensorPtr Graph::conv2d_transposed(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                                   int64_t stride, int64_t pad) {
  require_4d(*x, "conv2d_transposed");
  require_4d(*w, "conv2d_transposed weight");
  if (stride != 1 && stride != 2) {
    throw ConfigError("conv2d_transposed: stride must be 1 or 2, got " + std::to_string(stride));
  }
  if (pad < 0) throw ConfigError("conv2d_transposed: padding must be >= 0, got " + std::to_string(pad));
  if (w->dim(0) != x->dim(1)) {
    throw ConfigError("conv2d_transposed: weight expects " + std::to_string(w->dim(0)) +
                      " input channels but input has " + std::to_string(x->dim(1)) +
                      " (input " + x->shape_str() + ", weight " + w->shape_str() + ")");
  }
  if (b->ndim() != 1 || b->dim(0) != w->dim(1)) {
    throw ConfigError("conv2d_transposed: bias must have shape [" + std::to_string(w->dim(1)) +
                      "], got " + b->shape_str());
  }
  kernels::TConvShape s;
  s.n = x->dim(0);
  s.c_in = x->dim(1);
  s.h_in = x->dim(2);
  s.w_in = x->dim(3);
  s.c_out = w->dim(1);
  s.kh = w->dim(2);
  s.kw = w->dim(3);
  s.stride = stride;
  s.pad = pad;
  if (s.h_out() < 1 || s.w_out() < 1) {
    throw ConfigError("conv2d_transposed: output extent " + std::to_string(s.h_out()) + "x" +
                      std::to_string(s.w_out()) + " is empty for input " + x->shape_str());
  }
  const bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
  auto out = result({s.n, s.c_out, s.h_out(), s.w_out()}, rg);
  kernels::tconv2d_forward(x->data.data(), w->data.data(), b->data.data(), out->data.data(), s);
  if (!rg) return out;
  return record("conv2d_transposed", {x, w, b}, out, [x, w, b, out, s] {
    const double* gy = out->grad.data();
    if (x->requires_grad) {
      x->ensure_grad();
      kernels::tconv2d_grad_input(gy, w->data.data(), x->grad.data(), s);
    }
    if (w->requires_grad) {
      w->ensure_grad();
      kernels::tconv2d_grad_weight(x->data.data(), gy, w->grad.data(), s);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      kernels::tconv2d_grad_bias(gy, b->grad.data(), s);
    }
  });
}

// -- sampling ------------------------------------------------------------------

TensorPtr Graph::backward_warp(const TensorPtr& image, const TensorPtr& flow) {
  require_4d(*image, "backward_warp");
  require_4d(*flow, "backward_warp flow");
  if (flow->dim(1) != 2 || flow->dim(0) != image->dim(0) || flow->dim(2) != image->dim(2) ||
      flow->dim(3) != image->dim(3)) {
    throw ConfigError("backward_warp: flow must be [N,2,H,W] matching image " + image->shape_str() +
                      ", got " + flow->shape_str());
  }
  const int64_t n = image->dim(0), c = image->dim(1), h = image->dim(2), w = image->dim(3);
  const bool rg = image->requires_grad || flow->requires_grad;
  auto out = result(image->shape, rg);
  kernels::warp_forward(image->data.data(), flow->data.data(), out->data.data(), n, c, h, w);
  if (!rg) return out;
  return record("backward_warp", {image, flow}, out, [image, flow, out, n, c, h, w] {
    const double* gy = out->grad.data();
    if (image->requires_grad) {
      image->ensure_grad();
      kernels::warp_grad_image(flow->data.data(), gy, image->grad.data(), n, c, h, w);
    }
    if (flow->requires_grad) {
      flow->ensure_grad();
      kernels::warp_grad_flow(image->data.data(), flow->data.data(), gy, flow->grad.data(), n, c, h,
                              w);
    }
  });
}

TensorPtr Graph::avg_downsample2x(const TensorPtr& x) {
  require_4d(*x, "avg_downsample2x");
  if (x->dim(2) % 2 != 0) {
    throw ConfigError("avg_downsample2x: height " + std::to_string(x->dim(2)) + " is odd");
  }
  if (x->dim(3) % 2 != 0) {
    throw ConfigError("avg_downsample2x: width " + std::to_string(x->dim(3)) + " is odd");
  }
  return avg_pool(x, 2, 2);
}

TensorPtr Graph::avg_pool(const TensorPtr& x, int64_t k, int64_t stride) {
  require_4d(*x, "avg_pool");
  if (k < 1 || stride < 1) {
    throw ConfigError("avg_pool: window and stride must be >= 1, got k=" + std::to_string(k) +
                      " stride=" + std::to_string(stride));
  }
  const int64_t n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  if (k > h || k > w) {
    throw ConfigError("avg_pool: window " + std::to_string(k) + " exceeds input " +
                      std::to_string(h) + "x" + std::to_string(w));
  }
  const int64_t ho = (h - k) / stride + 1;
  const int64_t wo = (w - k) / stride + 1;
  const bool rg = x->requires_grad;
  auto out = result({n, c, ho, wo}, rg);
  kernels::avg_pool_forward(x->data.data(), out->data.data(), n, c, h, w, k, stride);
  if (!rg) return out;
  return record("avg_pool", {x}, out, [x, out, n, c, h, w, k, stride] {
    x->ensure_grad();
    kernels::avg_pool_grad(out->grad.data(), x->grad.data(), n, c, h, w, k, stride);
  });
}

TensorPtr Graph::global_avg_pool(const TensorPtr& x) {
  require_4d(*x, "global_avg_pool");
  const int64_t n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  const int64_t plane = h * w;
  const double inv = 1.0 / static_cast<double>(plane);
  const bool rg = x->requires_grad;
  auto out = result({n, c}, rg);
  for (int64_t p = 0; p < n * c; ++p) {
    const double* xp = x->data.data() + p * plane;
    double acc = 0.0;
    for (int64_t i = 0; i < plane; ++i) acc += xp[i];
    out->data[p] = acc * inv;
  }
  if (!rg) return out;
  return record("global_avg_pool", {x}, out, [x, out, n, c, plane, inv] {
    x->ensure_grad();
    for (int64_t p = 0; p < n * c; ++p) {
      double* gp = x->grad.data() + p * plane;
      const double g = out->grad[p] * inv;
      for (int64_t i = 0; i < plane; ++i) gp[i] += g;
    }
  });
}

TensorPtr Graph::upsample2x(const TensorPtr& x) {
  require_4d(*x, "upsample2x");
  const int64_t n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  const bool rg = x->requires_grad;
  auto out = result({n, c, 2 * h, 2 * w}, rg);
  kernels::upsample2x_forward(x->data.data(), out->data.data(), n, c, h, w);
  if (!rg) return out;
  return record("upsample2x", {x}, out, [x, out, n, c, h, w] {
    x->ensure_grad();
    kernels::upsample2x_grad(out->grad.data(), x->grad.data(), n, c, h, w);
  });
}

TensorPtr Graph::upsample_flow2x(const TensorPtr& x) {
  // Doubling the resolution doubles every displacement measured in pixels.
  return scale(upsample2x(x), 2.0);
}

// -- spatial differences ---------------------------------------------------------

TensorPtr Graph::forward_diff_x(const TensorPtr& x) {
  require_4d(*x, "forward_diff_x");
  const int64_t n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  const bool rg = x->requires_grad;
  auto out = result(x->shape, rg);
  for (int64_t p = 0; p < n * c * h; ++p) {
    const double* row = x->data.data() + p * w;
    double* orow = out->data.data() + p * w;
    for (int64_t j = 0; j + 1 < w; ++j) orow[j] = row[j + 1] - row[j];
    orow[w - 1] = 0.0;
  }
  if (!rg) return out;
  return record("forward_diff_x", {x}, out, [x, out, n, c, h, w] {
    x->ensure_grad();
    for (int64_t p = 0; p < n * c * h; ++p) {
      double* grow = x->grad.data() + p * w;
      const double* og = out->grad.data() + p * w;
      for (int64_t j = 0; j + 1 < w; ++j) {
        grow[j + 1] += og[j];
        grow[j] -= og[j];
      }
    }
  });
}

TensorPtr Graph::forward_diff_y(const TensorPtr& x) {
  require_4d(*x, "forward_diff_y");
  const int64_t n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  const bool rg = x->requires_grad;
  auto out = result(x->shape, rg);
  for (int64_t p = 0; p < n * c; ++p) {
    const double* xp = x->data.data() + p * h * w;
    double* op = out->data.data() + p * h * w;
    for (int64_t i = 0; i + 1 < h; ++i) {
      for (int64_t j = 0; j < w; ++j) op[i * w + j] = xp[(i + 1) * w + j] - xp[i * w + j];
    }
    for (int64_t j = 0; j < w; ++j) op[(h - 1) * w + j] = 0.0;
  }
  if (!rg) return out;
  return record("forward_diff_y", {x}, out, [x, out, n, c, h, w] {
    x->ensure_grad();
    for (int64_t p = 0; p < n * c; ++p) {
      double* gp = x->grad.data() + p * h * w;
      const double* og = out->grad.data() + p * h * w;
      for (int64_t i = 0; i + 1 < h; ++i) {
        for (int64_t j = 0; j < w; ++j) {
          gp[(i + 1) * w + j] += og[i * w + j];
          gp[i * w + j] -= og[i * w + j];
        }
      }
    }
  });
}

// -- shape -----------------------------------------------------------------------

TensorPtr Graph::concat_channels(const std::vector<TensorPtr>& xs) {
  if (xs.empty()) throw ConfigError("concat_channels: empty input list");
  require_4d(*xs[0], "concat_channels");
  const int64_t n = xs[0]->dim(0), h = xs[0]->dim(2), w = xs[0]->dim(3);
  int64_t c_total = 0;
  bool rg = false;
  for (const auto& x : xs) {
    require_4d(*x, "concat_channels");
    if (x->dim(0) != n || x->dim(2) != h || x->dim(3) != w) {
      throw ConfigError("concat_channels: mismatched shapes " + xs[0]->shape_str() + " vs " +
                        x->shape_str());
    }
    c_total += x->dim(1);
    rg = rg || x->requires_grad;
  }
  auto out = result({n, c_total, h, w}, rg);
  const int64_t plane = h * w;
  for (int64_t b = 0; b < n; ++b) {
    int64_t c_off = 0;
    for (const auto& x : xs) {
      const int64_t c = x->dim(1);
      std::copy_n(x->data.data() + b * c * plane, c * plane,
                  out->data.data() + (b * c_total + c_off) * plane);
      c_off += c;
    }
  }
  if (!rg) return out;
  return record("concat_channels", xs, out, [xs, out, n, c_total, plane] {
    for (int64_t b = 0; b < n; ++b) {
      int64_t c_off = 0;
      for (const auto& x : xs) {
        const int64_t c = x->dim(1);
        if (x->requires_grad) {
          x->ensure_grad();
          const double* og = out->grad.data() + (b * c_total + c_off) * plane;
          double* g = x->grad.data() + b * c * plane;
          for (int64_t i = 0; i < c * plane; ++i) g[i] += og[i];
        }
        c_off += c;
      }
    }
  });
}

TensorPtr Graph::slice_channels(const TensorPtr& x, int64_t c0, int64_t c1) {
  require_4d(*x, "slice_channels");
  const int64_t n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  if (c0 < 0 || c1 <= c0 || c1 > c) {
    throw ConfigError("slice_channels: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                      ") invalid for " + std::to_string(c) + " channels");
  }
  const int64_t cs = c1 - c0;
  const int64_t plane = h * w;
  const bool rg = x->requires_grad;
  auto out = result({n, cs, h, w}, rg);
  for (int64_t b = 0; b < n; ++b) {
    std::copy_n(x->data.data() + (b * c + c0) * plane, cs * plane,
                out->data.data() + b * cs * plane);
  }
  if (!rg) return out;
  return record("slice_channels", {x}, out, [x, out, n, c, c0, cs, plane] {
    x->ensure_grad();
    for (int64_t b = 0; b < n; ++b) {
      double* g = x->grad.data() + (b * c + c0) * plane;
      const double* og = out->grad.data() + b * cs * plane;
      for (int64_t i = 0; i < cs * plane; ++i) g[i] += og[i];
    }
  });
}

// -- reductions & classifier -------------------------------------------------------

TensorPtr Graph::sum_all(const TensorPtr& x) {
  const bool rg = x->requires_grad;
  auto out = result({1}, rg);
  const int64_t n = x->numel();
  double acc = 0.0;  // serial reduction: summation order is part of the contract
  for (int64_t i = 0; i < n; ++i) acc += x->data[i];
  out->data[0] = acc;
  if (!rg) return out;
  return record("sum_all", {x}, out, [x, out, n] {
    x->ensure_grad();
    const double g = out->grad[0];
    for (int64_t i = 0; i < n; ++i) x->grad[i] += g;
  });
}

TensorPtr Graph::mean_all(const TensorPtr& x) {
  const bool rg = x->requires_grad;
  auto out = result({1}, rg);
  const int64_t n = x->numel();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x->data[i];
  const double inv = 1.0 / static_cast<double>(n);
  out->data[0] = acc * inv;
  if (!rg) return out;
  return record("mean_all", {x}, out, [x, out, n, inv] {
    x->ensure_grad();
    const double g = out->grad[0] * inv;
    for (int64_t i = 0; i < n; ++i) x->grad[i] += g;
  });
}

TensorPtr Graph::linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  if (x->ndim() != 2 || w->ndim() != 2 || b->ndim() != 1) {
    throw ConfigError("linear: expected x [N,D], w [A,D], b [A]; got x " + x->shape_str() + " w " +
                      w->shape_str() + " b " + b->shape_str());
  }
  const int64_t n = x->dim(0), d = x->dim(1), a = w->dim(0);
  if (w->dim(1) != d || b->dim(0) != a) {
    throw ConfigError("linear: inconsistent shapes x " + x->shape_str() + " w " + w->shape_str() +
                      " b " + b->shape_str());
  }
  const bool rg = x->requires_grad || w->requires_grad || b->requires_grad;
  auto out = result({n, a}, rg);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < a; ++j) {
      double acc = b->data[j];
      for (int64_t k = 0; k < d; ++k) acc += x->data[i * d + k] * w->data[j * d + k];
      out->data[i * a + j] = acc;
    }
  }
  if (!rg) return out;
  return record("linear", {x, w, b}, out, [x, w, b, out, n, d, a] {
    const double* gy = out->grad.data();
    if (x->requires_grad) {
      x->ensure_grad();
      for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j < a; ++j) {
          const double g = gy[i * a + j];
          for (int64_t k = 0; k < d; ++k) x->grad[i * d + k] += g * w->data[j * d + k];
        }
      }
    }
    if (w->requires_grad) {
      w->ensure_grad();
      for (int64_t j = 0; j < a; ++j) {
        for (int64_t i = 0; i < n; ++i) {
          const double g = gy[i * a + j];
          for (int64_t k = 0; k < d; ++k) w->grad[j * d + k] += g * x->data[i * d + k];
        }
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t j = 0; j < a; ++j) {
        for (int64_t i = 0; i < n; ++i) b->grad[j] += gy[i * a + j];
      }
    }
  });
}

TensorPtr Graph::cross_entropy(const TensorPtr& logits, const std::vector<int64_t>& labels) {
  if (logits->ndim() != 2) {
    throw ConfigError("cross_entropy: expected logits [N,A], got " + logits->shape_str());
  }
  const int64_t n = logits->dim(0), a = logits->dim(1);
  if (static_cast<int64_t>(labels.size()) != n) {
    throw InputError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " samples");
  }
  for (int64_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= a) {
      throw InputError("cross_entropy: label " + std::to_string(labels[i]) + " out of range [0," +
                       std::to_string(a) + ") at sample " + std::to_string(i));
    }
  }
  const bool rg = logits->requires_grad;
  auto out = result({1}, rg);
  double total = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double* row = logits->data.data() + i * a;
    double m = row[0];
    for (int64_t j = 1; j < a; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < a; ++j) z += std::exp(row[j] - m);
    total += m + std::log(z) - row[labels[i]];
  }
  out->data[0] = total / static_cast<double>(n);
  if (!rg) return out;
  return record("cross_entropy", {logits}, out, [logits, out, labels, n, a] {
    logits->ensure_grad();
    const double g = out->grad[0] / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      const double* row = logits->data.data() + i * a;
      double* grow = logits->grad.data() + i * a;
      double m = row[0];
      for (int64_t j = 1; j < a; ++j) m = std::max(m, row[j]);
      double z = 0.0;
      for (int64_t j = 0; j < a; ++j) z += std::exp(row[j] - m);
      for (int64_t j = 0; j < a; ++j) {
        const double p = std::exp(row[j] - m) / z;
        grow[j] += g * (p - (j == labels[i] ? 1.0 : 0.0));
      }
    }
  });
}

}  // namespace motionnet
