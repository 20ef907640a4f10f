#include "motionnet/kernels.hpp"

#include <atomic>

namespace motionnet::kernels {

namespace {

std::atomic<bool> g_parallel{true};

inline int64_t ceil_div(int64_t a, int64_t b) {
  return a >= 0 ? (a + b - 1) / b : a / b;
}

inline int64_t floor_div(int64_t a, int64_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

// Valid output range [lo, hi] so that o*stride + k_off - pad stays inside
// [0, in_extent).
inline void valid_out_range(int64_t k_off, int64_t pad, int64_t stride, int64_t in_extent,
                            int64_t out_extent, int64_t& lo, int64_t& hi) {
  lo = ceil_div(pad - k_off, stride);
  if (lo < 0) lo = 0;
  hi = floor_div(in_extent - 1 + pad - k_off, stride);
  if (hi > out_extent - 1) hi = out_extent - 1;
}

// y[n,k,:,:] += sum_{c,u,v} x[n,c,oh*s+u-p, ow*s+v-p] * w[k,c,u,v]
// One (n,k) output plane; the parallel grain.
void corr_plane(const double* x, const double* w, double* y, const ConvShape& s,
                int64_t n, int64_t k) {
  const int64_t ho = s.h_out(), wo = s.w_out();
  const double* xn = x + n * s.c_in * s.h_in * s.w_in;
  double* yp = y + (n * s.c_out + k) * ho * wo;
  for (int64_t c = 0; c < s.c_in; ++c) {
    const double* xc = xn + c * s.h_in * s.w_in;
    const double* wc = w + (k * s.c_in + c) * s.kh * s.kw;
    for (int64_t u = 0; u < s.kh; ++u) {
      int64_t oh_lo, oh_hi;
      valid_out_range(u, s.pad, s.stride, s.h_in, ho, oh_lo, oh_hi);
      for (int64_t v = 0; v < s.kw; ++v) {
        const double wv = wc[u * s.kw + v];
        int64_t ow_lo, ow_hi;
        valid_out_range(v, s.pad, s.stride, s.w_in, wo, ow_lo, ow_hi);
        for (int64_t oh = oh_lo; oh <= oh_hi; ++oh) {
          const double* xrow = xc + (oh * s.stride + u - s.pad) * s.w_in + v - s.pad;
          double* yrow = yp + oh * wo;
          if (s.stride == 1) {
            for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) yrow[ow] += wv * xrow[ow];
          } else {
            for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) yrow[ow] += wv * xrow[ow * s.stride];
          }
        }
      }
    }
  }
}

// gx[n,c,:,:] += sum_{k,u,v} gy[n,k,oh,ow] * w[k,c,u,v] gathered over the
// output positions whose window covers each input pixel. One (n,c) input
// plane; the parallel grain (each input element is written by exactly one
// thread, in a fixed k,u,v,oh order).
void scatter_plane(const double* gy, const double* w, double* gx, const ConvShape& s,
                   int64_t n, int64_t c) {
  const int64_t ho = s.h_out(), wo = s.w_out();
  double* gxc = gx + (n * s.c_in + c) * s.h_in * s.w_in;
  const double* gyn = gy + n * s.c_out * ho * wo;
  for (int64_t k = 0; k < s.c_out; ++k) {
    const double* gyk = gyn + k * ho * wo;
    const double* wc = w + (k * s.c_in + c) * s.kh * s.kw;
    for (int64_t u = 0; u < s.kh; ++u) {
      int64_t oh_lo, oh_hi;
      valid_out_range(u, s.pad, s.stride, s.h_in, ho, oh_lo, oh_hi);
      for (int64_t v = 0; v < s.kw; ++v) {
        const double wv = wc[u * s.kw + v];
        int64_t ow_lo, ow_hi;
        valid_out_range(v, s.pad, s.stride, s.w_in, wo, ow_lo, ow_hi);
        for (int64_t oh = oh_lo; oh <= oh_hi; ++oh) {
          const double* gyrow = gyk + oh * wo;
          double* gxrow = gxc + (oh * s.stride + u - s.pad) * s.w_in + v - s.pad;
          if (s.stride == 1) {
            for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) gxrow[ow] += wv * gyrow[ow];
          } else {
            for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) gxrow[ow * s.stride] += wv * gyrow[ow];
          }
        }
      }
    }
  }
}

// gw[k,c,:,:] += sum_{n,oh,ow} gy[n,k,oh,ow] * x[n,c,ih,iw].
// One (k,c) weight block; the parallel grain.
void wgrad_block(const double* x, const double* gy, double* gw, const ConvShape& s,
                 int64_t k, int64_t c) {
  const int64_t ho = s.h_out(), wo = s.w_out();
  double* gwc = gw + (k * s.c_in + c) * s.kh * s.kw;
  for (int64_t u = 0; u < s.kh; ++u) {
    int64_t oh_lo, oh_hi;
    valid_out_range(u, s.pad, s.stride, s.h_in, ho, oh_lo, oh_hi);
    for (int64_t v = 0; v < s.kw; ++v) {
      int64_t ow_lo, ow_hi;
      valid_out_range(v, s.pad, s.stride, s.w_in, wo, ow_lo, ow_hi);
      double acc = 0.0;
      for (int64_t n = 0; n < s.n; ++n) {
        const double* xc = x + (n * s.c_in + c) * s.h_in * s.w_in;
        const double* gyk = gy + (n * s.c_out + k) * ho * wo;
        for (int64_t oh = oh_lo; oh <= oh_hi; ++oh) {
          const double* xrow = xc + (oh * s.stride + u - s.pad) * s.w_in + v - s.pad;
          const double* gyrow = gyk + oh * wo;
          double row_acc = 0.0;
          if (s.stride == 1) {
            for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) row_acc += gyrow[ow] * xrow[ow];
          } else {
            for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) row_acc += gyrow[ow] * xrow[ow * s.stride];
          }
          acc += row_acc;
        }
      }
      gwc[u * s.kw + v] += acc;
    }
  }
}

void fill_bias(double* y, const double* bias, int64_t n_planes, int64_t c, int64_t plane) {
  for (int64_t i = 0; i < n_planes * c; ++i) {
    const double b = bias ? bias[i % c] : 0.0;
    double* row = y + i * plane;
    for (int64_t j = 0; j < plane; ++j) row[j] = b;
  }
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

void conv2d_forward_serial(const double* x, const double* w, const double* bias, double* y,
                           const ConvShape& s) {
  fill_bias(y, bias, s.n, s.c_out, s.h_out() * s.w_out());
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t k = 0; k < s.c_out; ++k) corr_plane(x, w, y, s, n, k);
}

void conv2d_forward(const double* x, const double* w, const double* bias, double* y,
                    const ConvShape& s) {
  if (!parallel_enabled()) {
    conv2d_forward_serial(x, w, bias, y, s);
    return;
  }
  fill_bias(y, bias, s.n, s.c_out, s.h_out() * s.w_out());
#pragma omp parallel for schedule(static) collapse(2)
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t k = 0; k < s.c_out; ++k) corr_plane(x, w, y, s, n, k);
}

void conv2d_grad_input_serial(const double* gy, const double* w, double* gx, const ConvShape& s) {
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c_in; ++c) scatter_plane(gy, w, gx, s, n, c);
}

void conv2d_grad_input(const double* gy, const double* w, double* gx, const ConvShape& s) {
  if (!parallel_enabled()) {
    conv2d_grad_input_serial(gy, w, gx, s);
    return;
  }
#pragma omp parallel for schedule(static) collapse(2)
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c_in; ++c) scatter_plane(gy, w, gx, s, n, c);
}

void conv2d_grad_weight_serial(const double* x, const double* gy, double* gw, const ConvShape& s) {
  for (int64_t k = 0; k < s.c_out; ++k)
    for (int64_t c = 0; c < s.c_in; ++c) wgrad_block(x, gy, gw, s, k, c);
}

void conv2d_grad_weight(const double* x, const double* gy, double* gw, const ConvShape& s) {
  if (!parallel_enabled()) {
    conv2d_grad_weight_serial(x, gy, gw, s);
    return;
  }
#pragma omp parallel for schedule(static) collapse(2)
  for (int64_t k = 0; k < s.c_out; ++k)
    for (int64_t c = 0; c < s.c_in; ++c) wgrad_block(x, gy, gw, s, k, c);
}

void conv2d_grad_bias(const double* gy, double* gb, const ConvShape& s) {
  const int64_t plane = s.h_out() * s.w_out();
#pragma omp parallel for schedule(static)
  for (int64_t k = 0; k < s.c_out; ++k) {
    double acc = 0.0;
    for (int64_t n = 0; n < s.n; ++n) {
      const double* row = gy + (n * s.c_out + k) * plane;
      for (int64_t i = 0; i < plane; ++i) acc += row[i];
    }
    gb[k] += acc;
  }
}

void tconv2d_forward(const double* x, const double* w, const double* bias, double* y,
                     const TConvShape& s) {
  const ConvShape a = s.adjoint();
  fill_bias(y, bias, s.n, s.c_out, s.h_out() * s.w_out());
  // The transposed conv is the adjoint map: scatter x through the conv window.
  if (!parallel_enabled()) {
    for (int64_t n = 0; n < a.n; ++n)
      for (int64_t c = 0; c < a.c_in; ++c) scatter_plane(x, w, y, a, n, c);
    return;
  }
#pragma omp parallel for schedule(static) collapse(2)
  for (int64_t n = 0; n < a.n; ++n)
    for (int64_t c = 0; c < a.c_in; ++c) scatter_plane(x, w, y, a, n, c);
}

void tconv2d_grad_input(const double* gy, const double* w, double* gx, const TConvShape& s) {
  const ConvShape a = s.adjoint();
  // Adjoint of the adjoint: a plain correlation of gy with the same weight.
  if (!parallel_enabled()) {
    for (int64_t n = 0; n < a.n; ++n)
      for (int64_t k = 0; k < a.c_out; ++k) corr_plane(gy, w, gx, a, n, k);
    return;
  }
#pragma omp parallel for schedule(static) collapse(2)
  for (int64_t n = 0; n < a.n; ++n)
    for (int64_t k = 0; k < a.c_out; ++k) corr_plane(gy, w, gx, a, n, k);
}

void tconv2d_grad_weight(const double* x, const double* gy, double* gw, const TConvShape& s) {
  const ConvShape a = s.adjoint();
  // In the adjoint view the conv's input is this op's output gradient and
  // the conv's output gradient is this op's input.
  if (!parallel_enabled()) {
    for (int64_t k = 0; k < a.c_out; ++k)
      for (int64_t c = 0; c < a.c_in; ++c) wgrad_block(gy, x, gw, a, k, c);
    return;
  }
#pragma omp parallel for schedule(static) collapse(2)
  for (int64_t k = 0; k < a.c_out; ++k)
    for (int64_t c = 0; c < a.c_in; ++c) wgrad_block(gy, x, gw, a, k, c);
}

void tconv2d_grad_bias(const double* gy, double* gb, const TConvShape& s) {
  const int64_t plane = s.h_out() * s.w_out();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < s.c_out; ++c) {
    double acc = 0.0;
    for (int64_t n = 0; n < s.n; ++n) {
      const double* row = gy + (n * s.c_out + c) * plane;
      for (int64_t i = 0; i < plane; ++i) acc += row[i];
    }
    gb[c] += acc;
  }
}

}  // namespace motionnet::kernels
