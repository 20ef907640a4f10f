#pragma once

#include <cstdint>

namespace motionnet::kernels {

/// Global switch between the OpenMP kernels and their serial reference
/// twins. Parallel is the default; the serial implementations are retained
/// as the ground truth the parallel ones are tested against (results must
/// be bit-identical: every output element is computed by exactly one
/// thread with a fixed inner summation order).
bool parallel_enabled();
void set_parallel(bool on);

// ---------------------------------------------------------------------------
// Convolution. Weight layout [c_out, c_in, kh, kw], activations NCHW.
// Forward kernels overwrite their output; gradient kernels accumulate.
// ---------------------------------------------------------------------------

struct ConvShape {
  int64_t n = 1;
  int64_t c_in = 1, h_in = 1, w_in = 1;
  int64_t c_out = 1, kh = 1, kw = 1;
  int64_t stride = 1, pad = 0;

  int64_t h_out() const { return (h_in + 2 * pad - kh) / stride + 1; }
  int64_t w_out() const { return (w_in + 2 * pad - kw) / stride + 1; }
};

void conv2d_forward(const double* x, const double* w, const double* bias, double* y, const ConvShape& s);
void conv2d_forward_serial(const double* x, const double* w, const double* bias, double* y, const ConvShape& s);

void conv2d_grad_input(const double* gy, const double* w, double* gx, const ConvShape& s);
void conv2d_grad_input_serial(const double* gy, const double* w, double* gx, const ConvShape& s);

void conv2d_grad_weight(const double* x, const double* gy, double* gw, const ConvShape& s);
void conv2d_grad_weight_serial(const double* x, const double* gy, double* gw, const ConvShape& s);

void conv2d_grad_bias(const double* gy, double* gb, const ConvShape& s);

// Transposed convolution with the same weight layout as conv2d: the map is
// the exact adjoint of conv2d(stride, pad) with weight [c_in, c_out, kh, kw]
// where c_in here equals the conv's c_out. Output extent is
// (h_in - 1) * stride - 2 * pad + kh.
struct TConvShape {
  int64_t n = 1;
  int64_t c_in = 1, h_in = 1, w_in = 1;  // c_in = weight dim 0
  int64_t c_out = 1, kh = 1, kw = 1;     // c_out = weight dim 1
  int64_t stride = 1, pad = 0;

  int64_t h_out() const { return (h_in - 1) * stride - 2 * pad + kh; }
  int64_t w_out() const { return (w_in - 1) * stride - 2 * pad + kw; }

  /// The conv2d whose adjoint this transposed conv computes.
  ConvShape adjoint() const {
    ConvShape c;
    c.n = n;
    c.c_in = c_out;
    c.h_in = h_out();
    c.w_in = w_out();
    c.c_out = c_in;
    c.kh = kh;
    c.kw = kw;
    c.stride = stride;
    c.pad = pad;
    return c;
  }
};

void tconv2d_forward(const double* x, const double* w, const double* bias, double* y, const TConvShape& s);
void tconv2d_grad_input(const double* gy, const double* w, double* gx, const TConvShape& s);
void tconv2d_grad_weight(const double* x, const double* gy, double* gw, const TConvShape& s);
void tconv2d_grad_bias(const double* gy, double* gb, const TConvShape& s);

// ---------------------------------------------------------------------------
// Backward (inverse) warping. flow channel 0 is the horizontal displacement
// (pixels, positive samples rightward), channel 1 vertical (positive samples
// downward): out(i,j) = bilinear(img, i + dy(i,j), j + dx(i,j)), coordinates
// clamped to the image border.
// ---------------------------------------------------------------------------

void warp_forward(const double* img, const double* flow, double* out,
                  int64_t n, int64_t c, int64_t h, int64_t w);
void warp_forward_serial(const double* img, const double* flow, double* out,
                         int64_t n, int64_t c, int64_t h, int64_t w);

/// Gradient w.r.t. the sampled image (accumulates into gimg).
void warp_grad_image(const double* flow, const double* gy, double* gimg,
                     int64_t n, int64_t c, int64_t h, int64_t w);
/// Gradient w.r.t. the flow (accumulates into gflow). Outside the clamp's
/// active region (sample coordinate beyond the border) the gradient is zero;
/// at exact integer coordinates the sub-cell on the positive side is used.
void warp_grad_flow(const double* img, const double* flow, const double* gy, double* gflow,
                    int64_t n, int64_t c, int64_t h, int64_t w);

// ---------------------------------------------------------------------------
// Resampling.
// ---------------------------------------------------------------------------

/// Mean over k x k windows at the given stride, no padding.
void avg_pool_forward(const double* x, double* y, int64_t n, int64_t c, int64_t h, int64_t w,
                      int64_t k, int64_t stride);
void avg_pool_grad(const double* gy, double* gx, int64_t n, int64_t c, int64_t h, int64_t w,
                   int64_t k, int64_t stride);

/// Bilinear 2x upsampling: even outputs copy the source pixel, odd outputs
/// average the two neighbours (border clamped). Constants are preserved
/// bit-exactly.
void upsample2x_forward(const double* x, double* y, int64_t n, int64_t c, int64_t h, int64_t w);
void upsample2x_grad(const double* gy, double* gx, int64_t n, int64_t c, int64_t h, int64_t w);

}  // namespace motionnet::kernels
