#include "motionnet/kernels.hpp"

#include <cmath>

namespace motionnet::kernels {

namespace {

// Bilinear cell for a clamped sample coordinate. Integer coordinates fall on
// the cell to their positive side (i0 = floor); at the top border the
// neighbour index is clamped and the weights collapse to the border pixel.
struct Cell {
  int64_t i0;
  int64_t i1;
  double frac;
  bool inside;  // unclamped coordinate strictly inside (0, extent-1)
};

inline Cell sample_cell(double coord, int64_t extent) {
  Cell cell;
  double c = coord;
  if (c < 0.0) c = 0.0;
  const double top = static_cast<double>(extent - 1);
  if (c > top) c = top;
  int64_t i0 = static_cast<int64_t>(std::floor(c));
  if (i0 > extent - 1) i0 = extent - 1;
  cell.i0 = i0;
  cell.i1 = i0 + 1 < extent ? i0 + 1 : extent - 1;
  cell.frac = c - static_cast<double>(i0);
  cell.inside = coord > 0.0 && coord < top;
  return cell;
}

void warp_rows(const double* img, const double* flow, double* out,
               int64_t n, int64_t c, int64_t h, int64_t w, int64_t row_begin, int64_t row_end) {
  const int64_t plane = h * w;
  const double* fx = flow + n * 2 * plane;       // horizontal displacement
  const double* fy = fx + plane;                 // vertical displacement
  for (int64_t i = row_begin; i < row_end; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      const double sx = static_cast<double>(j) + fx[i * w + j];
      const double sy = static_cast<double>(i) + fy[i * w + j];
      const Cell cx = sample_cell(sx, w);
      const Cell cy = sample_cell(sy, h);
      const double w00 = (1.0 - cy.frac) * (1.0 - cx.frac);
      const double w01 = (1.0 - cy.frac) * cx.frac;
      const double w10 = cy.frac * (1.0 - cx.frac);
      const double w11 = cy.frac * cx.frac;
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* ip = img + (n * c + ch) * plane;
        out[(n * c + ch) * plane + i * w + j] =
            w00 * ip[cy.i0 * w + cx.i0] + w01 * ip[cy.i0 * w + cx.i1] +
            w10 * ip[cy.i1 * w + cx.i0] + w11 * ip[cy.i1 * w + cx.i1];
      }
    }
  }
}

}  // namespace

void warp_forward_serial(const double* img, const double* flow, double* out,
                         int64_t n, int64_t c, int64_t h, int64_t w) {
  for (int64_t s = 0; s < n; ++s) warp_rows(img, flow, out, s, c, h, w, 0, h);
}

void warp_forward(const double* img, const double* flow, double* out,
                  int64_t n, int64_t c, int64_t h, int64_t w) {
  if (!parallel_enabled()) {
    warp_forward_serial(img, flow, out, n, c, h, w);
    return;
  }
#pragma omp parallel for schedule(static) collapse(2)
  for (int64_t s = 0; s < n; ++s)
    for (int64_t i = 0; i < h; ++i) warp_rows(img, flow, out, s, c, h, w, i, i + 1);
}

void warp_grad_image(const double* flow, const double* gy, double* gimg,
                     int64_t n, int64_t c, int64_t h, int64_t w) {
  const int64_t plane = h * w;
  // Scatters into the 4 sampled pixels; parallel over samples only so each
  // image plane set is owned by one thread.
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int64_t s = 0; s < n; ++s) {
    const double* fx = flow + s * 2 * plane;
    const double* fy = fx + plane;
    for (int64_t i = 0; i < h; ++i) {
      for (int64_t j = 0; j < w; ++j) {
        const Cell cx = sample_cell(static_cast<double>(j) + fx[i * w + j], w);
        const Cell cy = sample_cell(static_cast<double>(i) + fy[i * w + j], h);
        const double w00 = (1.0 - cy.frac) * (1.0 - cx.frac);
        const double w01 = (1.0 - cy.frac) * cx.frac;
        const double w10 = cy.frac * (1.0 - cx.frac);
        const double w11 = cy.frac * cx.frac;
        for (int64_t ch = 0; ch < c; ++ch) {
          const double g = gy[(s * c + ch) * plane + i * w + j];
          double* ip = gimg + (s * c + ch) * plane;
          ip[cy.i0 * w + cx.i0] += w00 * g;
          ip[cy.i0 * w + cx.i1] += w01 * g;
          ip[cy.i1 * w + cx.i0] += w10 * g;
          ip[cy.i1 * w + cx.i1] += w11 * g;
        }
      }
    }
  }
}

void warp_grad_flow(const double* img, const double* flow, const double* gy, double* gflow,
                    int64_t n, int64_t c, int64_t h, int64_t w) {
  const int64_t plane = h * w;
#pragma omp parallel for schedule(static) collapse(2) if (parallel_enabled())
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t i = 0; i < h; ++i) {
      const double* fx = flow + s * 2 * plane;
      const double* fy = fx + plane;
      for (int64_t j = 0; j < w; ++j) {
        const Cell cx = sample_cell(static_cast<double>(j) + fx[i * w + j], w);
        const Cell cy = sample_cell(static_cast<double>(i) + fy[i * w + j], h);
        double gx_acc = 0.0, gy_acc = 0.0;
        for (int64_t ch = 0; ch < c; ++ch) {
          const double* ip = img + (s * c + ch) * plane;
          const double g = gy[(s * c + ch) * plane + i * w + j];
          const double p00 = ip[cy.i0 * w + cx.i0], p01 = ip[cy.i0 * w + cx.i1];
          const double p10 = ip[cy.i1 * w + cx.i0], p11 = ip[cy.i1 * w + cx.i1];
          // d(sample)/dx and /dy of the bilinear cell; zero where the clamp
          // is saturated.
          if (cx.inside) {
            gx_acc += g * ((1.0 - cy.frac) * (p01 - p00) + cy.frac * (p11 - p10));
          }
          if (cy.inside) {
            gy_acc += g * ((1.0 - cx.frac) * (p10 - p00) + cx.frac * (p11 - p01));
          }
        }
        gflow[s * 2 * plane + i * w + j] += gx_acc;
        gflow[s * 2 * plane + plane + i * w + j] += gy_acc;
      }
    }
  }
}

}  // namespace motionnet::kernels
