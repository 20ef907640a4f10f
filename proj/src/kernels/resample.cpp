#include "motionnet/kernels.hpp"

namespace motionnet::kernels {

void avg_pool_forward(const double* x, double* y, int64_t n, int64_t c, int64_t h, int64_t w,
                      int64_t k, int64_t stride) {
  const int64_t ho = (h - k) / stride + 1;
  const int64_t wo = (w - k) / stride + 1;
  const double inv = 1.0 / static_cast<double>(k * k);
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int64_t p = 0; p < n * c; ++p) {
    const double* xp = x + p * h * w;
    double* yp = y + p * ho * wo;
    for (int64_t oi = 0; oi < ho; ++oi) {
      for (int64_t oj = 0; oj < wo; ++oj) {
        double acc = 0.0;
        for (int64_t u = 0; u < k; ++u) {
          const double* row = xp + (oi * stride + u) * w + oj * stride;
          for (int64_t v = 0; v < k; ++v) acc += row[v];
        }
        yp[oi * wo + oj] = acc * inv;
      }
    }
  }
}

void avg_pool_grad(const double* gy, double* gx, int64_t n, int64_t c, int64_t h, int64_t w,
                   int64_t k, int64_t stride) {
  const int64_t ho = (h - k) / stride + 1;
  const int64_t wo = (w - k) / stride + 1;
  const double inv = 1.0 / static_cast<double>(k * k);
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int64_t p = 0; p < n * c; ++p) {
    const double* gyp = gy + p * ho * wo;
    double* gxp = gx + p * h * w;
    for (int64_t oi = 0; oi < ho; ++oi) {
      for (int64_t oj = 0; oj < wo; ++oj) {
        const double g = gyp[oi * wo + oj] * inv;
        for (int64_t u = 0; u < k; ++u) {
          double* row = gxp + (oi * stride + u) * w + oj * stride;
          for (int64_t v = 0; v < k; ++v) row[v] += g;
        }
      }
    }
  }
}

void upsample2x_forward(const double* x, double* y, int64_t n, int64_t c, int64_t h, int64_t w) {
  const int64_t ho = 2 * h, wo = 2 * w;
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int64_t p = 0; p < n * c; ++p) {
    const double* xp = x + p * h * w;
    double* yp = y + p * ho * wo;
    for (int64_t oi = 0; oi < ho; ++oi) {
      const int64_t i0 = oi / 2;
      const int64_t i1 = (oi % 2 && i0 + 1 < h) ? i0 + 1 : i0;
      const double* r0 = xp + i0 * w;
      const double* r1 = xp + i1 * w;
      double* out = yp + oi * wo;
      if (oi % 2 == 0) {
        for (int64_t j = 0; j < w; ++j) {
          const int64_t j1 = j + 1 < w ? j + 1 : j;
          out[2 * j] = r0[j];
          out[2 * j + 1] = 0.5 * (r0[j] + r0[j1]);
        }
      } else {
        for (int64_t j = 0; j < w; ++j) {
          const int64_t j1 = j + 1 < w ? j + 1 : j;
          const double a = 0.5 * (r0[j] + r1[j]);
          const double b = 0.5 * (r0[j1] + r1[j1]);
          out[2 * j] = a;
          out[2 * j + 1] = 0.5 * (a + b);
        }
      }
    }
  }
}

void upsample2x_grad(const double* gy, double* gx, int64_t n, int64_t c, int64_t h, int64_t w) {
  const int64_t ho = 2 * h, wo = 2 * w;
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int64_t p = 0; p < n * c; ++p) {
    const double* gyp = gy + p * ho * wo;
    double* gxp = gx + p * h * w;
    for (int64_t oi = 0; oi < ho; ++oi) {
      const int64_t i0 = oi / 2;
      const int64_t i1 = i0 + 1 < h ? i0 + 1 : i0;
      const double* grow = gyp + oi * wo;
      for (int64_t j = 0; j < w; ++j) {
        const int64_t j1 = j + 1 < w ? j + 1 : j;
        const double g_even = grow[2 * j];
        const double g_odd = grow[2 * j + 1];
        if (oi % 2 == 0) {
          gxp[i0 * w + j] += g_even;
          gxp[i0 * w + j] += 0.5 * g_odd;
          gxp[i0 * w + j1] += 0.5 * g_odd;
        } else {
          // Border rows/columns collapse onto the same source cell, which
          // accumulates both halves.
          gxp[i0 * w + j] += 0.5 * g_even;
          gxp[i1 * w + j] += 0.5 * g_even;
          gxp[i0 * w + j] += 0.25 * g_odd;
          gxp[i0 * w + j1] += 0.25 * g_odd;
          gxp[i1 * w + j] += 0.25 * g_odd;
          gxp[i1 * w + j1] += 0.25 * g_odd;
        }
      }
    }
  }
}

}  // namespace motionnet::kernels
