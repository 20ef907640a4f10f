#include "motionnet/flowviz.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "motionnet/errors.hpp"

namespace motionnet {

namespace {

constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
constexpr int kNCols = kRY + kYG + kGC + kCB + kBM + kMR;  // 55
constexpr double kUnknownMag = 1e9;

struct Wheel {
  unsigned char c[kNCols][3];
  Wheel() {
    int k = 0;
    for (int i = 0; i < kRY; ++i, ++k) {
      c[k][0] = 255;
      c[k][1] = static_cast<unsigned char>(255 * i / kRY);
      c[k][2] = 0;
    }
    for (int i = 0; i < kYG; ++i, ++k) {
      c[k][0] = static_cast<unsigned char>(255 - 255 * i / kYG);
      c[k][1] = 255;
      c[k][2] = 0;
    }
    for (int i = 0; i < kGC; ++i, ++k) {
      c[k][0] = 0;
      c[k][1] = 255;
      c[k][2] = static_cast<unsigned char>(255 * i / kGC);
    }
    for (int i = 0; i < kCB; ++i, ++k) {
      c[k][0] = 0;
      c[k][1] = static_cast<unsigned char>(255 - 255 * i / kCB);
      c[k][2] = 255;
    }
    for (int i = 0; i < kBM; ++i, ++k) {
      c[k][0] = static_cast<unsigned char>(255 * i / kBM);
      c[k][1] = 0;
      c[k][2] = 255;
    }
    for (int i = 0; i < kMR; ++i, ++k) {
      c[k][0] = 255;
      c[k][1] = 0;
      c[k][2] = static_cast<unsigned char>(255 - 255 * i / kMR);
    }
  }
};

const Wheel& wheel() {
  static const Wheel w;
  return w;
}

}  // namespace

const unsigned char (*flow_color_wheel())[3] { return wheel().c; }

int flow_color_wheel_size() { return kNCols; }

ColorImage flow_to_color(const Tensor& flow, double max_mag) {
  const Tensor* f = &flow;
  Tensor squeezed;
  if (flow.ndim() == 4 && flow.dim(0) == 1 && flow.dim(1) == 2) {
    squeezed = flow;
    squeezed.shape = {2, flow.dim(2), flow.dim(3)};
    f = &squeezed;
  }
  if (f->ndim() != 3 || f->dim(0) != 2) {
    throw InputError("flow_to_color: expected a single [2,H,W] field, got " + flow.shape_str());
  }
  const int64_t h = f->dim(1), w = f->dim(2);
  const double* u = f->data.data();
  const double* v = f->data.data() + h * w;

  double norm = max_mag;
  if (norm <= 0.0) {
    // 99th-percentile magnitude over known pixels.
    std::vector<double> mags;
    mags.reserve(static_cast<size_t>(h * w));
    for (int64_t i = 0; i < h * w; ++i) {
      if (std::fabs(u[i]) > kUnknownMag || std::fabs(v[i]) > kUnknownMag) continue;
      mags.push_back(std::sqrt(u[i] * u[i] + v[i] * v[i]));
    }
    if (!mags.empty()) {
      std::sort(mags.begin(), mags.end());
      norm = mags[static_cast<size_t>(0.99 * static_cast<double>(mags.size() - 1))];
    }
  }
  if (norm <= 0.0) norm = 1.0;  // zero field stays white

  ColorImage img(h, w);
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      const int64_t idx = i * w + j;
      unsigned char* px = img.px(i, j);
      if (std::fabs(u[idx]) > kUnknownMag || std::fabs(v[idx]) > kUnknownMag) {
        px[0] = px[1] = px[2] = 0;  // unknown flow renders black
        continue;
      }
      const double fx = u[idx] / norm;
      const double fy = v[idx] / norm;
      const double rad = std::sqrt(fx * fx + fy * fy);
      const double a = std::atan2(-fy, -fx) / M_PI;  // [-1, 1]
      const double fk = (a + 1.0) / 2.0 * (kNCols - 1);
      const int k0 = static_cast<int>(std::floor(fk));
      const int k1 = (k0 + 1) % kNCols;
      const double frac = fk - k0;
      for (int c = 0; c < 3; ++c) {
        const double c0 = wheel().c[k0][c] / 255.0;
        const double c1 = wheel().c[k1][c] / 255.0;
        double col = (1.0 - frac) * c0 + frac * c1;
        if (rad <= 1.0) {
          col = 1.0 - rad * (1.0 - col);  // saturate with magnitude, white at zero
        } else {
          col *= 0.75;  // over-range
        }
        px[c] = static_cast<unsigned char>(std::lround(255.0 * col));
      }
    }
  }
  return img;
}

}  // namespace motionnet
