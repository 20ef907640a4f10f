#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "motionnet/kernels.hpp"
#include "motionnet/rng.hpp"

// Times the OpenMP kernels against their serial reference twins on
// training-shaped workloads and verifies the outputs agree bit-for-bit.

namespace {

using motionnet::Rng;
namespace k = motionnet::kernels;

std::vector<double> random_vec(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double time_ms(const std::function<void()>& fn, int repeats) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  const double total =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return total / repeats;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-24s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   max|diff| %g\n", name,
              serial_ms, parallel_ms, parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0, diff);
}

}  // namespace

int main(int argc, char** argv) {
  int repeats = 5;
  if (argc > 1) repeats = std::max(1, std::atoi(argv[1]));
  Rng rng(42);

  {
    k::ConvShape s;
    s.n = 2;
    s.c_in = 32;
    s.h_in = 64;
    s.w_in = 64;
    s.c_out = 64;
    s.kh = s.kw = 3;
    s.stride = 1;
    s.pad = 1;
    const auto x = random_vec(rng, static_cast<size_t>(s.n * s.c_in * s.h_in * s.w_in));
    const auto w = random_vec(rng, static_cast<size_t>(s.c_out * s.c_in * s.kh * s.kw));
    const auto b = random_vec(rng, static_cast<size_t>(s.c_out));
    const size_t out_n = static_cast<size_t>(s.n * s.c_out * s.h_out() * s.w_out());
    std::vector<double> y_serial(out_n), y_parallel(out_n);
    const double ms_s = time_ms(
        [&] { k::conv2d_forward_serial(x.data(), w.data(), b.data(), y_serial.data(), s); },
        repeats);
    const double ms_p = time_ms(
        [&] { k::conv2d_forward(x.data(), w.data(), b.data(), y_parallel.data(), s); }, repeats);
    report("conv2d 3x3 forward", ms_s, ms_p, max_abs_diff(y_serial, y_parallel));

    const auto gy = random_vec(rng, out_n);
    std::vector<double> gx_serial(x.size()), gx_parallel(x.size());
    const double gi_s = time_ms(
        [&] {
          std::fill(gx_serial.begin(), gx_serial.end(), 0.0);
          k::conv2d_grad_input_serial(gy.data(), w.data(), gx_serial.data(), s);
        },
        repeats);
    const double gi_p = time_ms(
        [&] {
          std::fill(gx_parallel.begin(), gx_parallel.end(), 0.0);
          k::conv2d_grad_input(gy.data(), w.data(), gx_parallel.data(), s);
        },
        repeats);
    report("conv2d 3x3 grad_input", gi_s, gi_p, max_abs_diff(gx_serial, gx_parallel));

    std::vector<double> gw_serial(w.size()), gw_parallel(w.size());
    const double gw_s = time_ms(
        [&] {
          std::fill(gw_serial.begin(), gw_serial.end(), 0.0);
          k::conv2d_grad_weight_serial(x.data(), gy.data(), gw_serial.data(), s);
        },
        repeats);
    const double gw_p = time_ms(
        [&] {
          std::fill(gw_parallel.begin(), gw_parallel.end(), 0.0);
          k::conv2d_grad_weight(x.data(), gy.data(), gw_parallel.data(), s);
        },
        repeats);
    report("conv2d 3x3 grad_weight", gw_s, gw_p, max_abs_diff(gw_serial, gw_parallel));
  }

  {
    const int64_t n = 1, c = 3, h = 256, w = 256;
    const auto img = random_vec(rng, static_cast<size_t>(n * c * h * w));
    auto flow = random_vec(rng, static_cast<size_t>(n * 2 * h * w));
    for (double& f : flow) f *= 4.0;
    std::vector<double> out_serial(img.size()), out_parallel(img.size());
    const double ms_s = time_ms(
        [&] { k::warp_forward_serial(img.data(), flow.data(), out_serial.data(), n, c, h, w); },
        repeats);
    const double ms_p = time_ms(
        [&] { k::warp_forward(img.data(), flow.data(), out_parallel.data(), n, c, h, w); },
        repeats);
    report("warp 256x256 forward", ms_s, ms_p, max_abs_diff(out_serial, out_parallel));
  }

  return 0;
}
