#include "motionnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "motionnet/errors.hpp"
#include "motionnet/floio.hpp"
#include "motionnet/pngio.hpp"
#include "motionnet/rng.hpp"

namespace motionnet {

namespace {

// Texture feature size in pixels. Losses supervise the 1/4-and-coarser
// pyramid, so features must scale with the frame or they alias away before
// the photometric term ever sees them; they must also stay wider than twice
// the displacement bound (extent/4) or checker matching turns ambiguous.
double feature_scale(int64_t extent) {
  return std::max(5.0, static_cast<double>(extent) / 4.0);
}

struct TextureParams {
  TextureKind kind = TextureKind::Flat;
  int64_t extent = 0;
  double c0[3] = {0, 0, 0};
  double c1[3] = {0, 0, 0};
  double tile = 8.0;
  double phase_x = 0.0, phase_y = 0.0;
  // Noise lattice values cover [-extent, 2*extent] so inverse-motion
  // coordinates outside the frame stay textured.
  double spacing = 4.0;
  int64_t lat_n = 0;
  std::vector<double> lat;
  double base[3] = {0, 0, 0};
  double gx[3] = {0, 0, 0};
  double gy[3] = {0, 0, 0};
};

TextureParams make_texture(TextureKind kind, int64_t extent, Rng& rng) {
  TextureParams t;
  t.kind = kind;
  t.extent = extent;
  switch (kind) {
    case TextureKind::Checker:
      for (int k = 0; k < 3; ++k) {
        t.c0[k] = rng.uniform(0.05, 0.45);
        t.c1[k] = rng.uniform(0.55, 0.95);
      }
      t.tile = feature_scale(extent) * (1.0 + rng.uniform());  // feature .. 2*feature px
      t.phase_x = rng.uniform(0.0, t.tile);
      t.phase_y = rng.uniform(0.0, t.tile);
      break;
    case TextureKind::Noise: {
      t.spacing = feature_scale(extent);
      t.lat_n = static_cast<int64_t>(std::ceil(3.0 * static_cast<double>(extent) / t.spacing)) + 2;
      t.lat.resize(static_cast<size_t>(t.lat_n * t.lat_n * 3));
      for (auto& v : t.lat) v = rng.uniform();
      break;
    }
    case TextureKind::Gradient:
      for (int k = 0; k < 3; ++k) {
        t.base[k] = rng.uniform(0.3, 0.6);
        t.gx[k] = rng.uniform(-0.3, 0.3);
        t.gy[k] = rng.uniform(-0.3, 0.3);
      }
      break;
    case TextureKind::Flat:
      for (int k = 0; k < 3; ++k) t.c0[k] = rng.uniform(0.2, 0.8);
      break;
  }
  return t;
}

void eval_texture(const TextureParams& t, double x, double y, double rgb[3]) {
  switch (t.kind) {
    case TextureKind::Checker: {
      const auto cx = static_cast<int64_t>(std::floor((x - t.phase_x) / t.tile));
      const auto cy = static_cast<int64_t>(std::floor((y - t.phase_y) / t.tile));
      const bool odd = ((cx + cy) % 2 + 2) % 2 == 1;
      const double* c = odd ? t.c1 : t.c0;
      for (int k = 0; k < 3; ++k) rgb[k] = c[k];
      break;
    }
    case TextureKind::Noise: {
      const double e = static_cast<double>(t.extent);
      const double u = std::clamp((x + e) / t.spacing, 0.0, static_cast<double>(t.lat_n - 1));
      const double v = std::clamp((y + e) / t.spacing, 0.0, static_cast<double>(t.lat_n - 1));
      const auto u0 = static_cast<int64_t>(std::floor(u));
      const auto v0 = static_cast<int64_t>(std::floor(v));
      const int64_t u1 = std::min(u0 + 1, t.lat_n - 1);
      const int64_t v1 = std::min(v0 + 1, t.lat_n - 1);
      const double fu = u - static_cast<double>(u0);
      const double fv = v - static_cast<double>(v0);
      for (int k = 0; k < 3; ++k) {
        const double a = t.lat[static_cast<size_t>((v0 * t.lat_n + u0) * 3 + k)];
        const double b = t.lat[static_cast<size_t>((v0 * t.lat_n + u1) * 3 + k)];
        const double c = t.lat[static_cast<size_t>((v1 * t.lat_n + u0) * 3 + k)];
        const double d = t.lat[static_cast<size_t>((v1 * t.lat_n + u1) * 3 + k)];
        rgb[k] = (1.0 - fv) * ((1.0 - fu) * a + fu * b) + fv * ((1.0 - fu) * c + fu * d);
      }
      break;
    }
    case TextureKind::Gradient: {
      const double e = static_cast<double>(t.extent);
      for (int k = 0; k < 3; ++k) {
        rgb[k] = std::clamp(t.base[k] + t.gx[k] * (x / e) + t.gy[k] * (y / e), 0.0, 1.0);
      }
      break;
    }
    case TextureKind::Flat:
      for (int k = 0; k < 3; ++k) rgb[k] = t.c0[k];
      break;
  }
}

struct Vec2 {
  double x = 0.0, y = 0.0;
};

// Coordinates of frame-t pixel p in texture (frame-0) space.
Vec2 inverse_motion(const MotionSpec& m, int64_t t, double x, double y, double cx, double cy) {
  switch (m.kind) {
    case MotionKind::Translate:
      return {x - static_cast<double>(t) * m.dx, y - static_cast<double>(t) * m.dy};
    case MotionKind::Rotate: {
      const double a = -static_cast<double>(t) * m.theta;
      const double dx = x - cx, dy = y - cy;
      return {cx + std::cos(a) * dx - std::sin(a) * dy, cy + std::sin(a) * dx + std::cos(a) * dy};
    }
    case MotionKind::Zoom: {
      const double s = std::pow(m.scale, static_cast<double>(t));
      return {cx + (x - cx) / s, cy + (y - cy) / s};
    }
  }
  return {x, y};
}

// Per-step displacement of the surface visible at pixel p: the flow that
// backward-warps frame t+1 onto frame t.
Vec2 step_flow(const MotionSpec& m, double x, double y, double cx, double cy) {
  switch (m.kind) {
    case MotionKind::Translate:
      return {m.dx, m.dy};
    case MotionKind::Rotate: {
      const double dx = x - cx, dy = y - cy;
      return {std::cos(m.theta) * dx - std::sin(m.theta) * dy - dx,
              std::sin(m.theta) * dx + std::cos(m.theta) * dy - dy};
    }
    case MotionKind::Zoom:
      return {(m.scale - 1.0) * (x - cx), (m.scale - 1.0) * (y - cy)};
  }
  return {0.0, 0.0};
}

void check_motion(const MotionSpec& m, int64_t steps, int64_t extent, const char* what) {
  const double bound = static_cast<double>(extent) / 4.0;
  if (m.kind == MotionKind::Translate) {
    const double cum_x = std::fabs(static_cast<double>(steps) * m.dx);
    const double cum_y = std::fabs(static_cast<double>(steps) * m.dy);
    if (cum_x > bound || cum_y > bound) {
      throw InputError(std::string(what) + ": cumulative translation (" + std::to_string(cum_x) +
                       "," + std::to_string(cum_y) + ") exceeds extent/4 = " + std::to_string(bound));
    }
  }
  if (m.kind == MotionKind::Zoom && !(m.scale > 0.0)) {
    throw InputError(std::string(what) + ": zoom scale must be positive");
  }
}

ClipSample render_clip(uint64_t seed, const SampleSpec& spec, int64_t frames) {
  if (frames < 2) throw InputError("gen_clip: need at least 2 frames");
  if (spec.extent < 8) throw InputError("gen_clip: extent must be >= 8");
  check_motion(spec.motion, frames - 1, spec.extent, "motion");
  if (spec.background_motion) {
    if (spec.background_motion->kind != MotionKind::Translate) {
      throw InputError("background_motion: only translation is supported");
    }
    check_motion(*spec.background_motion, frames - 1, spec.extent, "background_motion");
  }
  const bool split = spec.foreground_object && spec.motion.kind == MotionKind::Translate;

  Rng rng(seed);
  TextureParams fg_tex = make_texture(spec.texture, spec.extent, rng);
  TextureParams bg_tex;
  double fg_cx = 0.0, fg_cy = 0.0, fg_r = 0.0;
  if (split) {
    bg_tex = make_texture(spec.bg_texture, spec.extent, rng);
    const double c = static_cast<double>(spec.extent - 1) / 2.0;
    const double jitter = static_cast<double>(spec.extent) / 8.0;
    fg_cx = c + rng.uniform(-jitter, jitter);
    fg_cy = c + rng.uniform(-jitter, jitter);
    fg_r = spec.fg_radius_frac * static_cast<double>(spec.extent);
  }
  const MotionSpec bg_motion = spec.background_motion.value_or(MotionSpec{});

  const int64_t e = spec.extent;
  const double cx = static_cast<double>(e - 1) / 2.0;
  const double cy = cx;
  ClipSample out;
  out.seed = seed;
  out.frames = Tensor::zeros({frames, 3, e, e});
  out.gt_flows = Tensor::zeros({frames - 1, 2, e, e});
  out.fg_mask = Tensor::zeros({frames, 1, e, e});

  auto fg_at = [&](int64_t t, double x, double y, Vec2* tex_coord) {
    const Vec2 q = inverse_motion(spec.motion, t, x, y, cx, cy);
    if (tex_coord) *tex_coord = q;
    if (!split) return true;
    const double dx = q.x - fg_cx, dy = q.y - fg_cy;
    return dx * dx + dy * dy <= fg_r * fg_r;
  };

  double rgb[3];
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t i = 0; i < e; ++i) {
      for (int64_t j = 0; j < e; ++j) {
        const double x = static_cast<double>(j), y = static_cast<double>(i);
        Vec2 q;
        const bool fg = fg_at(t, x, y, &q);
        if (fg) {
          eval_texture(fg_tex, q.x, q.y, rgb);
        } else {
          const Vec2 qb = inverse_motion(bg_motion, t, x, y, cx, cy);
          eval_texture(bg_tex, qb.x, qb.y, rgb);
        }
        for (int k = 0; k < 3; ++k) out.frames.at4(t, k, i, j) = rgb[k];
        out.fg_mask.at4(t, 0, i, j) = fg ? 1.0 : 0.0;
      }
    }
  }
  for (int64_t t = 0; t + 1 < frames; ++t) {
    for (int64_t i = 0; i < e; ++i) {
      for (int64_t j = 0; j < e; ++j) {
        const double x = static_cast<double>(j), y = static_cast<double>(i);
        const bool fg = out.fg_mask.at4(t, 0, i, j) > 0.5;
        const Vec2 v = step_flow(fg ? spec.motion : bg_motion, x, y, cx, cy);
        out.gt_flows.at4(t, 0, i, j) = v.x;
        out.gt_flows.at4(t, 1, i, j) = v.y;
      }
    }
  }
  if (spec.noise_std > 0.0) {
    for (auto& v : out.frames.data) v = std::clamp(v + rng.normal(0.0, spec.noise_std), 0.0, 1.0);
  }
  return out;
}

}  // namespace

ClipSample gen_pair(uint64_t seed, const SampleSpec& spec) {
  if (spec.motion.kind == MotionKind::Translate) {
    const double bound = static_cast<double>(spec.extent) / 4.0;
    if (std::fabs(spec.motion.dx) > bound || std::fabs(spec.motion.dy) > bound) {
      throw InputError("gen_pair: |dx|,|dy| must be <= extent/4 = " + std::to_string(bound));
    }
  }
  return render_clip(seed, spec, 2);
}

ClipSample gen_clip(uint64_t seed, const SampleSpec& spec, int64_t frames) {
  return render_clip(seed, spec, frames);
}

namespace {

ClipSample class_clip(uint64_t seed, int64_t extent, int64_t frames, int64_t forced_label) {
  if (frames < 2) throw InputError("gen_class_clip: need at least 2 frames");
  Rng rng(seed);
  int64_t label = rng.uniform_int(kNumClasses);  // drawn even when forced, for stream alignment
  if (forced_label >= 0) {
    if (forced_label >= kNumClasses) {
      throw InputError("gen_class_clip: label " + std::to_string(forced_label) + " out of range");
    }
    label = forced_label;
  }
  SampleSpec spec;
  spec.extent = extent;
  spec.texture = rng.uniform_int(2) == 0 ? TextureKind::Checker : TextureKind::Noise;
  const double cap = std::min(3.0, static_cast<double>(extent) / (4.0 * static_cast<double>(frames - 1)));
  const double v = rng.uniform(0.5, 1.0) * cap;
  const double sign = rng.uniform_int(2) == 0 ? 1.0 : -1.0;
  switch (label) {
    case 0: spec.motion = {MotionKind::Translate, -v, 0.0, 0.0, 1.0}; break;  // left
    case 1: spec.motion = {MotionKind::Translate, v, 0.0, 0.0, 1.0}; break;   // right
    case 2: spec.motion = {MotionKind::Translate, 0.0, -v, 0.0, 1.0}; break;  // up (y points down)
    case 3: spec.motion = {MotionKind::Translate, 0.0, v, 0.0, 1.0}; break;   // down
    default:
      spec.motion = {MotionKind::Rotate, 0.0, 0.0, sign * rng.uniform(0.06, 0.12), 1.0};
      break;
  }
  ClipSample clip = render_clip(rng.next_u64(), spec, frames);
  clip.label = label;
  clip.seed = seed;
  return clip;
}

}  // namespace

ClipSample gen_class_clip(uint64_t seed, int64_t extent, int64_t frames) {
  return class_clip(seed, extent, frames, -1);
}

ClipSample gen_class_clip(uint64_t seed, int64_t extent, int64_t frames, int64_t label) {
  return class_clip(seed, extent, frames, label);
}

void DatasetSpec::validate() const {
  if (preset != "translate" && preset != "mixed" && preset != "static" && preset != "clips") {
    throw ConfigError("data.preset must be one of translate|mixed|static|clips, got '" + preset +
                      "'");
  }
  if (count < 1) throw ConfigError("data.count must be >= 1");
  if (extent < 8) throw ConfigError("data.extent must be >= 8");
  if (frames < 2) throw ConfigError("data.frames must be >= 2");
  if (!(max_disp > 0.0) || max_disp > static_cast<double>(extent) / 4.0) {
    throw ConfigError("data.max_disp must be in (0, extent/4]");
  }
  if (noise_std < 0.0) throw ConfigError("data.noise_std must be >= 0");
}

ClipSample dataset_sample(const DatasetSpec& spec, int64_t index) {
  spec.validate();
  if (index < 0 || index >= spec.count) {
    throw InputError("dataset_sample: index " + std::to_string(index) + " out of range [0," +
                     std::to_string(spec.count) + ")");
  }
  const uint64_t derived = mix_seed(spec.seed, static_cast<uint64_t>(index));
  Rng rng(derived);
  constexpr TextureKind kTextured[3] = {TextureKind::Checker, TextureKind::Noise,
                                        TextureKind::Gradient};

  if (spec.preset == "clips") {
    ClipSample clip = class_clip(derived, spec.extent, spec.frames, index % kNumClasses);
    return clip;
  }

  SampleSpec s;
  s.extent = spec.extent;
  s.noise_std = spec.noise_std;
  if (spec.preset == "static") {
    s.texture = kTextured[rng.uniform_int(3)];
    s.motion = {};
  } else if (spec.preset == "mixed" && index % 2 == 1) {
    // The homogeneous / aperture-problem case: a textured disc over a flat,
    // static background.
    s.texture = rng.uniform_int(2) == 0 ? TextureKind::Checker : TextureKind::Noise;
    s.foreground_object = true;
    s.bg_texture = TextureKind::Flat;
    const double d = std::min(spec.max_disp, static_cast<double>(spec.extent) / 16.0);
    s.motion = {MotionKind::Translate, rng.uniform(-d, d), rng.uniform(-d, d), 0.0, 1.0};
  } else {
    s.texture = kTextured[rng.uniform_int(3)];
    const double bound = spec.max_disp / static_cast<double>(spec.frames - 1);
    s.motion = {MotionKind::Translate, rng.uniform(-bound, bound), rng.uniform(-bound, bound), 0.0,
                1.0};
  }
  ClipSample clip = render_clip(rng.next_u64(), s, spec.frames);
  clip.seed = derived;
  return clip;
}

Tensor as_network_input(const Tensor& stacked) {
  if (stacked.ndim() != 4) {
    throw InputError("as_network_input: expected [F,C,H,W], got " + stacked.shape_str());
  }
  Tensor out = stacked;
  out.shape = {1, stacked.dim(0) * stacked.dim(1), stacked.dim(2), stacked.dim(3)};
  return out;
}

void export_clip(const ClipSample& sample, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const int64_t f = sample.frames.dim(0);
  const int64_t h = sample.frames.dim(2), w = sample.frames.dim(3);
  for (int64_t t = 0; t < f; ++t) {
    ColorImage img(h, w);
    for (int64_t i = 0; i < h; ++i) {
      for (int64_t j = 0; j < w; ++j) {
        for (int k = 0; k < 3; ++k) {
          img.px(i, j)[k] =
              static_cast<unsigned char>(std::lround(sample.frames.at4(t, k, i, j) * 255.0));
        }
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "/frame_%02d.png", static_cast<int>(t));
    write_png(dir + name, img);
  }
  for (int64_t t = 0; t + 1 < f; ++t) {
    Tensor flow = Tensor::zeros({2, h, w});
    std::copy_n(sample.gt_flows.data.data() + t * 2 * h * w, 2 * h * w, flow.data.data());
    char name[32];
    std::snprintf(name, sizeof(name), "/flow_%02d.flo", static_cast<int>(t));
    write_flo(dir + name, flow);
  }
}

}  // namespace motionnet
