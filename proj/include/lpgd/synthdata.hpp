#pragma once
// Synthetic piecewise-planar scenes with exact pinhole z-depth ground truth.
// Camera frame: x right, y down, z forward, camera at the origin. Pixel (x, y)
// casts the ray r = ((x - cx)/fx, (y - cy)/fy, 1); since the ray's z component
// is 1, the ray parameter t of a plane hit IS the z-depth: t = d / (n . r) for
// the plane n . p = d.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/image_io.hpp"
#include "lpgd/rng.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

struct CameraIntrinsics {
  double fx = 64.0;
  double fy = 64.0;
  double cx = 32.0;
  double cy = 32.0;
  int width = 64;
  int height = 64;
};

inline void validate(const CameraIntrinsics& cam) {
  if (cam.width <= 0 || cam.height <= 0) {
    throw std::invalid_argument("camera: image size must be positive");
  }
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) {
    throw std::invalid_argument("camera: focal lengths must be positive");
  }
  if (!(cam.cx >= 0.0 && cam.cx < cam.width) || !(cam.cy >= 0.0 && cam.cy < cam.height)) {
    throw std::invalid_argument("camera: principal point must lie inside the image");
  }
}

// The plane n . p = d clipped to an axis-aligned box in camera space;
// +/-infinity bounds leave an axis unclipped.
struct PlanarRect {
  std::array<double, 3> n{0.0, 0.0, 1.0};
  double d = 1.0;
  std::array<double, 3> lo{-std::numeric_limits<double>::infinity(),
                           -std::numeric_limits<double>::infinity(),
                           -std::numeric_limits<double>::infinity()};
  std::array<double, 3> hi{std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
  double albedo = 1.0;
};

struct SceneSpec {
  std::vector<PlanarRect> rects;
  double ambient = 0.25;
  double diffuse = 0.7;
  std::array<double, 3> light{0.0, 0.0, -1.0};  // unit vector pointing toward the light
  std::uint32_t seed = 0;
};

// Image, depth, and validity mask, each [1, H, W]. Depth is positive wherever
// the mask is set; the image lives in [0, 1].
struct Sample {
  Tensor image;
  Tensor depth;
  Tensor mask;
};

namespace detail {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

inline double ray_hit(const PlanarRect& r, double rx, double ry) {
  const double den = r.n[0] * rx + r.n[1] * ry + r.n[2];
  if (std::abs(den) < 1e-12) return kNoHit;
  const double t = r.d / den;
  if (t <= 1e-9) return kNoHit;
  const double px = t * rx;
  const double py = t * ry;
  if (px < r.lo[0] || px > r.hi[0] || py < r.lo[1] || py > r.hi[1] || t < r.lo[2] ||
      t > r.hi[2]) {
    return kNoHit;
  }
  return t;
}

// Nearest positive in-bounds hit per pixel: depth and the index of the rect hit.
inline void render_hits(const SceneSpec& scene, const CameraIntrinsics& cam,
                        std::vector<double>& depth, std::vector<int>& nearest) {
  validate(cam);
  if (scene.rects.empty()) throw std::invalid_argument("scene has no surfaces");
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  depth.assign(n, kNoHit);
  nearest.assign(n, -1);
  for (int y = 0; y < cam.height; ++y) {
    const double ry = (y - cam.cy) / cam.fy;
    for (int x = 0; x < cam.width; ++x) {
      const double rx = (x - cam.cx) / cam.fx;
      const std::size_t i = static_cast<std::size_t>(y) * cam.width + x;
      for (std::size_t k = 0; k < scene.rects.size(); ++k) {
        const double t = ray_hit(scene.rects[k], rx, ry);
        if (t < depth[i]) {
          depth[i] = t;
          nearest[i] = static_cast<int>(k);
        }
      }
      if (nearest[i] < 0) {
        throw std::logic_error("ray escaped the scene: every scene needs a covering sky plane");
      }
    }
  }
}

// Orientation of the plane normal that faces the camera at the origin.
inline std::array<double, 3> facing_normal(const PlanarRect& r) {
  const double s = r.d > 0.0 ? -1.0 : 1.0;
  return {s * r.n[0], s * r.n[1], s * r.n[2]};
}

// Flat Lambertian intensity of one plane (every pixel of a plane shades the
// same because the light is directional and the surface has no texture).
inline double rect_intensity(const SceneSpec& scene, const PlanarRect& r) {
  const std::array<double, 3> nf = facing_normal(r);
  const double lambert = std::max(
      0.0, nf[0] * scene.light[0] + nf[1] * scene.light[1] + nf[2] * scene.light[2]);
  return std::clamp(scene.ambient + lambert * scene.diffuse * r.albedo, 0.0, 1.0);
}

}  // namespace detail

inline Tensor render_depth(const SceneSpec& scene, const CameraIntrinsics& cam) {
  std::vector<double> depth;
  std::vector<int> nearest;
  detail::render_hits(scene, cam, depth, nearest);
  Tensor out({1, cam.height, cam.width});
  for (std::size_t i = 0; i < depth.size(); ++i) {
    out.data()[i] = static_cast<float>(depth[i]);
  }
  return out;
}

inline Tensor render_image(const SceneSpec& scene, const CameraIntrinsics& cam) {
  std::vector<double> depth;
  std::vector<int> nearest;
  detail::render_hits(scene, cam, depth, nearest);
  Tensor out({1, cam.height, cam.width});
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const PlanarRect& r = scene.rects[static_cast<std::size_t>(nearest[i])];
    out.data()[i] = static_cast<float>(detail::rect_intensity(scene, r));
  }
  return out;
}

// Random family: 1 floor + 0-2 tilted back walls + 0-3 tilted standing panels
// + a covering sky plane. Parameter ranges keep every visible depth inside
// (0.5, 0.9 * kappa) by construction; sample_scene_checked verifies anyway.
//
// The camera height above the floor is FIXED at 1.5 across the family, and
// panels stand on the floor. Single-image metric depth is only well-posed
// when the data carries absolute-scale cues (real rigs mount the camera at a
// fixed height for the same reason): with the shared anchor, every surface's
// distance is readable from where it meets the floor in the image.
inline SceneSpec sample_scene(std::mt19937& g, double kappa) {
  using detail::uniform;
  SceneSpec s;
  s.ambient = 0.25;
  s.diffuse = 0.7;
  const double lz = -uniform(g, 0.2, 1.0);
  const double lphi = uniform(g, 0.0, 6.283185307179586);
  const double lr = std::sqrt(std::max(0.0, 1.0 - lz * lz));
  s.light = {lr * std::cos(lphi), lr * std::sin(lphi), lz};

  PlanarRect sky;
  sky.n = {0.0, 0.0, 1.0};
  sky.d = kappa * uniform(g, 0.75, 0.89);
  sky.albedo = uniform(g, 0.55, 0.95);
  s.rects.push_back(sky);

  constexpr double kCameraHeight = 1.5;
  PlanarRect floor;
  floor.n = {0.0, -1.0, 0.0};
  floor.d = -kCameraHeight;  // y points down, so the floor sits at +1.5
  floor.albedo = uniform(g, 0.55, 0.95);
  s.rects.push_back(floor);

  const int walls = detail::uniform_int(g, 3);
  for (int w = 0; w < walls; ++w) {
    const double yaw = uniform(g, -0.6, 0.6);
    PlanarRect wall;
    wall.n = {std::sin(yaw), 0.0, std::cos(yaw)};
    wall.d = uniform(g, 4.0, 7.5);
    wall.albedo = uniform(g, 0.55, 0.95);
    s.rects.push_back(wall);
  }

  const int panels = detail::uniform_int(g, 4);
  for (int p = 0; p < panels; ++p) {
    const double cx = uniform(g, -1.5, 1.5);
    const double cz = uniform(g, 1.8, 5.5);
    const double hx = uniform(g, 0.25, 0.9);
    const double hy = uniform(g, 0.25, 0.9);
    const double cy = kCameraHeight - hy;  // bottom edge rests on the floor
    const double yaw = uniform(g, -0.5, 0.5);
    const double pitch = uniform(g, -0.15, 0.15);
    PlanarRect panel;
    panel.n = {std::cos(pitch) * std::sin(yaw), -std::sin(pitch),
               std::cos(pitch) * std::cos(yaw)};
    panel.d = panel.n[0] * cx + panel.n[1] * cy + panel.n[2] * cz;
    panel.lo = {cx - hx, cy - hy, -std::numeric_limits<double>::infinity()};
    panel.hi = {cx + hx, cy + hy, std::numeric_limits<double>::infinity()};
    panel.albedo = uniform(g, 0.55, 0.95);
    s.rects.push_back(panel);
  }
  return s;
}

inline bool depth_in_range(const Tensor& depth, double lo, double hi) {
  for (int64_t i = 0; i < depth.size(); ++i) {
    const float z = depth.data()[i];
    if (!(z > lo && z < hi)) return false;
  }
  return true;
}

// Every pair of planes must render at visibly different intensities, or the
// boundary between them vanishes and depth across it becomes unknowable from
// the image. Flat shading makes this a scene property, checkable up front.
inline bool shading_separated(const SceneSpec& s, double min_gap) {
  for (std::size_t a = 0; a < s.rects.size(); ++a) {
    const double va = detail::rect_intensity(s, s.rects[a]);
    for (std::size_t b = a + 1; b < s.rects.size(); ++b) {
      if (std::abs(va - detail::rect_intensity(s, s.rects[b])) < min_gap) return false;
    }
  }
  return true;
}

inline SceneSpec sample_scene_checked(std::mt19937& g, const CameraIntrinsics& cam,
                                      double kappa) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    SceneSpec s = sample_scene(g, kappa);
    if (!shading_separated(s, 0.05)) continue;
    if (depth_in_range(render_depth(s, cam), 0.5, 0.9 * kappa)) return s;
  }
  throw std::logic_error("scene sampling failed to satisfy depth bounds");
}

struct GenConfig {
  CameraIntrinsics cam;
  double kappa = 10.0;
  double gt_dropout = 0.0;
};

inline void validate(const GenConfig& cfg) {
  validate(cfg.cam);
  if (!(cfg.kappa > 1.0)) throw std::invalid_argument("gen: kappa must exceed 1");
  if (!(cfg.gt_dropout >= 0.0 && cfg.gt_dropout < 1.0)) {
    throw std::invalid_argument("gen: gt_dropout must lie in [0, 1)");
  }
}

// Sample i of a dataset is a pure function of (cfg, seed, i): the per-sample
// generator is seeded by (seed, i), so generation order and count are
// irrelevant and regeneration is bit-identical.
inline Sample synth_sample(const GenConfig& cfg, std::uint32_t seed, int index) {
  validate(cfg);
  std::seed_seq sq{seed, static_cast<std::uint32_t>(index)};
  std::mt19937 g(sq);
  const SceneSpec scene = sample_scene_checked(g, cfg.cam, cfg.kappa);
  Sample s;
  s.image = render_image(scene, cfg.cam);
  s.depth = render_depth(scene, cfg.cam);
  s.mask = Tensor::full(s.depth.shape(), 1.0f);
  if (cfg.gt_dropout > 0.0) {
    for (int64_t i = 0; i < s.mask.size(); ++i) {
      if (detail::unit_uniform(g) < cfg.gt_dropout) s.mask.data()[i] = 0.0f;
    }
  }
  return s;
}

namespace detail {

inline std::string sample_file(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%06d.%s", stem, index, ext);
  return buf;
}

}  // namespace detail

inline void gen_dataset(int n, const GenConfig& cfg, std::uint32_t seed,
                        const std::string& out_dir) {
  if (n < 0) throw std::invalid_argument("gen: sample count must be non-negative");
  validate(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const std::filesystem::path dir(out_dir);
  std::ofstream manifest(dir / "manifest.tsv");
  if (!manifest) throw std::runtime_error("cannot open for writing: " + (dir / "manifest.tsv").string());
  const int w = cfg.cam.width;
  const int h = cfg.cam.height;
  for (int i = 0; i < n; ++i) {
    const Sample s = synth_sample(cfg, seed, i);
    GrayImage16 img{w, h, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h)};
    for (std::size_t p = 0; p < img.pix.size(); ++p) {
      img.pix[p] = static_cast<std::uint16_t>(std::lround(s.image.data()[p] * 65535.0));
    }
    FloatImage dep{w, h, std::vector<float>(s.depth.data(), s.depth.data() + s.depth.size())};
    GrayImage8 msk{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
    for (std::size_t p = 0; p < msk.pix.size(); ++p) {
      msk.pix[p] = s.mask.data()[p] > 0.5f ? 255 : 0;
    }
    const std::string img_name = detail::sample_file("img", i, "pgm");
    const std::string dep_name = detail::sample_file("depth", i, "pfm");
    const std::string msk_name = detail::sample_file("mask", i, "pgm");
    write_pgm((dir / img_name).string(), img);
    write_pfm((dir / dep_name).string(), dep);
    write_pgm((dir / msk_name).string(), msk);
    manifest << i << '\t' << img_name << '\t' << dep_name << '\t' << msk_name << '\n';
  }
  if (!manifest) throw std::runtime_error("write failed: " + (dir / "manifest.tsv").string());
}

inline Tensor flip_horizontal(const Tensor& t) {
  if (t.rank() != 3) throw std::invalid_argument("flip_horizontal expects [C, H, W]");
  Tensor out(t.shape());
  const int64_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  for (int64_t ci = 0; ci < c; ++ci) {
    for (int64_t y = 0; y < h; ++y) {
      const float* src = t.data() + (ci * h + y) * w;
      float* dst = out.data() + (ci * h + y) * w;
      for (int64_t x = 0; x < w; ++x) dst[x] = src[w - 1 - x];
    }
  }
  return out;
}

inline Sample flip_horizontal(const Sample& s) {
  return {flip_horizontal(s.image), flip_horizontal(s.depth), flip_horizontal(s.mask)};
}

namespace detail {

inline void apply_brightness(Tensor& image, double b) {
  for (int64_t i = 0; i < image.size(); ++i) {
    image.data()[i] = static_cast<float>(
        std::clamp(static_cast<double>(image.data()[i]) * b, 0.0, 1.0));
  }
}

inline void apply_contrast(Tensor& image, double c) {
  for (int64_t i = 0; i < image.size(); ++i) {
    image.data()[i] = static_cast<float>(
        std::clamp(0.5 + (static_cast<double>(image.data()[i]) - 0.5) * c, 0.0, 1.0));
  }
}

}  // namespace detail

// Each stage fires with probability 1/2 and draws its scale only when it
// fires, so an all-gates-off draw sequence returns the sample bit-unchanged.
// Flip moves image, depth, and mask together; the photometric stages touch
// only the image.
inline Sample augment(const Sample& s, std::mt19937& g) {
  Sample out{s.image.clone(), s.depth.clone(), s.mask.clone()};
  if (detail::unit_uniform(g) < 0.5) out = flip_horizontal(out);
  if (detail::unit_uniform(g) < 0.5) {
    detail::apply_brightness(out.image, detail::uniform(g, 0.9, 1.1));
  }
  if (detail::unit_uniform(g) < 0.5) {
    detail::apply_contrast(out.image, detail::uniform(g, 0.9, 1.1));
  }
  return out;
}

}  // namespace lpgd
