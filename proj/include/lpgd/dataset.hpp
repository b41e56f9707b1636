#pragma once
// Loads generated datasets back into memory: manifest parsing, per-sample
// decode (PGM16 image, PFM depth, PGM8 mask), and [N, 1, H, W] batch assembly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/image_io.hpp"
#include "lpgd/synthdata.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

struct ManifestRow {
  int index = 0;
  std::string img;
  std::string depth;
  std::string mask;
};

inline std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<ManifestRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestRow row;
    std::string idx;
    if (!std::getline(ss, idx, '\t') || !std::getline(ss, row.img, '\t') ||
        !std::getline(ss, row.depth, '\t') || !std::getline(ss, row.mask)) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                  " needs 4 tab-separated fields: " + path);
    }
    try {
      row.index = std::stoi(idx);
    } catch (const std::exception&) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                  " has a non-numeric index: " + path);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Sample load_sample(const std::filesystem::path& dir, const ManifestRow& row) {
  const GrayImage16 img = read_pgm16((dir / row.img).string());
  const FloatImage dep = read_pfm((dir / row.depth).string());
  const GrayImage8 msk = read_pgm8((dir / row.mask).string());
  if (dep.width != img.width || dep.height != img.height || msk.width != img.width ||
      msk.height != img.height) {
    throw std::invalid_argument("sample " + std::to_string(row.index) +
                                " has mismatched image/depth/mask sizes");
  }
  const int h = img.height, w = img.width;
  Sample s;
  s.image = Tensor({1, h, w});
  s.depth = Tensor({1, h, w});
  s.mask = Tensor({1, h, w});
  for (int64_t i = 0; i < h * w; ++i) {
    s.image.data()[i] = static_cast<float>(img.pix[i]) / 65535.0f;
    s.depth.data()[i] = dep.pix[i];
    const std::uint8_t m = msk.pix[i];
    if (m != 0 && m != 255) {
      throw std::invalid_argument("sample " + std::to_string(row.index) +
                                  " mask has values other than 0/255");
    }
    s.mask.data()[i] = m == 255 ? 1.0f : 0.0f;
  }
  return s;
}

// Whole dataset preloaded; toy scales fit in memory with room to spare.
struct Dataset {
  std::vector<Sample> samples;
  int width = 0;
  int height = 0;

  static Dataset load(const std::string& manifest_path) {
    const std::filesystem::path dir = std::filesystem::path(manifest_path).parent_path();
    Dataset ds;
    for (const ManifestRow& row : read_manifest(manifest_path)) {
      Sample s = load_sample(dir, row);
      const int h = static_cast<int>(s.depth.dim(1));
      const int w = static_cast<int>(s.depth.dim(2));
      if (ds.samples.empty()) {
        ds.width = w;
        ds.height = h;
      } else if (w != ds.width || h != ds.height) {
        throw std::invalid_argument("dataset mixes sample sizes: " + manifest_path);
      }
      ds.samples.push_back(std::move(s));
    }
    return ds;
  }

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

struct Batch {
  Tensor image;  // [N, 1, H, W]
  Tensor depth;  // [N, 1, H, W]
  Tensor mask;   // [N, 1, H, W]
};

inline Batch assemble_batch(const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("assemble_batch: empty batch");
  const int n = static_cast<int>(samples.size());
  const int64_t h = samples[0].depth.dim(1);
  const int64_t w = samples[0].depth.dim(2);
  const Shape shape{n, 1, static_cast<int>(h), static_cast<int>(w)};
  Batch b{Tensor(shape), Tensor(shape), Tensor(shape)};
  for (int64_t i = 0; i < n; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(i)];
    if (s.image.rank() != 3 || s.image.dim(0) != 1 || s.image.dim(1) != h ||
        s.image.dim(2) != w || !same_shape(s.image, s.depth) || !same_shape(s.image, s.mask)) {
      throw std::invalid_argument("assemble_batch: sample shapes disagree");
    }
    float* xi = b.image.data() + i * h * w;
    float* di = b.depth.data() + i * h * w;
    float* mi = b.mask.data() + i * h * w;
    for (int64_t p = 0; p < h * w; ++p) {
      xi[p] = s.image.data()[p];
      di[p] = s.depth.data()[p];
      mi[p] = s.mask.data()[p];
    }
  }
  return b;
}

}  // namespace lpgd
