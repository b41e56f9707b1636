#pragma once
// Binary PGM (P5) and grayscale PFM ("Pf") readers and writers.
// PGM raster: big-endian per sample when maxval > 255 (Netpbm convention).
// PFM raster: 32-bit floats, rows stored bottom-to-top; a negative scale line
// ("-1.0") marks little-endian data, a positive one big-endian.

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpgd {

static_assert(std::endian::native == std::endian::little,
              "image IO assumes a little-endian host");

// Row-major, top row first; pix.size() == width * height.
struct GrayImage16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pix;
};

struct GrayImage8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pix;
};

struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> pix;
};

namespace detail {

inline void require_dims(int width, int height, std::size_t n, const char* what) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument(std::string(what) + ": dimensions must be positive");
  }
  if (n != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument(std::string(what) + ": pixel count does not match dimensions");
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

// Next whitespace-delimited header token; '#' starts a comment running to the
// end of the line. Consumes the single delimiter after the token, which is how
// PNM/PFM headers separate the raster from the last header field.
inline std::string pnm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(static_cast<unsigned char>(c)) && c != '#') {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#') in.unget();
  if (tok.empty()) throw std::invalid_argument("truncated header: " + path);
  return tok;
}

inline long pnm_number(std::istream& in, const std::string& path, const char* what,
                       long lo, long hi) {
  const std::string tok = pnm_token(in, path);
  long v = 0;
  std::size_t used = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size()) {
    throw std::invalid_argument(std::string(what) + " is not a number in " + path);
  }
  if (v < lo || v > hi) {
    throw std::invalid_argument(std::string(what) + " out of range in " + path);
  }
  return v;
}

inline void read_exact(std::istream& in, char* dst, std::size_t bytes, const std::string& path) {
  in.read(dst, static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw std::invalid_argument("truncated pixel data: " + path);
  }
}

constexpr long kMaxPixels = 1L << 26;

}  // namespace detail

inline void write_pgm(const std::string& path, const GrayImage16& img) {
  detail::require_dims(img.width, img.height, img.pix.size(), "write_pgm16");
  std::ofstream f = detail::open_out(path);
  f << "P5\n" << img.width << " " << img.height << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 2);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::uint16_t v = img.pix[static_cast<std::size_t>(y) * img.width + x];
      row[2 * static_cast<std::size_t>(x)] = static_cast<unsigned char>(v >> 8);
      row[2 * static_cast<std::size_t>(x) + 1] = static_cast<unsigned char>(v & 0xff);
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline void write_pgm(const std::string& path, const GrayImage8& img) {
  detail::require_dims(img.width, img.height, img.pix.size(), "write_pgm8");
  std::ofstream f = detail::open_out(path);
  f << "P5\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pix.data()),
          static_cast<std::streamsize>(img.pix.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline GrayImage16 read_pgm16(const std::string& path) {
  std::ifstream f = detail::open_in(path);
  if (detail::pnm_token(f, path) != "P5") {
    throw std::invalid_argument("not a binary PGM (P5): " + path);
  }
  GrayImage16 img;
  img.width = static_cast<int>(detail::pnm_number(f, path, "width", 1, 1L << 16));
  img.height = static_cast<int>(detail::pnm_number(f, path, "height", 1, 1L << 16));
  if (static_cast<long>(img.width) * img.height > detail::kMaxPixels) {
    throw std::invalid_argument("image too large: " + path);
  }
  detail::pnm_number(f, path, "maxval", 256, 65535);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(n * 2);
  detail::read_exact(f, reinterpret_cast<char*>(raw.data()), raw.size(), path);
  img.pix.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.pix[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return img;
}

inline GrayImage8 read_pgm8(const std::string& path) {
  std::ifstream f = detail::open_in(path);
  if (detail::pnm_token(f, path) != "P5") {
    throw std::invalid_argument("not a binary PGM (P5): " + path);
  }
  GrayImage8 img;
  img.width = static_cast<int>(detail::pnm_number(f, path, "width", 1, 1L << 16));
  img.height = static_cast<int>(detail::pnm_number(f, path, "height", 1, 1L << 16));
  if (static_cast<long>(img.width) * img.height > detail::kMaxPixels) {
    throw std::invalid_argument("image too large: " + path);
  }
  detail::pnm_number(f, path, "maxval", 1, 255);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pix.resize(n);
  detail::read_exact(f, reinterpret_cast<char*>(img.pix.data()), n, path);
  return img;
}

inline void write_pfm(const std::string& path, const FloatImage& img) {
  detail::require_dims(img.width, img.height, img.pix.size(), "write_pfm");
  std::ofstream f = detail::open_out(path);
  f << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
  for (int y = img.height - 1; y >= 0; --y) {
    f.write(reinterpret_cast<const char*>(img.pix.data() + static_cast<std::size_t>(y) * img.width),
            static_cast<std::streamsize>(img.width) * 4);
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline FloatImage read_pfm(const std::string& path) {
  std::ifstream f = detail::open_in(path);
  const std::string magic = detail::pnm_token(f, path);
  if (magic == "PF") throw std::invalid_argument("color PFM not supported: " + path);
  if (magic != "Pf") throw std::invalid_argument("not a grayscale PFM (Pf): " + path);
  FloatImage img;
  img.width = static_cast<int>(detail::pnm_number(f, path, "width", 1, 1L << 16));
  img.height = static_cast<int>(detail::pnm_number(f, path, "height", 1, 1L << 16));
  if (static_cast<long>(img.width) * img.height > detail::kMaxPixels) {
    throw std::invalid_argument("image too large: " + path);
  }
  const std::string scale_tok = detail::pnm_token(f, path);
  double scale = 0.0;
  std::size_t used = 0;
  try {
    scale = std::stod(scale_tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != scale_tok.size() || scale == 0.0) {
    throw std::invalid_argument("bad PFM scale in " + path);
  }
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(n * 4);
  detail::read_exact(f, reinterpret_cast<char*>(raw.data()), raw.size(), path);
  if (scale > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(raw[4 * i], raw[4 * i + 3]);
      std::swap(raw[4 * i + 1], raw[4 * i + 2]);
    }
  }
  img.pix.resize(n);
  for (int y = 0; y < img.height; ++y) {
    const std::size_t src_row = static_cast<std::size_t>(img.height - 1 - y) * img.width;
    std::memcpy(img.pix.data() + static_cast<std::size_t>(y) * img.width,
                raw.data() + src_row * 4, static_cast<std::size_t>(img.width) * 4);
  }
  return img;
}

}  // namespace lpgd
