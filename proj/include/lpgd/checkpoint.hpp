#pragma once
// Binary checkpoint: magic "LPGD", version u32, then a parameter section and
// an optimizer section, each `count u32` followed by that many tensor records
// (name length u16 + UTF-8 name, rank u8, extents u32 each, raw f32
// little-endian data), and a trailing u64 step counter. The first parameter
// record, "__meta__.config", stores the run configuration text one byte per
// float, so a checkpoint rebuilds its own model. Saving is deterministic:
// save -> load -> save reproduces the file byte for byte.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "lpgd/config.hpp"
#include "lpgd/network.hpp"
#include "lpgd/optim.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'L', 'P', 'G', 'D'};
inline constexpr const char* kMetaTensorName = "__meta__.config";

namespace detail {

template <typename T>
void ckpt_write(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ckpt_read(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::invalid_argument("truncated checkpoint: " + path);
  return v;
}

inline void write_tensor_record(std::ostream& out, const std::string& name, const Tensor& t) {
  if (name.size() > 0xffff) throw std::invalid_argument("tensor name too long: " + name);
  if (t.shape().empty() || t.shape().size() > 0xff)
    throw std::invalid_argument("tensor rank unsupported in checkpoint: " + name);
  ckpt_write<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  ckpt_write<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape().size()));
  for (int e : t.shape()) ckpt_write<std::uint32_t>(out, static_cast<std::uint32_t>(e));
  out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
}

inline std::pair<std::string, Tensor> read_tensor_record(std::istream& in, const std::string& path) {
  const auto name_len = ckpt_read<std::uint16_t>(in, path);
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  if (!in) throw std::invalid_argument("truncated checkpoint: " + path);
  const auto rank = ckpt_read<std::uint8_t>(in, path);
  if (rank == 0) throw std::invalid_argument("checkpoint tensor '" + name + "' has rank 0: " + path);
  Shape shape(rank);
  std::int64_t total = 1;
  for (int i = 0; i < rank; ++i) {
    const auto e = ckpt_read<std::uint32_t>(in, path);
    if (e == 0 || e > (1u << 28)) throw std::invalid_argument("checkpoint tensor '" + name + "' has bad extent: " + path);
    shape[i] = static_cast<int>(e);
    total *= shape[i];
    if (total > (std::int64_t{1} << 28)) throw std::invalid_argument("checkpoint tensor '" + name + "' too large: " + path);
  }
  Tensor t(shape);
  in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!in) throw std::invalid_argument("truncated checkpoint: " + path);
  return {std::move(name), std::move(t)};
}

inline Tensor text_to_tensor(const std::string& text) {
  Tensor t({static_cast<int>(text.size())});
  for (std::size_t i = 0; i < text.size(); ++i)
    t.data()[i] = static_cast<float>(static_cast<unsigned char>(text[i]));
  return t;
}

inline std::string tensor_to_text(const Tensor& t) {
  std::string s(static_cast<std::size_t>(t.size()), '\0');
  for (std::int64_t i = 0; i < t.size(); ++i) {
    const float v = t.data()[i];
    if (!(v >= 0.0f && v <= 255.0f) || v != static_cast<float>(static_cast<int>(v)))
      throw std::invalid_argument("checkpoint meta tensor holds a non-byte value");
    s[static_cast<std::size_t>(i)] = static_cast<char>(static_cast<int>(v));
  }
  return s;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const RunConfig& cfg, const Model& model,
                            const AdamState* opt, std::uint64_t step) {
  if (opt && (opt->m.size() != model.order.size() || opt->v.size() != model.order.size()))
    throw std::invalid_argument("save_checkpoint: optimizer state does not match parameter list");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kCheckpointMagic, 4);
  detail::ckpt_write<std::uint32_t>(out, kCheckpointVersion);

  detail::ckpt_write<std::uint32_t>(out, static_cast<std::uint32_t>(1 + model.order.size()));
  detail::write_tensor_record(out, kMetaTensorName, detail::text_to_tensor(config_to_string(cfg)));
  for (const std::string& name : model.order) detail::write_tensor_record(out, name, model.params.at(name));

  if (opt) {
    detail::ckpt_write<std::uint32_t>(out, static_cast<std::uint32_t>(2 * model.order.size() + 1));
    for (std::size_t i = 0; i < model.order.size(); ++i) {
      detail::write_tensor_record(out, "adam.m." + model.order[i], opt->m[i]);
      detail::write_tensor_record(out, "adam.v." + model.order[i], opt->v[i]);
    }
    Tensor t({1});
    t.data()[0] = static_cast<float>(opt->t);
    detail::write_tensor_record(out, "adam.t", t);
  } else {
    detail::ckpt_write<std::uint32_t>(out, 0);
  }

  detail::ckpt_write<std::uint64_t>(out, step);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct CheckpointData {
  RunConfig config;
  std::vector<std::pair<std::string, Tensor>> params;  // file order, meta record excluded
  std::vector<std::pair<std::string, Tensor>> opt;
  std::uint64_t step = 0;
};

inline CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::invalid_argument("not a checkpoint (bad magic): " + path);
  const auto version = detail::ckpt_read<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw std::invalid_argument("checkpoint version " + std::to_string(version) + " unsupported (want " +
                                std::to_string(kCheckpointVersion) + "): " + path);

  CheckpointData data;
  const auto n_params = detail::ckpt_read<std::uint32_t>(in, path);
  if (n_params == 0) throw std::invalid_argument("checkpoint has no parameter section: " + path);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    auto rec = detail::read_tensor_record(in, path);
    if (i == 0) {
      if (rec.first != kMetaTensorName)
        throw std::invalid_argument("checkpoint does not start with " + std::string(kMetaTensorName) + ": " + path);
      data.config = parse_config(detail::tensor_to_text(rec.second), path + " (embedded config)");
    } else {
      data.params.push_back(std::move(rec));
    }
  }
  const auto n_opt = detail::ckpt_read<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < n_opt; ++i) data.opt.push_back(detail::read_tensor_record(in, path));
  data.step = detail::ckpt_read<std::uint64_t>(in, path);
  if (in.peek() != std::char_traits<char>::eof())
    throw std::invalid_argument("trailing bytes after checkpoint payload: " + path);
  return data;
}

struct LoadedModel {
  RunConfig config;
  Model model;
  AdamState opt;
  bool has_opt = false;
  std::uint64_t step = 0;
};

/// Rebuilds the model named by the embedded config and fills parameters (and,
/// when present, Adam moments) from the file. Names and shapes must match the
/// freshly built model exactly.
inline LoadedModel load_checkpoint(const std::string& path) {
  CheckpointData data = read_checkpoint(path);
  LoadedModel out{data.config, build_model(model_config(data.config)), AdamState{}, false, data.step};

  if (data.params.size() != out.model.order.size())
    throw std::invalid_argument("checkpoint declares " + std::to_string(data.params.size()) + " parameters, model has " +
                                std::to_string(out.model.order.size()) + ": " + path);
  for (std::size_t i = 0; i < out.model.order.size(); ++i) {
    const std::string& name = out.model.order[i];
    auto& rec = data.params[i];
    if (rec.first != name)
      throw std::invalid_argument("checkpoint parameter '" + rec.first + "' where '" + name + "' expected: " + path);
    Tensor& dst = out.model.params.at(name);
    if (!same_shape(rec.second, dst))
      throw std::invalid_argument("checkpoint parameter '" + name + "' has shape " + shape_str(rec.second.shape()) +
                                  ", model wants " + shape_str(dst.shape()) + ": " + path);
    std::memcpy(dst.data(), rec.second.data(), static_cast<std::size_t>(dst.size()) * sizeof(float));
  }

  std::vector<Tensor> params_vec;
  params_vec.reserve(out.model.order.size());
  for (const std::string& name : out.model.order) params_vec.push_back(out.model.params.at(name));
  out.opt = AdamState::init(params_vec);
  if (!data.opt.empty()) {
    if (data.opt.size() != 2 * out.model.order.size() + 1)
      throw std::invalid_argument("checkpoint optimizer section has " + std::to_string(data.opt.size()) +
                                  " records, expected " + std::to_string(2 * out.model.order.size() + 1) + ": " + path);
    for (std::size_t i = 0; i < out.model.order.size(); ++i) {
      const std::string& name = out.model.order[i];
      for (int mv = 0; mv < 2; ++mv) {
        auto& rec = data.opt[2 * i + mv];
        const std::string want = (mv == 0 ? "adam.m." : "adam.v.") + name;
        if (rec.first != want)
          throw std::invalid_argument("checkpoint optimizer record '" + rec.first + "' where '" + want + "' expected: " + path);
        Tensor& dst = mv == 0 ? out.opt.m[i] : out.opt.v[i];
        if (!same_shape(rec.second, dst))
          throw std::invalid_argument("checkpoint optimizer record '" + want + "' has wrong shape: " + path);
        std::memcpy(dst.data(), rec.second.data(), static_cast<std::size_t>(dst.size()) * sizeof(float));
      }
    }
    auto& trec = data.opt.back();
    if (trec.first != "adam.t" || trec.second.size() != 1)
      throw std::invalid_argument("checkpoint optimizer section must end with scalar 'adam.t': " + path);
    out.opt.t = static_cast<std::int64_t>(trec.second.data()[0]);
    out.has_opt = true;
  }
  return out;
}

}  // namespace lpgd
