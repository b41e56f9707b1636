#pragma once
// Toy encoder/decoder for depth: a three-block strided conv encoder, an
// atrous spatial pyramid at H/8, a nearest-upsample decoder with skip
// concatenations, planar-guidance heads at k = 8, 4, 2 whose full-resolution
// cue maps are routed into the following decoder stage, a 1x1 reduction head
// producing the k = 1 cue, and a final 3x3 conv combining the four cues into
// depth. Four structural variants nest for ablations:
//
//   baseline     encoder -> 1x1 depth head at H/8 -> nearest upsample x8
//   aspp         baseline + pyramid block between encoder and head
//   aspp_upconv  aspp + decoder stages (upsample + 3x3 conv + ELU, skips)
//                with the depth head at full resolution
//   full         aspp_upconv + planar-guidance heads and cue fusion
//
// Every sigmoid head is scaled by kappa, so depth lives in (0, kappa).

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/autograd.hpp"
#include "lpgd/lpg.hpp"
#include "lpgd/ops.hpp"
#include "lpgd/rng.hpp"
#include "lpgd/tensor.hpp"

namespace lpgd {

enum class Variant { kBaseline, kAspp, kAsppUpconv, kFull };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kAspp: return "aspp";
    case Variant::kAsppUpconv: return "aspp_upconv";
    case Variant::kFull: return "full";
  }
  return "full";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "baseline") return Variant::kBaseline;
  if (s == "aspp") return Variant::kAspp;
  if (s == "aspp_upconv") return Variant::kAsppUpconv;
  if (s == "full") return Variant::kFull;
  throw std::invalid_argument("unknown variant: " + s +
                              " (want baseline|aspp|aspp_upconv|full)");
}

struct ModelConfig {
  Variant variant = Variant::kFull;
  int input_channels = 1;
  int base_width = 16;
  std::vector<int> aspp_rates{3, 6, 12, 18, 24};
  float kappa = 10.0f;
  int height = 64;
  int width = 64;
  std::uint32_t seed = 0;
};

inline void validate(const ModelConfig& cfg) {
  if (cfg.input_channels != 1 && cfg.input_channels != 3) {
    throw std::invalid_argument("model: input_channels must be 1 or 3");
  }
  if (cfg.base_width < 8 || cfg.base_width % 2 != 0) {
    throw std::invalid_argument("model: base_width must be even and at least 8");
  }
  if (cfg.height <= 0 || cfg.width <= 0 || cfg.height % 8 != 0 || cfg.width % 8 != 0) {
    throw std::invalid_argument("model: input size must be positive and divisible by 8");
  }
  if (!(cfg.kappa > 1.0f)) throw std::invalid_argument("model: kappa must exceed 1");
  if (cfg.aspp_rates.empty()) throw std::invalid_argument("model: aspp_rates must be non-empty");
  for (std::size_t i = 0; i < cfg.aspp_rates.size(); ++i) {
    if (cfg.aspp_rates[i] < 1) throw std::invalid_argument("model: aspp rates must be >= 1");
    if (i > 0 && cfg.aspp_rates[i] <= cfg.aspp_rates[i - 1]) {
      throw std::invalid_argument("model: aspp rates must be strictly increasing");
    }
  }
}

// A dilated 3x3 tap pattern spans 2*rate+1 pixels; on tiny feature maps only
// rates strictly below the extent keep a usable in-bounds neighborhood, which
// matches pruning {3,6,12,18,24} down to {3,6} on an 8x8 map.
inline std::vector<int> usable_aspp_rates(const ModelConfig& cfg, bool log_dropped) {
  const int extent = std::min(cfg.height, cfg.width) / 8;
  std::vector<int> out;
  for (int r : cfg.aspp_rates) {
    if (r < extent) {
      out.push_back(r);
    } else if (log_dropped) {
      std::clog << "aspp: dropping rate " << r << " (dilated field " << 2 * r + 1
                << " exceeds the " << extent << "x" << extent << " feature map)\n";
    }
  }
  return out;
}

// Parameters are a named map; names are stable and define the checkpoint
// layout. `order` lists names in wiring order, which fixes initialization
// draws independently of map iteration.
struct Model {
  ModelConfig cfg;
  std::vector<int> usable_rates;
  std::map<std::string, Tensor> params;
  std::vector<std::string> order;

  const Tensor& p(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("model: no parameter " + name);
    return it->second;
  }
};

namespace detail {

inline void add_conv(Model& m, const std::string& name, int cout, int cin, int kh, int kw) {
  Tensor w(Shape{cout, cin, kh, kw}, true);
  Tensor b(Shape{cout}, true);
  m.params.emplace(name + ".weight", w);
  m.params.emplace(name + ".bias", b);
  m.order.push_back(name + ".weight");
  m.order.push_back(name + ".bias");
}

inline ReductionStack stack_view(const Model& m, const std::string& prefix, int in_channels) {
  const std::vector<int> widths = ReductionStack::layer_widths(in_channels);
  ReductionStack s;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::string name = prefix + ".reduce" + std::to_string(i);
    s.weights.push_back(m.p(name + ".weight"));
    s.biases.push_back(m.p(name + ".bias"));
  }
  return s;
}

}  // namespace detail

// He-style fan-in scaled uniform weights (variance 2/fan_in), zero biases.
// Draw order follows Model::order, so a given (config, seed) pair always
// produces identical bytes.
//
// Exceptions: the 3-channel convs that emit plane parameters start 20x
// smaller. Their theta channel feeds a 1/denominator with a hard clamp, so
// He-scale raw angles would emit clamped cues of order kappa/eps at
// initialization and saturate every sigmoid head downstream; near-zero angles
// start the cues at a sane kappa/2. The final depth conv gets the same
// treatment: its inputs include metric cue maps of order kappa, so He-scale
// taps would pin the output sigmoid at 0 or 1 and stall the first epochs.
inline void init_params(Model& m, std::uint32_t seed) {
  std::mt19937 g(seed);
  for (const std::string& name : m.order) {
    Tensor& t = m.params.at(name);
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0) {
      for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = 0.0f;
      continue;
    }
    int64_t fan_in = 1;
    for (int d = 1; d < t.rank(); ++d) fan_in *= t.dim(d);
    const bool plane_head = name.rfind("lpg", 0) == 0 && t.dim(0) == 3;
    const bool depth_head = name.rfind("final.", 0) == 0;
    const double scale = (plane_head || depth_head) ? 0.05 : 1.0;
    const double limit = scale * std::sqrt(6.0 / static_cast<double>(fan_in));
    for (int64_t i = 0; i < t.size(); ++i) {
      t.data()[i] = static_cast<float>(detail::uniform(g, -limit, limit));
    }
  }
}

inline Model build_model(const ModelConfig& cfg) {
  validate(cfg);
  Model m;
  m.cfg = cfg;
  const int w = cfg.base_width;
  const bool has_aspp = cfg.variant != Variant::kBaseline;
  const bool has_decoder = cfg.variant == Variant::kAsppUpconv || cfg.variant == Variant::kFull;
  const bool has_lpg = cfg.variant == Variant::kFull;

  detail::add_conv(m, "encoder.conv1", w, cfg.input_channels, 3, 3);
  detail::add_conv(m, "encoder.conv2", 2 * w, w, 3, 3);
  detail::add_conv(m, "encoder.conv3", 4 * w, 2 * w, 3, 3);

  if (has_aspp) {
    m.usable_rates = usable_aspp_rates(cfg, /*log_dropped=*/true);
    detail::add_conv(m, "aspp.branch1x1", 4 * w, 4 * w, 1, 1);
    for (int r : m.usable_rates) {
      detail::add_conv(m, "aspp.rate" + std::to_string(r), 4 * w, 4 * w, 3, 3);
    }
    const int branches = 1 + static_cast<int>(m.usable_rates.size());
    detail::add_conv(m, "aspp.fuse", 4 * w, 4 * w * branches, 1, 1);
  }

  if (!has_decoder) {
    detail::add_conv(m, "head.conv", 1, 4 * w, 1, 1);
  } else {
    const int cue = has_lpg ? 1 : 0;
    if (has_lpg) {
      const auto widths8 = ReductionStack::layer_widths(4 * w);
      for (std::size_t i = 0; i + 1 < widths8.size(); ++i) {
        detail::add_conv(m, "lpg8.reduce" + std::to_string(i), widths8[i + 1], widths8[i], 1, 1);
      }
    }
    detail::add_conv(m, "up4.conv", 2 * w, 6 * w + cue, 3, 3);
    if (has_lpg) {
      const auto widths4 = ReductionStack::layer_widths(2 * w);
      for (std::size_t i = 0; i + 1 < widths4.size(); ++i) {
        detail::add_conv(m, "lpg4.reduce" + std::to_string(i), widths4[i + 1], widths4[i], 1, 1);
      }
    }
    detail::add_conv(m, "up2.conv", w, 3 * w + cue, 3, 3);
    if (has_lpg) {
      const auto widths2 = ReductionStack::layer_widths(w);
      for (std::size_t i = 0; i + 1 < widths2.size(); ++i) {
        detail::add_conv(m, "lpg2.reduce" + std::to_string(i), widths2[i + 1], widths2[i], 1, 1);
      }
    }
    detail::add_conv(m, "up1.conv", w / 2, w + cfg.input_channels + cue, 3, 3);
    detail::add_conv(m, "reduc1x1.conv", 1, w / 2, 1, 1);
    if (has_lpg) detail::add_conv(m, "final.conv", 1, 4, 3, 3);
  }

  init_params(m, cfg.seed);
  return m;
}

inline int64_t param_count(const Model& m) {
  int64_t n = 0;
  for (const auto& [name, t] : m.params) n += t.size();
  return n;
}

struct ForwardOutputs {
  Tensor depth;             // [B, 1, H, W], values in (0, kappa)
  Tensor c1, c2, c4, c8;    // full-resolution cue maps; defined for the full variant only
};

namespace detail {

inline Tensor model_conv(Tape* tape, const Model& m, const std::string& name, const Tensor& x,
                         int stride, int dilation, int padding) {
  const Tensor& weight = m.p(name + ".weight");
  const Tensor& bias = m.p(name + ".bias");
  return conv2d(tape, x, weight, &bias, stride, dilation, padding);
}

}  // namespace detail

// Pyramid block at H/8: a 1x1 branch plus one dilated 3x3 branch per usable
// rate, each ELU-activated, concatenated and fused back to the input width.
inline Tensor aspp_forward(Tape* tape, const Model& m, const Tensor& features) {
  std::vector<Tensor> branches;
  branches.push_back(elu(tape, detail::model_conv(tape, m, "aspp.branch1x1", features, 1, 1, 0)));
  for (int r : m.usable_rates) {
    branches.push_back(elu(
        tape, detail::model_conv(tape, m, "aspp.rate" + std::to_string(r), features, 1, r, r)));
  }
  return elu(tape, detail::model_conv(tape, m, "aspp.fuse", concat(tape, branches, 1), 1, 1, 0));
}

inline ForwardOutputs model_forward(Tape* tape, const Model& m, const Tensor& input) {
  if (input.rank() != 4 || input.dim(1) != m.cfg.input_channels ||
      input.dim(2) != m.cfg.height || input.dim(3) != m.cfg.width) {
    throw std::invalid_argument("model_forward: input must be [B," +
                                std::to_string(m.cfg.input_channels) + "," +
                                std::to_string(m.cfg.height) + "," +
                                std::to_string(m.cfg.width) + "], got " +
                                shape_str(input.shape()));
  }
  const float kappa = m.cfg.kappa;
  const bool has_aspp = m.cfg.variant != Variant::kBaseline;
  const bool has_decoder =
      m.cfg.variant == Variant::kAsppUpconv || m.cfg.variant == Variant::kFull;
  const bool has_lpg = m.cfg.variant == Variant::kFull;

  const Tensor e1 = elu(tape, detail::model_conv(tape, m, "encoder.conv1", input, 2, 1, 1));
  const Tensor e2 = elu(tape, detail::model_conv(tape, m, "encoder.conv2", e1, 2, 1, 1));
  const Tensor e3 = elu(tape, detail::model_conv(tape, m, "encoder.conv3", e2, 2, 1, 1));
  const Tensor a = has_aspp ? aspp_forward(tape, m, e3) : e3;

  ForwardOutputs out;
  if (!has_decoder) {
    const Tensor d8 =
        scalar_mul(tape, sigmoid(tape, detail::model_conv(tape, m, "head.conv", a, 1, 1, 0)), kappa);
    out.depth = nearest_upsample(tape, d8, 8);
    return out;
  }

  Tensor c8;
  if (has_lpg) {
    const ReductionStack s8 = detail::stack_view(m, "lpg8", 4 * m.cfg.base_width);
    c8 = lpg_expand(tape, reduce_to_coeffs(tape, a, s8, 8, kappa), PatchGrid::make(8));
  }

  std::vector<Tensor> in4{nearest_upsample(tape, a, 2), e2};
  if (has_lpg) in4.push_back(downsample_nearest(tape, c8, 4));
  const Tensor d4 = elu(tape, detail::model_conv(tape, m, "up4.conv", concat(tape, in4, 1), 1, 1, 1));

  Tensor c4;
  if (has_lpg) {
    const ReductionStack s4 = detail::stack_view(m, "lpg4", 2 * m.cfg.base_width);
    c4 = lpg_expand(tape, reduce_to_coeffs(tape, d4, s4, 4, kappa), PatchGrid::make(4));
  }

  std::vector<Tensor> in2{nearest_upsample(tape, d4, 2), e1};
  if (has_lpg) in2.push_back(downsample_nearest(tape, c4, 2));
  const Tensor d2 = elu(tape, detail::model_conv(tape, m, "up2.conv", concat(tape, in2, 1), 1, 1, 1));

  Tensor c2;
  if (has_lpg) {
    const ReductionStack s2 = detail::stack_view(m, "lpg2", m.cfg.base_width);
    c2 = lpg_expand(tape, reduce_to_coeffs(tape, d2, s2, 2, kappa), PatchGrid::make(2));
  }

  std::vector<Tensor> in1{nearest_upsample(tape, d2, 2), input};
  if (has_lpg) in1.push_back(c2);
  const Tensor d1 = elu(tape, detail::model_conv(tape, m, "up1.conv", concat(tape, in1, 1), 1, 1, 1));

  const Tensor c1 =
      scalar_mul(tape, sigmoid(tape, detail::model_conv(tape, m, "reduc1x1.conv", d1, 1, 1, 0)), kappa);
  if (!has_lpg) {
    out.depth = c1;
    return out;
  }

  const Tensor cues = concat(tape, {c1, c2, c4, c8}, 1);
  out.depth =
      scalar_mul(tape, sigmoid(tape, detail::model_conv(tape, m, "final.conv", cues, 1, 1, 1)), kappa);
  out.c1 = c1;
  out.c2 = c2;
  out.c4 = c4;
  out.c8 = c8;
  return out;
}

}  // namespace lpgd
