#pragma once
// Subcommand implementations behind the `lpgd` binary. Each cmd_* returns a
// process exit code: 0 success, 1 user error (bad arguments, unreadable or
// mismatched inputs, diverged run), 2 internal error. Streams are injected so
// tests can drive commands without a process boundary.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "lpgd/ablation.hpp"
#include "lpgd/checkpoint.hpp"
#include "lpgd/config.hpp"
#include "lpgd/dataset.hpp"
#include "lpgd/gradcheck_suite.hpp"
#include "lpgd/image_io.hpp"
#include "lpgd/metrics.hpp"
#include "lpgd/network.hpp"
#include "lpgd/synthdata.hpp"
#include "lpgd/trainer.hpp"

namespace lpgd {

namespace detail {

template <class F>
int cli_guard(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

inline CameraIntrinsics intrinsics_for(const RunConfig& cfg) {
  CameraIntrinsics cam;
  cam.width = cfg.width;
  cam.height = cfg.height;
  cam.fx = static_cast<float>(cfg.width);
  cam.fy = static_cast<float>(cfg.width);
  cam.cx = static_cast<float>(cfg.width) / 2.0f;
  cam.cy = static_cast<float>(cfg.height) / 2.0f;
  return cam;
}

// PGM16 in [0,1] -> [1,1,H,W] input tensor, replicated if the model wants RGB.
inline Tensor load_input_image(const std::string& path, int channels) {
  const GrayImage16 img = read_pgm16(path);
  Tensor t({1, 1, img.height, img.width});
  for (std::size_t i = 0; i < img.pix.size(); ++i) t.data()[i] = static_cast<float>(img.pix[i]) / 65535.0f;
  return match_channels(t, channels);
}

inline GrayImage16 depth_to_pgm(const Tensor& depth, float kappa) {
  GrayImage16 img;
  img.height = static_cast<int>(depth.dim(2));
  img.width = static_cast<int>(depth.dim(3));
  img.pix.resize(static_cast<std::size_t>(depth.dim(2) * depth.dim(3)));
  for (std::size_t i = 0; i < img.pix.size(); ++i) {
    double v = depth.data()[i] / kappa;
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    img.pix[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  return img;
}

// Min-max normalization to the full 16-bit range; a constant map turns black.
inline GrayImage16 normalized_pgm(const Tensor& map) {
  GrayImage16 img;
  img.height = static_cast<int>(map.dim(2));
  img.width = static_cast<int>(map.dim(3));
  img.pix.resize(static_cast<std::size_t>(map.dim(2) * map.dim(3)));
  float lo = map.data()[0], hi = map.data()[0];
  for (std::int64_t i = 0; i < map.size(); ++i) {
    lo = std::min(lo, map.data()[i]);
    hi = std::max(hi, map.data()[i]);
  }
  const double span = hi > lo ? static_cast<double>(hi) - static_cast<double>(lo) : 1.0;
  for (std::size_t i = 0; i < img.pix.size(); ++i)
    img.pix[i] = static_cast<std::uint16_t>(std::lround((map.data()[i] - lo) / span * 65535.0));
  return img;
}

inline FloatImage depth_to_float_image(const Tensor& depth) {
  FloatImage img;
  img.height = static_cast<int>(depth.dim(2));
  img.width = static_cast<int>(depth.dim(3));
  img.pix.assign(depth.data(), depth.data() + depth.size());
  return img;
}

}  // namespace detail

inline int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir, int n, std::ostream& out,
                        std::ostream& err) {
  return detail::cli_guard(err, [&] {
    if (n < 0) throw std::invalid_argument("gen-data: n must be non-negative");
    GenConfig gc;
    gc.cam = detail::intrinsics_for(cfg);
    gc.kappa = cfg.kappa;
    gc.gt_dropout = cfg.gt_dropout;
    gen_dataset(n, gc, cfg.seed, out_dir);
    out << "wrote " << n << " samples to " << out_dir << "\n";
    return 0;
  });
}

inline int cmd_train(const RunConfig& cfg, const std::string& out_checkpoint, const std::string& log_path,
                     std::ostream& out, std::ostream& err) {
  return detail::cli_guard(err, [&] {
    std::ofstream log(log_path);
    if (!log) throw std::runtime_error("cannot open for writing: " + log_path);
    const TrainResult r = train_model(cfg, out_checkpoint, log, &out);
    out << "trained " << r.steps_run << " steps; checkpoint at " << out_checkpoint << "; log at " << log_path
        << "\n";
    if (r.val_evaluated) out << metrics_tsv_header() << "\n" << metrics_tsv_row(r.val) << "\n";
    return 0;
  });
}

inline int cmd_eval(const std::string& checkpoint_path, const std::string& data_dir, double min_cap,
                    double max_cap, bool oracle, const std::string& out_path, std::ostream& out,
                    std::ostream& err) {
  return detail::cli_guard(err, [&] {
    const LoadedModel lm = load_checkpoint(checkpoint_path);
    const Dataset ds = Dataset::load(data_dir + "/manifest.tsv");
    EvalConfig ec;
    ec.min_cap = min_cap;
    ec.max_cap = max_cap > 0.0 ? max_cap : static_cast<double>(lm.config.kappa);

    MetricsReport report;
    if (oracle) {
      // Ground truth scored as its own prediction: calibrates the metric floor.
      MetricsReport sum;
      for (const Sample& s : ds.samples) {
        const MetricsReport r = compute_metrics(s.depth, s.depth, s.mask, ec);
        sum.delta1 += r.delta1;
        sum.delta2 += r.delta2;
        sum.delta3 += r.delta3;
        sum.abs_rel += r.abs_rel;
        sum.sq_rel += r.sq_rel;
        sum.rmse += r.rmse;
        sum.rmse_log += r.rmse_log;
        sum.log10 += r.log10;
        sum.t_count += r.t_count;
      }
      const double n = static_cast<double>(ds.samples.size());
      sum.delta1 /= n;
      sum.delta2 /= n;
      sum.delta3 /= n;
      sum.abs_rel /= n;
      sum.sq_rel /= n;
      sum.rmse /= n;
      sum.rmse_log /= n;
      sum.log10 /= n;
      report = sum;
    } else {
      report = evaluate_model(lm.model, ds, ec);
    }

    const std::string table = metrics_tsv_header() + "\n" + metrics_tsv_row(report) + "\n";
    out << table;
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) throw std::runtime_error("cannot open for writing: " + out_path);
      f << table;
    }
    return 0;
  });
}

inline int cmd_infer(const std::string& checkpoint_path, const std::string& image_path,
                     const std::string& out_prefix, std::ostream& out, std::ostream& err) {
  return detail::cli_guard(err, [&] {
    const LoadedModel lm = load_checkpoint(checkpoint_path);
    const Tensor input = detail::load_input_image(image_path, lm.model.cfg.input_channels);
    const ForwardOutputs fo = model_forward(nullptr, lm.model, input);
    write_pfm(out_prefix + ".pfm", detail::depth_to_float_image(fo.depth));
    write_pgm(out_prefix + ".pgm", detail::depth_to_pgm(fo.depth, lm.model.cfg.kappa));
    out << "wrote " << out_prefix << ".pfm and " << out_prefix << ".pgm\n";
    return 0;
  });
}

inline int cmd_inspect_lpg(const std::string& checkpoint_path, const std::string& image_path,
                           const std::string& out_dir, std::ostream& out, std::ostream& err) {
  return detail::cli_guard(err, [&] {
    const LoadedModel lm = load_checkpoint(checkpoint_path);
    if (lm.model.cfg.variant != Variant::kFull)
      throw std::invalid_argument("inspect-lpg needs the full variant; this checkpoint is '" +
                                  std::string(variant_name(lm.model.cfg.variant)) + "'");
    const Tensor input = detail::load_input_image(image_path, lm.model.cfg.input_channels);
    const ForwardOutputs fo = model_forward(nullptr, lm.model, input);
    std::filesystem::create_directories(out_dir);
    write_pgm(out_dir + "/cue_8x8.pgm", detail::normalized_pgm(fo.c8));
    write_pgm(out_dir + "/cue_4x4.pgm", detail::normalized_pgm(fo.c4));
    write_pgm(out_dir + "/cue_2x2.pgm", detail::normalized_pgm(fo.c2));
    write_pgm(out_dir + "/cue_1x1.pgm", detail::normalized_pgm(fo.c1));
    write_pgm(out_dir + "/depth.pgm", detail::depth_to_pgm(fo.depth, lm.model.cfg.kappa));
    out << "wrote 4 cue maps and depth.pgm to " << out_dir << "\n";
    return 0;
  });
}

inline int cmd_gradcheck(std::ostream& out, std::ostream& err) {
  return detail::cli_guard(err, [&] {
    const std::vector<GradcheckOutcome> results = run_gradcheck_suite();
    out << "case\tmax_rel_err\tstatus\n";
    bool all_ok = true;
    for (const GradcheckOutcome& r : results) {
      char line[128];
      std::snprintf(line, sizeof(line), "%s\t%.3g\t%s\n", r.name.c_str(), r.max_rel_err,
                    r.passed ? "pass" : "FAIL");
      out << line;
      all_ok = all_ok && r.passed;
    }
    if (!all_ok) {
      err << "internal error: gradient check failed\n";
      return 2;
    }
    return 0;
  });
}

inline int cmd_ablate(const RunConfig& cfg, const std::string& work_dir, const std::string& out_path,
                      std::ostream& out, std::ostream& err) {
  return detail::cli_guard(err, [&] {
    const AblationPlan plan = default_ablation_plan(cfg);
    const std::vector<AblationResult> results = run_ablation(plan, work_dir, &out);
    const std::string table = ablation_tsv(results);
    out << table;
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) throw std::runtime_error("cannot open for writing: " + out_path);
      f << table;
    }
    return 0;
  });
}

}  // namespace lpgd
