#pragma once
// Training driver: Adam with polynomial learning-rate decay on the
// scale-invariant log loss, batches drawn with replacement from a preloaded
// dataset. Every random draw comes from one seeded generator, so a fixed
// config reproduces the loss log and checkpoint byte for byte.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/checkpoint.hpp"
#include "lpgd/config.hpp"
#include "lpgd/dataset.hpp"
#include "lpgd/loss.hpp"
#include "lpgd/metrics.hpp"
#include "lpgd/network.hpp"
#include "lpgd/optim.hpp"
#include "lpgd/rng.hpp"
#include "lpgd/synthdata.hpp"

namespace lpgd {

struct TrainDiverged : std::runtime_error {
  int step;
  explicit TrainDiverged(int s)
      : std::runtime_error("loss is not finite at step " + std::to_string(s)), step(s) {}
};

namespace detail {

// Grayscale datasets feed 3-channel models by replicating the channel.
inline Tensor match_channels(const Tensor& img, int channels) {
  if (img.dim(1) == channels) return img;
  if (img.dim(1) != 1) throw std::invalid_argument("match_channels: source must be single-channel");
  Tensor out({static_cast<int>(img.dim(0)), channels, static_cast<int>(img.dim(2)), static_cast<int>(img.dim(3))});
  const std::int64_t plane = img.dim(2) * img.dim(3);
  for (std::int64_t b = 0; b < img.dim(0); ++b)
    for (int c = 0; c < channels; ++c)
      for (std::int64_t i = 0; i < plane; ++i)
        out.data()[(b * channels + c) * plane + i] = img.data()[b * plane + i];
  return out;
}

}  // namespace detail

/// Per-image metrics averaged over the dataset; t_count reports the total
/// number of scored pixels.
inline MetricsReport evaluate_model(const Model& m, const Dataset& ds, const EvalConfig& ec) {
  if (ds.samples.empty()) throw std::invalid_argument("evaluate_model: empty dataset");
  MetricsReport avg;
  for (const Sample& s : ds.samples) {
    const Batch b = assemble_batch({s});
    const ForwardOutputs out = model_forward(nullptr, m, detail::match_channels(b.image, m.cfg.input_channels));
    const MetricsReport r = compute_metrics(out.depth, b.depth, b.mask, ec);
    avg.delta1 += r.delta1;
    avg.delta2 += r.delta2;
    avg.delta3 += r.delta3;
    avg.abs_rel += r.abs_rel;
    avg.sq_rel += r.sq_rel;
    avg.rmse += r.rmse;
    avg.rmse_log += r.rmse_log;
    avg.log10 += r.log10;
    avg.t_count += r.t_count;
  }
  const double n = static_cast<double>(ds.samples.size());
  avg.delta1 /= n;
  avg.delta2 /= n;
  avg.delta3 /= n;
  avg.abs_rel /= n;
  avg.sq_rel /= n;
  avg.rmse /= n;
  avg.rmse_log /= n;
  avg.log10 /= n;
  return avg;
}

struct TrainResult {
  double final_loss = 0.0;
  int steps_run = 0;
  MetricsReport val;
  bool val_evaluated = false;
};

/// Runs cfg.steps optimizer steps, streaming a `step \t lr \t loss` TSV to
/// `log`, and leaves the final checkpoint (with optimizer state) at
/// `checkpoint_path`. checkpoint_every > 0 additionally refreshes that file
/// periodically. A non-finite loss raises TrainDiverged after logging the
/// offending step. With val_dir set, held-out metrics are appended to the log
/// as `#` comment lines so the TSV body keeps its three columns.
inline TrainResult train_model(const RunConfig& cfg, const std::string& checkpoint_path, std::ostream& log,
                               std::ostream* progress = nullptr) {
  const Dataset ds = Dataset::load(cfg.dir + "/manifest.tsv");
  if (ds.samples.empty()) throw std::invalid_argument("train_model: dataset in " + cfg.dir + " is empty");
  if (ds.height != cfg.height || ds.width != cfg.width)
    throw std::invalid_argument("train_model: dataset is " + std::to_string(ds.height) + "x" + std::to_string(ds.width) +
                                " but config wants " + std::to_string(cfg.height) + "x" + std::to_string(cfg.width));

  Model model = build_model(model_config(cfg));
  std::vector<Tensor> params;
  params.reserve(model.order.size());
  for (const std::string& name : model.order) params.push_back(model.params.at(name));
  AdamState opt = AdamState::init(params);
  const LrSchedule sched{cfg.base_lr, cfg.power, cfg.steps > 0 ? cfg.steps : 1};

  std::seed_seq sq{cfg.seed, 0x7472616eu};  // train stream, distinct from data-gen seeding
  std::mt19937 gen(sq);

  log << "step\tlr\tloss\n";
  TrainResult result;
  char line[96];
  std::vector<Sample> picked(static_cast<std::size_t>(cfg.batch_size));
  for (int step = 0; step < cfg.steps; ++step) {
    const double lr = poly_lr(sched, step);
    for (int i = 0; i < cfg.batch_size; ++i) {
      const Sample& s = ds.samples[detail::uniform_int(gen, static_cast<int>(ds.samples.size()))];
      picked[static_cast<std::size_t>(i)] = cfg.augment ? augment(s, gen) : s;
    }
    const Batch batch = assemble_batch(picked);

    for (Tensor& p : params) p.zero_grad();
    Tape tape;
    const ForwardOutputs out = model_forward(&tape, model, detail::match_channels(batch.image, cfg.input_channels));
    LossBreakdown lb = silog_loss(&tape, out.depth, batch.depth, batch.mask, LossConfig{cfg.lambda, cfg.alpha, 1e-3f});

    std::snprintf(line, sizeof(line), "%d\t%.10g\t%.10g\n", step, lr, lb.L);
    log << line;
    if (!std::isfinite(lb.L)) {
      log.flush();
      throw TrainDiverged(step);
    }
    tape.backward(lb.loss);
    adam_step(params, opt, lr);
    result.final_loss = lb.L;
    result.steps_run = step + 1;

    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 && step + 1 < cfg.steps)
      save_checkpoint(checkpoint_path, cfg, model, &opt, static_cast<std::uint64_t>(step + 1));
    if (progress && ((step + 1) % 100 == 0 || step + 1 == cfg.steps)) {
      std::snprintf(line, sizeof(line), "step %d/%d  lr %.3g  loss %.5g\n", step + 1, cfg.steps, lr, lb.L);
      *progress << line << std::flush;
    }
  }

  save_checkpoint(checkpoint_path, cfg, model, &opt, static_cast<std::uint64_t>(cfg.steps));

  if (!cfg.val_dir.empty()) {
    const Dataset val = Dataset::load(cfg.val_dir + "/manifest.tsv");
    const EvalConfig ec{1e-3, static_cast<double>(cfg.kappa)};
    result.val = evaluate_model(model, val, ec);
    result.val_evaluated = true;
    log << "# final eval on " << cfg.val_dir << " (" << val.samples.size() << " images)\n";
    log << "# " << metrics_tsv_header() << "\n";
    log << "# " << metrics_tsv_row(result.val) << "\n";
  }
  log.flush();
  return result;
}

}  // namespace lpgd
