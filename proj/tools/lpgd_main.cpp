// Command-line front end: gen-data, train, eval, infer, inspect-lpg,
// gradcheck, ablate. Exit codes: 0 success, 1 user error, 2 internal error.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lpgd/cli.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;
  bool seed_set = false;
};

lpgd::RunConfig resolve_config(const CommonArgs& common) {
  lpgd::RunConfig cfg = common.config_path.empty() ? lpgd::RunConfig{} : lpgd::load_config(common.config_path);
  if (common.seed_set) cfg.seed = static_cast<std::uint32_t>(common.seed);
  return cfg;
}

void add_common(CLI::App* sub, CommonArgs& common) {
  sub->add_option("--config", common.config_path, "run configuration file (key = value lines)");
  sub->add_option("--seed", common.seed, "override the config seed")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local planar guidance depth estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs common;

  auto* gen = app.add_subcommand("gen-data", "render a synthetic planar-scene dataset");
  add_common(gen, common);
  std::string gen_out;
  int gen_n = 256;
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--n", gen_n, "number of samples");

  auto* train = app.add_subcommand("train", "train a model and write checkpoint + loss log");
  add_common(train, common);
  std::string train_out, train_log, train_data, train_val;
  train->add_option("--out", train_out, "output checkpoint path")->required();
  train->add_option("--log", train_log, "loss log path (default: <out>.log)");
  train->add_option("--data", train_data, "override the config's dataset directory");
  train->add_option("--val", train_val, "override the config's held-out directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  add_common(eval, common);
  std::string eval_ckpt, eval_data, eval_out;
  double eval_min_cap = 1e-3, eval_max_cap = 0.0;
  bool eval_oracle = false;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint to evaluate")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--min-cap", eval_min_cap, "ignore ground truth below this depth");
  eval->add_option("--max-cap", eval_max_cap, "ignore ground truth above this depth (default: kappa)");
  eval->add_flag("--oracle", eval_oracle, "score ground truth against itself (metric floor)");
  eval->add_option("--out", eval_out, "also write the metrics TSV here");

  auto* infer = app.add_subcommand("infer", "predict depth for one image");
  add_common(infer, common);
  std::string infer_ckpt, infer_image, infer_out;
  infer->add_option("--ckpt", infer_ckpt, "checkpoint")->required();
  infer->add_option("--image", infer_image, "input 16-bit PGM")->required();
  infer->add_option("--out", infer_out, "output prefix for .pfm/.pgm")->required();

  auto* inspect = app.add_subcommand("inspect-lpg", "dump per-scale depth-cue maps");
  add_common(inspect, common);
  std::string ins_ckpt, ins_image, ins_out;
  inspect->add_option("--ckpt", ins_ckpt, "checkpoint (full variant)")->required();
  inspect->add_option("--image", ins_image, "input 16-bit PGM")->required();
  inspect->add_option("--out", ins_out, "output directory")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every op");
  add_common(gradcheck, common);

  auto* ablate = app.add_subcommand("ablate", "train all variants and tabulate metrics");
  add_common(ablate, common);
  std::string ab_work = "ablation_runs", ab_out, ab_data, ab_val;
  ablate->add_option("--work", ab_work, "directory for per-variant checkpoints and logs");
  ablate->add_option("--out", ab_out, "also write the comparison TSV here");
  ablate->add_option("--data", ab_data, "override the config's dataset directory");
  ablate->add_option("--val", ab_val, "override the config's held-out directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  common.seed_set = (gen->count("--seed") + train->count("--seed") + eval->count("--seed") +
                     infer->count("--seed") + inspect->count("--seed") + gradcheck->count("--seed") +
                     ablate->count("--seed")) > 0;

  return lpgd::detail::cli_guard(std::cerr, [&]() -> int {
    if (gen->parsed()) return lpgd::cmd_gen_data(resolve_config(common), gen_out, gen_n, std::cout, std::cerr);
    if (train->parsed()) {
      lpgd::RunConfig cfg = resolve_config(common);
      if (!train_data.empty()) cfg.dir = train_data;
      if (!train_val.empty()) cfg.val_dir = train_val;
      return lpgd::cmd_train(cfg, train_out, train_log.empty() ? train_out + ".log" : train_log, std::cout,
                             std::cerr);
    }
    if (eval->parsed())
      return lpgd::cmd_eval(eval_ckpt, eval_data, eval_min_cap, eval_max_cap, eval_oracle, eval_out,
                            std::cout, std::cerr);
    if (infer->parsed()) return lpgd::cmd_infer(infer_ckpt, infer_image, infer_out, std::cout, std::cerr);
    if (inspect->parsed()) return lpgd::cmd_inspect_lpg(ins_ckpt, ins_image, ins_out, std::cout, std::cerr);
    if (gradcheck->parsed()) return lpgd::cmd_gradcheck(std::cout, std::cerr);
    if (ablate->parsed()) {
      lpgd::RunConfig cfg = resolve_config(common);
      if (!ab_data.empty()) cfg.dir = ab_data;
      if (!ab_val.empty()) cfg.val_dir = ab_val;
      return lpgd::cmd_ablate(cfg, ab_work, ab_out, std::cout, std::cerr);
    }
    return 1;
  });
}
