#pragma once
// Structural comparison harness: trains a list of model variants under one
// shared data/seed/step budget and tabulates held-out metrics, sorted by RMSE.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpgd/config.hpp"
#include "lpgd/metrics.hpp"
#include "lpgd/network.hpp"
#include "lpgd/trainer.hpp"

namespace lpgd {

struct AblationRow {
  std::string name;
  RunConfig cfg;
};

struct AblationPlan {
  std::vector<AblationRow> rows;
};

/// The four structural variants at the base loss setting, plus the full
/// variant with lambda = 0.5 to expose the loss-weighting effect.
inline AblationPlan default_ablation_plan(const RunConfig& base) {
  AblationPlan plan;
  for (const char* v : {"baseline", "aspp", "aspp_upconv", "full"}) {
    RunConfig c = base;
    c.variant = v;
    plan.rows.push_back({v, c});
  }
  RunConfig half = base;
  half.variant = "full";
  half.lambda = 0.5f;
  plan.rows.push_back({"full_lambda05", half});
  return plan;
}

struct AblationResult {
  std::string name;
  std::int64_t params = 0;
  double final_loss = 0.0;
  MetricsReport val;
};

namespace detail {

inline void check_shared_budget(const AblationPlan& plan) {
  if (plan.rows.empty()) throw std::invalid_argument("ablation plan has no rows");
  const RunConfig& a = plan.rows.front().cfg;
  for (const AblationRow& row : plan.rows) {
    const RunConfig& b = row.cfg;
    if (b.dir != a.dir || b.val_dir != a.val_dir || b.seed != a.seed || b.steps != a.steps ||
        b.batch_size != a.batch_size || b.base_lr != a.base_lr || b.power != a.power ||
        b.augment != a.augment)
      throw std::invalid_argument("ablation rows must share data, seed, and optimizer budget; '" + row.name +
                                  "' deviates");
    if (b.val_dir.empty()) throw std::invalid_argument("ablation needs val_dir for the shared held-out split");
  }
}

}  // namespace detail

/// Trains every row (checkpoints and logs land in work_dir) and returns the
/// results sorted by validation RMSE, best first. Any training failure aborts
/// with the variant named.
inline std::vector<AblationResult> run_ablation(const AblationPlan& plan, const std::string& work_dir,
                                                std::ostream* progress = nullptr) {
  detail::check_shared_budget(plan);
  std::filesystem::create_directories(work_dir);
  std::vector<AblationResult> results;
  for (const AblationRow& row : plan.rows) {
    if (progress) *progress << "ablation: training variant '" << row.name << "'\n" << std::flush;
    try {
      std::ofstream log(work_dir + "/" + row.name + ".log");
      if (!log) throw std::runtime_error("cannot open for writing: " + work_dir + "/" + row.name + ".log");
      const TrainResult r = train_model(row.cfg, work_dir + "/" + row.name + ".ckpt", log, progress);
      if (!r.val_evaluated) throw std::logic_error("trainer skipped the held-out eval");
      AblationResult res;
      res.name = row.name;
      res.params = param_count(build_model(model_config(row.cfg)));
      res.final_loss = r.final_loss;
      res.val = r.val;
      results.push_back(std::move(res));
    } catch (const std::exception& e) {
      throw std::runtime_error("ablation variant '" + row.name + "' failed: " + e.what());
    }
  }
  std::sort(results.begin(), results.end(),
            [](const AblationResult& x, const AblationResult& y) { return x.val.rmse < y.val.rmse; });
  return results;
}

inline std::string ablation_tsv(const std::vector<AblationResult>& results) {
  std::ostringstream o;
  o << "variant\tparams\tfinal_loss\t" << metrics_tsv_header() << "\n";
  for (const AblationResult& r : results) {
    char head[96];
    std::snprintf(head, sizeof(head), "%s\t%lld\t%.6f\t", r.name.c_str(), static_cast<long long>(r.params),
                  r.final_loss);
    o << head << metrics_tsv_row(r.val) << "\n";
  }
  return o.str();
}

}  // namespace lpgd
