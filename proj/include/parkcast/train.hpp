#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parkcast/data.hpp"
#include "parkcast/model.hpp"
#include "parkcast/tensor.hpp"

namespace parkcast::train {

/// Hyperparameters and run settings for one training job.
struct TrainConfig {
  model::Arch arch = model::Arch::Stgbgru;
  int epochs = 500;
  int batch_size = 32;
  double learning_rate = 0.001;
  int m = 12; // input window length
  int h = 1;  // forecast horizon in steps
  int hidden = 64;
  int gcn_hidden = 0; // 0 = same as hidden (stacked baseline encoder)
  int gcn_depth = 1;
  bool candidate_bias = false;
  /// Rescales each batch gradient to global norm 5 when it exceeds it.
  /// Off by default; available for divergence recovery.
  bool grad_clip = false;
  std::uint64_t seed = 0;
  /// A batch loss above this (or non-finite) aborts the run.
  double divergence_limit = 1e6;
};

/// Rejects non-positive counts, rates, or unsupported depths.
void validate(const TrainConfig &config);

model::ModelSpec to_model_spec(const TrainConfig &config,
                               std::size_t n_sites);

/// Canonical `key=value` text form (one pair per line, fixed key order).
std::string format_config(const TrainConfig &config);
/// Inverse of format_config; unknown keys or bad values throw ConfigError.
TrainConfig parse_config(const std::string &text);

/// Everything about the data a trained model is tied to.
struct DataContext {
  ad::Tensor a_hat; // N x N normalized adjacency
  std::vector<std::string> site_order;
  std::optional<data::Scaler> scaler;
  int interval_min = 5;
  std::uint64_t data_fingerprint = 0;
};

struct EpochStats {
  double train_mse = 0.0;
  /// NaN when no validation set was supplied.
  double val_mse = 0.0;
};

/// A trained (or freshly initialized) model plus the context needed to
/// run it on new data.
struct Checkpoint {
  TrainConfig config;
  model::ParamSet params;
  ad::Tensor a_hat;
  std::vector<std::string> site_order;
  std::optional<data::Scaler> scaler;
  int interval_min = 5;
  std::uint64_t data_fingerprint = 0;
  std::vector<EpochStats> history;

  model::ModelSpec spec() const {
    return to_model_spec(config, site_order.size());
  }
};

/// Mean squared error over all entries; shapes must match exactly.
double mse_loss(const ad::Tensor &pred, const ad::Tensor &target);

/// First/second-moment estimates, one slot per parameter tensor.
struct AdamState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::int64_t t = 0;

  static AdamState init(const model::ParamSet &params);
};

/// One bias-corrected Adam update, in place. Gradients are checked for
/// finiteness before any parameter is touched.
void adam_step(model::ParamSet &params, const std::vector<ad::Tensor> &grads,
               AdamState &state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

/// Mean per-sample MSE of the model over a dataset (no gradients).
double evaluate_mse(const model::ModelSpec &spec,
                    const model::ParamSet &params,
                    const data::WindowedDataset &dataset,
                    const ad::Tensor &a_hat);

using EpochCallback = std::function<void(int epoch, const EpochStats &)>;

/// Mini-batch Adam training. Sample order is reshuffled every epoch from
/// the seeded generator, so runs are bit-reproducible for a fixed
/// (config, data) pair. `val_set` may be null. Throws TrainingError with
/// the epoch index if the loss diverges.
Checkpoint train(const TrainConfig &config,
                 const data::WindowedDataset &train_set,
                 const data::WindowedDataset *val_set, const DataContext &ctx,
                 const EpochCallback &on_epoch = {});

/// Hyperparameter name -> candidate values, evaluated as a Cartesian
/// product in the given order. Supported names: learning_rate, hidden,
/// batch_size, gcn_depth, epochs.
using GridSpec = std::vector<std::pair<std::string, std::vector<double>>>;

struct GridCell {
  TrainConfig config;
  double val_mse = 0.0;
};

struct GridResult {
  TrainConfig best;
  std::vector<GridCell> table; // evaluation order
};

/// Exhaustive search over `grid` applied on top of `base`. Validation is
/// the chronological tail 20% of `train_full`; best = lowest validation
/// MSE, ties broken by smaller hidden then lower learning rate.
GridResult grid_search(const GridSpec &grid, const TrainConfig &base,
                       const data::WindowedDataset &train_full,
                       const DataContext &ctx);

/// Versioned binary container; layout documented in
/// docs/checkpoint-format.md. Round-trips all values bit-exactly.
void save_checkpoint(const Checkpoint &ckpt, const std::string &path);
Checkpoint load_checkpoint(const std::string &path);

} // namespace parkcast::train
