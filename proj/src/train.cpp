#include "parkcast/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "parkcast/error.hpp"
#include "parkcast/io.hpp"
#include "parkcast/kernels.hpp"
#include "parkcast/rng.hpp"
#include "parkcast/tape.hpp"

namespace parkcast::train {

using ad::Shape;
using ad::Tensor;

void validate(const TrainConfig &config) {
  if (config.epochs < 0)
    throw ContractError("epochs must be >= 0");
  if (config.batch_size < 1)
    throw ContractError("batch_size must be positive");
  if (!std::isfinite(config.learning_rate) || config.learning_rate <= 0.0)
    throw ContractError("learning_rate must be positive");
  if (config.m < 1)
    throw ContractError("m must be positive");
  if (config.h < 1)
    throw ContractError("h must be positive");
  if (config.hidden < 1)
    throw ContractError("hidden must be positive");
  if (config.gcn_hidden < 0)
    throw ContractError("gcn_hidden must be >= 0");
  if (config.gcn_depth != 1 && config.gcn_depth != 2)
    throw ContractError("gcn_depth must be 1 or 2");
  if (!std::isfinite(config.divergence_limit) || config.divergence_limit <= 0.0)
    throw ContractError("divergence_limit must be positive");
}

model::ModelSpec to_model_spec(const TrainConfig &config,
                               std::size_t n_sites) {
  model::ModelSpec spec;
  spec.arch = config.arch;
  spec.n_sites = n_sites;
  spec.hidden = static_cast<std::size_t>(config.hidden);
  spec.gcn_hidden = static_cast<std::size_t>(config.gcn_hidden);
  spec.gcn_depth = config.gcn_depth;
  spec.candidate_bias = config.candidate_bias;
  return spec;
}

std::string format_config(const TrainConfig &config) {
  std::string out;
  auto kv = [&out](const char *key, const std::string &value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  kv("arch", model::to_string(config.arch));
  kv("epochs", std::to_string(config.epochs));
  kv("batch_size", std::to_string(config.batch_size));
  kv("learning_rate", io::fmt_double(config.learning_rate));
  kv("m", std::to_string(config.m));
  kv("h", std::to_string(config.h));
  kv("hidden", std::to_string(config.hidden));
  kv("gcn_hidden", std::to_string(config.gcn_hidden));
  kv("gcn_depth", std::to_string(config.gcn_depth));
  kv("candidate_bias", config.candidate_bias ? "1" : "0");
  kv("grad_clip", config.grad_clip ? "1" : "0");
  kv("seed", std::to_string(config.seed));
  kv("divergence_limit", io::fmt_double(config.divergence_limit));
  return out;
}

namespace {

std::string trimmed(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string &value, const std::string &key) {
  if (value == "1" || value == "true")
    return true;
  if (value == "0" || value == "false")
    return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

int parse_count(const std::string &value, const std::string &key) {
  return static_cast<int>(io::parse_int(value, key));
}

} // namespace

TrainConfig parse_config(const std::string &text) {
  TrainConfig config;
  for (const std::string &raw : io::split_lines(text)) {
    const std::string line = trimmed(raw);
    if (line.empty() || line[0] == '#')
      continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key=value, got '" + line + "'");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key == "arch")
      config.arch = model::arch_from_string(value);
    else if (key == "epochs")
      config.epochs = parse_count(value, key);
    else if (key == "batch_size")
      config.batch_size = parse_count(value, key);
    else if (key == "learning_rate")
      config.learning_rate = io::parse_double(value, key);
    else if (key == "m")
      config.m = parse_count(value, key);
    else if (key == "h")
      config.h = parse_count(value, key);
    else if (key == "hidden")
      config.hidden = parse_count(value, key);
    else if (key == "gcn_hidden")
      config.gcn_hidden = parse_count(value, key);
    else if (key == "gcn_depth")
      config.gcn_depth = parse_count(value, key);
    else if (key == "candidate_bias")
      config.candidate_bias = parse_bool(value, key);
    else if (key == "grad_clip")
      config.grad_clip = parse_bool(value, key);
    else if (key == "seed")
      config.seed = static_cast<std::uint64_t>(io::parse_int(value, key));
    else if (key == "divergence_limit")
      config.divergence_limit = io::parse_double(value, key);
    else
      throw ConfigError("unknown config key '" + key + "'");
  }
  validate(config);
  return config;
}

double mse_loss(const Tensor &pred, const Tensor &target) {
  if (pred.shape() != target.shape())
    throw ShapeError("mse_loss: " + pred.shape().str() + " vs " +
                     target.shape().str());
  if (pred.empty())
    throw ShapeError("mse_loss: empty tensors");
  return kernels::sum_sq_diff_serial(pred.data(), target.data(),
                                     pred.size()) /
         static_cast<double>(pred.size());
}

AdamState AdamState::init(const model::ParamSet &params) {
  AdamState state;
  state.m.reserve(params.items.size());
  state.v.reserve(params.items.size());
  for (const auto &item : params.items) {
    state.m.emplace_back(item.second.shape());
    state.v.emplace_back(item.second.shape());
  }
  return state;
}

void adam_step(model::ParamSet &params, const std::vector<Tensor> &grads,
               AdamState &state, double lr, double beta1, double beta2,
               double eps) {
  const std::size_t np = params.items.size();
  if (grads.size() != np || state.m.size() != np || state.v.size() != np)
    throw ContractError("adam_step: parameter/gradient/state arity mismatch");
  if (!std::isfinite(lr) || lr < 0.0)
    throw ContractError("adam_step: learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ContractError("adam_step: betas must lie in [0, 1)");
  if (!(eps > 0.0))
    throw ContractError("adam_step: eps must be positive");
  // Validate everything before mutating, so a bad gradient aborts the
  // whole step rather than half-applying it.
  for (std::size_t i = 0; i < np; ++i) {
    const auto &[name, p] = params.items[i];
    if (grads[i].shape() != p.shape())
      throw ShapeError("adam_step: gradient " + grads[i].shape().str() +
                       " for parameter " + name + " " + p.shape().str());
    if (!grads[i].all_finite())
      throw NumericError("adam_step: non-finite gradient for " + name);
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < np; ++i) {
    double *p = params.items[i].second.data();
    const double *g = grads[i].data();
    double *m = state.m[i].data();
    double *v = state.v[i].data();
    const std::size_t n = params.items[i].second.size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

namespace {

void check_dataset(const data::WindowedDataset &ds, const TrainConfig &config,
                   std::size_t n_sites, const char *what) {
  if (ds.samples() == 0)
    throw ContractError(std::string("train: empty ") + what + " set");
  if (ds.inputs.shape().rows() != static_cast<std::size_t>(config.m))
    throw ContractError(std::string("train: ") + what + " window length " +
                        std::to_string(ds.inputs.shape().rows()) +
                        " does not match config m=" + std::to_string(config.m));
  if (ds.h != static_cast<std::size_t>(config.h))
    throw ContractError(std::string("train: ") + what + " horizon " +
                        std::to_string(ds.h) +
                        " does not match config h=" + std::to_string(config.h));
  if (ds.inputs.shape().cols() != n_sites ||
      ds.targets.shape() != Shape::mat(ds.samples(), n_sites))
    throw ShapeError(std::string("train: ") + what + " tensors " +
                     ds.inputs.shape().str() + " / " +
                     ds.targets.shape().str() + " for " +
                     std::to_string(n_sites) + " sites");
}

void clip_global_norm(std::vector<Tensor> &grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor &g : grads)
    for (std::size_t j = 0; j < g.size(); ++j)
      sq += g[j] * g[j];
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm))
    return;
  const double scale = max_norm / norm;
  for (Tensor &g : grads)
    for (std::size_t j = 0; j < g.size(); ++j)
      g[j] *= scale;
}

} // namespace

double evaluate_mse(const model::ModelSpec &spec,
                    const model::ParamSet &params,
                    const data::WindowedDataset &dataset,
                    const ad::Tensor &a_hat) {
  const std::size_t n_samples = dataset.samples();
  if (n_samples == 0)
    throw ContractError("evaluate_mse: empty dataset");
  const std::size_t m = dataset.inputs.shape().rows();
  const std::size_t n = dataset.inputs.shape().cols();
  if (n != spec.n_sites)
    throw ShapeError("evaluate_mse: dataset has " + std::to_string(n) +
                     " sites, model expects " +
                     std::to_string(spec.n_sites));
  ad::Tape tape;
  Tensor window(Shape::mat(m, n));
  Tensor target(Shape::mat(n, 1));
  double total = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::memcpy(window.data(), dataset.inputs.data() + s * m * n,
                m * n * sizeof(double));
    for (std::size_t j = 0; j < n; ++j)
      target[j] = dataset.targets.at(s, j);
    tape.reset();
    model::TapeParams tp = model::place_params(tape, params, false);
    ad::Var pred = model::forward_sequence(tape, spec, tp, window, a_hat);
    total += mse_loss(tape.value(pred), target);
  }
  return total / static_cast<double>(n_samples);
}

Checkpoint train(const TrainConfig &config,
                 const data::WindowedDataset &train_set,
                 const data::WindowedDataset *val_set, const DataContext &ctx,
                 const EpochCallback &on_epoch) {
  validate(config);
  const std::size_t n_samples = train_set.samples();
  if (n_samples == 0)
    throw ContractError("train: empty training set");
  const std::size_t m = train_set.inputs.shape().rows();
  const std::size_t n = train_set.inputs.shape().cols();
  check_dataset(train_set, config, n, "training");
  if (val_set)
    check_dataset(*val_set, config, n, "validation");
  if (!ctx.site_order.empty() && ctx.site_order.size() != n)
    throw ContractError("train: " + std::to_string(ctx.site_order.size()) +
                        " site ids for " + std::to_string(n) + " columns");

  const model::ModelSpec spec = to_model_spec(config, n);
  if (spec.arch != model::Arch::PlainGru &&
      ctx.a_hat.shape() != Shape::mat(n, n))
    throw ShapeError("train: adjacency " + ctx.a_hat.shape().str() + " for " +
                     std::to_string(n) + " sites");

  model::ParamSet params = model::init_params(spec, config.seed);
  AdamState state = AdamState::init(params);
  const std::size_t np = params.items.size();

  std::vector<Tensor> grad_acc;
  grad_acc.reserve(np);
  for (const auto &item : params.items)
    grad_acc.emplace_back(item.second.shape());

  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);

  ad::Tape tape;
  Tensor window(Shape::mat(m, n));
  Tensor target(Shape::mat(n, 1));

  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.a_hat = ctx.a_hat;
  ckpt.site_order = ctx.site_order;
  ckpt.scaler = ctx.scaler;
  ckpt.interval_min = ctx.interval_min;
  ckpt.data_fingerprint = ctx.data_fingerprint;

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < n_samples; start += batch) {
      const std::size_t end = std::min(start + batch, n_samples);
      const std::size_t batch_n = end - start;
      for (Tensor &g : grad_acc)
        g.fill(0.0);
      double batch_sum = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t s = order[i];
        std::memcpy(window.data(), train_set.inputs.data() + s * m * n,
                    m * n * sizeof(double));
        for (std::size_t j = 0; j < n; ++j)
          target[j] = train_set.targets.at(s, j);
        tape.reset();
        model::TapeParams tp = model::place_params(tape, params, true);
        ad::Var pred = model::forward_sequence(tape, spec, tp, window,
                                               ctx.a_hat);
        ad::Var loss = tape.mse(pred, tape.leaf(target, false));
        batch_sum += tape.value(loss)[0];
        ad::Tape::GradView grads = tape.backward(loss);
        for (std::size_t pi = 0; pi < np; ++pi) {
          const Tensor *g = grads.find(tp.items[pi].second);
          if (g)
            kernels::acc(g->data(), grad_acc[pi].data(), grad_acc[pi].size());
        }
      }
      const double batch_mse = batch_sum / static_cast<double>(batch_n);
      if (!std::isfinite(batch_mse) || batch_mse > config.divergence_limit)
        throw TrainingError("training diverged (batch loss " +
                                io::fmt_double(batch_mse) + ")",
                            epoch);
      const double inv = 1.0 / static_cast<double>(batch_n);
      for (Tensor &g : grad_acc)
        for (std::size_t j = 0; j < g.size(); ++j)
          g[j] *= inv;
      if (config.grad_clip)
        clip_global_norm(grad_acc, 5.0);
      adam_step(params, grad_acc, state, config.learning_rate);
      epoch_sum += batch_sum;
    }
    EpochStats stats;
    stats.train_mse = epoch_sum / static_cast<double>(n_samples);
    stats.val_mse = val_set
                        ? evaluate_mse(spec, params, *val_set, ctx.a_hat)
                        : std::numeric_limits<double>::quiet_NaN();
    ckpt.history.push_back(stats);
    if (on_epoch)
      on_epoch(epoch, stats);
  }
  ckpt.params = std::move(params);
  return ckpt;
}

namespace {

int grid_count(double v, const std::string &key) {
  if (!std::isfinite(v) || v <= 0.0 || v != std::floor(v))
    throw ContractError("grid_search: " + key +
                        " candidate must be a positive integer");
  return static_cast<int>(v);
}

void apply_grid_value(TrainConfig &config, const std::string &key, double v) {
  if (key == "learning_rate") {
    if (!std::isfinite(v) || v <= 0.0)
      throw ContractError("grid_search: learning_rate candidate must be "
                          "positive");
    config.learning_rate = v;
  } else if (key == "hidden") {
    config.hidden = grid_count(v, key);
  } else if (key == "batch_size") {
    config.batch_size = grid_count(v, key);
  } else if (key == "gcn_depth") {
    config.gcn_depth = grid_count(v, key);
  } else if (key == "epochs") {
    config.epochs = grid_count(v, key);
  } else {
    throw ContractError("grid_search: unknown hyperparameter '" + key + "'");
  }
}

} // namespace

GridResult grid_search(const GridSpec &grid, const TrainConfig &base,
                       const data::WindowedDataset &train_full,
                       const DataContext &ctx) {
  if (grid.empty())
    throw ContractError("grid_search: empty grid");
  for (const auto &[key, candidates] : grid)
    if (candidates.empty())
      throw ContractError("grid_search: empty candidate list for '" + key +
                          "'");

  auto [fit_set, val_set] = data::train_test_split(train_full, 0.8);
  const std::size_t n = train_full.inputs.shape().cols();

  GridResult result;
  double best_val = 0.0;
  bool have_best = false;
  std::vector<std::size_t> idx(grid.size(), 0);
  for (;;) {
    TrainConfig config = base;
    for (std::size_t k = 0; k < grid.size(); ++k)
      apply_grid_value(config, grid[k].first, grid[k].second[idx[k]]);
    Checkpoint ckpt = train(config, fit_set, nullptr, ctx);
    const double val =
        evaluate_mse(to_model_spec(config, n), ckpt.params, val_set,
                     ctx.a_hat);
    result.table.push_back(GridCell{config, val});
    const bool better =
        !have_best || val < best_val ||
        (val == best_val &&
         (config.hidden < result.best.hidden ||
          (config.hidden == result.best.hidden &&
           config.learning_rate < result.best.learning_rate)));
    if (better) {
      result.best = config;
      best_val = val;
      have_best = true;
    }
    // Advance the odometer; the last grid key varies fastest.
    std::size_t k = grid.size();
    for (;;) {
      if (k == 0)
        return result;
      --k;
      if (++idx[k] < grid[k].second.size())
        break;
      idx[k] = 0;
    }
  }
}

} // namespace parkcast::train
