#pragma once

#include <functional>
#include <string>
#include <vector>

#include "parkcast/data.hpp"
#include "parkcast/tensor.hpp"
#include "parkcast/train.hpp"

namespace parkcast::forecast {

enum class Method { Direct, Iterative };

Method method_from_string(const std::string &name);
std::string to_string(Method method);

/// A forecast h steps out is "short-term" while it stays within 30
/// minutes of wall-clock time (h * interval <= 30).
bool is_short_term(int h, int interval_min);

/// One-step map from an m x N normalized window to the next N values.
/// The roll-out is generic over this so tests can drive it with exact
/// closed-form predictors instead of trained models.
using StepFn = std::function<std::vector<double>(const ad::Tensor &window)>;

/// h successive one-step predictions, each feeding its output back as
/// the newest window row (normalized values, never rounded). Returns the
/// final prediction; `trajectory`, when given, receives all h outputs.
std::vector<double>
roll_iterative(const StepFn &step, const ad::Tensor &window, int h,
               std::vector<std::vector<double>> *trajectory = nullptr);

/// A prediction in both domains: the model-space values and, when the
/// checkpoint carries a scaler, the same values mapped back to counts.
/// `counts` stays unrounded; presentation rounding is a separate step.
struct Forecast {
  std::vector<double> normalized;
  std::vector<double> counts;
};

/// Single-window prediction with a model trained for exactly horizon h.
Forecast direct_predict(const train::Checkpoint &ckpt,
                        const ad::Tensor &window, int h);

/// Single-window prediction h steps out by rolling a one-step model.
Forecast
iterative_predict(const train::Checkpoint &ckpt, const ad::Tensor &window,
                  int h,
                  std::vector<std::vector<double>> *trajectory = nullptr);

/// Normalized predictions for every dataset sample, aligned row-for-row
/// with dataset.targets (K x N). Direct requires the checkpoint horizon
/// to equal the dataset horizon; Iterative requires a one-step
/// checkpoint and rolls dataset.h steps per sample.
ad::Tensor batch_forecast(const train::Checkpoint &ckpt,
                          const data::WindowedDataset &dataset,
                          Method method);

/// Presentation form of denormalized predictions: clamped to
/// [0, capacity] (when capacities are given, one per column) and rounded
/// to whole counts. Metrics are computed on the unclamped values.
ad::Tensor present_counts(const ad::Tensor &denormalized,
                          const std::vector<double> *capacity = nullptr);

} // namespace parkcast::forecast
