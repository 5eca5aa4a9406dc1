#include "parkcast/forecast.hpp"

#include <cmath>
#include <cstring>

#include "parkcast/error.hpp"
#include "parkcast/model.hpp"

namespace parkcast::forecast {

using ad::Shape;
using ad::Tensor;

Method method_from_string(const std::string &name) {
  if (name == "direct")
    return Method::Direct;
  if (name == "iterative")
    return Method::Iterative;
  throw ConfigError("unknown method '" + name +
                    "' (expected direct or iterative)");
}

std::string to_string(Method method) {
  return method == Method::Direct ? "direct" : "iterative";
}

bool is_short_term(int h, int interval_min) {
  if (h < 1 || interval_min < 1)
    throw ContractError("is_short_term: h and interval must be positive");
  return h * interval_min <= 30;
}

std::vector<double>
roll_iterative(const StepFn &step, const ad::Tensor &window, int h,
               std::vector<std::vector<double>> *trajectory) {
  if (!step)
    throw ContractError("roll_iterative: empty step function");
  const Shape ws = window.shape();
  if (ws.rank != 2 || ws.rows() < 1 || ws.cols() < 1)
    throw ShapeError("roll_iterative: window must be m x N, got " + ws.str());
  if (h < 1)
    throw ContractError("roll_iterative: h must be >= 1");
  const std::size_t m = ws.rows(), n = ws.cols();

  if (trajectory) {
    trajectory->clear();
    trajectory->reserve(static_cast<std::size_t>(h));
  }
  Tensor current = window;
  std::vector<double> pred;
  for (int s = 0; s < h; ++s) {
    pred = step(current);
    if (pred.size() != n)
      throw ShapeError("roll_iterative: step returned " +
                       std::to_string(pred.size()) + " values for " +
                       std::to_string(n) + " sites");
    if (trajectory)
      trajectory->push_back(pred);
    if (s + 1 == h)
      break;
    // Shift the window one step: drop the oldest row, append the
    // prediction as the newest.
    std::memmove(current.data(), current.data() + n,
                 (m - 1) * n * sizeof(double));
    std::memcpy(current.data() + (m - 1) * n, pred.data(),
                n * sizeof(double));
  }
  return pred;
}

namespace {

void check_window(const train::Checkpoint &ckpt, const Tensor &window) {
  const Shape ws = window.shape();
  const std::size_t n = ckpt.site_order.size();
  if (ws.rank != 2 || ws.rows() != static_cast<std::size_t>(ckpt.config.m) ||
      ws.cols() != n)
    throw ShapeError("predict: window " + ws.str() + " does not match the "
                     "model (m=" + std::to_string(ckpt.config.m) +
                     ", sites=" + std::to_string(n) + ")");
}

Forecast finish(const train::Checkpoint &ckpt, std::vector<double> pred) {
  Forecast out;
  out.counts = pred;
  if (ckpt.scaler) {
    Tensor row(Shape::mat(1, pred.size()));
    std::memcpy(row.data(), pred.data(), pred.size() * sizeof(double));
    const Tensor counts = data::denormalize(row, *ckpt.scaler);
    std::memcpy(out.counts.data(), counts.data(),
                pred.size() * sizeof(double));
  }
  out.normalized = std::move(pred);
  return out;
}

} // namespace

Forecast direct_predict(const train::Checkpoint &ckpt, const Tensor &window,
                        int h) {
  if (h != ckpt.config.h)
    throw ContractError("direct_predict: model was trained for h=" +
                        std::to_string(ckpt.config.h) + ", requested h=" +
                        std::to_string(h));
  check_window(ckpt, window);
  return finish(ckpt, model::predict_window(ckpt.spec(), ckpt.params, window,
                                            ckpt.a_hat));
}

Forecast iterative_predict(const train::Checkpoint &ckpt,
                           const Tensor &window, int h,
                           std::vector<std::vector<double>> *trajectory) {
  if (ckpt.config.h != 1)
    throw ContractError("iterative_predict: needs a one-step model, this "
                        "one was trained for h=" +
                        std::to_string(ckpt.config.h));
  check_window(ckpt, window);
  const model::ModelSpec spec = ckpt.spec();
  const StepFn step = [&](const Tensor &w) {
    return model::predict_window(spec, ckpt.params, w, ckpt.a_hat);
  };
  return finish(ckpt, roll_iterative(step, window, h, trajectory));
}

Tensor batch_forecast(const train::Checkpoint &ckpt,
                      const data::WindowedDataset &dataset, Method method) {
  const std::size_t k = dataset.samples();
  if (k == 0)
    throw ContractError("batch_forecast: empty dataset");
  const std::size_t n = ckpt.site_order.size();
  const std::size_t m = static_cast<std::size_t>(ckpt.config.m);
  const Shape is = dataset.inputs.shape();
  if (is.rank != 3 || is.rows() != m || is.cols() != n)
    throw ShapeError("batch_forecast: dataset windows " + is.str() +
                     " do not match the model (m=" + std::to_string(m) +
                     ", sites=" + std::to_string(n) + ")");
  if (method == Method::Direct &&
      dataset.h != static_cast<std::size_t>(ckpt.config.h))
    throw ContractError("batch_forecast: direct needs a model trained for "
                        "h=" + std::to_string(dataset.h) + ", got h=" +
                        std::to_string(ckpt.config.h));
  if (method == Method::Iterative && ckpt.config.h != 1)
    throw ContractError("batch_forecast: iterative needs a one-step model");

  const model::ModelSpec spec = ckpt.spec();
  const StepFn step = [&](const Tensor &w) {
    return model::predict_window(spec, ckpt.params, w, ckpt.a_hat);
  };

  Tensor out(Shape::mat(k, n));
  Tensor window(Shape::mat(m, n));
  for (std::size_t sample = 0; sample < k; ++sample) {
    std::memcpy(window.data(), dataset.inputs.data() + sample * m * n,
                m * n * sizeof(double));
    const std::vector<double> pred =
        method == Method::Direct
            ? step(window)
            : roll_iterative(step, window, static_cast<int>(dataset.h));
    std::memcpy(out.data() + sample * n, pred.data(), n * sizeof(double));
  }
  return out;
}

Tensor present_counts(const Tensor &denormalized,
                      const std::vector<double> *capacity) {
  const Shape s = denormalized.shape();
  if (s.rank != 2)
    throw ShapeError("present_counts: expected a K x N matrix, got " +
                     s.str());
  if (capacity && capacity->size() != s.cols())
    throw ShapeError("present_counts: " + std::to_string(capacity->size()) +
                     " capacities for " + std::to_string(s.cols()) +
                     " sites");
  Tensor out = denormalized;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) {
      double v = out.at(i, j);
      if (v < 0.0)
        v = 0.0;
      if (capacity && v > (*capacity)[j])
        v = (*capacity)[j];
      out.at(i, j) = std::round(v);
    }
  return out;
}

} // namespace parkcast::forecast
