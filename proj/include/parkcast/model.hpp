#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "parkcast/tape.hpp"
#include "parkcast/tensor.hpp"

namespace parkcast::model {

enum class Arch { Stgbgru, Stacked, PlainGru };

Arch arch_from_string(const std::string &name);
std::string to_string(Arch arch);

/// Shape of a model; every parameter tensor is derived from this.
struct ModelSpec {
  Arch arch = Arch::Stgbgru;
  std::size_t n_sites = 0;
  std::size_t hidden = 64;
  /// Feature width of the stacked baseline's standalone encoder.
  std::size_t gcn_hidden = 0; // 0 = same as hidden
  /// Graph-conv depth inside the recurrent cell: 1 (default) or 2.
  int gcn_depth = 1;
  /// Adds a bias inside the candidate tanh (off = faithful form).
  bool candidate_bias = false;

  std::size_t encoder_width() const {
    return gcn_hidden == 0 ? hidden : gcn_hidden;
  }
};

/// Named parameter tensors in a fixed order (the initialization draw
/// order, also the checkpoint order).
struct ParamSet {
  std::vector<std::pair<std::string, ad::Tensor>> items;

  ad::Tensor &at(const std::string &name);
  const ad::Tensor &at(const std::string &name) const;
  bool has(const std::string &name) const;
  std::size_t total_size() const;
};

/// Fresh parameters: weights uniform in ±sqrt(1/fan_in), biases zero.
/// Deterministic in (spec, seed).
ParamSet init_params(const ModelSpec &spec, std::uint64_t seed);

/// Parameters placed on a tape as leaves, looked up by name.
struct TapeParams {
  std::vector<std::pair<std::string, ad::Var>> items;
  ad::Var at(const std::string &name) const;
  bool has(const std::string &name) const;
};

TapeParams place_params(ad::Tape &tape, const ParamSet &params,
                        bool requires_grad);

/// Single-layer graph convolution a_hat . z . w.
ad::Var graph_conv(ad::Tape &tape, ad::Var z, ad::Var a_hat, ad::Var w);

enum class GcnActivation { Identity, Sigmoid };

/// Two-layer graph encoder act(a_hat . relu(a_hat . x . w0) . w1).
ad::Var gcn2_forward(ad::Tape &tape, ad::Var x, ad::Var a_hat, ad::Var w0,
                     ad::Var w1, GcnActivation act = GcnActivation::Identity);

/// One recurrent step on row-vector states: every row of x/h_prev is an
/// independent sequence sharing the weights, so a matrix call is N
/// decoupled cells. Gate weights come from `params` ("w_xr", "w_hr",
/// "w_xz", "w_hz", "w_xh", "w_hh", "b_r", "b_z", optional "b_h").
ad::Var gru_cell(ad::Tape &tape, ad::Var x, ad::Var h_prev,
                 const TapeParams &params);

/// One fused graph-recurrent step: the gru_cell update with every linear
/// map routed through graph_conv (or its 2-layer variant when
/// spec.gcn_depth == 2, using "<name>.0"/"<name>.1" weight pairs).
ad::Var stgbgru_cell(ad::Tape &tape, ad::Var x, ad::Var h_prev, ad::Var a_hat,
                     const TapeParams &params, const ModelSpec &spec);

/// Unrolls the model over an m x N window (row = time step, column =
/// site), starting from a zero hidden state, and applies the shared
/// per-node readout. Returns the N x 1 normalized prediction.
ad::Var forward_sequence(ad::Tape &tape, const ModelSpec &spec,
                         const TapeParams &params, const ad::Tensor &window,
                         const ad::Tensor &a_hat);

/// Convenience inference entry point: forward_sequence on a throwaway
/// tape, returning plain values (one per site).
std::vector<double> predict_window(const ModelSpec &spec,
                                   const ParamSet &params,
                                   const ad::Tensor &window,
                                   const ad::Tensor &a_hat);

} // namespace parkcast::model
