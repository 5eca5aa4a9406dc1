#include "parkcast/model.hpp"

#include <cmath>

#include "parkcast/error.hpp"
#include "parkcast/rng.hpp"

namespace parkcast::model {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

Arch arch_from_string(const std::string &name) {
  if (name == "stgbgru")
    return Arch::Stgbgru;
  if (name == "stacked")
    return Arch::Stacked;
  if (name == "gru")
    return Arch::PlainGru;
  throw ConfigError("unknown model '" + name +
                    "' (expected stgbgru, stacked or gru)");
}

std::string to_string(Arch arch) {
  switch (arch) {
  case Arch::Stgbgru:
    return "stgbgru";
  case Arch::Stacked:
    return "stacked";
  case Arch::PlainGru:
    return "gru";
  }
  throw ContractError("unknown Arch value");
}

ad::Tensor &ParamSet::at(const std::string &name) {
  for (auto &[key, value] : items)
    if (key == name)
      return value;
  throw ContractError("no parameter named '" + name + "'");
}

const ad::Tensor &ParamSet::at(const std::string &name) const {
  for (const auto &[key, value] : items)
    if (key == name)
      return value;
  throw ContractError("no parameter named '" + name + "'");
}

bool ParamSet::has(const std::string &name) const {
  for (const auto &[key, value] : items)
    if (key == name)
      return true;
  return false;
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto &[key, value] : items)
    n += value.size();
  return n;
}

namespace {

void check_spec(const ModelSpec &spec) {
  if (spec.n_sites == 0 || spec.hidden == 0)
    throw ContractError("model spec: dimensions must be positive");
  if (spec.gcn_depth != 1 && spec.gcn_depth != 2)
    throw ContractError("model spec: gcn depth must be 1 or 2");
}

Tensor init_weight(Rng &rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Tensor w(Shape::mat(fan_in, fan_out));
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = rng.uniform(-bound, bound);
  return w;
}

// Appends one gate weight, split into a two-matrix stack when the cell
// convolution is two layers deep.
void push_gate(ParamSet &out, Rng &rng, const std::string &name,
               std::size_t fan_in, std::size_t fan_out, int depth) {
  if (depth == 1) {
    out.items.emplace_back(name, init_weight(rng, fan_in, fan_out));
  } else {
    out.items.emplace_back(name + ".0", init_weight(rng, fan_in, fan_out));
    out.items.emplace_back(name + ".1", init_weight(rng, fan_out, fan_out));
  }
}

} // namespace

ParamSet init_params(const ModelSpec &spec, std::uint64_t seed) {
  check_spec(spec);
  Rng rng(seed);
  ParamSet out;
  const std::size_t h = spec.hidden;

  // Recurrent input width: raw count for the fused and plain cells, the
  // encoder's feature width for the stacked baseline.
  std::size_t in = 1;
  if (spec.arch == Arch::Stacked) {
    const std::size_t e = spec.encoder_width();
    out.items.emplace_back("gcn.w0", init_weight(rng, 1, e));
    out.items.emplace_back("gcn.w1", init_weight(rng, e, e));
    in = e;
  }

  const int depth = spec.arch == Arch::Stgbgru ? spec.gcn_depth : 1;
  push_gate(out, rng, "w_xr", in, h, depth);
  push_gate(out, rng, "w_hr", h, h, depth);
  push_gate(out, rng, "w_xz", in, h, depth);
  push_gate(out, rng, "w_hz", h, h, depth);
  push_gate(out, rng, "w_xh", in, h, depth);
  push_gate(out, rng, "w_hh", h, h, depth);
  out.items.emplace_back("b_r", Tensor(Shape::vec(h)));
  out.items.emplace_back("b_z", Tensor(Shape::vec(h)));
  if (spec.candidate_bias)
    out.items.emplace_back("b_h", Tensor(Shape::vec(h)));
  out.items.emplace_back("w_out", init_weight(rng, h, 1));
  out.items.emplace_back("b_out", Tensor(Shape::vec(1)));
  return out;
}

Var TapeParams::at(const std::string &name) const {
  for (const auto &[key, var] : items)
    if (key == name)
      return var;
  throw ContractError("no parameter named '" + name + "' on the tape");
}

bool TapeParams::has(const std::string &name) const {
  for (const auto &[key, var] : items)
    if (key == name)
      return true;
  return false;
}

TapeParams place_params(Tape &tape, const ParamSet &params,
                        bool requires_grad) {
  TapeParams out;
  for (const auto &[name, value] : params.items)
    out.items.emplace_back(name, tape.leaf(value, requires_grad));
  return out;
}

Var graph_conv(Tape &tape, Var z, Var a_hat, Var w) {
  return tape.matmul(tape.matmul(a_hat, z), w);
}

Var gcn2_forward(Tape &tape, Var x, Var a_hat, Var w0, Var w1,
                 GcnActivation act) {
  Var hidden = tape.relu(graph_conv(tape, x, a_hat, w0));
  Var out = graph_conv(tape, hidden, a_hat, w1);
  return act == GcnActivation::Sigmoid ? tape.sigmoid(out) : out;
}

namespace {

// The shared gate algebra. `lin` maps (input, weight-name) to the gate's
// linear term, so the plain cell and the graph-fused cell differ only in
// how their products are computed.
template <class Linear>
Var gated_update(Tape &t, Var x, Var h_prev, const TapeParams &p, Linear lin) {
  Var r = t.sigmoid(t.add(t.add(lin(x, "w_xr"), lin(h_prev, "w_hr")), p.at("b_r")));
  Var z = t.sigmoid(t.add(t.add(lin(x, "w_xz"), lin(h_prev, "w_hz")), p.at("b_z")));
  Var cand = t.add(lin(x, "w_xh"), lin(t.hadamard(r, h_prev), "w_hh"));
  if (p.has("b_h"))
    cand = t.add(cand, p.at("b_h"));
  Var h_tilde = t.tanh(cand);
  // h = z (.) h_prev + (1 - z) (.) h~
  Var keep = t.hadamard(z, h_prev);
  Var blend = t.hadamard(t.affine(z, -1.0, 1.0), h_tilde);
  return t.add(keep, blend);
}

} // namespace

Var gru_cell(Tape &tape, Var x, Var h_prev, const TapeParams &params) {
  return gated_update(tape, x, h_prev, params, [&](Var v, const char *w) {
    return tape.matmul(v, params.at(w));
  });
}

Var stgbgru_cell(Tape &tape, Var x, Var h_prev, Var a_hat,
                 const TapeParams &params, const ModelSpec &spec) {
  check_spec(spec);
  auto conv = [&](Var v, const char *w) {
    if (spec.gcn_depth == 1)
      return graph_conv(tape, v, a_hat, params.at(w));
    Var first = tape.relu(
        graph_conv(tape, v, a_hat, params.at(std::string(w) + ".0")));
    return graph_conv(tape, first, a_hat, params.at(std::string(w) + ".1"));
  };
  return gated_update(tape, x, h_prev, params, conv);
}

Var forward_sequence(Tape &tape, const ModelSpec &spec,
                     const TapeParams &params, const Tensor &window,
                     const Tensor &a_hat) {
  check_spec(spec);
  const Shape &ws = window.shape();
  if (ws.rank != 2 || ws.cols() != spec.n_sites)
    throw ShapeError("window " + ws.str() + " does not match " +
                     std::to_string(spec.n_sites) + " sites");
  const std::size_t m = ws.rows();
  if (m == 0)
    throw ContractError("window must contain at least one step");
  const std::size_t n = spec.n_sites;

  Var a_hat_var{};
  if (spec.arch != Arch::PlainGru) {
    if (a_hat.shape() != Shape::mat(n, n))
      throw ShapeError("adjacency " + a_hat.shape().str() + " for " +
                       std::to_string(n) + " sites");
    a_hat_var = tape.leaf(a_hat, false);
  }

  Var h = tape.leaf(Tensor(Shape::mat(n, spec.hidden)), false);
  Tensor x_t(Shape::mat(n, 1));
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t j = 0; j < n; ++j)
      x_t.at(j, 0) = window.at(t, j);
    Var x = tape.leaf(x_t, false);
    switch (spec.arch) {
    case Arch::Stgbgru:
      h = stgbgru_cell(tape, x, h, a_hat_var, params, spec);
      break;
    case Arch::Stacked:
      x = gcn2_forward(tape, x, a_hat_var, params.at("gcn.w0"),
                       params.at("gcn.w1"), GcnActivation::Identity);
      h = gru_cell(tape, x, h, params);
      break;
    case Arch::PlainGru:
      h = gru_cell(tape, x, h, params);
      break;
    }
  }
  return tape.add(tape.matmul(h, params.at("w_out")), params.at("b_out"));
}

std::vector<double> predict_window(const ModelSpec &spec,
                                   const ParamSet &params,
                                   const Tensor &window, const Tensor &a_hat) {
  Tape tape;
  TapeParams on_tape = place_params(tape, params, false);
  const Tensor &y = tape.value(
      forward_sequence(tape, spec, on_tape, window, a_hat));
  return std::vector<double>(y.data(), y.data() + y.size());
}

} // namespace parkcast::model
