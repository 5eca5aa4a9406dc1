#include "parkcast/tape.hpp"

#include <cmath>
#include <cstring>

#include "parkcast/error.hpp"
#include "parkcast/kernels.hpp"

namespace parkcast::ad {

const Tensor &Var::value() const {
  if (tape == nullptr)
    throw ContractError("value() on a default-constructed Var");
  return tape->value(*this);
}

const Tensor &Tape::value(Var v) const {
  check_owned(v, "value");
  return nodes_[v.id].val;
}

void Tape::check_owned(Var v, const char *op) const {
  if (v.tape != this)
    throw ContractError(std::string(op) + ": Var belongs to a different tape");
  if (v.id >= used_)
    throw ContractError(std::string(op) + ": Var points past the live tape (stale handle after reset?)");
}

const Tape::Node &Tape::node(Var v) const { return nodes_[v.id]; }

// May reallocate nodes_: ops must not hold references to other nodes
// across this call; re-fetch them afterwards.
Tape::Node &Tape::acquire() {
  if (used_ == nodes_.size())
    nodes_.emplace_back();
  Node &n = nodes_[used_++];
  n.op = Op::Leaf;
  n.a = 0;
  n.b = 0;
  n.s0 = 0.0;
  n.s1 = 0.0;
  n.has_b = false;
  n.needs_grad = false;
  return n;
}

Var Tape::leaf(const Tensor &t, bool requires_grad) {
  if (t.size() == 0)
    throw ShapeError("leaf: empty tensor");
  Node &n = acquire();
  n.op = Op::Leaf;
  n.needs_grad = requires_grad;
  n.val.assign_shape(t.shape());
  std::memcpy(n.val.data(), t.data(), t.size() * sizeof(double));
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::matmul(Var a, Var b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  const Shape as = nodes_[a.id].val.shape();
  const Shape bs = nodes_[b.id].val.shape();

  Shape out;
  if (as.rank == 2 && bs.rank == 2) {
    if (as.cols() != bs.rows())
      throw ShapeError("matmul: " + as.str() + " vs " + bs.str());
    out = Shape::mat(as.rows(), bs.cols());
  } else if (as.rank == 3 && bs.rank == 2) {
    if (as.cols() != bs.rows())
      throw ShapeError("matmul: " + as.str() + " vs " + bs.str());
    out = Shape::cube(as.batches(), as.rows(), bs.cols());
  } else if (as.rank == 3 && bs.rank == 3) {
    if (as.batches() != bs.batches() || as.cols() != bs.rows())
      throw ShapeError("matmul: " + as.str() + " vs " + bs.str());
    out = Shape::cube(as.batches(), as.rows(), bs.cols());
  } else {
    throw ShapeError("matmul: unsupported ranks " + as.str() + " vs " + bs.str());
  }

  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  const Tensor &bv = nodes_[b.id].val;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.has_b = true;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val.assign_shape(out);

  const std::size_t rows = as.rows(), inner = as.cols(), cols = out.cols();
  const std::size_t batches = out.rank == 3 ? out.batches() : 1;
  const std::size_t a_stride = (as.rank == 3) ? rows * inner : 0;
  const std::size_t b_stride = (bs.rank == 3) ? inner * cols : 0;
  for (std::size_t p = 0; p < batches; ++p)
    kernels::matmul(av.data() + p * a_stride, bv.data() + p * b_stride,
                    n.val.data() + p * rows * cols, rows, inner, cols);
#ifndef NDEBUG
  n.val.check_finite("matmul");
#endif
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::add(Var a, Var b) {
  check_owned(a, "add");
  check_owned(b, "add");
  const Shape as = nodes_[a.id].val.shape();
  const Shape bs = nodes_[b.id].val.shape();

  Op op;
  if (as == bs) {
    op = Op::Add;
  } else if (as.rank == 2 && bs.rank == 1 && as.cols() == bs.count()) {
    op = Op::AddRow;
  } else {
    throw ShapeError("add: " + as.str() + " vs " + bs.str());
  }

  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  const Tensor &bv = nodes_[b.id].val;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.has_b = true;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val.assign_shape(as);

  if (op == Op::Add) {
    kernels::zip(av.data(), bv.data(), n.val.data(), av.size(),
                 [](double x, double y) { return x + y; });
  } else {
    const std::size_t rows = av.shape().rows(), cols = av.shape().cols();
    const double *bias = bv.data();
    double *out = n.val.data();
    const double *in = av.data();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        out[i * cols + j] = in[i * cols + j] + bias[j];
  }
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::hadamard(Var a, Var b) {
  check_owned(a, "hadamard");
  check_owned(b, "hadamard");
  const Shape as = nodes_[a.id].val.shape();
  const Shape bs = nodes_[b.id].val.shape();
  if (!(as == bs))
    throw ShapeError("hadamard: " + as.str() + " vs " + bs.str());

  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  const Tensor &bv = nodes_[b.id].val;
  n.op = Op::Hadamard;
  n.a = a.id;
  n.b = b.id;
  n.has_b = true;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val.assign_shape(as);
  kernels::zip(av.data(), bv.data(), n.val.data(), av.size(),
               [](double x, double y) { return x * y; });
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::affine(Var a, double mul, double add) {
  check_owned(a, "affine");
  if (!std::isfinite(mul) || !std::isfinite(add))
    throw NumericError("affine: non-finite coefficients");

  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  n.op = Op::Affine;
  n.a = a.id;
  n.s0 = mul;
  n.s1 = add;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val.assign_shape(av.shape());
  kernels::map(av.data(), n.val.data(), av.size(),
               [mul, add](double x) { return mul * x + add; });
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::sigmoid(Var a) {
  check_owned(a, "sigmoid");
  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  n.op = Op::Sigmoid;
  n.a = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val.assign_shape(av.shape());
  kernels::map(av.data(), n.val.data(), av.size(),
               [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::tanh(Var a) {
  check_owned(a, "tanh");
  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  n.op = Op::Tanh;
  n.a = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val.assign_shape(av.shape());
  kernels::map(av.data(), n.val.data(), av.size(),
               [](double x) { return std::tanh(x); });
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::relu(Var a) {
  check_owned(a, "relu");
  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  n.op = Op::Relu;
  n.a = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val.assign_shape(av.shape());
  kernels::map(av.data(), n.val.data(), av.size(),
               [](double x) { return x > 0.0 ? x : 0.0; });
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::concat_cols(Var a, Var b) {
  check_owned(a, "concat_cols");
  check_owned(b, "concat_cols");
  const Shape as = nodes_[a.id].val.shape();
  const Shape bs = nodes_[b.id].val.shape();
  if (as.rank != 2 || bs.rank != 2 || as.rows() != bs.rows())
    throw ShapeError("concat_cols: " + as.str() + " vs " + bs.str());

  const std::size_t rows = as.rows();
  const std::size_t ca = as.cols(), cb = bs.cols();
  Node &n = acquire();
  const Tensor &av = nodes_[a.id].val;
  const Tensor &bv = nodes_[b.id].val;
  n.op = Op::ConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.has_b = true;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val.assign_shape(Shape::mat(rows, ca + cb));
  double *out = n.val.data();
  const double *pa = av.data();
  const double *pb = bv.data();
  for (std::size_t i = 0; i < rows; ++i) {
    std::memcpy(out + i * (ca + cb), pa + i * ca, ca * sizeof(double));
    std::memcpy(out + i * (ca + cb) + ca, pb + i * cb, cb * sizeof(double));
  }
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Var Tape::mse(Var pred, Var target) {
  check_owned(pred, "mse");
  check_owned(target, "mse");
  const Shape ps = nodes_[pred.id].val.shape();
  const Shape ts = nodes_[target.id].val.shape();
  if (!(ps == ts))
    throw ShapeError("mse: " + ps.str() + " vs " + ts.str());
  if (ps.count() == 0)
    throw ShapeError("mse: empty operands");

  Node &n = acquire();
  const Tensor &pv = nodes_[pred.id].val;
  const Tensor &tv = nodes_[target.id].val;
  n.op = Op::Mse;
  n.a = pred.id;
  n.b = target.id;
  n.has_b = true;
  n.needs_grad = nodes_[pred.id].needs_grad || nodes_[target.id].needs_grad;
  n.val.assign_shape(Shape::vec(1));
  n.val.data()[0] =
      kernels::sum_sq_diff_serial(pv.data(), tv.data(), pv.size()) /
      static_cast<double>(pv.size());
  return make_var(static_cast<std::uint32_t>(used_ - 1));
}

Tensor &Tape::grad_slot(std::uint32_t id, const Shape &shape) {
  Tensor &g = grads_[id];
  if (!grad_live_[id]) {
    g.assign_shape(shape);
    g.fill(0.0);
    grad_live_[id] = 1;
  }
  return g;
}

void Tape::backward_node(std::uint32_t id) {
  const Node &n = nodes_[id];
  const Tensor &dy = grads_[id];
  const Node &na = nodes_[n.a];

  switch (n.op) {
  case Op::Leaf:
    return;

  case Op::MatMul: {
    const Node &nb = nodes_[n.b];
    const Shape &as = na.val.shape();
    const Shape &bs = nb.val.shape();
    const std::size_t rows = as.rows(), inner = as.cols(), cols = bs.cols();
    const std::size_t batches = n.val.shape().rank == 3 ? n.val.shape().batches() : 1;
    const std::size_t a_stride = (as.rank == 3) ? rows * inner : 0;
    const std::size_t b_stride = (bs.rank == 3) ? inner * cols : 0;
    const std::size_t y_stride = rows * cols;
    // Batch-major accumulation keeps the summation order fixed.
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, as);
      for (std::size_t p = 0; p < batches; ++p)
        kernels::matmul_abt_acc(dy.data() + p * y_stride,
                                nb.val.data() + p * b_stride,
                                da.data() + p * a_stride, rows, cols, inner);
    }
    if (nb.needs_grad) {
      Tensor &db = grad_slot(n.b, bs);
      for (std::size_t p = 0; p < batches; ++p)
        kernels::matmul_atb_acc(na.val.data() + p * a_stride,
                                dy.data() + p * y_stride,
                                db.data() + p * b_stride, rows, inner, cols);
    }
    return;
  }

  case Op::Add: {
    const Node &nb = nodes_[n.b];
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      kernels::acc(dy.data(), da.data(), dy.size());
    }
    if (nb.needs_grad) {
      Tensor &db = grad_slot(n.b, nb.val.shape());
      kernels::acc(dy.data(), db.data(), dy.size());
    }
    return;
  }

  case Op::AddRow: {
    const Node &nb = nodes_[n.b];
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      kernels::acc(dy.data(), da.data(), dy.size());
    }
    if (nb.needs_grad) {
      Tensor &db = grad_slot(n.b, nb.val.shape());
      const std::size_t rows = na.val.shape().rows(), cols = na.val.shape().cols();
      double *g = db.data();
      const double *d = dy.data();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          g[j] += d[i * cols + j];
    }
    return;
  }

  case Op::Hadamard: {
    const Node &nb = nodes_[n.b];
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      kernels::zip_acc(dy.data(), nb.val.data(), da.data(), dy.size(),
                       [](double d, double o) { return d * o; });
    }
    if (nb.needs_grad) {
      Tensor &db = grad_slot(n.b, nb.val.shape());
      kernels::zip_acc(dy.data(), na.val.data(), db.data(), dy.size(),
                       [](double d, double o) { return d * o; });
    }
    return;
  }

  case Op::Affine: {
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      const double mul = n.s0;
      kernels::zip_acc(dy.data(), dy.data(), da.data(), dy.size(),
                       [mul](double d, double) { return mul * d; });
    }
    return;
  }

  case Op::Sigmoid: {
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      kernels::zip_acc(dy.data(), n.val.data(), da.data(), dy.size(),
                       [](double d, double y) { return d * y * (1.0 - y); });
    }
    return;
  }

  case Op::Tanh: {
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      kernels::zip_acc(dy.data(), n.val.data(), da.data(), dy.size(),
                       [](double d, double y) { return d * (1.0 - y * y); });
    }
    return;
  }

  case Op::Relu: {
    // Subgradient 0 at the kink.
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      kernels::zip_acc(dy.data(), n.val.data(), da.data(), dy.size(),
                       [](double d, double y) { return y > 0.0 ? d : 0.0; });
    }
    return;
  }

  case Op::ConcatCols: {
    const Node &nb = nodes_[n.b];
    const std::size_t rows = n.val.shape().rows();
    const std::size_t ca = na.val.shape().cols(), cb = nb.val.shape().cols();
    const double *d = dy.data();
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      double *g = da.data();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < ca; ++j)
          g[i * ca + j] += d[i * (ca + cb) + j];
    }
    if (nb.needs_grad) {
      Tensor &db = grad_slot(n.b, nb.val.shape());
      double *g = db.data();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cb; ++j)
          g[i * cb + j] += d[i * (ca + cb) + ca + j];
    }
    return;
  }

  case Op::Mse: {
    const Node &nb = nodes_[n.b];
    const double dl = dy.data()[0];
    const double scale = 2.0 / static_cast<double>(na.val.size());
    if (na.needs_grad) {
      Tensor &da = grad_slot(n.a, na.val.shape());
      kernels::zip_acc(na.val.data(), nb.val.data(), da.data(), na.val.size(),
                       [dl, scale](double p, double t) { return dl * scale * (p - t); });
    }
    if (nb.needs_grad) {
      Tensor &db = grad_slot(n.b, nb.val.shape());
      kernels::zip_acc(na.val.data(), nb.val.data(), db.data(), na.val.size(),
                       [dl, scale](double p, double t) { return -dl * scale * (p - t); });
    }
    return;
  }
  }
  throw ContractError("backward: unknown op");
}

Tape::GradView Tape::backward(Var loss) {
  check_owned(loss, "backward");
  const Node &ln = nodes_[loss.id];
  if (ln.val.size() != 1)
    throw ShapeError("backward: loss must be scalar, got " + ln.val.shape().str());
  if (!ln.needs_grad)
    throw ContractError("backward: loss does not depend on any differentiable leaf");

  if (grads_.size() < nodes_.size()) {
    grads_.resize(nodes_.size());
    grad_live_.resize(nodes_.size());
  }
  std::memset(grad_live_.data(), 0, used_);

  grad_slot(loss.id, ln.val.shape()).data()[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    if (!grad_live_[id] || !nodes_[id].needs_grad)
      continue;
    backward_node(id);
  }
  return GradView(this);
}

bool Tape::GradView::has(Var v) const { return find(v) != nullptr; }

const Tensor *Tape::GradView::find(Var v) const {
  tape_->check_owned(v, "gradient lookup");
  if (v.id >= tape_->grad_live_.size() || !tape_->grad_live_[v.id])
    return nullptr;
  return &tape_->grads_[v.id];
}

Tensor Tape::GradView::get(Var v) const {
  if (const Tensor *g = find(v))
    return *g;
  return Tensor(tape_->nodes_[v.id].val.shape());
}

double finite_difference_check(const TapeFn &f, const Tensor &x, double step) {
  if (!(step > 0.0) || !std::isfinite(step))
    throw ContractError("finite_difference_check: step must be positive");

  Tape tape;
  Var xv = tape.leaf(x, true);
  Var loss = f(tape, xv);
  if (loss.tape != &tape || tape.value(loss).size() != 1)
    throw ContractError("finite_difference_check: f must return a scalar on the given tape");
  Tensor analytic = tape.backward(loss).get(xv);

  auto eval = [&f](const Tensor &point) {
    Tape t;
    Var v = t.leaf(point, false);
    Var l = f(t, v);
    double y = t.value(l).data()[0];
    if (!std::isfinite(y))
      throw NumericError("finite_difference_check: non-finite objective");
    return y;
  };

  Tensor probe = x;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + step;
    const double up = eval(probe);
    probe.data()[i] = saved - step;
    const double down = eval(probe);
    probe.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.data()[i];
    const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    if (err > worst)
      worst = err;
  }
  return worst;
}

} // namespace parkcast::ad
