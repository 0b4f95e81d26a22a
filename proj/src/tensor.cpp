#include "miracle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <utility>

namespace miracle::ad {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_str() +
                       " and " + b.shape_str());
}

void require_same_trace(const char* op, Var a, Var b) {
  if (a.trace == nullptr || a.trace != b.trace)
    throw Error(std::string(op) + ": operands belong to different traces");
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  std::size_t n = shape_product(shape);
  t.shape_ = std::move(shape);
  t.data_.assign(n, 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

Tensor Tensor::vector(std::vector<double> v) {
  Tensor t;
  t.shape_ = {static_cast<int>(v.size())};
  t.data_ = std::move(v);
  return t;
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> v) {
  return from({rows, cols}, std::move(v));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> v) {
  if (shape_product(shape) != v.size())
    throw DimensionError("tensor data size " + std::to_string(v.size()) +
                         " does not match shape product");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(v);
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t = zeros({n, n});
  for (int i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

int Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows(): tensor is not rank-2, shape " + shape_str());
  return shape_[0];
}

int Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols(): tensor is not rank-2, shape " + shape_str());
  return shape_[1];
}

double Tensor::item() const {
  if (size() != 1)
    throw DimensionError("item(): tensor has " + std::to_string(size()) + " values");
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  if (rank() == 0) return "[scalar]";
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < rank(); ++i) os << (i ? "x" : "") << shape_[i];
  os << "]";
  return os.str();
}

// ---------------------------------------------------------------- kernels

namespace kernels {

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int k, int m, int n,
               bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < k; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * m;
    const double* brow = b + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < m; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

double softplus(double x) {
  // ln(1+e^x) = max(x,0) + log1p(e^{-|x|})
  return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace kernels

// ------------------------------------------------------------------ Trace

int Trace::emit(Tensor value, std::vector<int> parents, const char* op, BackFn back) {
  if (nan_check_ && !value.all_finite())
    throw NumericError(std::string(op) + " produced a non-finite value");
  Node node;
  node.value = std::move(value);
  node.parents = std::move(parents);
  node.back = std::move(back);
  node.op = op;
  for (int p : node.parents)
    if (p >= 0 && nodes_[static_cast<std::size_t>(p)].needs_grad) node.needs_grad = true;
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Trace::input(Tensor value) {
  if (nan_check_ && !value.all_finite())
    throw NumericError("input tensor contains a non-finite value");
  Node node;
  node.value = std::move(value);
  node.op = "input";
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Trace::param(Parameter& p) {
  if (nan_check_ && !p.value.all_finite())
    throw NumericError("parameter '" + p.name + "' contains a non-finite value");
  Node node;
  node.value = p.value;
  node.bound = &p;
  node.needs_grad = true;
  node.op = "param";
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Trace::ensure_grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() != n.value.size()) n.grad = Tensor::zeros_like(n.value);
  return n.grad;
}

const Tensor& Trace::value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }

const Tensor& Trace::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() != n.value.size()) {
    static thread_local Tensor zeros;
    zeros = Tensor::zeros_like(n.value);
    return zeros;
  }
  return n.grad;
}

void Trace::backward(Var loss) {
  if (loss.trace != this) throw Error("backward: loss is not a node of this trace");
  if (backward_done_) throw Error("backward: trace already swept");
  backward_done_ = true;
  const Node& ln = nodes_[static_cast<std::size_t>(loss.id)];
  if (ln.value.size() != 1)
    throw DimensionError("backward: loss must be a single value, got shape " +
                         ln.value.shape_str());
  ensure_grad(loss.id).data()[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad && n.bound == nullptr) continue;
    if (n.grad.size() != n.value.size()) continue;  // no gradient flowed here
    if (nan_check_ && !n.grad.all_finite())
      throw NumericError(std::string("backward through ") + n.op +
                         " produced a non-finite gradient");
    if (n.back) n.back(*this, id);
    if (n.bound != nullptr) {
      if (n.bound->grad.size() != n.value.size())
        n.bound->grad = Tensor::zeros_like(n.value);
      double* dst = n.bound->grad.data();
      const double* src = n.grad.data();
      for (std::size_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
    }
  }
  // Leased parameters the loss never touched still get a zero gradient of
  // the right shape.
  for (Node& n : nodes_) {
    if (n.bound != nullptr && n.bound->grad.size() != n.bound->value.size())
      n.bound->grad = Tensor::zeros_like(n.bound->value);
  }
}

// -------------------------------------------------------------------- ops

namespace {

// Pointwise binary with the single-value broadcast rule.
template <typename Fwd, typename BackA, typename BackB>
Var pointwise_binary(const char* op, Var a, Var b, Fwd fwd, BackA back_a, BackB back_b) {
  require_same_trace(op, a, b);
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  const Tensor& bv = tr.node_value(b.id);
  const bool a_scalar = av.size() == 1 && !bv.same_shape(av);
  const bool b_scalar = bv.size() == 1 && !av.same_shape(bv);
  if (!av.same_shape(bv) && !a_scalar && !b_scalar) shape_error(op, av, bv);

  const Tensor& big = a_scalar ? bv : av;
  Tensor out = Tensor::zeros_like(big);
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av.data()[a_scalar ? 0 : i];
    const double y = bv.data()[b_scalar ? 0 : i];
    out.data()[i] = fwd(x, y);
  }
  int aid = a.id, bid = b.id;
  int id = tr.emit(std::move(out), {aid, bid}, op,
                   [aid, bid, a_scalar, b_scalar, back_a, back_b](Trace& t, int self) {
                     const Tensor& g = t.node_grad(self);
                     const Tensor& av2 = t.node_value(aid);
                     const Tensor& bv2 = t.node_value(bid);
                     const std::size_t n2 = g.size();
                     if (t.node_needs_grad(aid)) {
                       Tensor& ga = t.ensure_grad(aid);
                       for (std::size_t i = 0; i < n2; ++i) {
                         const double x = av2.data()[a_scalar ? 0 : i];
                         const double y = bv2.data()[b_scalar ? 0 : i];
                         ga.data()[a_scalar ? 0 : i] += back_a(g.data()[i], x, y);
                       }
                     }
                     if (t.node_needs_grad(bid)) {
                       Tensor& gb = t.ensure_grad(bid);
                       for (std::size_t i = 0; i < n2; ++i) {
                         const double x = av2.data()[a_scalar ? 0 : i];
                         const double y = bv2.data()[b_scalar ? 0 : i];
                         gb.data()[b_scalar ? 0 : i] += back_b(g.data()[i], x, y);
                       }
                     }
                   });
  return Var{&tr, id};
}

// Pointwise unary; backward receives (gradient, input, output).
template <typename Fwd, typename Back>
Var pointwise_unary(const char* op, Var a, Fwd fwd, Back back) {
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  Tensor out = Tensor::zeros_like(av);
  for (std::size_t i = 0; i < av.size(); ++i) out.data()[i] = fwd(av.data()[i]);
  int aid = a.id;
  int id = tr.emit(std::move(out), {aid}, op, [aid, back](Trace& t, int self) {
    if (!t.node_needs_grad(aid)) return;
    const Tensor& g = t.node_grad(self);
    const Tensor& x = t.node_value(aid);
    const Tensor& y = t.node_value(self);
    Tensor& ga = t.ensure_grad(aid);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.data()[i] += back(g.data()[i], x.data()[i], y.data()[i]);
  });
  return Var{&tr, id};
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_trace("matmul", a, b);
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  const Tensor& bv = tr.node_value(b.id);
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
    shape_error("matmul", av, bv);
  const int m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul(av.data(), bv.data(), out.data(), m, k, n, false);
  int aid = a.id, bid = b.id;
  int id = tr.emit(std::move(out), {aid, bid}, "matmul",
                   [aid, bid, m, k, n](Trace& t, int self) {
                     const Tensor& g = t.node_grad(self);
                     if (t.node_needs_grad(aid)) {
                       Tensor& ga = t.ensure_grad(aid);
                       kernels::matmul_nt(g.data(), t.node_value(bid).data(), ga.data(),
                                          m, n, k, true);
                     }
                     if (t.node_needs_grad(bid)) {
                       Tensor& gb = t.ensure_grad(bid);
                       kernels::matmul_tn(t.node_value(aid).data(), g.data(), gb.data(),
                                          m, k, n, true);
                     }
                   });
  return Var{&tr, id};
}

Var transpose(Var a) {
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  if (av.rank() != 2) throw DimensionError("transpose: need rank-2, got " + av.shape_str());
  const int r = av.rows(), c = av.cols();
  Tensor out = Tensor::zeros({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(j, i) = av(i, j);
  int aid = a.id;
  int id = tr.emit(std::move(out), {aid}, "transpose", [aid, r, c](Trace& t, int self) {
    if (!t.node_needs_grad(aid)) return;
    const Tensor& g = t.node_grad(self);
    Tensor& ga = t.ensure_grad(aid);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) ga(i, j) += g(j, i);
  });
  return Var{&tr, id};
}

Var add(Var a, Var b) {
  return pointwise_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Var sub(Var a, Var b) {
  return pointwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Var mul(Var a, Var b) {
  return pointwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var div(Var a, Var b) {
  return pointwise_binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double g, double, double y) { return g / y; },
      [](double g, double x, double y) { return -g * x / (y * y); });
}

Var relu(Var a) {
  return pointwise_unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double g, double x, double) { return x > 0.0 ? g : 0.0; });
}

Var tanh(Var a) {
  return pointwise_unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double g, double, double y) { return g * (1.0 - y * y); });
}

Var sigmoid(Var a) {
  return pointwise_unary(
      "sigmoid", a, [](double x) { return kernels::sigmoid(x); },
      [](double g, double, double y) { return g * y * (1.0 - y); });
}

Var softplus(Var a) {
  return pointwise_unary(
      "softplus", a, [](double x) { return kernels::softplus(x); },
      [](double g, double x, double) { return g * kernels::sigmoid(x); });
}

Var log(Var a) {
  return pointwise_unary(
      "log", a, [](double x) { return std::log(x); },
      [](double g, double x, double) { return g / x; });
}

Var neg(Var a) {
  return pointwise_unary(
      "neg", a, [](double x) { return -x; },
      [](double g, double, double) { return -g; });
}

Var scale(Var a, double c) {
  return pointwise_unary(
      "scale", a, [c](double x) { return c * x; },
      [c](double g, double, double) { return c * g; });
}

Var add_scalar(Var a, double c) {
  return pointwise_unary(
      "add_scalar", a, [c](double x) { return x + c; },
      [](double g, double, double) { return g; });
}

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw Error("clamp: lo > hi");
  return pointwise_unary(
      "clamp", a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double g, double x, double) { return (x > lo && x < hi) ? g : 0.0; });
}

Var concat(Var a, Var b) {
  require_same_trace("concat", a, b);
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  const Tensor& bv = tr.node_value(b.id);
  int aid = a.id, bid = b.id;
  if (av.rank() == 1 && bv.rank() == 1) {
    const int p = av.shape()[0], q = bv.shape()[0];
    Tensor out = Tensor::zeros({p + q});
    std::copy(av.data(), av.data() + p, out.data());
    std::copy(bv.data(), bv.data() + q, out.data() + p);
    int id = tr.emit(std::move(out), {aid, bid}, "concat", [aid, bid, p, q](Trace& t, int self) {
      const Tensor& g = t.node_grad(self);
      if (t.node_needs_grad(aid)) {
        Tensor& ga = t.ensure_grad(aid);
        for (int i = 0; i < p; ++i) ga(i) += g(i);
      }
      if (t.node_needs_grad(bid)) {
        Tensor& gb = t.ensure_grad(bid);
        for (int i = 0; i < q; ++i) gb(i) += g(p + i);
      }
    });
    return Var{&tr, id};
  }
  if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows())
    shape_error("concat", av, bv);
  const int m = av.rows(), p = av.cols(), q = bv.cols();
  Tensor out = Tensor::zeros({m, p + q});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) out(i, j) = av(i, j);
    for (int j = 0; j < q; ++j) out(i, p + j) = bv(i, j);
  }
  int id = tr.emit(std::move(out), {aid, bid}, "concat",
                   [aid, bid, m, p, q](Trace& t, int self) {
                     const Tensor& g = t.node_grad(self);
                     if (t.node_needs_grad(aid)) {
                       Tensor& ga = t.ensure_grad(aid);
                       for (int i = 0; i < m; ++i)
                         for (int j = 0; j < p; ++j) ga(i, j) += g(i, j);
                     }
                     if (t.node_needs_grad(bid)) {
                       Tensor& gb = t.ensure_grad(bid);
                       for (int i = 0; i < m; ++i)
                         for (int j = 0; j < q; ++j) gb(i, j) += g(i, p + j);
                     }
                   });
  return Var{&tr, id};
}

Var add_rowvec(Var m, Var v) {
  require_same_trace("add_rowvec", m, v);
  Trace& tr = *m.trace;
  const Tensor& mv = tr.node_value(m.id);
  const Tensor& vv = tr.node_value(v.id);
  if (mv.rank() != 2 || vv.rank() != 1 || mv.cols() != vv.shape()[0])
    shape_error("add_rowvec", mv, vv);
  const int r = mv.rows(), c = mv.cols();
  Tensor out = Tensor::zeros({r, c});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(i, j) = mv(i, j) + vv(j);
  int mid = m.id, vid = v.id;
  int id = tr.emit(std::move(out), {mid, vid}, "add_rowvec",
                   [mid, vid, r, c](Trace& t, int self) {
                     const Tensor& g = t.node_grad(self);
                     if (t.node_needs_grad(mid)) {
                       Tensor& gm = t.ensure_grad(mid);
                       for (std::size_t i = 0; i < g.size(); ++i) gm.data()[i] += g.data()[i];
                     }
                     if (t.node_needs_grad(vid)) {
                       Tensor& gv = t.ensure_grad(vid);
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < c; ++j) gv(j) += g(i, j);
                     }
                   });
  return Var{&tr, id};
}

Var div_colvec(Var m, Var v) {
  require_same_trace("div_colvec", m, v);
  Trace& tr = *m.trace;
  const Tensor& mv = tr.node_value(m.id);
  const Tensor& vv = tr.node_value(v.id);
  if (mv.rank() != 2 || vv.rank() != 1 || mv.rows() != vv.shape()[0])
    shape_error("div_colvec", mv, vv);
  const int r = mv.rows(), c = mv.cols();
  Tensor out = Tensor::zeros({r, c});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(i, j) = mv(i, j) / vv(i);
  int mid = m.id, vid = v.id;
  int id = tr.emit(std::move(out), {mid, vid}, "div_colvec",
                   [mid, vid, r, c](Trace& t, int self) {
                     const Tensor& g = t.node_grad(self);
                     const Tensor& mval = t.node_value(mid);
                     const Tensor& vval = t.node_value(vid);
                     if (t.node_needs_grad(mid)) {
                       Tensor& gm = t.ensure_grad(mid);
                       for (int i = 0; i < r; ++i)
                         for (int j = 0; j < c; ++j) gm(i, j) += g(i, j) / vval(i);
                     }
                     if (t.node_needs_grad(vid)) {
                       Tensor& gv = t.ensure_grad(vid);
                       for (int i = 0; i < r; ++i) {
                         const double inv2 = 1.0 / (vval(i) * vval(i));
                         double acc = 0.0;
                         for (int j = 0; j < c; ++j) acc += g(i, j) * mval(i, j);
                         gv(i) -= acc * inv2;
                       }
                     }
                   });
  return Var{&tr, id};
}

Var gather_rows(Var a, std::vector<int> idx) {
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  if (av.rank() != 2) throw DimensionError("gather_rows: need rank-2, got " + av.shape_str());
  const int r = av.rows(), c = av.cols();
  for (int i : idx)
    if (i < -1 || i >= r)
      throw DimensionError("gather_rows: index " + std::to_string(i) +
                           " out of range for " + av.shape_str());
  Tensor out = Tensor::zeros({static_cast<int>(idx.size()), c});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0) continue;  // unknown row stays zero
    const double* src = av.data() + static_cast<std::size_t>(idx[k]) * c;
    std::copy(src, src + c, out.data() + k * c);
  }
  int aid = a.id;
  int id = tr.emit(std::move(out), {aid}, "gather_rows",
                   [aid, idx = std::move(idx), c](Trace& t, int self) {
                     if (!t.node_needs_grad(aid)) return;
                     const Tensor& g = t.node_grad(self);
                     Tensor& ga = t.ensure_grad(aid);
                     for (std::size_t k = 0; k < idx.size(); ++k) {
                       if (idx[k] < 0) continue;
                       double* dst = ga.data() + static_cast<std::size_t>(idx[k]) * c;
                       const double* src = g.data() + k * c;
                       for (int j = 0; j < c; ++j) dst[j] += src[j];
                     }
                   });
  return Var{&tr, id};
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  Trace& tr = *rows[0].trace;
  const int c = tr.node_value(rows[0].id).rank() == 1
                    ? tr.node_value(rows[0].id).shape()[0]
                    : -1;
  if (c < 0) throw DimensionError("stack_rows: rows must be rank-1");
  std::vector<int> parents;
  parents.reserve(rows.size());
  Tensor out = Tensor::zeros({static_cast<int>(rows.size()), c});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require_same_trace("stack_rows", rows[0], rows[k]);
    const Tensor& rv = tr.node_value(rows[k].id);
    if (rv.rank() != 1 || rv.shape()[0] != c)
      throw DimensionError("stack_rows: row " + std::to_string(k) + " has shape " +
                           rv.shape_str());
    std::copy(rv.data(), rv.data() + c, out.data() + k * c);
    parents.push_back(rows[k].id);
  }
  std::vector<int> parent_copy = parents;
  int id = tr.emit(std::move(out), std::move(parents), "stack_rows",
                   [parent_copy, c](Trace& t, int self) {
                     const Tensor& g = t.node_grad(self);
                     for (std::size_t k = 0; k < parent_copy.size(); ++k) {
                       const int pid = parent_copy[k];
                       if (!t.node_needs_grad(pid)) continue;
                       Tensor& gp = t.ensure_grad(pid);
                       const double* src = g.data() + k * c;
                       for (int j = 0; j < c; ++j) gp(j) += src[j];
                     }
                   });
  return Var{&tr, id};
}

Var dropout(Var a, double p, bool training, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0))
    throw ConfigError("dropout: probability " + std::to_string(p) + " outside [0,1)");
  Trace& tr = *a.trace;
  if (!training || p == 0.0) {
    // identity pass-through; still recorded so gradients flow unchanged
    return pointwise_unary(
        "dropout_id", a, [](double x) { return x; },
        [](double g, double, double) { return g; });
  }
  const Tensor& av = tr.node_value(a.id);
  Tensor mask = Tensor::zeros_like(av);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.data()[i] = unit(rng) < p ? 0.0 : keep_scale;
  Tensor out = Tensor::zeros_like(av);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = av.data()[i] * mask.data()[i];
  int aid = a.id;
  int id = tr.emit(std::move(out), {aid}, "dropout",
                   [aid, mask = std::move(mask)](Trace& t, int self) {
                     if (!t.node_needs_grad(aid)) return;
                     const Tensor& g = t.node_grad(self);
                     Tensor& ga = t.ensure_grad(aid);
                     for (std::size_t i = 0; i < g.size(); ++i)
                       ga.data()[i] += g.data()[i] * mask.data()[i];
                   });
  return Var{&tr, id};
}

Var sum(Var a) {
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
  int aid = a.id;
  int id = tr.emit(Tensor::scalar(acc), {aid}, "sum", [aid](Trace& t, int self) {
    if (!t.node_needs_grad(aid)) return;
    const double g = t.node_grad(self).data()[0];
    Tensor& ga = t.ensure_grad(aid);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
  });
  return Var{&tr, id};
}

Var mean(Var a) {
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  if (av.empty()) throw DimensionError("mean: empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
  const double inv = 1.0 / static_cast<double>(av.size());
  int aid = a.id;
  int id = tr.emit(Tensor::scalar(acc * inv), {aid}, "mean", [aid, inv](Trace& t, int self) {
    if (!t.node_needs_grad(aid)) return;
    const double g = t.node_grad(self).data()[0] * inv;
    Tensor& ga = t.ensure_grad(aid);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g;
  });
  return Var{&tr, id};
}

Var rowsum(Var a) {
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  if (av.rank() != 2) throw DimensionError("rowsum: need rank-2, got " + av.shape_str());
  const int r = av.rows(), c = av.cols();
  Tensor out = Tensor::zeros({r});
  for (int i = 0; i < r; ++i) {
    double acc = 0.0;
    for (int j = 0; j < c; ++j) acc += av(i, j);
    out(i) = acc;
  }
  int aid = a.id;
  int id = tr.emit(std::move(out), {aid}, "rowsum", [aid, r, c](Trace& t, int self) {
    if (!t.node_needs_grad(aid)) return;
    const Tensor& g = t.node_grad(self);
    Tensor& ga = t.ensure_grad(aid);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) ga(i, j) += g(i);
  });
  return Var{&tr, id};
}

Var colsum(Var a) {
  Trace& tr = *a.trace;
  const Tensor& av = tr.node_value(a.id);
  if (av.rank() != 2) throw DimensionError("colsum: need rank-2, got " + av.shape_str());
  const int r = av.rows(), c = av.cols();
  Tensor out = Tensor::zeros({c});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out(j) += av(i, j);
  int aid = a.id;
  int id = tr.emit(std::move(out), {aid}, "colsum", [aid, r, c](Trace& t, int self) {
    if (!t.node_needs_grad(aid)) return;
    const Tensor& g = t.node_grad(self);
    Tensor& ga = t.ensure_grad(aid);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) ga(i, j) += g(j);
  });
  return Var{&tr, id};
}

}  // namespace miracle::ad
