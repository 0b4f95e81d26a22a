#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "miracle/error.hpp"

namespace miracle::ad {

// Dense row-major tensor of doubles. Rank 0 (scalar), 1 (vector) and
// 2 (matrix) are what the model uses. Tensors are plain values; nothing
// mutates one that another thread can see.
class Tensor {
 public:
  Tensor() : shape_{0} {}

  static Tensor scalar(double v) {
    Tensor t;
    t.shape_ = {};
    t.data_ = {v};
    return t;
  }
  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(int rows, int cols, std::vector<double> v);
  static Tensor from(std::vector<int> shape, std::vector<double> v);
  static Tensor identity(int n);
  static Tensor zeros_like(const Tensor& t) { return zeros(t.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  // rank-2 helpers
  int rows() const;
  int cols() const;

  double& operator()(int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator()(int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * cols() + j];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols() + j];
  }

  // Single value of a size-1 tensor (any rank).
  double item() const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  std::string shape_str() const;  // "[2x3]", "[5]", "[scalar]"

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

class Trace;

// Handle to a node in a Trace. Cheap to copy; valid as long as the Trace
// lives.
struct Var {
  Trace* trace = nullptr;
  int id = -1;
  bool valid() const { return trace != nullptr && id >= 0; }
};

// A named learnable tensor. The grad buffer accumulates across backward()
// calls until zeroed.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

  void zero_grad() { grad = Tensor::zeros_like(value); }
};

// Recorded computation. Define-by-run: every op appends a node whose
// inputs already exist, so node order is a topological order. Not
// copyable/movable: Vars hold raw pointers into it.
class Trace {
 public:
  Trace() = default;
  Trace(const Trace&) = delete;
  Trace& operator=(const Trace&) = delete;

  Var input(Tensor value);
  Var constant(double v) { return input(Tensor::scalar(v)); }
  Var param(Parameter& p);

  // Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse. loss must be a
  // single value. Gradients land in each leased Parameter's grad buffer
  // (accumulating) and are also readable per-node via grad().
  void backward(Var loss);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }
  void set_nan_check(bool on) { nan_check_ = on; }
  bool nan_check() const { return nan_check_; }

  // --- low-level surface used by the op implementations ---
  using BackFn = std::function<void(Trace&, int node_id)>;
  int emit(Tensor value, std::vector<int> parents, const char* op, BackFn back);
  Tensor& ensure_grad(int id);
  const Tensor& node_value(int id) const { return nodes_[id].value; }
  bool node_needs_grad(int id) const { return nodes_[id].needs_grad; }
  const Tensor& node_grad(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until touched
    std::vector<int> parents;
    BackFn back;
    Parameter* bound = nullptr;
    bool needs_grad = false;
    const char* op = "";
  };
  std::vector<Node> nodes_;
  bool nan_check_ = true;
  bool backward_done_ = false;
};

// --- operations ---
// Binary pointwise ops accept equal shapes, or one size-1 operand that
// broadcasts against the other (the only broadcasting rule).
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var log(Var a);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var clamp(Var a, double lo, double hi);
Var concat(Var a, Var b);                    // columns (rank-2) / entries (rank-1)
Var add_rowvec(Var m, Var v);                // m[r×c] + v[c] to every row
Var div_colvec(Var m, Var v);                // row i of m divided by v[i]
Var gather_rows(Var a, std::vector<int> idx);  // idx −1 yields a zero row
Var stack_rows(const std::vector<Var>& rows);  // k vectors [c] → [k×c]
Var dropout(Var a, double p, bool training, std::mt19937_64& rng);
Var sum(Var a);
Var mean(Var a);
Var rowsum(Var a);
Var colsum(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

// Plain-value kernels shared with non-traced code paths.
namespace kernels {
// c (+)= a·b with optional transposes; all row-major, no aliasing.
void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate);
void matmul_nt(const double* a, const double* b, double* c, int m, int k, int n,
               bool accumulate);  // c[m×n] = a[m×k] · b[n×k]ᵀ
void matmul_tn(const double* a, const double* b, double* c, int k, int m, int n,
               bool accumulate);  // c[m×n] = a[k×m]ᵀ · b[k×n]
double softplus(double x);
double sigmoid(double x);
}  // namespace kernels

}  // namespace miracle::ad
