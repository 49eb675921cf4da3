#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nrgnn {

using Shape = std::vector<int64_t>;

class Tape;

// Dense row-major array of doubles. Value semantics with shared storage:
// copies alias the same buffer, so a model can keep a parameter tensor while
// a per-epoch tape watches the same memory.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  int64_t size() const;
  int64_t rows() const;
  int64_t cols() const;

  double* data() { return values_->data(); }
  const double* data() const { return values_->data(); }
  double& at(int64_t i) { return (*values_)[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return (*values_)[static_cast<size_t>(i)]; }
  double& at(int64_t r, int64_t c) { return (*values_)[static_cast<size_t>(r * cols() + c)]; }
  double at(int64_t r, int64_t c) const { return (*values_)[static_cast<size_t>(r * cols() + c)]; }
  double value() const;  // scalar fetch; throws unless size()==1

  std::vector<double> to_vector() const { return *values_; }
  Tensor clone() const;  // deep copy, off tape

  bool on_tape() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  bool defined() const { return values_ != nullptr; }

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> values_;
  Tape* tape_ = nullptr;
  int node_ = -1;
  friend class Tape;
};

// Sparse index structure in coordinate form. Entry values live in a separate
// Tensor so they can participate in differentiation.
struct CooMatrix {
  int64_t n_rows = 0;
  int64_t n_cols = 0;
  std::vector<int32_t> row;
  std::vector<int32_t> col;
  int64_t nnz() const { return static_cast<int64_t>(row.size()); }
};

struct NodePair {
  int32_t i = 0;
  int32_t j = 0;
  friend bool operator==(const NodePair&, const NodePair&) = default;
};

// Reverse-mode gradient tape. Single-threaded by contract; independent tapes
// may run on independent threads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers t as a differentiable leaf. The returned tensor shares storage
  // with t, so optimizer updates through t are seen by later forwards.
  Tensor watch(const Tensor& t);

  // Runs the reverse sweep from a scalar loss.
  void backward(const Tensor& loss);

  // Gradient accumulated for a tape tensor; zeros if it never received one.
  Tensor grad(const Tensor& t) const;

  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // -- internal plumbing used by the op layer --
  // A node's backprop receives its own output gradient and accumulates into
  // the grad buffers of its inputs. Leaves carry no backprop.
  using Backprop = std::function<void(Tape&, const std::vector<double>&)>;
  int add_node(Backprop backprop);
  std::vector<double>& grad_buffer(int node);
  Tensor adopt(Tensor t, int node);  // binds a freshly computed tensor

 private:
  struct Node {
    Backprop backprop;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::vector<int64_t> sizes_;
};

// ---- differentiable ops ----
// Every op accepts tape tensors and plain tensors interchangeably; the result
// is on a tape iff at least one operand is. Mixing tensors from two different
// tapes is an error.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double c);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor row_softmax(const Tensor& a);
Tensor rsqrt(const Tensor& a);  // elementwise 1/sqrt(x); requires x > 0
Tensor sum(const Tensor& a);    // scalar
Tensor concat(const Tensor& a, const Tensor& b);  // 1-D
Tensor gather(const Tensor& v, std::span<const int32_t> idx);               // 1-D source
Tensor segment_sum(const Tensor& v, std::span<const int32_t> seg, int64_t n_out);  // 1-D
// out[r,:] += vals[k] * dense[col[k],:] over entries k with row[k]==r.
Tensor spmm(const CooMatrix& m, const Tensor& vals, const Tensor& dense);
// out[p] = dot(z[pairs[p].i,:], z[pairs[p].j,:]).
Tensor pair_dot(const Tensor& z, std::span<const NodePair> pairs);
// Mean over masked rows of -log softmax(logits)[target]; throws on empty mask.
Tensor cross_entropy(const Tensor& logits, std::span<const int32_t> targets,
                     std::span<const int32_t> mask);

// ---- optimizer ----

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig cfg;
  std::vector<std::vector<double>> m;  // first moments, one per parameter
  std::vector<std::vector<double>> v;  // second moments
  int64_t step_count = 0;
};

OptimizerState make_adam_state(const std::vector<Tensor>& params, AdamConfig cfg = {});
// In-place bias-corrected Adam update of params.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               OptimizerState& state);

// ---- checkpointing ----
// Single file: one JSON manifest line (names, shapes, offsets) followed by the
// flat little-endian 64-bit payload.

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

std::string shape_to_string(const Shape& s);

}  // namespace nrgnn
