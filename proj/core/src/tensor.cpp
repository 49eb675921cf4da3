#include "nrgnn/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace nrgnn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

int64_t shape_count(const Shape& s) {
  int64_t n = 1;
  for (const int64_t d : s) n *= d;
  return n;
}

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_to_string(a) +
                              " and " + shape_to_string(b));
}

// Resolves the tape shared by the operands; throws if two tapes are mixed.
Tape* common_tape(std::initializer_list<const Tensor*> ts) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t->on_tape()) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw std::invalid_argument("op mixes tensors from two different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

// Adds grad g into the buffer of t if t participates in the tape.
void accumulate(Tape& tape, const Tensor& t, const double* g, int64_t n) {
  if (!t.on_tape()) return;
  auto& buf = tape.grad_buffer(t.node());
  for (int64_t i = 0; i < n; ++i) buf[static_cast<size_t>(i)] += g[i];
}

// Wraps forward result + backprop into a tape node when any input is watched.
Tensor finish(Tape* tape, Tensor result, Tape::Backprop backprop) {
  if (tape == nullptr) return result;
  const int node = tape->add_node(std::move(backprop));
  return tape->adopt(std::move(result), node);
}

}  // namespace

std::string shape_to_string(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)),
      values_(std::make_shared<std::vector<double>>(static_cast<size_t>(shape_count(shape_)), 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::make_shared<std::vector<double>>(std::move(values))) {
  if (static_cast<int64_t>(values_->size()) != shape_count(shape_)) {
    throw std::invalid_argument("tensor: value count " + std::to_string(values_->size()) +
                                " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.values_->begin(), t.values_->end(), v);
  return t;
}

int64_t Tensor::size() const { return values_ ? static_cast<int64_t>(values_->size()) : 0; }

int64_t Tensor::rows() const {
  if (shape_.size() != 2) throw std::invalid_argument("rows(): tensor is not 2-D: " + shape_to_string(shape_));
  return shape_[0];
}

int64_t Tensor::cols() const {
  if (shape_.size() != 2) throw std::invalid_argument("cols(): tensor is not 2-D: " + shape_to_string(shape_));
  return shape_[1];
}

double Tensor::value() const {
  if (size() != 1) {
    throw std::invalid_argument("value(): tensor " + shape_to_string(shape_) + " is not a scalar");
  }
  return (*values_)[0];
}

Tensor Tensor::clone() const { return Tensor(shape_, *values_); }

int Tape::add_node(Backprop backprop) {
  nodes_.push_back(Node{std::move(backprop)});
  grads_.emplace_back();
  sizes_.push_back(0);
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::adopt(Tensor t, int node) {
  t.tape_ = this;
  t.node_ = node;
  sizes_[static_cast<size_t>(node)] = t.size();
  return t;
}

Tensor Tape::watch(const Tensor& t) {
  if (!t.defined()) throw std::invalid_argument("watch(): undefined tensor");
  const int node = add_node({});
  Tensor leaf = t;  // shares storage
  return adopt(std::move(leaf), node);
}

std::vector<double>& Tape::grad_buffer(int node) {
  auto& g = grads_[static_cast<size_t>(node)];
  const auto want = static_cast<size_t>(sizes_[static_cast<size_t>(node)]);
  if (g.empty() && want > 0) g.assign(want, 0.0);
  return g;
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward(): loss is not on this tape");
  if (loss.size() != 1) {
    throw std::invalid_argument("backward(): loss must be scalar, got " + shape_to_string(loss.shape()));
  }
  grad_buffer(loss.node())[0] = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    auto& node = nodes_[static_cast<size_t>(i)];
    if (!node.backprop) continue;
    const auto& g = grads_[static_cast<size_t>(i)];
    if (g.empty()) continue;  // node never received gradient
    node.backprop(*this, g);
  }
}

Tensor Tape::grad(const Tensor& t) const {
  if (t.tape() != this) throw std::invalid_argument("grad(): tensor is not on this tape");
  const auto& g = grads_[static_cast<size_t>(t.node())];
  Tensor out(t.shape());
  if (!g.empty()) std::copy(g.begin(), g.end(), out.data());
  return out;
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
    shape_error("matmul", a.shape(), b.shape());
  }
  Tape* tape = common_tape({&a, &b});
  const int64_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  if (m > 0 && k > 0 && n > 0) {
    MatMap(out.data(), m, n).noalias() = ConstMatMap(a.data(), m, k) * ConstMatMap(b.data(), k, n);
  }
  return finish(tape, std::move(out), [a, b, m, k, n](Tape& tp, const std::vector<double>& g) {
    ConstMatMap gm(g.data(), m, n);
    if (a.on_tape()) {
      auto& da = tp.grad_buffer(a.node());
      MatMap(da.data(), m, k).noalias() += gm * ConstMatMap(b.data(), k, n).transpose();
    }
    if (b.on_tape()) {
      auto& db = tp.grad_buffer(b.node());
      MatMap(db.data(), k, n).noalias() += ConstMatMap(a.data(), m, k).transpose() * gm;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tape* tape = common_tape({&a, &b});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) + b.at(i);
  return finish(tape, std::move(out), [a, b, n](Tape& tp, const std::vector<double>& g) {
    accumulate(tp, a, g.data(), n);
    accumulate(tp, b, g.data(), n);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  Tape* tape = common_tape({&a, &b});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) - b.at(i);
  return finish(tape, std::move(out), [a, b, n](Tape& tp, const std::vector<double>& g) {
    accumulate(tp, a, g.data(), n);
    if (b.on_tape()) {
      auto& db = tp.grad_buffer(b.node());
      for (int64_t i = 0; i < n; ++i) db[static_cast<size_t>(i)] -= g[static_cast<size_t>(i)];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tape* tape = common_tape({&a, &b});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) * b.at(i);
  return finish(tape, std::move(out), [a, b, n](Tape& tp, const std::vector<double>& g) {
    if (a.on_tape()) {
      auto& da = tp.grad_buffer(a.node());
      for (int64_t i = 0; i < n; ++i) da[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * b.at(i);
    }
    if (b.on_tape()) {
      auto& db = tp.grad_buffer(b.node());
      for (int64_t i = 0; i < n; ++i) db[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * a.at(i);
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  Tape* tape = common_tape({&a});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) * s;
  return finish(tape, std::move(out), [a, s, n](Tape& tp, const std::vector<double>& g) {
    auto& da = tp.grad_buffer(a.node());
    for (int64_t i = 0; i < n; ++i) da[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * s;
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  Tape* tape = common_tape({&a});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) + c;
  return finish(tape, std::move(out), [a, n](Tape& tp, const std::vector<double>& g) {
    accumulate(tp, a, g.data(), n);
  });
}

Tensor square(const Tensor& a) {
  Tape* tape = common_tape({&a});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) * a.at(i);
  return finish(tape, std::move(out), [a, n](Tape& tp, const std::vector<double>& g) {
    auto& da = tp.grad_buffer(a.node());
    for (int64_t i = 0; i < n; ++i) da[static_cast<size_t>(i)] += 2.0 * a.at(i) * g[static_cast<size_t>(i)];
  });
}

Tensor relu(const Tensor& a) {
  Tape* tape = common_tape({&a});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) > 0.0 ? a.at(i) : 0.0;
  return finish(tape, std::move(out), [a, n](Tape& tp, const std::vector<double>& g) {
    auto& da = tp.grad_buffer(a.node());
    for (int64_t i = 0; i < n; ++i) {
      if (a.at(i) > 0.0) da[static_cast<size_t>(i)] += g[static_cast<size_t>(i)];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  Tape* tape = common_tape({&a});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = 1.0 / (1.0 + std::exp(-a.at(i)));
  Tensor fwd = out.clone();
  return finish(tape, std::move(out), [a, fwd, n](Tape& tp, const std::vector<double>& g) {
    auto& da = tp.grad_buffer(a.node());
    for (int64_t i = 0; i < n; ++i) {
      const double s = fwd.at(i);
      da[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * s * (1.0 - s);
    }
  });
}

Tensor row_softmax(const Tensor& a) {
  const int64_t r = a.rows(), c = a.cols();
  Tape* tape = common_tape({&a});
  Tensor out({r, c});
  for (int64_t i = 0; i < r; ++i) {
    double mx = a.at(i, 0);
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, a.at(i, j));
    double denom = 0.0;
    for (int64_t j = 0; j < c; ++j) {
      out.at(i, j) = std::exp(a.at(i, j) - mx);
      denom += out.at(i, j);
    }
    for (int64_t j = 0; j < c; ++j) out.at(i, j) /= denom;
  }
  Tensor fwd = out.clone();
  return finish(tape, std::move(out), [a, fwd, r, c](Tape& tp, const std::vector<double>& g) {
    auto& da = tp.grad_buffer(a.node());
    for (int64_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int64_t j = 0; j < c; ++j) dot += g[static_cast<size_t>(i * c + j)] * fwd.at(i, j);
      for (int64_t j = 0; j < c; ++j) {
        da[static_cast<size_t>(i * c + j)] += fwd.at(i, j) * (g[static_cast<size_t>(i * c + j)] - dot);
      }
    }
  });
}

Tensor rsqrt(const Tensor& a) {
  Tape* tape = common_tape({&a});
  Tensor out(a.shape());
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) {
    if (a.at(i) <= 0.0) {
      throw std::invalid_argument("rsqrt: non-positive input " + std::to_string(a.at(i)));
    }
    out.at(i) = 1.0 / std::sqrt(a.at(i));
  }
  Tensor fwd = out.clone();
  return finish(tape, std::move(out), [a, fwd, n](Tape& tp, const std::vector<double>& g) {
    auto& da = tp.grad_buffer(a.node());
    for (int64_t i = 0; i < n; ++i) {
      // d(x^{-1/2})/dx = -1/2 x^{-3/2}
      const double y = fwd.at(i);
      da[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * (-0.5 * y * y * y);
    }
  });
}

Tensor sum(const Tensor& a) {
  Tape* tape = common_tape({&a});
  double total = 0.0;
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) total += a.at(i);
  return finish(tape, Tensor::scalar(total), [a, n](Tape& tp, const std::vector<double>& g) {
    auto& da = tp.grad_buffer(a.node());
    for (int64_t i = 0; i < n; ++i) da[static_cast<size_t>(i)] += g[0];
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1) shape_error("concat", a.shape(), b.shape());
  Tape* tape = common_tape({&a, &b});
  const int64_t na = a.size(), nb = b.size();
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(na + nb));
  vals.insert(vals.end(), a.data(), a.data() + na);
  vals.insert(vals.end(), b.data(), b.data() + nb);
  Tensor out({na + nb}, std::move(vals));
  return finish(tape, std::move(out), [a, b, na, nb](Tape& tp, const std::vector<double>& g) {
    accumulate(tp, a, g.data(), na);
    accumulate(tp, b, g.data() + na, nb);
  });
}

Tensor gather(const Tensor& v, std::span<const int32_t> idx) {
  if (v.shape().size() != 1) {
    throw std::invalid_argument("gather: source must be 1-D, got " + shape_to_string(v.shape()));
  }
  Tape* tape = common_tape({&v});
  const int64_t m = static_cast<int64_t>(idx.size());
  Tensor out({m});
  for (int64_t i = 0; i < m; ++i) out.at(i) = v.at(idx[static_cast<size_t>(i)]);
  std::vector<int32_t> own(idx.begin(), idx.end());
  return finish(tape, std::move(out), [v, own = std::move(own), m](Tape& tp, const std::vector<double>& g) {
    auto& dv = tp.grad_buffer(v.node());
    for (int64_t i = 0; i < m; ++i) {
      dv[static_cast<size_t>(own[static_cast<size_t>(i)])] += g[static_cast<size_t>(i)];
    }
  });
}

Tensor segment_sum(const Tensor& v, std::span<const int32_t> seg, int64_t n_out) {
  if (v.shape().size() != 1 || static_cast<int64_t>(seg.size()) != v.size()) {
    throw std::invalid_argument("segment_sum: index count " + std::to_string(seg.size()) +
                                " does not match values " + shape_to_string(v.shape()));
  }
  Tape* tape = common_tape({&v});
  const int64_t n = v.size();
  Tensor out({n_out});
  for (int64_t i = 0; i < n; ++i) out.at(seg[static_cast<size_t>(i)]) += v.at(i);
  std::vector<int32_t> own(seg.begin(), seg.end());
  return finish(tape, std::move(out), [v, own = std::move(own), n](Tape& tp, const std::vector<double>& g) {
    auto& dv = tp.grad_buffer(v.node());
    for (int64_t i = 0; i < n; ++i) {
      dv[static_cast<size_t>(i)] += g[static_cast<size_t>(own[static_cast<size_t>(i)])];
    }
  });
}

Tensor spmm(const CooMatrix& m, const Tensor& vals, const Tensor& dense) {
  if (vals.shape().size() != 1 || vals.size() != m.nnz()) {
    throw std::invalid_argument("spmm: values " + shape_to_string(vals.shape()) + " do not match nnz " +
                                std::to_string(m.nnz()));
  }
  if (dense.shape().size() != 2 || dense.rows() != m.n_cols) {
    throw std::invalid_argument("spmm: dense " + shape_to_string(dense.shape()) +
                                " does not match sparse columns " + std::to_string(m.n_cols));
  }
  Tape* tape = common_tape({&vals, &dense});
  const int64_t d = dense.cols();
  const int64_t nnz = m.nnz();
  Tensor out({m.n_rows, d});
  {
    MatMap om(out.data(), m.n_rows, d);
    ConstMatMap dm(dense.data(), dense.rows(), d);
    for (int64_t k = 0; k < nnz; ++k) {
      om.row(m.row[static_cast<size_t>(k)]) += vals.at(k) * dm.row(m.col[static_cast<size_t>(k)]);
    }
  }
  // Index arrays are copied so the tape is self-contained.
  std::vector<int32_t> rows(m.row), cols(m.col);
  return finish(tape, std::move(out),
                [vals, dense, rows = std::move(rows), cols = std::move(cols), d, nnz](
                    Tape& tp, const std::vector<double>& g) {
    ConstMatMap gm(g.data(), static_cast<int64_t>(g.size()) / d, d);
    ConstMatMap dm(dense.data(), dense.rows(), d);
    if (vals.on_tape()) {
      auto& dv = tp.grad_buffer(vals.node());
      for (int64_t k = 0; k < nnz; ++k) {
        dv[static_cast<size_t>(k)] +=
            gm.row(rows[static_cast<size_t>(k)]).dot(dm.row(cols[static_cast<size_t>(k)]));
      }
    }
    if (dense.on_tape()) {
      auto& dd = tp.grad_buffer(dense.node());
      MatMap ddm(dd.data(), dense.rows(), d);
      for (int64_t k = 0; k < nnz; ++k) {
        ddm.row(cols[static_cast<size_t>(k)]) += vals.at(k) * gm.row(rows[static_cast<size_t>(k)]);
      }
    }
  });
}

Tensor pair_dot(const Tensor& z, std::span<const NodePair> pairs) {
  const int64_t d = z.cols();
  Tape* tape = common_tape({&z});
  const int64_t m = static_cast<int64_t>(pairs.size());
  Tensor out({m});
  ConstMatMap zm(z.data(), z.rows(), d);
  for (int64_t p = 0; p < m; ++p) {
    out.at(p) = zm.row(pairs[static_cast<size_t>(p)].i).dot(zm.row(pairs[static_cast<size_t>(p)].j));
  }
  std::vector<NodePair> own(pairs.begin(), pairs.end());
  return finish(tape, std::move(out), [z, own = std::move(own), d, m](Tape& tp, const std::vector<double>& g) {
    auto& dz = tp.grad_buffer(z.node());
    MatMap dzm(dz.data(), z.rows(), d);
    ConstMatMap zm(z.data(), z.rows(), d);
    for (int64_t p = 0; p < m; ++p) {
      const auto [i, j] = own[static_cast<size_t>(p)];
      dzm.row(i) += g[static_cast<size_t>(p)] * zm.row(j);
      dzm.row(j) += g[static_cast<size_t>(p)] * zm.row(i);
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int32_t> targets,
                     std::span<const int32_t> mask) {
  if (mask.empty()) throw std::invalid_argument("cross_entropy: empty mask, loss undefined");
  const int64_t c = logits.cols();
  Tape* tape = common_tape({&logits});
  double total = 0.0;
  for (const int32_t r : mask) {
    const int32_t t = targets[static_cast<size_t>(r)];
    if (t < 0 || t >= c) {
      throw std::invalid_argument("cross_entropy: target " + std::to_string(t) + " outside [0," +
                                  std::to_string(c) + ") at row " + std::to_string(r));
    }
    double mx = logits.at(r, 0);
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(r, j));
    double denom = 0.0;
    for (int64_t j = 0; j < c; ++j) denom += std::exp(logits.at(r, j) - mx);
    total += mx + std::log(denom) - logits.at(r, t);
  }
  const double inv_m = 1.0 / static_cast<double>(mask.size());
  std::vector<int32_t> own_mask(mask.begin(), mask.end());
  std::vector<int32_t> own_targets(targets.begin(), targets.end());
  return finish(tape, Tensor::scalar(total * inv_m),
                [logits, own_mask = std::move(own_mask), own_targets = std::move(own_targets), c,
                 inv_m](Tape& tp, const std::vector<double>& g) {
    auto& dl = tp.grad_buffer(logits.node());
    for (const int32_t r : own_mask) {
      double mx = logits.at(r, 0);
      for (int64_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(r, j));
      double denom = 0.0;
      for (int64_t j = 0; j < c; ++j) denom += std::exp(logits.at(r, j) - mx);
      for (int64_t j = 0; j < c; ++j) {
        const double p = std::exp(logits.at(r, j) - mx) / denom;
        const double onehot = (j == own_targets[static_cast<size_t>(r)]) ? 1.0 : 0.0;
        dl[static_cast<size_t>(r * c + j)] += g[0] * inv_m * (p - onehot);
      }
    }
  });
}

// ---- Adam ----

OptimizerState make_adam_state(const std::vector<Tensor>& params, AdamConfig cfg) {
  OptimizerState st;
  st.cfg = cfg;
  for (const auto& p : params) {
    st.m.emplace_back(static_cast<size_t>(p.size()), 0.0);
    st.v.emplace_back(static_cast<size_t>(p.size()), 0.0);
  }
  return st;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  state.step_count += 1;
  const auto& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));
  for (size_t p = 0; p < params.size(); ++p) {
    if (params[p].shape() != grads[p].shape()) {
      shape_error("adam_step", params[p].shape(), grads[p].shape());
    }
    auto& m = state.m[p];
    auto& v = state.v[p];
    const int64_t n = params[p].size();
    for (int64_t i = 0; i < n; ++i) {
      const double g = grads[p].at(i);
      m[static_cast<size_t>(i)] = c.beta1 * m[static_cast<size_t>(i)] + (1.0 - c.beta1) * g;
      v[static_cast<size_t>(i)] = c.beta2 * v[static_cast<size_t>(i)] + (1.0 - c.beta2) * g * g;
      const double mhat = m[static_cast<size_t>(i)] / bc1;
      const double vhat = v[static_cast<size_t>(i)] / bc2;
      params[p].at(i) -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

// ---- checkpointing ----

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  nlohmann::ordered_json manifest;
  manifest["format"] = "nrgnn-checkpoint-v1";
  manifest["tensors"] = nlohmann::ordered_json::array();
  int64_t offset = 0;
  for (const auto& nt : tensors) {
    nlohmann::ordered_json item;
    item["name"] = nt.name;
    item["shape"] = nt.tensor.shape();
    item["offset"] = offset;
    offset += nt.tensor.size();
    manifest["tensors"].push_back(item);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << manifest.dump() << '\n';
  static_assert(sizeof(double) == 8);
  for (const auto& nt : tensors) {
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(nt.tensor.data()),
                static_cast<std::streamsize>(nt.tensor.size() * 8));
    } else {
      for (int64_t i = 0; i < nt.tensor.size(); ++i) {
        uint64_t bits;
        const double d = nt.tensor.at(i);
        std::memcpy(&bits, &d, 8);
        char buf[8];
        for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
        out.write(buf, 8);
      }
    }
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_checkpoint: missing manifest in " + path);
  const auto manifest = nlohmann::json::parse(line);
  std::vector<NamedTensor> out;
  for (const auto& item : manifest.at("tensors")) {
    Shape shape = item.at("shape").get<Shape>();
    Tensor t(shape);
    if constexpr (std::endian::native == std::endian::little) {
      in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
    } else {
      for (int64_t i = 0; i < t.size(); ++i) {
        char buf[8];
        in.read(buf, 8);
        uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(static_cast<uint8_t>(buf[b])) << (8 * b);
        double d;
        std::memcpy(&d, &bits, 8);
        t.at(i) = d;
      }
    }
    if (!in) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
    out.push_back({item.at("name").get<std::string>(), std::move(t)});
  }
  return out;
}

}  // namespace nrgnn
