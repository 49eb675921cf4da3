#pragma once

#include <cstdint>
#include <vector>

#include "nrgnn/graph.hpp"
#include "nrgnn/rng.hpp"
#include "nrgnn/tensor.hpp"

namespace nrgnn {

enum class GnnKind { Gcn, Gin };

struct GnnConfig {
  GnnKind kind = GnnKind::Gcn;
  std::vector<int64_t> layer_dims;  // input -> hidden... -> output
  double gin_epsilon = 0.0;
  int64_t gin_mlp_hidden = 16;
};

// Learnable weights. GCN holds one matrix per layer; GIN holds the two MLP
// matrices per layer, flattened in layer order.
struct GnnParams {
  std::vector<Tensor> weights;

  GnnParams watched(Tape& tape) const {
    GnnParams out;
    out.weights.reserve(weights.size());
    for (const auto& w : weights) out.weights.push_back(tape.watch(w));
    return out;
  }
  GnnParams cloned() const {
    GnnParams out;
    out.weights.reserve(weights.size());
    for (const auto& w : weights) out.weights.push_back(w.clone());
    return out;
  }
};

// Node feature matrix with an optional sparse view. The first GCN layer
// multiplies features by a thin weight matrix; routing that product through
// the coordinate form is much cheaper for high-dimensional sparse features.
struct NodeFeatures {
  Tensor dense;
  CooMatrix coo;     // populated iff use_sparse
  Tensor coo_vals;   // constant entry values
  bool use_sparse = false;

  static NodeFeatures from(const Tensor& x, double density_cutoff = 0.25);
  Tensor project(const Tensor& w) const;  // x * w via the cheaper path
  int64_t dim() const { return dense.cols(); }
};

// Glorot-uniform initialization, seeded.
GnnParams init_gnn_params(const GnnConfig& cfg, Rng& rng);

// H^{k+1} = relu(A_hat H^k W^k), raw logits at the last layer. adj must be the
// symmetric-normalized self-looped adjacency. x may be the graph features or
// any matching matrix.
Tensor gcn_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const NodeFeatures& x);
Tensor gcn_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const Tensor& x);

// Per layer h_v <- MLP((1+eps)h_v + sum_{u in N(v)} w_uv h_u); adj must be the
// raw (self-loop-free) weighted adjacency.
Tensor gin_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const Tensor& x);

// Dispatches on cfg.kind; adj must match the kind's convention.
Tensor gnn_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const NodeFeatures& x);

// Convenience overloads building the adjacency from a weighted graph.
Tensor gcn_forward(const GnnConfig& cfg, const GnnParams& params, const WeightedGraph& g,
                   const Tensor& x);
Tensor gin_forward(const GnnConfig& cfg, const GnnParams& params, const WeightedGraph& g,
                   const Tensor& x);

// Builds the adjacency representation a model kind consumes.
NormalizedAdjacency adjacency_for(GnnKind kind, const WeightedGraph& g);

}  // namespace nrgnn
