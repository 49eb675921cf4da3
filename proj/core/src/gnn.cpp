#include "nrgnn/gnn.hpp"

#include <cmath>
#include <stdexcept>

namespace nrgnn {

namespace {

Tensor glorot(int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (int64_t i = 0; i < w.size(); ++i) w.at(i) = rng.uniform(-a, a);
  return w;
}

void check_layers(const GnnConfig& cfg) {
  if (cfg.layer_dims.size() < 2) {
    throw std::invalid_argument("gnn: layer_dims needs at least input and output");
  }
}

}  // namespace

NodeFeatures NodeFeatures::from(const Tensor& x, double density_cutoff) {
  NodeFeatures f;
  f.dense = x;
  const int64_t n = x.size();
  int64_t nnz = 0;
  for (int64_t i = 0; i < n; ++i) nnz += x.at(i) != 0.0;
  if (n > 0 && static_cast<double>(nnz) / static_cast<double>(n) < density_cutoff) {
    f.use_sparse = true;
    f.coo.n_rows = x.rows();
    f.coo.n_cols = x.cols();
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(nnz));
    for (int64_t r = 0; r < x.rows(); ++r) {
      for (int64_t c = 0; c < x.cols(); ++c) {
        const double v = x.at(r, c);
        if (v == 0.0) continue;
        f.coo.row.push_back(static_cast<int32_t>(r));
        f.coo.col.push_back(static_cast<int32_t>(c));
        vals.push_back(v);
      }
    }
    const auto count = static_cast<int64_t>(vals.size());
    f.coo_vals = Tensor({count}, std::move(vals));
  }
  return f;
}

Tensor NodeFeatures::project(const Tensor& w) const {
  return use_sparse ? spmm(coo, coo_vals, w) : matmul(dense, w);
}

GnnParams init_gnn_params(const GnnConfig& cfg, Rng& rng) {
  check_layers(cfg);
  GnnParams p;
  const size_t layers = cfg.layer_dims.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    const int64_t in = cfg.layer_dims[l];
    const int64_t out = cfg.layer_dims[l + 1];
    if (cfg.kind == GnnKind::Gcn) {
      p.weights.push_back(glorot(in, out, rng));
    } else {
      p.weights.push_back(glorot(in, cfg.gin_mlp_hidden, rng));
      p.weights.push_back(glorot(cfg.gin_mlp_hidden, out, rng));
    }
  }
  return p;
}

Tensor gcn_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const NodeFeatures& x) {
  check_layers(cfg);
  if (x.dim() != cfg.layer_dims.front()) {
    throw std::invalid_argument("gcn_forward: input width " + shape_to_string(x.dense.shape()) +
                                " does not match first layer dim " +
                                std::to_string(cfg.layer_dims.front()));
  }
  const size_t layers = cfg.layer_dims.size() - 1;
  if (params.weights.size() != layers) {
    throw std::invalid_argument("gcn_forward: expected " + std::to_string(layers) + " weight matrices, got " +
                                std::to_string(params.weights.size()));
  }
  Tensor h = spmm(adj.coo, adj.vals, x.project(params.weights[0]));
  for (size_t l = 1; l < layers; ++l) {
    h = relu(h);
    h = spmm(adj.coo, adj.vals, matmul(h, params.weights[l]));
  }
  return h;
}

Tensor gcn_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const Tensor& x) {
  NodeFeatures f;
  f.dense = x;
  return gcn_forward(cfg, params, adj, f);
}

Tensor gin_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const Tensor& x) {
  check_layers(cfg);
  const size_t layers = cfg.layer_dims.size() - 1;
  if (params.weights.size() != 2 * layers) {
    throw std::invalid_argument("gin_forward: expected " + std::to_string(2 * layers) +
                                " weight matrices, got " + std::to_string(params.weights.size()));
  }
  if (x.cols() != cfg.layer_dims.front()) {
    throw std::invalid_argument("gin_forward: input width " + shape_to_string(x.shape()) +
                                " does not match first layer dim " +
                                std::to_string(cfg.layer_dims.front()));
  }
  Tensor h = x;
  for (size_t l = 0; l < layers; ++l) {
    Tensor agg = add(scale(h, 1.0 + cfg.gin_epsilon), spmm(adj.coo, adj.vals, h));
    Tensor hidden = relu(matmul(agg, params.weights[2 * l]));
    h = matmul(hidden, params.weights[2 * l + 1]);
    if (l + 1 < layers) h = relu(h);
  }
  return h;
}

Tensor gnn_forward(const GnnConfig& cfg, const GnnParams& params,
                   const NormalizedAdjacency& adj, const NodeFeatures& x) {
  return cfg.kind == GnnKind::Gcn ? gcn_forward(cfg, params, adj, x)
                                  : gin_forward(cfg, params, adj, x.dense);
}

NormalizedAdjacency adjacency_for(GnnKind kind, const WeightedGraph& g) {
  return kind == GnnKind::Gcn ? normalize_adjacency(g) : raw_adjacency(g);
}

Tensor gcn_forward(const GnnConfig& cfg, const GnnParams& params, const WeightedGraph& g,
                   const Tensor& x) {
  return gcn_forward(cfg, params, normalize_adjacency(g), x);
}

Tensor gin_forward(const GnnConfig& cfg, const GnnParams& params, const WeightedGraph& g,
                   const Tensor& x) {
  return gin_forward(cfg, params, raw_adjacency(g), x);
}

}  // namespace nrgnn
