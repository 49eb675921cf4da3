#include "nrgnn/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace nrgnn {

Graph::Graph(int64_t num_nodes, std::vector<std::pair<int32_t, int32_t>> edges,
             Tensor features, int64_t num_classes)
    : num_nodes_(num_nodes), edges_(std::move(edges)), features_(std::move(features)),
      num_classes_(num_classes) {
  if (num_nodes_ <= 0) throw GraphError("graph: num_nodes must be positive");
  if (features_.shape().size() != 2 || features_.rows() != num_nodes_) {
    throw GraphError("graph: feature matrix " + shape_to_string(features_.shape()) +
                     " does not have one row per node (" + std::to_string(num_nodes_) + ")");
  }
  for (auto& [i, j] : edges_) {
    if (i == j) throw GraphError("graph: self-loop at node " + std::to_string(i));
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= num_nodes_) {
      throw GraphError("graph: edge (" + std::to_string(i) + "," + std::to_string(j) +
                       ") outside [0," + std::to_string(num_nodes_) + ")");
    }
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw GraphError("graph: duplicate edge");
  }
  adjacency_.assign(static_cast<size_t>(num_nodes_), {});
  for (const auto& [i, j] : edges_) {
    adjacency_[static_cast<size_t>(i)].push_back(j);
    adjacency_[static_cast<size_t>(j)].push_back(i);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

bool Graph::has_edge(int32_t i, int32_t j) const {
  const auto& nbrs = adjacency_[static_cast<size_t>(i)];
  return std::binary_search(nbrs.begin(), nbrs.end(), j);
}

Tensor NormalizedAdjacency::to_dense() const {
  Tensor out({coo.n_rows, coo.n_cols});
  for (int64_t k = 0; k < coo.nnz(); ++k) {
    out.at(coo.row[static_cast<size_t>(k)], coo.col[static_cast<size_t>(k)]) += vals.at(k);
  }
  return out;
}

namespace {

// Entry layout shared by both adjacency builders: base edges (both
// directions), then optional self-loops, then added edges (both directions).
// Added-edge values come last so their tape path stays a single concat.
NormalizedAdjacency assemble_adjacency(const WeightedGraph& g, bool self_loops, bool normalize) {
  const Graph& base = *g.base;
  const int64_t n = base.num_nodes();
  const int64_t e = base.num_edges();
  const int64_t a = g.num_added();
  if (g.weights.size() != a) {
    throw GraphError("weighted graph: " + std::to_string(a) + " added edges but " +
                     std::to_string(g.weights.size()) + " weights");
  }

  CooMatrix coo;
  coo.n_rows = n;
  coo.n_cols = n;
  const int64_t nnz = 2 * e + (self_loops ? n : 0) + 2 * a;
  coo.row.reserve(static_cast<size_t>(nnz));
  coo.col.reserve(static_cast<size_t>(nnz));
  for (const auto& [i, j] : base.edges()) {
    coo.row.push_back(i);
    coo.col.push_back(j);
  }
  for (const auto& [i, j] : base.edges()) {
    coo.row.push_back(j);
    coo.col.push_back(i);
  }
  if (self_loops) {
    for (int64_t v = 0; v < n; ++v) {
      coo.row.push_back(static_cast<int32_t>(v));
      coo.col.push_back(static_cast<int32_t>(v));
    }
  }
  for (const auto& [i, j] : g.added) {
    coo.row.push_back(i);
    coo.col.push_back(j);
  }
  for (const auto& [i, j] : g.added) {
    coo.row.push_back(j);
    coo.col.push_back(i);
  }

  const Tensor constant_part = Tensor::full({2 * e + (self_loops ? n : 0)}, 1.0);
  Tensor vals = (a > 0) ? concat(constant_part, concat(g.weights, g.weights)) : constant_part;

  if (!normalize) return {std::move(coo), std::move(vals)};

  // D^{-1/2}(A+I)D^{-1/2}; self-loops guarantee strictly positive degrees.
  Tensor deg = segment_sum(vals, coo.row, n);
  Tensor dinv = rsqrt(deg);
  Tensor norm_vals = mul(mul(vals, gather(dinv, coo.row)), gather(dinv, coo.col));
  return {std::move(coo), std::move(norm_vals)};
}

}  // namespace

NormalizedAdjacency normalize_adjacency(const WeightedGraph& g) {
  return assemble_adjacency(g, /*self_loops=*/true, /*normalize=*/true);
}

NormalizedAdjacency raw_adjacency(const WeightedGraph& g) {
  return assemble_adjacency(g, /*self_loops=*/false, /*normalize=*/false);
}

LabelSplit sample_split(const Graph& g, const std::vector<int32_t>& true_labels,
                        double label_rate, uint64_t seed, SplitConfig cfg) {
  if (!(label_rate > 0.0 && label_rate < 1.0)) {
    throw std::invalid_argument("sample_split: label_rate must lie in (0,1), got " +
                                std::to_string(label_rate));
  }
  const int64_t n = g.num_nodes();
  const int64_t n_train = std::llround(label_rate * static_cast<double>(n));
  if (n_train <= 0) {
    throw std::invalid_argument("sample_split: label_rate " + std::to_string(label_rate) +
                                " yields an empty training set on " + std::to_string(n) + " nodes");
  }

  std::vector<int32_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = static_cast<int32_t>(i);
  Rng rng(seed);
  rng.shuffle(order);

  const int64_t remaining = n - n_train;
  int64_t n_val = cfg.val_count;
  int64_t n_test = cfg.test_count;
  if (remaining < n_val + n_test) {
    n_val = remaining / 3;
    n_test = remaining - n_val;
  }

  LabelSplit split;
  split.true_labels = true_labels;
  split.noisy_labels.assign(static_cast<size_t>(n), -1);
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.begin() + n_train + n_val + n_test);
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset generate_csbm(const CsbmConfig& cfg) {
  if (cfg.num_classes < 2) throw std::invalid_argument("csbm: need at least 2 classes");
  if (!(cfg.p_intra >= 0.0 && cfg.p_intra <= 1.0 && cfg.p_inter >= 0.0 && cfg.p_inter <= 1.0)) {
    throw std::invalid_argument("csbm: edge probabilities must lie in [0,1]");
  }
  if (!(cfg.p_intra > cfg.p_inter)) {
    throw std::invalid_argument("csbm: p_intra must exceed p_inter");
  }
  const int64_t n = cfg.num_nodes;
  const int64_t d = cfg.feature_dim;

  std::vector<int32_t> labels(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = static_cast<int32_t>(i % cfg.num_classes);

  // Draw order is fixed: class means, then edges, then feature noise.
  Rng rng(cfg.seed);
  std::vector<std::vector<double>> means(static_cast<size_t>(cfg.num_classes));
  for (auto& m : means) {
    m.resize(static_cast<size_t>(d));
    for (auto& x : m) x = rng.normal();
  }

  std::vector<std::pair<int32_t, int32_t>> edges;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = i + 1; j < n; ++j) {
      const bool intra = labels[static_cast<size_t>(i)] == labels[static_cast<size_t>(j)];
      if (rng.bernoulli(intra ? cfg.p_intra : cfg.p_inter)) {
        edges.emplace_back(static_cast<int32_t>(i), static_cast<int32_t>(j));
      }
    }
  }

  Tensor features({n, d});
  for (int64_t i = 0; i < n; ++i) {
    const auto& m = means[static_cast<size_t>(labels[static_cast<size_t>(i)])];
    for (int64_t k = 0; k < d; ++k) {
      features.at(i, k) = m[static_cast<size_t>(k)] +
                          (cfg.feature_noise > 0.0 ? cfg.feature_noise * rng.normal() : 0.0);
    }
  }

  return Dataset{Graph(n, std::move(edges), std::move(features), cfg.num_classes), std::move(labels)};
}

Graph subsample_edges(const Graph& g, double rate, uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw std::invalid_argument("subsample_edges: rate must lie in (0,1], got " + std::to_string(rate));
  }
  if (rate == 1.0) return g;
  std::vector<std::pair<int32_t, int32_t>> edges = g.edges();
  Rng rng(seed);
  rng.shuffle(edges);
  const auto keep = static_cast<size_t>(std::llround(rate * static_cast<double>(edges.size())));
  edges.resize(keep);
  return Graph(g.num_nodes(), std::move(edges), g.features(), g.num_classes());
}

}  // namespace nrgnn
