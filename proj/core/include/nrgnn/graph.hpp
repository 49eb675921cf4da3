#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nrgnn/rng.hpp"
#include "nrgnn/tensor.hpp"

namespace nrgnn {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Immutable attributed graph. Edges are undirected, stored once with i < j,
// sorted, free of duplicates and self-loops (self-loops enter only during
// normalization).
class Graph {
 public:
  Graph(int64_t num_nodes, std::vector<std::pair<int32_t, int32_t>> edges,
        Tensor features, int64_t num_classes);

  int64_t num_nodes() const { return num_nodes_; }
  int64_t num_edges() const { return static_cast<int64_t>(edges_.size()); }
  int64_t num_classes() const { return num_classes_; }
  int64_t feature_dim() const { return features_.cols(); }
  const std::vector<std::pair<int32_t, int32_t>>& edges() const { return edges_; }
  const Tensor& features() const { return features_; }

  // Sorted neighbor list per node.
  const std::vector<int32_t>& neighbors(int32_t v) const {
    return adjacency_[static_cast<size_t>(v)];
  }
  bool has_edge(int32_t i, int32_t j) const;
  int64_t degree(int32_t v) const { return static_cast<int64_t>(adjacency_[static_cast<size_t>(v)].size()); }

 private:
  int64_t num_nodes_ = 0;
  std::vector<std::pair<int32_t, int32_t>> edges_;
  Tensor features_;
  int64_t num_classes_ = 0;
  std::vector<std::vector<int32_t>> adjacency_;
};

// True labels, corrupted labels, and the disjoint evaluation masks.
// noisy_labels is -1 outside train ∪ val; true_labels covers every node.
struct LabelSplit {
  std::vector<int32_t> true_labels;
  std::vector<int32_t> noisy_labels;
  std::vector<int32_t> train;
  std::vector<int32_t> val;
  std::vector<int32_t> test;
};

// Base graph plus predictor-weighted added edges. Added-edge weights stay
// differentiable; each added pair must clear the edge threshold and must not
// duplicate a base edge.
struct WeightedGraph {
  const Graph* base = nullptr;
  std::vector<std::pair<int32_t, int32_t>> added;
  Tensor weights;  // one per added pair

  static WeightedGraph plain(const Graph& g) {
    return WeightedGraph{&g, {}, Tensor({0})};
  }
  int64_t num_added() const { return static_cast<int64_t>(added.size()); }
};

// Symmetric-normalized self-looped adjacency D^{-1/2}(A+I)D^{-1/2} in
// coordinate form. vals stays on the tape of the added-edge weights, so
// gradients reach them through both the entries and the degree terms.
struct NormalizedAdjacency {
  CooMatrix coo;
  Tensor vals;
  Tensor to_dense() const;  // small-graph debugging and oracles
};

NormalizedAdjacency normalize_adjacency(const WeightedGraph& g);

// Unnormalized adjacency without self-loops (base edges at 1, added edges at
// their weights, both directions). Used by sum-aggregation models.
NormalizedAdjacency raw_adjacency(const WeightedGraph& g);

// ---- dataset I/O ----

struct LoaderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Graph graph;
  std::vector<int32_t> labels;
};

// Directory format: meta.json (num_nodes, feature_dim, num_classes),
// edges.tsv (one "i<TAB>j" per line, i<j), features.csv (one row per node),
// labels.txt (one class index per line). UTF-8, LF.
Dataset load_dataset(const std::string& dir);
void save_dataset(const std::string& dir, const Graph& g, const std::vector<int32_t>& labels);

// ---- splits ----

struct SplitConfig {
  int64_t val_count = 500;
  int64_t test_count = 1000;
};

// Samples round(label_rate * n) training nodes, then disjoint val/test sets.
// When the graph is too small for the requested val/test counts, a third of
// the remainder goes to validation and the rest to test.
LabelSplit sample_split(const Graph& g, const std::vector<int32_t>& true_labels,
                        double label_rate, uint64_t seed, SplitConfig cfg = {});

// ---- synthetic graphs ----

struct CsbmConfig {
  int64_t num_nodes = 600;
  int64_t num_classes = 4;
  double p_intra = 0.05;
  double p_inter = 0.005;
  int64_t feature_dim = 32;
  double feature_noise = 1.0;
  uint64_t seed = 1;
};

// Stochastic block model with class-mean Gaussian features.
Dataset generate_csbm(const CsbmConfig& cfg);

// Keeps round(rate * num_edges) uniformly sampled edges; features and labels
// are untouched. Drives the graph-sparsity sweeps.
Graph subsample_edges(const Graph& g, double rate, uint64_t seed);

}  // namespace nrgnn
