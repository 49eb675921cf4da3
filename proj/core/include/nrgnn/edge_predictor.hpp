#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nrgnn/gnn.hpp"
#include "nrgnn/graph.hpp"
#include "nrgnn/rng.hpp"
#include "nrgnn/tensor.hpp"

namespace nrgnn {

// Candidate links between unlabeled sources and (pseudo-)labeled targets,
// with differentiable non-negative scores.
struct EdgeScores {
  std::vector<NodePair> pairs;
  Tensor scores;
};

// Two-layer GCN encoder over the original graph; scores are relu(z_i . z_j).
class EdgePredictor {
 public:
  EdgePredictor(int64_t feature_dim, int64_t hidden_dim, int64_t embed_dim, Rng& rng);

  const GnnConfig& config() const { return cfg_; }
  GnnParams& params() { return params_; }
  const GnnParams& params() const { return params_; }

  // Embeddings over the original graph only, never a densified one.
  Tensor encode(const NormalizedAdjacency& base_adj, const NodeFeatures& x,
                const GnnParams& watched) const;
  Tensor encode(const Graph& g) const;  // off-tape convenience

 private:
  GnnConfig cfg_;
  GnnParams params_;
};

// relu(z_i . z_j) per pair; gradient flows into z.
Tensor score_pairs(const Tensor& z, std::span<const NodePair> pairs);

// Scores every (source, target) pair off-tape and keeps those strictly above
// threshold, excluding base edges and self-pairs; survivors are re-scored
// through the tape so their weights stay differentiable.
EdgeScores score_candidates(const Tensor& z, std::span<const int32_t> sources,
                            std::span<const int32_t> targets, const Graph& base,
                            double threshold);

// Adjacency reconstruction with negative sampling: sum over directed positive
// pairs of (S_ij - 1)^2 plus, per positive, K draws from the non-neighbors of
// the source contributing S_in^2. Fresh negatives come from rng on every call.
// skipped_sources, when given, counts sources with no available negatives.
Tensor reconstruction_loss(const Tensor& z, const Graph& g, int64_t negatives_per_edge,
                           Rng& rng, int64_t* skipped_sources = nullptr);

// Cosine similarity of raw feature rows for every (source, target) pair with
// similarity strictly above threshold; constant scores (no gradient). Rows
// with zero norm score 0 against everything.
EdgeScores cosine_candidates(const Graph& g, std::span<const int32_t> sources,
                             std::span<const int32_t> targets, double threshold);

}  // namespace nrgnn
