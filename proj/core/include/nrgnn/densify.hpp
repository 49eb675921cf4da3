#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nrgnn/edge_predictor.hpp"
#include "nrgnn/graph.hpp"
#include "nrgnn/tensor.hpp"

namespace nrgnn {

struct Thresholds {
  double edge = 0.1;        // t: minimum predictor weight for an added link
  double confidence = 0.8;  // T_p: minimum softmax confidence for a pseudo label
};

struct PseudoLabel {
  int32_t node = 0;
  int32_t label = 0;
  double confidence = 0.0;
};

struct PseudoLabelSet {
  std::vector<PseudoLabel> entries;  // ascending node order, one per node
  int64_t epoch = 0;
};

// Keeps base edges at weight 1 and adds candidate (i in V_U, j in labeled)
// pairs whose score strictly exceeds t. Pairs colliding with base edges are
// dropped (the base edge wins); scores stay differentiable.
WeightedGraph build_densified(const Graph& g, const EdgeScores& scores,
                              std::span<const int32_t> target_set, double t);

// Eq.-level names: build_SL restricts targets to the labeled set, build_SA to
// the extended set V_A = V_L ∪ V_P. Both share build_densified.
inline WeightedGraph build_sl(const Graph& g, const EdgeScores& scores,
                              std::span<const int32_t> labeled, double t) {
  return build_densified(g, scores, labeled, t);
}
inline WeightedGraph build_sa(const Graph& g, const EdgeScores& scores,
                              std::span<const int32_t> extended, double t) {
  return build_densified(g, scores, extended, t);
}

// Selects unlabeled nodes whose max softmax probability strictly exceeds the
// confidence threshold; argmax class and confidence are recorded.
PseudoLabelSet mine_pseudo_labels(const Tensor& miner_logits, std::span<const int32_t> unlabeled,
                                  double confidence_threshold, int64_t epoch);

// Inspection dump: [{"node":..,"class":..,"confidence":..,"epoch":..}, ...].
std::string pseudo_labels_to_json(const PseudoLabelSet& set);

}  // namespace nrgnn
