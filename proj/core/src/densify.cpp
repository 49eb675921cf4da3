#include "nrgnn/densify.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "json.hpp"

namespace nrgnn {

WeightedGraph build_densified(const Graph& g, const EdgeScores& scores,
                              std::span<const int32_t> target_set, double t) {
  const int64_t n = g.num_nodes();
  std::vector<bool> is_target(static_cast<size_t>(n), false);
  for (const int32_t v : target_set) is_target[static_cast<size_t>(v)] = true;

  std::vector<int32_t> keep;
  std::vector<std::pair<int32_t, int32_t>> added;
  // Added weights count toward both (i,j) and (j,i); when a candidate list
  // carries both orientations of a pair (pseudo-labeled targets are also
  // sources), only the first survives.
  std::unordered_set<int64_t> seen;
  for (size_t p = 0; p < scores.pairs.size(); ++p) {
    const auto [i, j] = scores.pairs[p];
    if (!is_target[static_cast<size_t>(j)]) continue;
    if (scores.scores.at(static_cast<int64_t>(p)) <= t) continue;  // strict threshold
    if (i == j || g.has_edge(i, j)) continue;                      // base edge wins
    const int64_t key = static_cast<int64_t>(std::min(i, j)) * n + std::max(i, j);
    if (!seen.insert(key).second) continue;
    keep.push_back(static_cast<int32_t>(p));
    added.emplace_back(i, j);
  }
  Tensor weights = keep.empty() ? Tensor({0}) : gather(scores.scores, keep);
  return WeightedGraph{&g, std::move(added), std::move(weights)};
}

PseudoLabelSet mine_pseudo_labels(const Tensor& miner_logits, std::span<const int32_t> unlabeled,
                                  double confidence_threshold, int64_t epoch) {
  const int64_t c = miner_logits.cols();
  PseudoLabelSet out;
  out.epoch = epoch;
  std::vector<int32_t> ordered(unlabeled.begin(), unlabeled.end());
  std::sort(ordered.begin(), ordered.end());
  for (const int32_t v : ordered) {
    // Stable softmax over the node's row.
    double mx = miner_logits.at(v, 0);
    int32_t arg = 0;
    for (int64_t k = 1; k < c; ++k) {
      if (miner_logits.at(v, k) > mx) {
        mx = miner_logits.at(v, k);
        arg = static_cast<int32_t>(k);
      }
    }
    double denom = 0.0;
    for (int64_t k = 0; k < c; ++k) denom += std::exp(miner_logits.at(v, k) - mx);
    const double conf = 1.0 / denom;  // exp(mx - mx) / denom
    if (conf > confidence_threshold) out.entries.push_back({v, arg, conf});
  }
  return out;
}

std::string pseudo_labels_to_json(const PseudoLabelSet& set) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : set.entries) {
    nlohmann::ordered_json item;
    item["node"] = e.node;
    item["class"] = e.label;
    item["confidence"] = e.confidence;
    item["epoch"] = set.epoch;
    arr.push_back(item);
  }
  return arr.dump(2);
}

}  // namespace nrgnn
