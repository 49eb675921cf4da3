#include "nrgnn/edge_predictor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>

namespace nrgnn {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
}  // namespace

EdgePredictor::EdgePredictor(int64_t feature_dim, int64_t hidden_dim, int64_t embed_dim, Rng& rng) {
  cfg_.kind = GnnKind::Gcn;
  cfg_.layer_dims = {feature_dim, hidden_dim, embed_dim};
  params_ = init_gnn_params(cfg_, rng);
}

Tensor EdgePredictor::encode(const NormalizedAdjacency& base_adj, const NodeFeatures& x,
                             const GnnParams& watched) const {
  return gcn_forward(cfg_, watched, base_adj, x);
}

Tensor EdgePredictor::encode(const Graph& g) const {
  const WeightedGraph plain = WeightedGraph::plain(g);
  return gcn_forward(cfg_, params_, normalize_adjacency(plain), g.features());
}

Tensor score_pairs(const Tensor& z, std::span<const NodePair> pairs) {
  return relu(pair_dot(z, pairs));
}

EdgeScores score_candidates(const Tensor& z, std::span<const int32_t> sources,
                            std::span<const int32_t> targets, const Graph& base,
                            double threshold) {
  const int64_t d = z.cols();
  ConstMatMap zm(z.data(), z.rows(), d);

  // Off-tape prefilter: one dense block per source row keeps memory flat.
  std::vector<NodePair> selected;
  Eigen::VectorXd target_scores(static_cast<int64_t>(targets.size()));
  RowMat zt(static_cast<int64_t>(targets.size()), d);
  for (size_t t = 0; t < targets.size(); ++t) {
    zt.row(static_cast<int64_t>(t)) = zm.row(targets[t]);
  }
  for (const int32_t i : sources) {
    target_scores.noalias() = zt * zm.row(i).transpose();
    for (size_t t = 0; t < targets.size(); ++t) {
      const int32_t j = targets[t];
      if (j == i) continue;
      if (target_scores[static_cast<int64_t>(t)] <= threshold) continue;
      if (base.has_edge(i, j)) continue;  // base edge wins over a candidate
      selected.push_back({i, j});
    }
  }
  return EdgeScores{selected, score_pairs(z, selected)};
}

Tensor reconstruction_loss(const Tensor& z, const Graph& g, int64_t negatives_per_edge,
                           Rng& rng, int64_t* skipped_sources) {
  if (negatives_per_edge < 1) {
    throw std::invalid_argument("reconstruction_loss: need at least one negative per edge");
  }
  const int64_t n = g.num_nodes();
  std::vector<NodePair> positives;
  std::vector<NodePair> negatives;
  positives.reserve(static_cast<size_t>(2 * g.num_edges()));
  int64_t skipped = 0;
  // Directed positives: each undirected edge contributes from both endpoints.
  for (int32_t i = 0; i < n; ++i) {
    const auto& nbrs = g.neighbors(i);
    if (nbrs.empty()) continue;
    const bool has_negative = static_cast<int64_t>(nbrs.size()) < n - 1;
    if (!has_negative) ++skipped;
    for (const int32_t j : nbrs) {
      positives.push_back({i, j});
      if (!has_negative) continue;
      for (int64_t k = 0; k < negatives_per_edge; ++k) {
        // Uniform over non-neighbors of i (self excluded), by rejection.
        for (;;) {
          const auto cand = static_cast<int32_t>(rng.index(n));
          if (cand == i || g.has_edge(i, cand)) continue;
          negatives.push_back({i, cand});
          break;
        }
      }
    }
  }
  if (skipped_sources != nullptr) *skipped_sources = skipped;

  Tensor loss = Tensor::scalar(0.0);
  if (!positives.empty()) {
    loss = add(loss, sum(square(add_scalar(score_pairs(z, positives), -1.0))));
  }
  if (!negatives.empty()) {
    loss = add(loss, sum(square(score_pairs(z, negatives))));
  }
  return loss;
}

EdgeScores cosine_candidates(const Graph& g, std::span<const int32_t> sources,
                             std::span<const int32_t> targets, double threshold) {
  const Tensor& x = g.features();
  const int64_t d = x.cols();
  ConstMatMap xm(x.data(), x.rows(), d);
  Eigen::VectorXd inv_norm(x.rows());
  for (int64_t i = 0; i < x.rows(); ++i) {
    const double nrm = xm.row(i).norm();
    inv_norm[i] = nrm > 0.0 ? 1.0 / nrm : 0.0;
  }

  RowMat xt(static_cast<int64_t>(targets.size()), d);
  for (size_t t = 0; t < targets.size(); ++t) {
    xt.row(static_cast<int64_t>(t)) = xm.row(targets[t]) * inv_norm[targets[t]];
  }

  std::vector<NodePair> selected;
  std::vector<double> values;
  Eigen::VectorXd sims(static_cast<int64_t>(targets.size()));
  for (const int32_t i : sources) {
    sims.noalias() = xt * (xm.row(i) * inv_norm[i]).transpose();
    for (size_t t = 0; t < targets.size(); ++t) {
      const int32_t j = targets[t];
      if (j == i) continue;
      const double s = sims[static_cast<int64_t>(t)];
      if (s <= threshold) continue;
      if (g.has_edge(i, j)) continue;
      selected.push_back({i, j});
      values.push_back(s);
    }
  }
  const auto count = static_cast<int64_t>(values.size());
  Tensor scores({count}, std::move(values));
  return EdgeScores{std::move(selected), std::move(scores)};
}

}  // namespace nrgnn
