#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "nrgnn/edge_predictor.hpp"
#include "test_util.hpp"

using namespace nrgnn;
using nrgnn::testing::gradcheck;
using nrgnn::testing::random_tensor;

namespace {

Graph path_graph(int64_t n, Tensor x, int64_t classes = 2) {
  std::vector<std::pair<int32_t, int32_t>> edges;
  for (int32_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, std::move(edges), std::move(x), classes);
}

}  // namespace

TEST_CASE("zero features encode to zero embeddings") {
  const Graph g = path_graph(4, Tensor({4, 3}));
  Rng rng(1);
  const EdgePredictor pred(3, 5, 4, rng);
  const Tensor z = pred.encode(g);
  for (int64_t i = 0; i < z.size(); ++i) CHECK(z.at(i) == 0.0);
}

TEST_CASE("encoding is bit-identical across runs with a fixed seed") {
  Rng data_rng(2);
  const Graph g = path_graph(5, random_tensor({5, 3}, data_rng));
  auto make = [&] {
    Rng rng(77);
    EdgePredictor pred(3, 4, 4, rng);
    return pred.encode(g).to_vector();
  };
  CHECK(make() == make());
}

TEST_CASE("pair scores: zero vectors, unit vectors, and relu clipping") {
  const Tensor z({3, 2}, {0.0, 0.0,   // z0 = 0
                          1.0, 0.0,   // z1 unit
                          -0.5, 1.0});
  const std::vector<NodePair> pairs = {{0, 1}, {1, 1}, {1, 2}};
  const Tensor s = score_pairs(z, pairs);
  CHECK(s.at(0) == 0.0);                      // zero vector scores 0 everywhere
  CHECK(s.at(1) == doctest::Approx(1.0));     // unit dot product
  CHECK(s.at(2) == 0.0);                      // dot -0.5 clipped by relu
}

TEST_CASE("score_pairs is symmetric in the pair order") {
  Rng rng(5);
  const Tensor z = random_tensor({6, 4}, rng);
  const std::vector<NodePair> fwd = {{0, 3}, {1, 4}, {2, 5}};
  const std::vector<NodePair> rev = {{3, 0}, {4, 1}, {5, 2}};
  CHECK(score_pairs(z, fwd).to_vector() == score_pairs(z, rev).to_vector());
}

TEST_CASE("reconstruction loss reproduces the hand-evaluated terms") {
  // Edge (0,1); node 2 is the only non-neighbor of both endpoints, so with
  // K = 1 each directed positive draws node 2 as its negative. Embeddings are
  // chosen so S_01 = 0.5 and S_02 = S_12 = 0.8, giving (0.5-1)^2 + 0.8^2 =
  // 0.89 per directed positive.
  Tensor x({3, 2});
  const Graph g(3, {{0, 1}}, std::move(x), 2);
  const Tensor z({3, 3}, {0.8, 1.0, 0.0,
                          0.8, -0.14, 0.0,
                          1.0, 0.0, 0.0});
  Rng rng(9);
  const Tensor loss = reconstruction_loss(z, g, 1, rng);
  CHECK(loss.value() == doctest::Approx(2.0 * 0.89).epsilon(1e-12));
}

TEST_CASE("perfect scores give zero loss") {
  // Unit embeddings for linked nodes, orthogonal for the rest: positives score
  // exactly 1 and negatives exactly 0.
  Tensor x({4, 2});
  const Graph g(4, {{0, 1}}, std::move(x), 2);
  const Tensor z({4, 2}, {1.0, 0.0,
                          1.0, 0.0,
                          0.0, 0.0,
                          0.0, 0.0});
  Rng rng(3);
  CHECK(reconstruction_loss(z, g, 2, rng).value() == doctest::Approx(0.0));
}

TEST_CASE("reconstruction loss is non-negative for any embeddings") {
  Rng rng(11);
  Tensor x({6, 2});
  const Graph g(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {2, 3}}, std::move(x), 2);
  for (int rep = 0; rep < 10; ++rep) {
    const Tensor z = random_tensor({6, 3}, rng, -2.0, 2.0);
    Rng neg(rep);
    CHECK(reconstruction_loss(z, g, 3, neg).value() >= 0.0);
  }
}

TEST_CASE("a node adjacent to all others contributes no negatives and is counted") {
  Rng rng(13);
  Tensor x({2, 2});
  const Graph g(2, {{0, 1}}, std::move(x), 2);
  const Tensor z = random_tensor({2, 3}, rng);
  int64_t skipped = 0;
  Rng neg(1);
  const Tensor loss = reconstruction_loss(z, g, 5, neg, &skipped);
  CHECK(skipped == 2);
  CHECK(loss.value() >= 0.0);
}

TEST_CASE("reconstruction gradient w.r.t. predictor parameters matches finite differences") {
  Rng data_rng(17);
  const Graph g = path_graph(5, random_tensor({5, 3}, data_rng));
  Rng init(19);
  EdgePredictor pred(3, 4, 3, init);
  const auto base_adj = normalize_adjacency(WeightedGraph::plain(g));
  const NodeFeatures x = NodeFeatures::from(g.features());

  std::vector<Tensor> params = pred.params().weights;
  gradcheck(params, [&](const std::vector<Tensor>& in) {
    GnnParams p;
    p.weights = in;
    const Tensor z = gcn_forward(pred.config(), p, base_adj, x);
    Rng neg(423);  // frozen so every finite-difference evaluation sees the same negatives
    return reconstruction_loss(z, g, 2, neg);
  }, /*tol=*/1e-3);
}

TEST_CASE("score_candidates keeps pairs above threshold and drops base edges") {
  Rng rng(23);
  Tensor x({4, 2});
  const Graph g(4, {{0, 2}}, std::move(x), 2);
  // z chosen so dots: (0,2) = 0.9 (base edge, dropped), (0,3) = 0.6 (kept),
  // (1,2) = 0.05 (below t), (1,3) = -0.4 (relu-clipped, below t).
  const Tensor z({4, 2}, {1.0, 0.0,
                          0.1, -0.5,
                          0.9, 0.1,
                          0.6, 0.8});
  const std::vector<int32_t> sources = {0, 1};
  const std::vector<int32_t> targets = {2, 3};
  const EdgeScores scores = score_candidates(z, sources, targets, g, 0.1);
  REQUIRE(scores.pairs.size() == 1);
  CHECK(scores.pairs[0].i == 0);
  CHECK(scores.pairs[0].j == 3);
  CHECK(scores.scores.at(0) == doctest::Approx(0.6));
}

TEST_CASE("candidate scores stay differentiable through the tape") {
  Rng rng(29);
  Tensor x({4, 2});
  const Graph g(4, {}, std::move(x), 2);
  const std::vector<int32_t> sources = {0, 1};
  const std::vector<int32_t> targets = {2, 3};
  const Tensor z0 = random_tensor({4, 3}, rng, 0.3, 1.0);  // positive dots, all above t=0
  gradcheck({z0}, [&](const std::vector<Tensor>& in) {
    const EdgeScores s = score_candidates(in[0], sources, targets, g, 0.0);
    return sum(square(s.scores));
  }, /*tol=*/1e-3);
}
