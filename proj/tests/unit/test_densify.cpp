#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "nrgnn/densify.hpp"
#include "test_util.hpp"

using namespace nrgnn;

namespace {

Graph bare_graph(int64_t n, std::vector<std::pair<int32_t, int32_t>> edges = {}) {
  return Graph(n, std::move(edges), Tensor({n, 2}), 2);
}

EdgeScores make_scores(std::vector<NodePair> pairs, std::vector<double> values) {
  const auto count = static_cast<int64_t>(values.size());
  return EdgeScores{std::move(pairs), Tensor({count}, std::move(values))};
}

// Logits whose row softmax peaks at `label` with probability `confidence`.
void set_confidence_row(Tensor& logits, int64_t row, int32_t label, double confidence) {
  const int64_t c = logits.cols();
  const double other = (1.0 - confidence) / static_cast<double>(c - 1);
  for (int64_t k = 0; k < c; ++k) {
    logits.at(row, k) = std::log(k == label ? confidence : other);
  }
}

}  // namespace

TEST_CASE("build_SL keeps only candidates strictly above the threshold") {
  const Graph g = bare_graph(4);
  const std::vector<int32_t> labeled = {1, 2};
  const auto scores = make_scores({{0, 1}, {0, 2}}, {0.05, 0.3});
  const WeightedGraph sl = build_sl(g, scores, labeled, 0.1);
  REQUIRE(sl.num_added() == 1);
  CHECK(sl.added[0] == std::make_pair(int32_t{0}, int32_t{2}));
  CHECK(sl.weights.at(0) == doctest::Approx(0.3));
}

TEST_CASE("all scores at or below t leave the base graph unchanged") {
  const Graph g = bare_graph(4, {{2, 3}});
  const std::vector<int32_t> labeled = {1, 2};
  const auto scores = make_scores({{0, 1}, {0, 2}}, {0.1, 0.02});
  const WeightedGraph sl = build_sl(g, scores, labeled, 0.1);
  CHECK(sl.num_added() == 0);  // 0.1 is excluded: the threshold is strict
}

TEST_CASE("base edges win over candidate duplicates") {
  const Graph g = bare_graph(4, {{0, 2}});
  const std::vector<int32_t> labeled = {2, 3};
  const auto scores = make_scores({{0, 2}, {0, 3}}, {0.9, 0.5});
  const WeightedGraph sl = build_sl(g, scores, labeled, 0.1);
  REQUIRE(sl.num_added() == 1);
  CHECK(sl.added[0] == std::make_pair(int32_t{0}, int32_t{3}));
}

TEST_CASE("build_SA with an empty pseudo set degenerates to build_SL") {
  const Graph g = bare_graph(5);
  const std::vector<int32_t> labeled = {3, 4};
  const auto scores = make_scores({{0, 3}, {1, 4}, {2, 3}}, {0.2, 0.4, 0.05});
  const WeightedGraph sl = build_sl(g, scores, labeled, 0.1);
  const WeightedGraph sa = build_sa(g, scores, labeled, 0.1);
  CHECK(sl.added == sa.added);
  CHECK(sl.weights.to_vector() == sa.weights.to_vector());
}

TEST_CASE("pseudo-labeled targets join S^A but not S^L") {
  const Graph g = bare_graph(5);
  const std::vector<int32_t> labeled = {4};
  const std::vector<int32_t> extended = {2, 4};  // node 2 pseudo-labeled
  const auto scores = make_scores({{0, 4}, {0, 2}}, {0.3, 0.5});
  const WeightedGraph sl = build_sl(g, scores, labeled, 0.1);
  const WeightedGraph sa = build_sa(g, scores, extended, 0.1);
  CHECK(sl.num_added() == 1);
  REQUIRE(sa.num_added() == 2);

  // S^L added pairs are always a subset of S^A's for the same scores.
  std::set<std::pair<int32_t, int32_t>> sa_set(sa.added.begin(), sa.added.end());
  for (const auto& e : sl.added) CHECK(sa_set.count(e) == 1);
}

TEST_CASE("a pseudo node gains edges only as a target, never as a source duplicate") {
  const Graph g = bare_graph(4);
  const std::vector<int32_t> extended = {2, 3};
  // Both orientations of (1,2) appear, as happens when node 1 and 2 are both
  // unlabeled sources and node 2 is a pseudo target; only the first survives.
  const auto scores = make_scores({{1, 2}, {2, 1}, {1, 3}}, {0.5, 0.5, 0.4});
  const WeightedGraph sa = build_sa(g, scores, extended, 0.1);
  REQUIRE(sa.num_added() == 2);
  CHECK(sa.added[0] == std::make_pair(int32_t{1}, int32_t{2}));
  CHECK(sa.added[1] == std::make_pair(int32_t{1}, int32_t{3}));
}

TEST_CASE("raising t never adds edges") {
  Rng rng(7);
  const Graph g = bare_graph(20);
  std::vector<NodePair> pairs;
  std::vector<double> vals;
  std::vector<int32_t> labeled;
  for (int32_t j = 10; j < 20; ++j) labeled.push_back(j);
  for (int32_t i = 0; i < 10; ++i) {
    for (int32_t j = 10; j < 20; ++j) {
      pairs.push_back({i, j});
      vals.push_back(rng.uniform());
    }
  }
  const auto scores = make_scores(pairs, vals);
  int64_t prev = std::numeric_limits<int64_t>::max();
  for (const double t : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const int64_t count = build_sl(g, scores, labeled, t).num_added();
    CHECK(count <= prev);
    prev = count;
  }
}

TEST_CASE("threshold filtering keeps gradients on surviving scores") {
  const Graph g = bare_graph(4);
  const std::vector<int32_t> labeled = {2, 3};
  nrgnn::testing::gradcheck({Tensor({3}, {0.3, 0.05, 0.6})}, [&](const std::vector<Tensor>& in) {
    const EdgeScores scores{{{0, 2}, {0, 3}, {1, 2}}, in[0]};
    const WeightedGraph sl = build_sl(g, scores, labeled, 0.1);
    return sum(square(normalize_adjacency(sl).vals));
  }, /*tol=*/1e-3);
}

TEST_CASE("mining selects nodes whose confidence strictly exceeds T_p") {
  Tensor logits({5, 2});
  set_confidence_row(logits, 1, 0, 0.9);
  set_confidence_row(logits, 2, 1, 0.7);
  set_confidence_row(logits, 3, 1, 0.85);
  set_confidence_row(logits, 0, 0, 0.99);  // labeled node: excluded by mask
  set_confidence_row(logits, 4, 0, 0.8);   // exactly T_p: excluded, strict
  const std::vector<int32_t> unlabeled = {1, 2, 3, 4};
  const PseudoLabelSet set = mine_pseudo_labels(logits, unlabeled, 0.8, 3);
  REQUIRE(set.entries.size() == 2);
  CHECK(set.entries[0].node == 1);
  CHECK(set.entries[0].label == 0);
  CHECK(set.entries[0].confidence == doctest::Approx(0.9));
  CHECK(set.entries[1].node == 3);
  CHECK(set.entries[1].label == 1);
  CHECK(set.epoch == 3);
  for (const auto& e : set.entries) CHECK(e.confidence > 0.8);
}

TEST_CASE("uniform logits over 7 classes never clear a 0.8 threshold") {
  const Tensor logits({3, 7});  // all zeros: softmax = 1/7 everywhere
  const std::vector<int32_t> unlabeled = {0, 1, 2};
  CHECK(mine_pseudo_labels(logits, unlabeled, 0.8, 0).entries.empty());
}

TEST_CASE("mining is deterministic given logits") {
  Rng rng(31);
  const Tensor logits = nrgnn::testing::random_tensor({10, 4}, rng, -2.0, 2.0);
  const std::vector<int32_t> unlabeled = {0, 2, 4, 6, 8};
  const PseudoLabelSet a = mine_pseudo_labels(logits, unlabeled, 0.5, 1);
  const PseudoLabelSet b = mine_pseudo_labels(logits, unlabeled, 0.5, 1);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].node == b.entries[i].node);
    CHECK(a.entries[i].label == b.entries[i].label);
    CHECK(a.entries[i].confidence == b.entries[i].confidence);
  }
}

TEST_CASE("pseudo label json carries node, class, confidence, and epoch") {
  Tensor logits({2, 2});
  set_confidence_row(logits, 0, 1, 0.95);
  const std::vector<int32_t> unlabeled = {0};
  const PseudoLabelSet set = mine_pseudo_labels(logits, unlabeled, 0.8, 7);
  const std::string json = pseudo_labels_to_json(set);
  CHECK(json.find("\"node\": 0") != std::string::npos);
  CHECK(json.find("\"class\": 1") != std::string::npos);
  CHECK(json.find("\"confidence\"") != std::string::npos);
  CHECK(json.find("\"epoch\": 7") != std::string::npos);
}
