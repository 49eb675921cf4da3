#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nrgnn/graph.hpp"
#include "test_util.hpp"

using namespace nrgnn;
using nrgnn::testing::gradcheck;

namespace fs = std::filesystem;

namespace {

Graph tiny_graph(int64_t n, std::vector<std::pair<int32_t, int32_t>> edges, int64_t classes = 2) {
  Tensor x({n, 2});
  for (int64_t i = 0; i < n; ++i) {
    x.at(i, 0) = static_cast<double>(i);
    x.at(i, 1) = 1.0;
  }
  return Graph(n, std::move(edges), std::move(x), classes);
}

// Independent oracle: dense D^{-1/2}(A+I)D^{-1/2} computed with plain loops.
Tensor dense_normalized(int64_t n, const std::vector<std::tuple<int32_t, int32_t, double>>& sym_edges) {
  Tensor a({n, n});
  for (int64_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  for (const auto& [i, j, w] : sym_edges) {
    a.at(i, j) += w;
    a.at(j, i) += w;
  }
  std::vector<double> dinv(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int64_t j = 0; j < n; ++j) deg += a.at(i, j);
    dinv[static_cast<size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  Tensor out({n, n});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      out.at(i, j) = dinv[static_cast<size_t>(i)] * a.at(i, j) * dinv[static_cast<size_t>(j)];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("graph invariants are enforced") {
  CHECK_THROWS_AS(tiny_graph(3, {{0, 0}}), GraphError);          // self-loop
  CHECK_THROWS_AS(tiny_graph(3, {{0, 1}, {1, 0}}), GraphError);  // duplicate after canonicalization
  CHECK_THROWS_AS(tiny_graph(3, {{0, 5}}), GraphError);          // endpoint out of range
  CHECK_THROWS_AS(Graph(3, {}, Tensor({2, 2}), 2), GraphError);  // feature row mismatch
}

TEST_CASE("two-node normalization gives all entries 0.5") {
  const Graph g = tiny_graph(2, {{0, 1}});
  const auto adj = normalize_adjacency(WeightedGraph::plain(g));
  const Tensor dense = adj.to_dense();
  for (int64_t i = 0; i < 4; ++i) CHECK(dense.at(i) == doctest::Approx(0.5));
}

TEST_CASE("single-node normalization is the 1x1 identity") {
  const Graph g = tiny_graph(1, {});
  const Tensor dense = normalize_adjacency(WeightedGraph::plain(g)).to_dense();
  CHECK(dense.size() == 1);
  CHECK(dense.at(0) == doctest::Approx(1.0));
}

TEST_CASE("three-node path with one added edge matches the dense oracle") {
  const Graph g = tiny_graph(3, {{0, 1}, {1, 2}});
  WeightedGraph wg{&g, {{0, 2}}, Tensor({1}, {0.3})};
  const Tensor got = normalize_adjacency(wg).to_dense();
  const Tensor want = dense_normalized(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 0.3}});
  for (int64_t i = 0; i < 9; ++i) CHECK(got.at(i) == doctest::Approx(want.at(i)).epsilon(1e-12));
}

TEST_CASE("normalization is symmetric and non-negative; zero additions equal the classic form") {
  Rng rng(3);
  const Dataset d = generate_csbm({.num_nodes = 40, .num_classes = 3, .p_intra = 0.2,
                                   .p_inter = 0.04, .feature_dim = 4, .feature_noise = 0.5,
                                   .seed = 17});
  const Graph& g = d.graph;
  const Tensor dense = normalize_adjacency(WeightedGraph::plain(g)).to_dense();
  for (int64_t i = 0; i < g.num_nodes(); ++i) {
    for (int64_t j = 0; j < g.num_nodes(); ++j) {
      CHECK(dense.at(i, j) == dense.at(j, i));
      CHECK(dense.at(i, j) >= 0.0);
    }
  }
  std::vector<std::tuple<int32_t, int32_t, double>> sym;
  for (const auto& [i, j] : g.edges()) sym.emplace_back(i, j, 1.0);
  const Tensor want = dense_normalized(g.num_nodes(), sym);
  for (int64_t i = 0; i < dense.size(); ++i) {
    CHECK(dense.at(i) == doctest::Approx(want.at(i)).epsilon(1e-12));
  }
}

TEST_CASE("gradient flows through added-edge weights including the degree terms") {
  const Graph g = tiny_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  const std::vector<std::pair<int32_t, int32_t>> added = {{0, 2}, {1, 3}};
  gradcheck({Tensor({2}, {0.4, 0.7})}, [&](const std::vector<Tensor>& in) {
    WeightedGraph wg{&g, added, in[0]};
    const auto adj = normalize_adjacency(wg);
    // Weighted quadratic makes every entry's sensitivity distinct.
    Tensor weights({adj.vals.size()});
    for (int64_t k = 0; k < weights.size(); ++k) weights.at(k) = 0.1 * static_cast<double>(k + 1);
    return sum(mul(square(adj.vals), weights));
  });
}

TEST_CASE("dataset io: save then load round-trips bit-exactly") {
  const Dataset d = generate_csbm({.num_nodes = 25, .num_classes = 3, .p_intra = 0.3,
                                   .p_inter = 0.02, .feature_dim = 5, .feature_noise = 0.7,
                                   .seed = 5});
  const fs::path dir = fs::temp_directory_path() / "nrgnn_ds_roundtrip";
  fs::remove_all(dir);
  save_dataset(dir.string(), d.graph, d.labels);
  const Dataset loaded = load_dataset(dir.string());
  CHECK(loaded.graph.num_nodes() == d.graph.num_nodes());
  CHECK(loaded.graph.edges() == d.graph.edges());
  CHECK(loaded.graph.features().to_vector() == d.graph.features().to_vector());
  CHECK(loaded.labels == d.labels);

  // Second save must produce byte-identical files.
  const fs::path dir2 = fs::temp_directory_path() / "nrgnn_ds_roundtrip2";
  fs::remove_all(dir2);
  save_dataset(dir2.string(), loaded.graph, loaded.labels);
  for (const char* name : {"meta.json", "edges.tsv", "features.csv", "labels.txt"}) {
    std::ifstream a(dir / name, std::ios::binary), b(dir2 / name, std::ios::binary);
    std::ostringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

namespace {

fs::path write_dataset_dir(const std::string& tag, const std::string& meta, const std::string& edges,
                           const std::string& features, const std::string& labels) {
  const fs::path dir = fs::temp_directory_path() / ("nrgnn_loader_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "meta.json") << meta;
  std::ofstream(dir / "edges.tsv") << edges;
  std::ofstream(dir / "features.csv") << features;
  std::ofstream(dir / "labels.txt") << labels;
  return dir;
}

const char* kMeta3 = R"({"num_nodes":3,"feature_dim":2,"num_classes":2})";

}  // namespace

TEST_CASE("loader: empty edge file is a valid degenerate graph") {
  const auto dir = write_dataset_dir("empty_edges", kMeta3, "", "1,0\n0,1\n1,1\n", "0\n1\n0\n");
  const Dataset d = load_dataset(dir.string());
  CHECK(d.graph.num_nodes() == 3);
  CHECK(d.graph.num_edges() == 0);
  fs::remove_all(dir);
}

TEST_CASE("loader errors carry file and line number") {
  SUBCASE("missing file") {
    const auto dir = write_dataset_dir("missing", kMeta3, "", "1,0\n0,1\n1,1\n", "0\n1\n0\n");
    fs::remove(dir / "edges.tsv");
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("missing file"), LoaderError);
    fs::remove_all(dir);
  }
  SUBCASE("malformed edge line") {
    const auto dir = write_dataset_dir("badedge", kMeta3, "0\t1\nx\ty\n", "1,0\n0,1\n1,1\n", "0\n1\n0\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("edges.tsv:2"), LoaderError);
    fs::remove_all(dir);
  }
  SUBCASE("edge index out of range") {
    const auto dir = write_dataset_dir("oob", kMeta3, "0\t7\n", "1,0\n0,1\n1,1\n", "0\n1\n0\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("edges.tsv:1"), LoaderError);
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("out of range"), LoaderError);
    fs::remove_all(dir);
  }
  SUBCASE("label outside declared class count") {
    const auto dir = write_dataset_dir("badclass", kMeta3, "0\t1\n", "1,0\n0,1\n1,1\n", "0\n5\n0\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("labels.txt:2"), LoaderError);
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("num_classes"), LoaderError);
    fs::remove_all(dir);
  }
  SUBCASE("malformed feature row") {
    const auto dir = write_dataset_dir("badfeat", kMeta3, "0\t1\n", "1,0\n0,zz\n1,1\n", "0\n1\n0\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("features.csv:2"), LoaderError);
    fs::remove_all(dir);
  }
}

TEST_CASE("sample_split sizes follow round(rate * n)") {
  {
    const Graph g(2485, {}, Tensor({2485, 1}), 7);
    const LabelSplit s = sample_split(g, std::vector<int32_t>(2485, 0), 0.05, 1);
    CHECK(s.train.size() == 124);  // round(0.05 * 2485)
    CHECK(s.val.size() == 500);
    CHECK(s.test.size() == 1000);
  }
  {
    const Graph g(19717, {}, Tensor({19717, 1}), 3);
    const LabelSplit s = sample_split(g, std::vector<int32_t>(19717, 0), 0.01, 1);
    CHECK(s.train.size() == 197);  // round(0.01 * 19717)
  }
}

TEST_CASE("sample_split is deterministic and masks stay disjoint") {
  const Dataset d = generate_csbm({.num_nodes = 120, .num_classes = 3, .p_intra = 0.1,
                                   .p_inter = 0.01, .feature_dim = 4, .feature_noise = 1.0,
                                   .seed = 2});
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const LabelSplit a = sample_split(d.graph, d.labels, 0.1, seed);
    const LabelSplit b = sample_split(d.graph, d.labels, 0.1, seed);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    std::set<int32_t> all;
    for (const auto* m : {&a.train, &a.val, &a.test}) {
      for (const int32_t v : *m) CHECK(all.insert(v).second);
    }
    CHECK(static_cast<int64_t>(all.size()) <= d.graph.num_nodes());
  }
}

TEST_CASE("sample_split rejects rates yielding an empty training set") {
  const Graph g = tiny_graph(4, {{0, 1}});
  CHECK_THROWS_AS(sample_split(g, std::vector<int32_t>(4, 0), 0.01, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_split(g, std::vector<int32_t>(4, 0), 1.5, 1), std::invalid_argument);
}

TEST_CASE("csbm: p_inter = 0 forces every edge intra-class") {
  const Dataset d = generate_csbm({.num_nodes = 80, .num_classes = 4, .p_intra = 0.2,
                                   .p_inter = 0.0, .feature_dim = 3, .feature_noise = 1.0,
                                   .seed = 3});
  CHECK(d.graph.num_edges() > 0);
  for (const auto& [i, j] : d.graph.edges()) {
    CHECK(d.labels[static_cast<size_t>(i)] == d.labels[static_cast<size_t>(j)]);
  }
}

TEST_CASE("csbm: zero feature noise duplicates same-class rows") {
  const Dataset d = generate_csbm({.num_nodes = 30, .num_classes = 3, .p_intra = 0.2,
                                   .p_inter = 0.05, .feature_dim = 4, .feature_noise = 0.0,
                                   .seed = 4});
  const Tensor& x = d.graph.features();
  for (int64_t i = 0; i < d.graph.num_nodes(); ++i) {
    for (int64_t j = i + 1; j < d.graph.num_nodes(); ++j) {
      if (d.labels[static_cast<size_t>(i)] != d.labels[static_cast<size_t>(j)]) continue;
      for (int64_t k = 0; k < x.cols(); ++k) CHECK(x.at(i, k) == x.at(j, k));
    }
  }
}

TEST_CASE("csbm edge counts sit within 3 sigma of the binomial oracle") {
  // n = 200, 2 classes of 100: 2*C(100,2) = 9900 intra pairs, 100*100 = 10000
  // inter pairs.
  const Dataset d = generate_csbm({.num_nodes = 200, .num_classes = 2, .p_intra = 0.05,
                                   .p_inter = 0.005, .feature_dim = 4, .feature_noise = 1.0,
                                   .seed = 11});
  int64_t intra = 0, inter = 0;
  for (const auto& [i, j] : d.graph.edges()) {
    (d.labels[static_cast<size_t>(i)] == d.labels[static_cast<size_t>(j)] ? intra : inter) += 1;
  }
  const double intra_pairs = 9900.0, inter_pairs = 10000.0;
  const double mu_intra = intra_pairs * 0.05;
  const double sd_intra = std::sqrt(intra_pairs * 0.05 * 0.95);
  const double mu_inter = inter_pairs * 0.005;
  const double sd_inter = std::sqrt(inter_pairs * 0.005 * 0.995);
  CHECK(std::abs(static_cast<double>(intra) - mu_intra) <= 3.0 * sd_intra);
  CHECK(std::abs(static_cast<double>(inter) - mu_inter) <= 3.0 * sd_inter);
}

TEST_CASE("csbm rejects invalid parameters") {
  CsbmConfig bad;
  bad.p_intra = 1.5;
  CHECK_THROWS_AS(generate_csbm(bad), std::invalid_argument);
  CsbmConfig flipped;
  flipped.p_intra = 0.01;
  flipped.p_inter = 0.05;
  CHECK_THROWS_AS(generate_csbm(flipped), std::invalid_argument);
  CsbmConfig one_class;
  one_class.num_classes = 1;
  CHECK_THROWS_AS(generate_csbm(one_class), std::invalid_argument);
}

TEST_CASE("edge subsampling keeps the requested fraction deterministically") {
  const Dataset d = generate_csbm({.num_nodes = 100, .num_classes = 2, .p_intra = 0.2,
                                   .p_inter = 0.05, .feature_dim = 3, .feature_noise = 1.0,
                                   .seed = 8});
  const Graph sub = subsample_edges(d.graph, 0.4, 99);
  CHECK(sub.num_edges() == std::llround(0.4 * static_cast<double>(d.graph.num_edges())));
  const Graph sub2 = subsample_edges(d.graph, 0.4, 99);
  CHECK(sub.edges() == sub2.edges());
  for (const auto& e : sub.edges()) CHECK(d.graph.has_edge(e.first, e.second));
}
