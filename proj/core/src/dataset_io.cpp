#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nrgnn/graph.hpp"

namespace nrgnn {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& file, int64_t line, const std::string& what) {
  throw LoaderError(file + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_throw(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw LoaderError("missing file: " + p.string());
  return in;
}

int64_t parse_index(const std::string& file, int64_t line, std::string_view tok) {
  int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(file, line, "malformed integer '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);

  // meta.json
  const fs::path meta_path = root / "meta.json";
  nlohmann::json meta;
  {
    auto in = open_or_throw(meta_path);
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw LoaderError(meta_path.string() + ":1: invalid JSON (" + e.what() + ")");
    }
  }
  for (const char* key : {"num_nodes", "feature_dim", "num_classes"}) {
    if (!meta.contains(key)) throw LoaderError(meta_path.string() + ":1: missing key '" + std::string(key) + "'");
  }
  const int64_t n = meta["num_nodes"].get<int64_t>();
  const int64_t d = meta["feature_dim"].get<int64_t>();
  const int64_t c = meta["num_classes"].get<int64_t>();

  // edges.tsv
  const fs::path edges_path = root / "edges.tsv";
  std::vector<std::pair<int32_t, int32_t>> edges;
  {
    auto in = open_or_throw(edges_path);
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) fail(edges_path.string(), line_no, "expected 'i<TAB>j'");
      const int64_t i = parse_index(edges_path.string(), line_no, std::string_view(line).substr(0, tab));
      const int64_t j = parse_index(edges_path.string(), line_no, std::string_view(line).substr(tab + 1));
      if (i < 0 || j < 0 || i >= n || j >= n) {
        fail(edges_path.string(), line_no,
             "node index out of range [0," + std::to_string(n) + ")");
      }
      if (i >= j) fail(edges_path.string(), line_no, "edges must satisfy i<j");
      edges.emplace_back(static_cast<int32_t>(i), static_cast<int32_t>(j));
    }
  }

  // features.csv
  const fs::path feat_path = root / "features.csv";
  Tensor features({n, d});
  {
    auto in = open_or_throw(feat_path);
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no > n) fail(feat_path.string(), line_no, "more rows than num_nodes=" + std::to_string(n));
      const char* p = line.c_str();
      for (int64_t k = 0; k < d; ++k) {
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(p, &end);
        if (end == p || errno == ERANGE) {
          fail(feat_path.string(), line_no, "malformed number in column " + std::to_string(k));
        }
        features.at(line_no - 1, k) = v;
        p = end;
        if (k + 1 < d) {
          if (*p != ',') fail(feat_path.string(), line_no, "expected ',' after column " + std::to_string(k));
          ++p;
        }
      }
      if (*p != '\0') fail(feat_path.string(), line_no, "trailing characters after " + std::to_string(d) + " columns");
    }
    if (line_no != n) {
      fail(feat_path.string(), line_no, "expected " + std::to_string(n) + " rows, got " + std::to_string(line_no));
    }
  }

  // labels.txt
  const fs::path label_path = root / "labels.txt";
  std::vector<int32_t> labels;
  {
    auto in = open_or_throw(label_path);
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no > n) fail(label_path.string(), line_no, "more labels than num_nodes=" + std::to_string(n));
      const int64_t y = parse_index(label_path.string(), line_no, line);
      if (y < 0 || y >= c) {
        fail(label_path.string(), line_no,
             "class " + std::to_string(y) + " outside declared num_classes=" + std::to_string(c));
      }
      labels.push_back(static_cast<int32_t>(y));
    }
    if (line_no != n) {
      fail(label_path.string(), line_no, "expected " + std::to_string(n) + " labels, got " + std::to_string(line_no));
    }
  }

  try {
    return Dataset{Graph(n, std::move(edges), std::move(features), c), std::move(labels)};
  } catch (const GraphError& e) {
    throw LoaderError(dir + ": " + e.what());
  }
}

void save_dataset(const std::string& dir, const Graph& g, const std::vector<int32_t>& labels) {
  const fs::path root(dir);
  fs::create_directories(root);

  {
    nlohmann::ordered_json meta;
    meta["num_nodes"] = g.num_nodes();
    meta["feature_dim"] = g.feature_dim();
    meta["num_classes"] = g.num_classes();
    std::ofstream out(root / "meta.json", std::ios::binary);
    out << meta.dump(2) << '\n';
  }
  {
    std::ofstream out(root / "edges.tsv", std::ios::binary);
    for (const auto& [i, j] : g.edges()) out << i << '\t' << j << '\n';
  }
  {
    std::ofstream out(root / "features.csv", std::ios::binary);
    out.precision(17);
    for (int64_t r = 0; r < g.num_nodes(); ++r) {
      for (int64_t k = 0; k < g.feature_dim(); ++k) {
        if (k) out << ',';
        out << g.features().at(r, k);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(root / "labels.txt", std::ios::binary);
    for (const int32_t y : labels) out << y << '\n';
  }
}

}  // namespace nrgnn
