#include "nrgnn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "nrgnn/rng.hpp"

namespace nrgnn {

namespace fs = std::filesystem;

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {
      "nrgnn",   "nrgnn_gin", "nrgnn_no_edge", "nrgnn_no_pseudo", "nrgnn_plain_miner",
      "plain",   "plain_gin", "link_vl",       "link_vl_retrain", "link_vu",
      "link_va",
  };
  return methods;
}

TrainResult run_method(const std::string& method, const Graph& g, const LabelSplit& split,
                       TrainConfig cfg) {
  if (method == "nrgnn") return train_nrgnn(g, split, cfg);
  if (method == "nrgnn_gin") return run_ablation(AblationVariant::NrgnnGin, g, split, cfg);
  if (method == "nrgnn_no_edge") return run_ablation(AblationVariant::NoEdgePredictor, g, split, cfg);
  if (method == "nrgnn_no_pseudo") return run_ablation(AblationVariant::NoPseudo, g, split, cfg);
  if (method == "nrgnn_plain_miner") return run_ablation(AblationVariant::PlainMiner, g, split, cfg);
  if (method == "plain") return train_plain(g, split, cfg);
  if (method == "plain_gin") {
    cfg.classifier_kind = GnnKind::Gin;
    return train_plain(g, split, cfg);
  }
  if (method == "link_vl") return train_cosine_link(g, split, CosineLinkMode::LinkVL, cfg);
  if (method == "link_vl_retrain") {
    return train_cosine_link(g, split, CosineLinkMode::LinkVLRetrain, cfg);
  }
  if (method == "link_vu") return train_cosine_link(g, split, CosineLinkMode::LinkVU, cfg);
  if (method == "link_va") return train_cosine_link(g, split, CosineLinkMode::LinkVA, cfg);

  std::string valid;
  for (const auto& m : known_methods()) valid += (valid.empty() ? "" : ", ") + m;
  throw std::invalid_argument("unknown method '" + method + "' (valid methods: " + valid + ")");
}

Dataset materialize_dataset(const DataConfig& cfg) {
  if (!cfg.path.empty()) return load_dataset(cfg.path);
  return generate_csbm(cfg.synthetic);
}

std::string dataset_fingerprint(const DataConfig& cfg) {
  uint64_t h = 0xcbf29ce484222325ULL;
  if (!cfg.path.empty()) {
    for (const char* name : {"meta.json", "edges.tsv", "features.csv", "labels.txt"}) {
      std::ifstream in(fs::path(cfg.path) / name, std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      h = fnv1a(buf.str(), h);
    }
  } else {
    std::ostringstream spec;
    spec << "csbm:" << cfg.synthetic.num_nodes << ':' << cfg.synthetic.num_classes << ':'
         << cfg.synthetic.p_intra << ':' << cfg.synthetic.p_inter << ':'
         << cfg.synthetic.feature_dim << ':' << cfg.synthetic.feature_noise << ':'
         << cfg.synthetic.seed;
    h = fnv1a(spec.str(), h);
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

RunRecord run_single(const ExperimentConfig& cfg, const Dataset& data, uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();

  const Rng run_rng(seed);
  const Graph* g = &data.graph;
  Graph subsampled = data.graph;
  if (cfg.data.edge_rate < 1.0) {
    subsampled = subsample_edges(data.graph, cfg.data.edge_rate, run_rng.fork("edges").seed_of());
    g = &subsampled;
  }

  LabelSplit split = sample_split(*g, data.labels, cfg.data.label_rate,
                                  run_rng.fork("split").seed_of(), cfg.data.split);
  NoiseSpec noise = cfg.noise;
  noise.seed = run_rng.fork("noise").seed_of();
  split = apply_noise(std::move(split), noise, g->num_classes());

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed;
  TrainResult result = run_method(cfg.method, *g, split, train_cfg);

  const auto elapsed = std::chrono::steady_clock::now() - started;
  result.metrics.wall_seconds =
      std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();

  return RunRecord{cfg.method, cfg.data.name, noise, seed, std::move(result.metrics)};
}

Aggregate aggregate_test_accuracy(const std::vector<RunRecord>& records) {
  Aggregate agg;
  agg.count = static_cast<int64_t>(records.size());
  if (records.empty()) return agg;
  double total = 0.0;
  for (const auto& r : records) total += r.metrics.test_acc;
  agg.mean = total / static_cast<double>(records.size());
  if (records.size() > 1) {
    double ss = 0.0;
    for (const auto& r : records) {
      const double d = r.metrics.test_acc - agg.mean;
      ss += d * d;
    }
    agg.stddev = std::sqrt(ss / static_cast<double>(records.size() - 1));
  }
  return agg;
}

namespace {

nlohmann::ordered_json noise_to_json(const NoiseSpec& noise) {
  nlohmann::ordered_json j;
  j["kind"] = noise.kind == NoiseKind::Uniform ? "uniform" : "pair";
  j["rate"] = noise.rate;
  return j;
}

}  // namespace

std::string metrics_to_json(const RunRecord& rec) {
  nlohmann::ordered_json j;
  j["method"] = rec.method;
  j["dataset"] = rec.dataset;
  j["noise"] = noise_to_json(rec.noise);
  j["seed"] = rec.seed;
  j["test_acc"] = rec.metrics.test_acc;
  j["val_acc"] = rec.metrics.val_acc;
  j["pseudo_count"] = rec.metrics.pseudo_count;
  j["pseudo_acc"] = rec.metrics.pseudo_acc;
  j["added_edges"] = rec.metrics.added_edges;
  j["epochs_run"] = rec.metrics.epochs_run;
  j["wall_seconds"] = rec.metrics.wall_seconds;
  return j.dump(2) + "\n";
}

std::string manifest_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["command"] = "train";
  j["config"] = config_to_map(cfg);
  j["data_fingerprint"] = dataset_fingerprint(cfg.data);
  j["seeds"] = cfg.seeds;
  return j.dump(2) + "\n";
}

void write_run_outputs(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
  fs::create_directories(cfg.out_dir);
  for (const auto& rec : records) {
    const fs::path p = fs::path(cfg.out_dir) /
                       ("metrics_" + rec.method + "_" + std::to_string(rec.seed) + ".json");
    std::ofstream out(p, std::ios::binary);
    out << metrics_to_json(rec);
  }
  {
    const Aggregate agg = aggregate_test_accuracy(records);
    nlohmann::ordered_json j;
    j["method"] = cfg.method;
    j["dataset"] = cfg.data.name;
    j["noise"] = noise_to_json(cfg.noise);
    j["seeds"] = cfg.seeds;
    j["mean_test_acc"] = agg.mean;
    j["std_test_acc"] = agg.stddev;
    std::ofstream out(fs::path(cfg.out_dir) / "aggregate.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(cfg.out_dir) / "manifest.json", std::ios::binary);
    out << manifest_json(cfg);
  }
}

// ---- sweeps ----

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "noise") return SweepAxis::NoiseRate;
  if (name == "label_rate") return SweepAxis::LabelRate;
  if (name == "edge_rate") return SweepAxis::EdgeRate;
  if (name == "alpha") return SweepAxis::Alpha;
  if (name == "beta") return SweepAxis::Beta;
  if (name == "alpha_beta") return SweepAxis::AlphaBetaGrid;
  throw std::invalid_argument("unknown sweep axis '" + name +
                              "' (valid: noise, label_rate, edge_rate, alpha, beta, alpha_beta)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::NoiseRate: return "noise";
    case SweepAxis::LabelRate: return "label_rate";
    case SweepAxis::EdgeRate: return "edge_rate";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Beta: return "beta";
    case SweepAxis::AlphaBetaGrid: return "alpha_beta";
  }
  return "?";
}

namespace {

struct SweepPoint {
  double value = 0.0;
  double value2 = 0.0;
  bool has_value2 = false;
};

ExperimentConfig config_at(const SweepConfig& sweep, const SweepPoint& pt, const std::string& method) {
  ExperimentConfig cfg = sweep.base;
  cfg.method = method;
  switch (sweep.axis) {
    case SweepAxis::NoiseRate: cfg.noise.rate = pt.value; break;
    case SweepAxis::LabelRate: cfg.data.label_rate = pt.value; break;
    case SweepAxis::EdgeRate: cfg.data.edge_rate = pt.value; break;
    case SweepAxis::Alpha: cfg.train.alpha = pt.value; break;
    case SweepAxis::Beta: cfg.train.beta = pt.value; break;
    case SweepAxis::AlphaBetaGrid:
      cfg.train.alpha = pt.value;
      cfg.train.beta = pt.value2;
      break;
  }
  return cfg;
}

}  // namespace

std::string run_sweep_csv(const SweepConfig& sweep) {
  if (sweep.values.empty()) throw std::invalid_argument("sweep: empty value grid");
  if (sweep.methods.empty()) throw std::invalid_argument("sweep: no methods given");

  std::vector<SweepPoint> points;
  if (sweep.axis == SweepAxis::AlphaBetaGrid) {
    if (sweep.values2.empty()) throw std::invalid_argument("sweep: alpha_beta grid needs --values2");
    for (const double a : sweep.values) {
      for (const double b : sweep.values2) points.push_back({a, b, true});
    }
  } else {
    for (const double v : sweep.values) points.push_back({v, 0.0, false});
  }

  const Dataset data = materialize_dataset(sweep.base.data);

  struct Job {
    size_t point = 0;
    size_t method = 0;
    size_t seed = 0;
  };
  std::vector<Job> jobs;
  for (size_t p = 0; p < points.size(); ++p) {
    for (size_t m = 0; m < sweep.methods.size(); ++m) {
      for (size_t s = 0; s < sweep.base.seeds.size(); ++s) jobs.push_back({p, m, s});
    }
  }

  std::vector<RunRecord> results(jobs.size());
  std::atomic<size_t> next{0};
  const int64_t hw = static_cast<int64_t>(std::thread::hardware_concurrency());
  const int64_t workers =
      std::max<int64_t>(1, std::min<int64_t>(sweep.workers > 0 ? sweep.workers : hw,
                                             static_cast<int64_t>(jobs.size())));
  auto worker = [&]() {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      const Job& job = jobs[idx];
      const ExperimentConfig cfg = config_at(sweep, points[job.point], sweep.methods[job.method]);
      results[idx] = run_single(cfg, data, sweep.base.seeds[job.seed]);
    }
  };
  std::vector<std::thread> threads;
  for (int64_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& th : threads) th.join();

  std::ostringstream csv;
  csv << "axis,value,value2,method,mean_test_acc,std_test_acc,seeds\n";
  csv.precision(12);
  size_t idx = 0;
  for (size_t p = 0; p < points.size(); ++p) {
    for (size_t m = 0; m < sweep.methods.size(); ++m) {
      std::vector<RunRecord> cell;
      for (size_t s = 0; s < sweep.base.seeds.size(); ++s) cell.push_back(results[idx++]);
      const Aggregate agg = aggregate_test_accuracy(cell);
      csv << to_string(sweep.axis) << ',' << points[p].value << ',';
      if (points[p].has_value2) csv << points[p].value2;
      csv << ',' << sweep.methods[m] << ',' << agg.mean << ',' << agg.stddev << ',' << agg.count
          << '\n';
    }
  }
  return csv.str();
}

// ---- config files ----

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config field '" + key + "': not a number: '" + v + "'");
  }
}

int64_t to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw std::invalid_argument("config field '" + key + "': not an integer: '" + v + "'");
  }
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(to_double(key, tok));
  return out;
}

}  // namespace

void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "data.name") cfg.data.name = value;
    else if (key == "data.path") cfg.data.path = value;
    else if (key == "data.label_rate") cfg.data.label_rate = to_double(key, value);
    else if (key == "data.edge_rate") cfg.data.edge_rate = to_double(key, value);
    else if (key == "data.val_count") cfg.data.split.val_count = to_int(key, value);
    else if (key == "data.test_count") cfg.data.split.test_count = to_int(key, value);
    else if (key == "data.synthetic.n") cfg.data.synthetic.num_nodes = to_int(key, value);
    else if (key == "data.synthetic.classes") cfg.data.synthetic.num_classes = to_int(key, value);
    else if (key == "data.synthetic.p_intra") cfg.data.synthetic.p_intra = to_double(key, value);
    else if (key == "data.synthetic.p_inter") cfg.data.synthetic.p_inter = to_double(key, value);
    else if (key == "data.synthetic.dim") cfg.data.synthetic.feature_dim = to_int(key, value);
    else if (key == "data.synthetic.noise") cfg.data.synthetic.feature_noise = to_double(key, value);
    else if (key == "data.synthetic.seed") cfg.data.synthetic.seed = static_cast<uint64_t>(to_int(key, value));
    else if (key == "noise.kind") {
      if (value == "uniform") cfg.noise.kind = NoiseKind::Uniform;
      else if (value == "pair") cfg.noise.kind = NoiseKind::Pair;
      else throw std::invalid_argument("config field 'noise.kind': expected uniform or pair, got '" + value + "'");
    }
    else if (key == "noise.rate") cfg.noise.rate = to_double(key, value);
    else if (key == "train.alpha") cfg.train.alpha = to_double(key, value);
    else if (key == "train.beta") cfg.train.beta = to_double(key, value);
    else if (key == "train.t") cfg.train.thresholds.edge = to_double(key, value);
    else if (key == "train.t_p") cfg.train.thresholds.confidence = to_double(key, value);
    else if (key == "train.negatives") cfg.train.negative_samples = to_int(key, value);
    else if (key == "train.lr") cfg.train.lr = to_double(key, value);
    else if (key == "train.pretrain_epochs") cfg.train.pretrain_epochs = to_int(key, value);
    else if (key == "train.epochs") cfg.train.epochs = to_int(key, value);
    else if (key == "train.hidden_dim") cfg.train.hidden_dim = to_int(key, value);
    else if (key == "train.embed_dim") cfg.train.embed_dim = to_int(key, value);
    else if (key == "train.classifier") {
      if (value == "gcn") cfg.train.classifier_kind = GnnKind::Gcn;
      else if (value == "gin") cfg.train.classifier_kind = GnnKind::Gin;
      else throw std::invalid_argument("config field 'train.classifier': expected gcn or gin, got '" + value + "'");
    }
    else if (key == "train.sim_grid") cfg.train.sim_threshold_grid = to_double_list(key, value);
    else if (key == "method") cfg.method = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "seeds") {
      cfg.seeds.clear();
      std::istringstream in(value);
      std::string tok;
      while (std::getline(in, tok, ',')) cfg.seeds.push_back(static_cast<uint64_t>(to_int(key, tok)));
      if (cfg.seeds.empty()) throw std::invalid_argument("config field 'seeds': empty list");
    }
    else throw std::invalid_argument("unknown config field '" + key + "'");
  }
}

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::map<std::string, std::string> config_to_map(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["data.name"] = cfg.data.name;
  kv["data.path"] = cfg.data.path;
  kv["data.label_rate"] = fmt(cfg.data.label_rate);
  kv["data.edge_rate"] = fmt(cfg.data.edge_rate);
  kv["data.val_count"] = std::to_string(cfg.data.split.val_count);
  kv["data.test_count"] = std::to_string(cfg.data.split.test_count);
  kv["data.synthetic.n"] = std::to_string(cfg.data.synthetic.num_nodes);
  kv["data.synthetic.classes"] = std::to_string(cfg.data.synthetic.num_classes);
  kv["data.synthetic.p_intra"] = fmt(cfg.data.synthetic.p_intra);
  kv["data.synthetic.p_inter"] = fmt(cfg.data.synthetic.p_inter);
  kv["data.synthetic.dim"] = std::to_string(cfg.data.synthetic.feature_dim);
  kv["data.synthetic.noise"] = fmt(cfg.data.synthetic.feature_noise);
  kv["data.synthetic.seed"] = std::to_string(cfg.data.synthetic.seed);
  kv["noise.kind"] = cfg.noise.kind == NoiseKind::Uniform ? "uniform" : "pair";
  kv["noise.rate"] = fmt(cfg.noise.rate);
  kv["train.alpha"] = fmt(cfg.train.alpha);
  kv["train.beta"] = fmt(cfg.train.beta);
  kv["train.t"] = fmt(cfg.train.thresholds.edge);
  kv["train.t_p"] = fmt(cfg.train.thresholds.confidence);
  kv["train.negatives"] = std::to_string(cfg.train.negative_samples);
  kv["train.lr"] = fmt(cfg.train.lr);
  kv["train.pretrain_epochs"] = std::to_string(cfg.train.pretrain_epochs);
  kv["train.epochs"] = std::to_string(cfg.train.epochs);
  kv["train.hidden_dim"] = std::to_string(cfg.train.hidden_dim);
  kv["train.embed_dim"] = std::to_string(cfg.train.embed_dim);
  kv["train.classifier"] = cfg.train.classifier_kind == GnnKind::Gcn ? "gcn" : "gin";
  {
    std::string grid;
    for (const double v : cfg.train.sim_threshold_grid) {
      grid += (grid.empty() ? "" : ",") + fmt(v);
    }
    kv["train.sim_grid"] = grid;
  }
  kv["method"] = cfg.method;
  kv["out_dir"] = cfg.out_dir;
  {
    std::string seeds;
    for (const uint64_t s : cfg.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
    kv["seeds"] = seeds;
  }
  return kv;
}

}  // namespace nrgnn
