#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nrgnn/experiment.hpp"
#include "nrgnn/theory.hpp"

namespace fs = std::filesystem;
using namespace nrgnn;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitTheorem = 3;

// Resolves --dataset: an explicit directory, a name under $NRGNN_DATA_DIR or
// ./data, or the built-in synthetic spec ("csbm").
void resolve_dataset(const std::string& arg, DataConfig& data) {
  const auto has_meta = [](const fs::path& p) { return fs::exists(p / "meta.json"); };
  if (has_meta(arg)) {
    data.path = arg;
    data.name = fs::path(arg).filename().string();
    return;
  }
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("NRGNN_DATA_DIR")) roots.emplace_back(env);
  roots.emplace_back("data");
  for (const auto& root : roots) {
    if (has_meta(root / arg)) {
      data.path = (root / arg).string();
      data.name = arg;
      return;
    }
  }
  if (arg == "csbm") {
    data.path.clear();
    data.name = arg;
    return;
  }
  std::string searched = arg;
  for (const auto& root : roots) searched += ", " + (root / arg).string();
  throw std::invalid_argument("config field 'data.path': dataset '" + arg +
                              "' not found (searched: " + searched + ")");
}

void parse_noise_flag(const std::string& arg, std::map<std::string, std::string>& kv) {
  const auto colon = arg.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("config field 'noise': expected kind:rate, got '" + arg + "'");
  }
  kv["noise.kind"] = arg.substr(0, colon);
  kv["noise.rate"] = arg.substr(colon + 1);
}

struct TrainFlags {
  std::string config_file;
  std::string manifest_file;
  std::string dataset;
  std::string noise;
  std::string method;
  std::string out_dir;
  std::optional<int64_t> seeds_count;
  std::string seed_list;
  std::vector<std::string> overrides;  // raw key=value strings
};

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& raw) {
  std::map<std::string, std::string> kv;
  for (const auto& item : raw) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    }
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

ExperimentConfig build_train_config(const TrainFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.manifest_file.empty()) {
    std::ifstream in(flags.manifest_file);
    if (!in) throw std::invalid_argument("manifest file not found: " + flags.manifest_file);
    nlohmann::json manifest;
    in >> manifest;
    apply_config(cfg, manifest.at("config").get<std::map<std::string, std::string>>());
    return cfg;
  }
  if (!flags.config_file.empty()) apply_config(cfg, parse_config_file(flags.config_file));

  std::map<std::string, std::string> kv = parse_overrides(flags.overrides);
  if (!flags.noise.empty()) parse_noise_flag(flags.noise, kv);
  if (!flags.method.empty()) kv["method"] = flags.method;
  if (!flags.out_dir.empty()) kv["out_dir"] = flags.out_dir;
  if (!flags.seed_list.empty()) kv["seeds"] = flags.seed_list;
  apply_config(cfg, kv);

  if (flags.seeds_count.has_value()) {
    cfg.seeds.clear();
    for (int64_t s = 0; s < *flags.seeds_count; ++s) cfg.seeds.push_back(static_cast<uint64_t>(s));
    if (cfg.seeds.empty()) throw std::invalid_argument("config field 'seeds': count must be >= 1");
  }
  if (!flags.dataset.empty()) resolve_dataset(flags.dataset, cfg.data);
  return cfg;
}

int cmd_train(const TrainFlags& flags) {
  const ExperimentConfig cfg = build_train_config(flags);
  const Dataset data = materialize_dataset(cfg.data);

  std::vector<RunRecord> records;
  for (const uint64_t seed : cfg.seeds) {
    records.push_back(run_single(cfg, data, seed));
    const auto& m = records.back().metrics;
    std::cout << cfg.method << " seed " << seed << ": test_acc=" << m.test_acc
              << " val_acc=" << m.val_acc << " pseudo=" << m.pseudo_count
              << " added_edges=" << m.added_edges << "\n";
  }
  write_run_outputs(cfg, records);
  const Aggregate agg = aggregate_test_accuracy(records);
  std::cout << cfg.method << " on " << cfg.data.name << ": mean test_acc " << agg.mean << " +/- "
            << agg.stddev << " over " << agg.count << " seeds -> " << cfg.out_dir << "\n";
  return 0;
}

struct SweepFlags {
  TrainFlags train;
  std::string axis = "noise";
  std::string values;
  std::string values2;
  std::string methods = "nrgnn,plain";
  std::string csv_out;
  int64_t workers = 0;
};

std::vector<double> parse_double_list(const std::string& key, const std::string& arg) {
  std::vector<double> out;
  std::istringstream in(arg);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument("config field '" + key + "': not a number: '" + tok + "'");
    }
  }
  return out;
}

int cmd_sweep(const SweepFlags& flags) {
  SweepConfig sweep;
  sweep.base = build_train_config(flags.train);
  sweep.axis = sweep_axis_from_string(flags.axis);
  sweep.values = parse_double_list("values", flags.values);
  sweep.values2 = parse_double_list("values2", flags.values2);
  sweep.workers = flags.workers;
  sweep.methods.clear();
  std::istringstream in(flags.methods);
  std::string tok;
  while (std::getline(in, tok, ',')) sweep.methods.push_back(tok);

  const std::string csv = run_sweep_csv(sweep);
  if (flags.csv_out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(flags.csv_out, std::ios::binary);
    out << csv;
    std::cout << "wrote " << flags.csv_out << "\n";
  }
  return 0;
}

theory::AggregationParams parse_grid_line(const std::string& line, int64_t line_no) {
  std::istringstream in(line);
  std::string tok;
  std::vector<std::string> cols;
  while (std::getline(in, tok, ',')) cols.push_back(tok);
  if (cols.size() != 11) {
    throw std::invalid_argument("grid file line " + std::to_string(line_no) +
                                ": expected 11 columns, got " + std::to_string(cols.size()));
  }
  theory::AggregationParams p;
  try {
    p.link = cols[0] == "pseudo" ? theory::LinkKind::Pseudo : theory::LinkKind::Labeled;
    if (cols[0] != "pseudo" && cols[0] != "labeled") throw std::invalid_argument(cols[0]);
    p.n = std::stoll(cols[1]);
    p.m = std::stoll(cols[2]);
    p.h = std::stod(cols[3]);
    p.p_t = std::stod(cols[4]);
    p.p_f = std::stod(cols[5]);
    p.e_sac = std::stod(cols[6]);
    p.e_sbc = std::stod(cols[7]);
    p.e_sdc = std::stod(cols[8]);
    p.e_spc = std::stod(cols[9]);
    p.k = std::stoll(cols[10]);
  } catch (const std::exception&) {
    throw std::invalid_argument("grid file line " + std::to_string(line_no) + ": malformed value");
  }
  return p;
}

struct TheoryFlags {
  int64_t points = 10;
  int64_t draws = 200000;
  uint64_t seed = 2024;
  std::string csv_out;
  std::string grid_file;
};

int cmd_theory(const TheoryFlags& flags) {
  theory::TheoremReport report;
  if (!flags.grid_file.empty()) {
    std::ifstream in(flags.grid_file);
    if (!in) throw std::invalid_argument("grid file not found: " + flags.grid_file);
    std::string line;
    int64_t line_no = 0;
    std::vector<theory::AggregationParams> points;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#' || line.rfind("link,", 0) == 0) continue;
      points.push_back(parse_grid_line(line, line_no));
    }
    if (points.empty()) throw std::invalid_argument("grid file has no points: " + flags.grid_file);
    report = theory::check_points(points, flags.draws, flags.seed);
  } else {
    report = theory::run_theorem_grid(flags.points, flags.draws, flags.seed);
  }

  int64_t failures = 0;
  std::cout << "link     n  m   condition  monotone  closed_form   mc_mean       3sigma   verdict\n";
  for (const auto& pt : report.points) {
    const bool pass = pt.ok;
    failures += !pass;
    std::ostringstream row;
    row << (pt.params.link == theory::LinkKind::Labeled ? "labeled " : "pseudo  ")
        << pt.params.n << "  " << pt.params.m << "   " << (pt.condition_holds ? "yes" : "no ")
        << "        " << (pt.monotone ? "yes" : "no ") << "       " << pt.closed_form << "  "
        << pt.mc_mean << "  " << 3.0 * pt.mc_stderr << "  " << (pass ? "PASS" : "FAIL")
        << (pt.expected_nonmonotone ? " (converse probe)" : "");
    std::cout << row.str() << "\n";
    if (!pass) {
      std::cerr << "theorem check failed at point: " << row.str() << "\n";
    }
  }
  if (!flags.csv_out.empty()) {
    std::ofstream out(flags.csv_out, std::ios::binary);
    out << theory::report_to_csv(report);
    std::cout << "wrote " << flags.csv_out << "\n";
  }
  std::cout << (report.all_ok ? "theory-check: all points PASS" : "theory-check: FAIL") << "\n";
  return report.all_ok ? 0 : kExitTheorem;
}

int cmd_make_dataset(const CsbmConfig& cfg, const std::string& out_dir) {
  const Dataset d = generate_csbm(cfg);
  save_dataset(out_dir, d.graph, d.labels);
  std::cout << "wrote " << out_dir << ": " << d.graph.num_nodes() << " nodes, "
            << d.graph.num_edges() << " edges, " << d.graph.feature_dim() << " features, "
            << d.graph.num_classes() << " classes\n";
  return 0;
}

struct InjectFlags {
  std::string labels_file;
  std::string out_file;
  int64_t classes = 0;
  std::string kind = "uniform";
  double rate = 0.2;
  uint64_t seed = 0;
};

int cmd_inject_noise(const InjectFlags& flags) {
  std::ifstream in(flags.labels_file);
  if (!in) throw std::invalid_argument("labels file not found: " + flags.labels_file);
  std::vector<int32_t> labels;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      labels.push_back(static_cast<int32_t>(std::stoll(line)));
    } catch (const std::exception&) {
      throw std::invalid_argument(flags.labels_file + ":" + std::to_string(line_no) +
                                  ": malformed label '" + line + "'");
    }
  }
  NoiseSpec spec;
  if (flags.kind == "uniform") spec.kind = NoiseKind::Uniform;
  else if (flags.kind == "pair") spec.kind = NoiseKind::Pair;
  else throw std::invalid_argument("config field 'noise.kind': expected uniform or pair");
  spec.rate = flags.rate;
  spec.seed = flags.seed;

  std::vector<int32_t> mask(labels.size());
  for (size_t i = 0; i < mask.size(); ++i) mask[i] = static_cast<int32_t>(i);
  const auto noisy = corrupt(labels, mask, spec, flags.classes);

  std::ofstream out(flags.out_file, std::ios::binary);
  for (const int32_t y : noisy) out << y << '\n';
  int64_t flipped = 0;
  for (size_t i = 0; i < labels.size(); ++i) flipped += labels[i] != noisy[i];
  std::cout << "wrote " << flags.out_file << ": " << flipped << "/" << labels.size()
            << " labels flipped\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NRGNN: noise-resistant semi-supervised node classification"};
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Train one method over a set of seeds");
  train_cmd->add_option("--config", train.config_file, "flat key=value config file");
  train_cmd->add_option("--from-manifest", train.manifest_file,
                        "rerun the exact configuration stored in a manifest.json");
  train_cmd->add_option("--dataset", train.dataset, "dataset directory, name under $NRGNN_DATA_DIR or ./data, or 'csbm'");
  train_cmd->add_option("--noise", train.noise, "noise spec kind:rate, e.g. uniform:0.2");
  train_cmd->add_option("--method", train.method, "training method (see docs)");
  train_cmd->add_option("--out", train.out_dir, "output directory for metrics/manifest");
  train_cmd->add_option("--seeds", train.seeds_count, "number of seeds (0..N-1)");
  train_cmd->add_option("--seed-list", train.seed_list, "explicit comma-separated seeds");
  train_cmd->add_option("--set", train.overrides,
                        "extra config overrides as key=value (repeatable)");

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid sweep emitting a CSV of mean/std accuracy");
  sweep_cmd->add_option("--config", sweep.train.config_file, "flat key=value config file");
  sweep_cmd->add_option("--dataset", sweep.train.dataset, "dataset name or directory");
  sweep_cmd->add_option("--noise", sweep.train.noise, "base noise spec kind:rate");
  sweep_cmd->add_option("--axis", sweep.axis, "noise|label_rate|edge_rate|alpha|beta|alpha_beta");
  sweep_cmd->add_option("--values", sweep.values, "comma-separated grid values")->required();
  sweep_cmd->add_option("--values2", sweep.values2, "second axis values (alpha_beta grid)");
  sweep_cmd->add_option("--methods", sweep.methods, "comma-separated methods");
  sweep_cmd->add_option("--seeds", sweep.train.seeds_count, "number of seeds (0..N-1)");
  sweep_cmd->add_option("--csv", sweep.csv_out, "CSV output path (default stdout)");
  sweep_cmd->add_option("--workers", sweep.workers, "worker threads (0 = hardware)");
  sweep_cmd->add_option("--set", sweep.train.overrides, "extra config overrides as key=value");

  TheoryFlags theory_flags;
  auto* theory_cmd = app.add_subcommand("theory-check",
                                        "Verify the aggregation theorems numerically");
  theory_cmd->add_option("--points", theory_flags.points, "random points per theorem");
  theory_cmd->add_option("--draws", theory_flags.draws, "Monte Carlo draws per point");
  theory_cmd->add_option("--seed", theory_flags.seed, "grid seed");
  theory_cmd->add_option("--csv", theory_flags.csv_out, "write the parameter grid as CSV");
  theory_cmd->add_option("--grid", theory_flags.grid_file, "check a custom grid file instead");

  CsbmConfig make_cfg;
  std::string make_out;
  auto* make_cmd = app.add_subcommand("make-dataset", "Generate a synthetic dataset directory");
  make_cmd->add_option("--out", make_out, "output dataset directory")->required();
  make_cmd->add_option("--n", make_cfg.num_nodes, "number of nodes");
  make_cmd->add_option("--classes", make_cfg.num_classes, "number of classes");
  make_cmd->add_option("--p-intra", make_cfg.p_intra, "intra-class edge probability");
  make_cmd->add_option("--p-inter", make_cfg.p_inter, "inter-class edge probability");
  make_cmd->add_option("--dim", make_cfg.feature_dim, "feature dimension");
  make_cmd->add_option("--feature-noise", make_cfg.feature_noise, "feature noise stddev");
  make_cmd->add_option("--seed", make_cfg.seed, "generator seed");

  InjectFlags inject;
  auto* inject_cmd = app.add_subcommand("inject-noise", "Corrupt a labels file for inspection");
  inject_cmd->add_option("--labels", inject.labels_file, "labels.txt to corrupt")->required();
  inject_cmd->add_option("--out", inject.out_file, "output labels file")->required();
  inject_cmd->add_option("--classes", inject.classes, "number of classes")->required();
  inject_cmd->add_option("--kind", inject.kind, "uniform|pair");
  inject_cmd->add_option("--rate", inject.rate, "flip probability");
  inject_cmd->add_option("--seed", inject.seed, "noise seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep);
    if (theory_cmd->parsed()) return cmd_theory(theory_flags);
    if (make_cmd->parsed()) return cmd_make_dataset(make_cfg, make_out);
    if (inject_cmd->parsed()) return cmd_inject_noise(inject);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
