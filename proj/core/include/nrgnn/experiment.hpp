#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nrgnn/graph.hpp"
#include "nrgnn/noise.hpp"
#include "nrgnn/trainer.hpp"

namespace nrgnn {

struct DataConfig {
  std::string name = "csbm";
  std::string path;  // dataset directory; empty selects the synthetic spec
  CsbmConfig synthetic{};
  double label_rate = 0.05;
  SplitConfig split{};
  double edge_rate = 1.0;
};

struct ExperimentConfig {
  DataConfig data;
  NoiseSpec noise;  // per-run noise seed is derived from the run seed
  TrainConfig train;
  std::string method = "nrgnn";
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string out_dir = "runs";
};

struct RunRecord {
  std::string method;
  std::string dataset;
  NoiseSpec noise;
  uint64_t seed = 0;
  Metrics metrics;
};

const std::vector<std::string>& known_methods();

// Trains with the named method; throws std::invalid_argument listing the
// valid names when the method is unknown.
TrainResult run_method(const std::string& method, const Graph& g, const LabelSplit& split,
                       TrainConfig cfg);

Dataset materialize_dataset(const DataConfig& cfg);
// FNV-1a over the dataset files (or the synthetic spec) for the manifest.
std::string dataset_fingerprint(const DataConfig& cfg);

// One seeded run: split -> corrupt -> train -> evaluate. The same seed yields
// the same split and noise for every method, so comparisons are paired.
RunRecord run_single(const ExperimentConfig& cfg, const Dataset& data, uint64_t seed);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  int64_t count = 0;
};
Aggregate aggregate_test_accuracy(const std::vector<RunRecord>& records);

// Metrics JSON schema (stable key order): method, dataset, noise, seed,
// test_acc, val_acc, pseudo_count, pseudo_acc, added_edges, epochs_run,
// wall_seconds. wall_seconds is informational and excluded from
// reproducibility comparisons.
std::string metrics_to_json(const RunRecord& rec);

// Writes metrics_<method>_<seed>.json per record plus aggregate.json and
// manifest.json under cfg.out_dir.
void write_run_outputs(const ExperimentConfig& cfg, const std::vector<RunRecord>& records);

std::string manifest_json(const ExperimentConfig& cfg);

// ---- sweeps ----

enum class SweepAxis { NoiseRate, LabelRate, EdgeRate, Alpha, Beta, AlphaBetaGrid };

SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepConfig {
  ExperimentConfig base;
  SweepAxis axis = SweepAxis::NoiseRate;
  std::vector<double> values;
  std::vector<double> values2;  // second axis of the alpha x beta grid
  std::vector<std::string> methods = {"nrgnn", "plain"};
  int64_t workers = 0;  // 0 = hardware concurrency
};

// One row per grid point per method, in grid-then-method order:
// axis,value,value2,method,mean_test_acc,std_test_acc,seeds
std::string run_sweep_csv(const SweepConfig& cfg);

// ---- config files ----
// Flat `section.key = value` text; '#' starts a comment. CLI flags override
// file values. apply_config throws naming the offending field.

std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);
void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);
// Fully resolved key/value dump; feeding it back through apply_config
// reproduces the configuration (the manifest embeds this).
std::map<std::string, std::string> config_to_map(const ExperimentConfig& cfg);

}  // namespace nrgnn
