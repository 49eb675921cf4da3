#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrgnn/densify.hpp"
#include "nrgnn/gnn.hpp"
#include "nrgnn/graph.hpp"
#include "nrgnn/tensor.hpp"

namespace nrgnn {

enum class EdgeSource { GnnPredictor, Cosine };
enum class PseudoMode { Full, None, PlainGcn };
enum class CosineLinkMode { LinkVL, LinkVLRetrain, LinkVU, LinkVA };

struct TrainConfig {
  double alpha = 0.03;  // reconstruction-loss weight
  double beta = 1.0;    // miner-loss weight
  Thresholds thresholds{};
  int64_t negative_samples = 50;  // K
  double lr = 0.001;
  int64_t pretrain_epochs = 50;
  int64_t epochs = 200;
  GnnKind classifier_kind = GnnKind::Gcn;
  EdgeSource edge_source = EdgeSource::GnnPredictor;
  PseudoMode pseudo_mode = PseudoMode::Full;
  uint64_t seed = 0;
  int64_t hidden_dim = 16;
  int64_t embed_dim = 16;
  // Cosine-baseline threshold grid, selected on the noisy validation set.
  std::vector<double> sim_threshold_grid = {0.1, 0.2, 0.3, 0.4, 0.5};
};

struct EpochLosses {
  double total = 0.0;
  double classifier = 0.0;    // L_G
  double reconstruction = 0.0;  // L_E
  double miner = 0.0;           // L_P
};

struct Metrics {
  double test_acc = 0.0;
  double val_acc = 0.0;
  std::vector<EpochLosses> losses;
  int64_t pseudo_count = 0;
  double pseudo_acc = 0.0;  // diagnostics only, vs held-out true labels
  int64_t added_edges = 0;
  int64_t epochs_run = 0;
  double wall_seconds = 0.0;
};

struct TrainedModels {
  GnnParams edge_predictor;
  GnnParams miner;
  GnnParams classifier;
};

struct TrainResult {
  TrainedModels models;
  Metrics metrics;
  std::vector<int32_t> predictions;  // argmax class per node at the selected epoch
  PseudoLabelSet pseudo;             // pseudo set at the selected epoch
};

struct DivergenceError : std::runtime_error {
  DivergenceError(int64_t epoch, const std::string& component)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                           " (non-finite " + component + " loss)"),
        epoch(epoch), component(component) {}
  int64_t epoch;
  std::string component;
};

// Accuracy of argmax predictions against true labels on the given mask. This
// is the only path that reads true labels; training and model selection see
// noisy labels and masks exclusively.
double evaluate(const std::vector<int32_t>& predictions, const std::vector<int32_t>& true_labels,
                std::span<const int32_t> mask);

// Joint training loop: pretrain the edge predictor (reconstruction) and the
// miner (on the densified graph), then per epoch rebuild the densified graphs,
// refresh pseudo labels, and take one Adam step on L_G + alpha L_E + beta L_P.
// Model selection keeps the epoch with the best noisy-validation accuracy.
TrainResult train_nrgnn(const Graph& g, const LabelSplit& split, const TrainConfig& cfg);

// Supervised baseline on the original graph with noisy labels.
TrainResult train_plain(const Graph& g, const LabelSplit& split, const TrainConfig& cfg);

// Raw-feature cosine-similarity linking baselines. The similarity threshold is
// picked from cfg.sim_threshold_grid by noisy-validation accuracy.
TrainResult train_cosine_link(const Graph& g, const LabelSplit& split, CosineLinkMode mode,
                              const TrainConfig& cfg);

enum class AblationVariant { Nrgnn, NrgnnGin, NoEdgePredictor, NoPseudo, PlainMiner };

AblationVariant ablation_from_string(const std::string& name);

// Dispatches to train_nrgnn with the matching configuration switch.
TrainResult run_ablation(AblationVariant variant, const Graph& g, const LabelSplit& split,
                         TrainConfig cfg);

std::vector<int32_t> argmax_rows(const Tensor& logits);

}  // namespace nrgnn
