#include "nrgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "nrgnn/edge_predictor.hpp"
#include "nrgnn/noise.hpp"

namespace nrgnn {

std::vector<int32_t> argmax_rows(const Tensor& logits) {
  const int64_t r = logits.rows(), c = logits.cols();
  std::vector<int32_t> out(static_cast<size_t>(r));
  for (int64_t i = 0; i < r; ++i) {
    int32_t arg = 0;
    double best = logits.at(i, 0);
    for (int64_t j = 1; j < c; ++j) {
      if (logits.at(i, j) > best) {
        best = logits.at(i, j);
        arg = static_cast<int32_t>(j);
      }
    }
    out[static_cast<size_t>(i)] = arg;
  }
  return out;
}

double evaluate(const std::vector<int32_t>& predictions, const std::vector<int32_t>& true_labels,
                std::span<const int32_t> mask) {
  if (mask.empty()) throw std::invalid_argument("evaluate: empty mask");
  int64_t hits = 0;
  for (const int32_t v : mask) {
    hits += predictions[static_cast<size_t>(v)] == true_labels[static_cast<size_t>(v)];
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

namespace {

// Restricted view handed to the training loops: noisy labels and the train and
// validation masks only. True labels stay outside until evaluate().
struct TrainView {
  const Graph& g;
  const std::vector<int32_t>& noisy_labels;
  const std::vector<int32_t>& train;
  const std::vector<int32_t>& val;
};

struct CoreOutcome {
  std::vector<int32_t> predictions;
  double val_acc = 0.0;
  std::vector<EpochLosses> losses;
  PseudoLabelSet pseudo;
  int64_t added_edges = 0;
  int64_t epochs_run = 0;
  TrainedModels models;
};

void validate_config(const TrainConfig& cfg) {
  if (cfg.alpha < 0.0 || cfg.beta < 0.0) {
    throw std::invalid_argument("train config: alpha and beta must be non-negative");
  }
  if (cfg.epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (cfg.thresholds.edge < 0.0) throw std::invalid_argument("train config: edge threshold must be >= 0");
}

double masked_accuracy(const std::vector<int32_t>& preds, const std::vector<int32_t>& labels,
                       std::span<const int32_t> mask) {
  if (mask.empty()) throw std::invalid_argument("accuracy: empty mask");
  int64_t hits = 0;
  for (const int32_t v : mask) {
    hits += preds[static_cast<size_t>(v)] == labels[static_cast<size_t>(v)];
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

void check_finite(double value, int64_t epoch, const char* component) {
  if (!std::isfinite(value)) throw DivergenceError(epoch, component);
}

Rng epoch_stream(const Rng& base, std::string_view tag, int64_t epoch) {
  return base.fork(tag).fork(std::to_string(epoch));
}

std::vector<int32_t> complement_of(std::span<const int32_t> subset, int64_t n) {
  std::vector<bool> mark(static_cast<size_t>(n), false);
  for (const int32_t v : subset) mark[static_cast<size_t>(v)] = true;
  std::vector<int32_t> out;
  out.reserve(static_cast<size_t>(n) - subset.size());
  for (int64_t i = 0; i < n; ++i) {
    if (!mark[static_cast<size_t>(i)]) out.push_back(static_cast<int32_t>(i));
  }
  return out;
}

std::vector<Tensor> grads_of(const Tape& tape, const GnnParams& watched) {
  std::vector<Tensor> out;
  out.reserve(watched.weights.size());
  for (const auto& w : watched.weights) out.push_back(tape.grad(w));
  return out;
}

GnnConfig classifier_config(const TrainConfig& cfg, int64_t feature_dim, int64_t num_classes) {
  GnnConfig c;
  c.kind = cfg.classifier_kind;
  c.layer_dims = {feature_dim, cfg.hidden_dim, num_classes};
  c.gin_mlp_hidden = cfg.hidden_dim;
  return c;
}

// ---- plain supervised baseline ----

CoreOutcome run_plain_core(const TrainView& view, const TrainConfig& cfg) {
  const Graph& g = view.g;
  const GnnConfig ccfg = classifier_config(cfg, g.feature_dim(), g.num_classes());
  Rng init = Rng(cfg.seed).fork("classifier-init");
  GnnParams params = init_gnn_params(ccfg, init);

  const WeightedGraph plain = WeightedGraph::plain(g);
  const NormalizedAdjacency adj = adjacency_for(ccfg.kind, plain);
  const NodeFeatures x = NodeFeatures::from(g.features());
  OptimizerState opt = make_adam_state(params.weights, {.lr = cfg.lr});

  CoreOutcome out;
  double best = -1.0;
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    GnnParams w = params.watched(tape);
    const Tensor logits = gnn_forward(ccfg, w, adj, x);
    const Tensor loss = cross_entropy(logits, view.noisy_labels, view.train);
    check_finite(loss.value(), epoch, "classifier");
    tape.backward(loss);
    auto grads = grads_of(tape, w);
    adam_step(params.weights, grads, opt);

    const auto preds = argmax_rows(logits);
    const double val_acc = masked_accuracy(preds, view.noisy_labels, view.val);
    if (val_acc > best) {
      best = val_acc;
      out.predictions = preds;
      out.models.classifier = params.cloned();
    }
    out.losses.push_back({loss.value(), loss.value(), 0.0, 0.0});
  }
  out.val_acc = best;
  out.epochs_run = cfg.epochs;
  return out;
}

// ---- joint loop ----

CoreOutcome run_nrgnn_core(const TrainView& view, const TrainConfig& cfg) {
  const Graph& g = view.g;
  const int64_t n = g.num_nodes();
  const double t = cfg.thresholds.edge;
  const bool use_predictor = cfg.edge_source == EdgeSource::GnnPredictor;
  const bool use_miner = cfg.pseudo_mode != PseudoMode::None;
  const bool miner_on_base = cfg.pseudo_mode == PseudoMode::PlainGcn;

  const Rng root(cfg.seed);
  const std::vector<int32_t>& labeled = view.train;
  const std::vector<int32_t> unlabeled = complement_of(labeled, n);

  const NodeFeatures x = NodeFeatures::from(g.features());
  const WeightedGraph plain = WeightedGraph::plain(g);
  const NormalizedAdjacency base_adj = normalize_adjacency(plain);

  Rng edge_init = root.fork("edge-init");
  EdgePredictor predictor(g.feature_dim(), cfg.hidden_dim, cfg.embed_dim, edge_init);

  const GnnConfig miner_cfg{GnnKind::Gcn, {g.feature_dim(), cfg.hidden_dim, g.num_classes()}, 0.0,
                            cfg.hidden_dim};
  Rng miner_init = root.fork("miner-init");
  GnnParams miner = use_miner ? init_gnn_params(miner_cfg, miner_init) : GnnParams{};

  const GnnConfig cls_cfg = classifier_config(cfg, g.feature_dim(), g.num_classes());
  Rng cls_init = root.fork("classifier-init");
  GnnParams classifier = init_gnn_params(cls_cfg, cls_init);

  // Cosine scores replace the learned predictor in the no-edge-predictor
  // ablation; raw-feature similarities never change, so score once against
  // every node and let build_densified narrow the target set per epoch.
  EdgeScores cosine_all;
  if (!use_predictor) {
    std::vector<int32_t> everyone(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) everyone[static_cast<size_t>(i)] = static_cast<int32_t>(i);
    cosine_all = cosine_candidates(g, unlabeled, everyone, t);
  }

  // Phase 1: pretrain the edge predictor on adjacency reconstruction.
  if (use_predictor) {
    OptimizerState opt = make_adam_state(predictor.params().weights, {.lr = cfg.lr});
    for (int64_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
      Tape tape;
      GnnParams w = predictor.params().watched(tape);
      const Tensor z = predictor.encode(base_adj, x, w);
      Rng neg = epoch_stream(root, "pretrain-negatives", epoch);
      const Tensor loss = reconstruction_loss(z, g, cfg.negative_samples, neg);
      check_finite(loss.value(), epoch, "reconstruction");
      tape.backward(loss);
      auto grads = grads_of(tape, w);
      adam_step(predictor.params().weights, grads, opt);
    }
  }

  // Phase 2: pretrain the miner on the densified graph (fixed predictor).
  if (use_miner) {
    NormalizedAdjacency miner_adj = base_adj;
    if (!miner_on_base) {
      EdgeScores scores = use_predictor
                              ? score_candidates(predictor.encode(g), unlabeled, labeled, g, t)
                              : cosine_all;
      const WeightedGraph sl = build_sl(g, scores, labeled, t);
      miner_adj = normalize_adjacency(sl);
    }
    OptimizerState opt = make_adam_state(miner.weights, {.lr = cfg.lr});
    for (int64_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
      Tape tape;
      GnnParams w = miner.watched(tape);
      const Tensor logits = gcn_forward(miner_cfg, w, miner_adj, x);
      const Tensor loss = cross_entropy(logits, view.noisy_labels, view.train);
      check_finite(loss.value(), epoch, "miner");
      tape.backward(loss);
      auto grads = grads_of(tape, w);
      adam_step(miner.weights, grads, opt);
    }
  }

  // Phase 3: joint optimization of L_G + alpha L_E + beta L_P.
  std::vector<Tensor> joint_params;
  for (const auto& w : predictor.params().weights) joint_params.push_back(w);
  for (const auto& w : miner.weights) joint_params.push_back(w);
  for (const auto& w : classifier.weights) joint_params.push_back(w);
  OptimizerState opt = make_adam_state(joint_params, {.lr = cfg.lr});

  CoreOutcome out;
  double best = -1.0;
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    GnnParams w_edge = predictor.params().watched(tape);
    GnnParams w_miner = use_miner ? miner.watched(tape) : GnnParams{};
    GnnParams w_cls = classifier.watched(tape);

    Tensor z;
    if (use_predictor) z = predictor.encode(base_adj, x, w_edge);

    EpochLosses losses;

    Tensor l_recon;
    if (use_predictor && cfg.alpha != 0.0) {
      Rng neg = epoch_stream(root, "joint-negatives", epoch);
      l_recon = reconstruction_loss(z, g, cfg.negative_samples, neg);
      losses.reconstruction = l_recon.value();
      check_finite(losses.reconstruction, epoch, "reconstruction");
    }

    PseudoLabelSet pseudo;
    pseudo.epoch = epoch;
    Tensor l_miner;
    if (use_miner) {
      Tensor miner_logits;
      if (miner_on_base) {
        miner_logits = gcn_forward(miner_cfg, w_miner, base_adj, x);
      } else {
        EdgeScores scores_l =
            use_predictor ? score_candidates(z, unlabeled, labeled, g, t) : cosine_all;
        const WeightedGraph sl = build_sl(g, scores_l, labeled, t);
        miner_logits = gcn_forward(miner_cfg, w_miner, normalize_adjacency(sl), x);
      }
      l_miner = cross_entropy(miner_logits, view.noisy_labels, view.train);
      losses.miner = l_miner.value();
      check_finite(losses.miner, epoch, "miner");
      pseudo = mine_pseudo_labels(miner_logits, unlabeled, cfg.thresholds.confidence, epoch);
    }

    // Extended label set V_A and its labels: noisy for V_L, mined for V_P.
    std::vector<int32_t> extended = labeled;
    std::vector<int32_t> labels_a = view.noisy_labels;
    for (const auto& e : pseudo.entries) {
      extended.push_back(e.node);
      labels_a[static_cast<size_t>(e.node)] = e.label;
    }
    std::sort(extended.begin(), extended.end());

    const EdgeScores scores_a =
        use_predictor ? score_candidates(z, unlabeled, extended, g, t) : cosine_all;
    const WeightedGraph sa = build_sa(g, scores_a, extended, t);
    const NormalizedAdjacency sa_adj = adjacency_for(cls_cfg.kind, sa);
    const Tensor cls_logits = gnn_forward(cls_cfg, w_cls, sa_adj, x);
    const Tensor l_cls = cross_entropy(cls_logits, labels_a, extended);
    losses.classifier = l_cls.value();
    check_finite(losses.classifier, epoch, "classifier");

    Tensor total = l_cls;
    if (l_recon.defined()) total = add(total, scale(l_recon, cfg.alpha));
    if (l_miner.defined()) total = add(total, scale(l_miner, cfg.beta));
    losses.total = total.value();

    tape.backward(total);
    std::vector<Tensor> grads;
    for (const auto& w : w_edge.weights) grads.push_back(tape.grad(w));
    for (const auto& w : w_miner.weights) grads.push_back(tape.grad(w));
    for (const auto& w : w_cls.weights) grads.push_back(tape.grad(w));
    adam_step(joint_params, grads, opt);

    const auto preds = argmax_rows(cls_logits);
    const double val_acc = masked_accuracy(preds, view.noisy_labels, view.val);
    if (val_acc > best) {
      best = val_acc;
      out.predictions = preds;
      out.pseudo = pseudo;
      out.added_edges = sa.num_added();
      out.models.edge_predictor = predictor.params().cloned();
      out.models.miner = miner.cloned();
      out.models.classifier = classifier.cloned();
    }
    out.losses.push_back(losses);
  }
  out.val_acc = best;
  out.epochs_run = cfg.epochs;
  return out;
}

// ---- cosine-similarity linking baselines ----

// Training loop for a GCN on a fixed (constant-weight) graph with an
// arbitrary label vector and loss mask. Selection follows noisy-validation
// accuracy like every other trainer.
struct FixedGraphRun {
  GnnParams best_params;
  Tensor best_logits;
  std::vector<int32_t> predictions;
  double val_acc = 0.0;
  std::vector<EpochLosses> losses;
};

FixedGraphRun train_on_fixed_graph(const TrainView& view, const WeightedGraph& wg,
                                   const std::vector<int32_t>& labels,
                                   const std::vector<int32_t>& loss_mask, const TrainConfig& cfg) {
  const Graph& g = view.g;
  const GnnConfig ccfg = classifier_config(cfg, g.feature_dim(), g.num_classes());
  Rng init = Rng(cfg.seed).fork("classifier-init");
  GnnParams params = init_gnn_params(ccfg, init);
  const NormalizedAdjacency adj = adjacency_for(ccfg.kind, wg);
  const NodeFeatures x = NodeFeatures::from(g.features());
  OptimizerState opt = make_adam_state(params.weights, {.lr = cfg.lr});

  FixedGraphRun out;
  double best = -1.0;
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    GnnParams w = params.watched(tape);
    const Tensor logits = gnn_forward(ccfg, w, adj, x);
    const Tensor loss = cross_entropy(logits, labels, loss_mask);
    check_finite(loss.value(), epoch, "classifier");
    tape.backward(loss);
    auto grads = grads_of(tape, w);
    adam_step(params.weights, grads, opt);

    const auto preds = argmax_rows(logits);
    const double val_acc = masked_accuracy(preds, view.noisy_labels, view.val);
    if (val_acc > best) {
      best = val_acc;
      out.best_params = params.cloned();
      out.best_logits = logits.clone();
      out.predictions = preds;
    }
    out.losses.push_back({loss.value(), loss.value(), 0.0, 0.0});
  }
  out.val_acc = best;
  return out;
}

WeightedGraph densify_unweighted(const Graph& g, std::vector<std::pair<int32_t, int32_t>> pairs) {
  Tensor weights = Tensor::full({static_cast<int64_t>(pairs.size())}, 1.0);
  return WeightedGraph{&g, std::move(pairs), std::move(weights)};
}

// Unordered, deduplicated cosine link set between sources and targets.
std::vector<std::pair<int32_t, int32_t>> cosine_links(const Graph& g,
                                                      std::span<const int32_t> sources,
                                                      std::span<const int32_t> targets,
                                                      double threshold) {
  const EdgeScores scores = cosine_candidates(g, sources, targets, threshold);
  std::vector<std::pair<int32_t, int32_t>> out;
  std::unordered_set<int64_t> seen;
  for (const auto& p : scores.pairs) {
    const int64_t key =
        static_cast<int64_t>(std::min(p.i, p.j)) * g.num_nodes() + std::max(p.i, p.j);
    if (!seen.insert(key).second) continue;
    out.emplace_back(p.i, p.j);
  }
  return out;
}

CoreOutcome run_cosine_link_core(const TrainView& view, CosineLinkMode mode,
                                 const TrainConfig& cfg) {
  if (cfg.sim_threshold_grid.empty()) {
    throw std::invalid_argument("cosine link: similarity threshold grid is empty");
  }
  const Graph& g = view.g;
  const std::vector<int32_t> unlabeled = complement_of(view.train, g.num_nodes());

  CoreOutcome best_out;
  double best_val = -1.0;

  // Inference-only modes train on the original graph once and swap the graph
  // at prediction time; retrain modes train per threshold.
  FixedGraphRun base_run;
  const bool inference_mode = mode == CosineLinkMode::LinkVL || mode == CosineLinkMode::LinkVU;
  if (inference_mode) {
    base_run = train_on_fixed_graph(view, WeightedGraph::plain(g), view.noisy_labels, view.train, cfg);
  }

  const NodeFeatures x = NodeFeatures::from(g.features());
  for (const double tau : cfg.sim_threshold_grid) {
    CoreOutcome candidate;
    candidate.epochs_run = cfg.epochs;
    double candidate_val = -1.0;

    if (inference_mode) {
      const auto links = mode == CosineLinkMode::LinkVL
                             ? cosine_links(g, unlabeled, view.train, tau)
                             : cosine_links(g, unlabeled, unlabeled, tau);
      const WeightedGraph wg = densify_unweighted(g, links);
      const NormalizedAdjacency adj = adjacency_for(cfg.classifier_kind, wg);
      const Tensor logits = gnn_forward(classifier_config(cfg, g.feature_dim(), g.num_classes()),
                                        base_run.best_params, adj, x);
      candidate.predictions = argmax_rows(logits);
      candidate_val = masked_accuracy(candidate.predictions, view.noisy_labels, view.val);
      candidate.losses = base_run.losses;
      candidate.added_edges = wg.num_added();
      candidate.models.classifier = base_run.best_params.cloned();
    } else if (mode == CosineLinkMode::LinkVLRetrain) {
      const auto links = cosine_links(g, unlabeled, view.train, tau);
      const WeightedGraph wg = densify_unweighted(g, links);
      FixedGraphRun run = train_on_fixed_graph(view, wg, view.noisy_labels, view.train, cfg);
      candidate.predictions = run.predictions;
      candidate_val = run.val_acc;
      candidate.losses = run.losses;
      candidate.added_edges = wg.num_added();
      candidate.models.classifier = run.best_params.cloned();
    } else {  // LinkVA: train with V_L links, harvest pseudo labels, relink, retrain
      const auto vl_links = cosine_links(g, unlabeled, view.train, tau);
      const WeightedGraph wg_vl = densify_unweighted(g, vl_links);
      FixedGraphRun stage1 = train_on_fixed_graph(view, wg_vl, view.noisy_labels, view.train, cfg);

      const PseudoLabelSet pseudo =
          mine_pseudo_labels(stage1.best_logits, unlabeled, cfg.thresholds.confidence, 0);
      std::vector<int32_t> extended = view.train;
      std::vector<int32_t> labels_a = view.noisy_labels;
      for (const auto& e : pseudo.entries) {
        extended.push_back(e.node);
        labels_a[static_cast<size_t>(e.node)] = e.label;
      }
      std::sort(extended.begin(), extended.end());

      const auto va_links = cosine_links(g, unlabeled, extended, tau);
      const WeightedGraph wg_va = densify_unweighted(g, va_links);
      FixedGraphRun stage2 = train_on_fixed_graph(view, wg_va, labels_a, extended, cfg);

      candidate.predictions = stage2.predictions;
      candidate_val = stage2.val_acc;
      candidate.losses = stage2.losses;
      candidate.added_edges = wg_va.num_added();
      candidate.pseudo = pseudo;
      candidate.models.classifier = stage2.best_params.cloned();
    }

    if (candidate_val > best_val) {
      best_val = candidate_val;
      best_out = std::move(candidate);
      best_out.val_acc = candidate_val;
    }
  }
  return best_out;
}

// ---- shared wrap-up ----

TrainResult finalize(const Graph&, const LabelSplit& split, CoreOutcome&& core) {
  TrainResult r;
  r.predictions = std::move(core.predictions);
  r.pseudo = std::move(core.pseudo);
  r.models = std::move(core.models);
  r.metrics.val_acc = core.val_acc;
  r.metrics.losses = std::move(core.losses);
  r.metrics.pseudo_count = static_cast<int64_t>(r.pseudo.entries.size());
  r.metrics.added_edges = core.added_edges;
  r.metrics.epochs_run = core.epochs_run;
  r.metrics.test_acc = evaluate(r.predictions, split.true_labels, split.test);
  if (!r.pseudo.entries.empty()) {
    int64_t hits = 0;
    for (const auto& e : r.pseudo.entries) {
      hits += e.label == split.true_labels[static_cast<size_t>(e.node)];
    }
    r.metrics.pseudo_acc =
        static_cast<double>(hits) / static_cast<double>(r.pseudo.entries.size());
  }
  return r;
}

}  // namespace

TrainResult train_plain(const Graph& g, const LabelSplit& split, const TrainConfig& cfg) {
  validate_config(cfg);
  TrainView view{g, split.noisy_labels, split.train, split.val};
  return finalize(g, split, run_plain_core(view, cfg));
}

TrainResult train_nrgnn(const Graph& g, const LabelSplit& split, const TrainConfig& cfg) {
  validate_config(cfg);
  TrainView view{g, split.noisy_labels, split.train, split.val};
  return finalize(g, split, run_nrgnn_core(view, cfg));
}

TrainResult train_cosine_link(const Graph& g, const LabelSplit& split, CosineLinkMode mode,
                              const TrainConfig& cfg) {
  validate_config(cfg);
  TrainView view{g, split.noisy_labels, split.train, split.val};
  return finalize(g, split, run_cosine_link_core(view, mode, cfg));
}

AblationVariant ablation_from_string(const std::string& name) {
  if (name == "nrgnn") return AblationVariant::Nrgnn;
  if (name == "nrgnn_gin") return AblationVariant::NrgnnGin;
  if (name == "no_edge_predictor") return AblationVariant::NoEdgePredictor;
  if (name == "no_pseudo") return AblationVariant::NoPseudo;
  if (name == "plain_miner") return AblationVariant::PlainMiner;
  throw std::invalid_argument(
      "unknown ablation variant '" + name +
      "' (valid: nrgnn, nrgnn_gin, no_edge_predictor, no_pseudo, plain_miner)");
}

TrainResult run_ablation(AblationVariant variant, const Graph& g, const LabelSplit& split,
                         TrainConfig cfg) {
  switch (variant) {
    case AblationVariant::Nrgnn:
      break;
    case AblationVariant::NrgnnGin:
      cfg.classifier_kind = GnnKind::Gin;
      break;
    case AblationVariant::NoEdgePredictor:
      cfg.edge_source = EdgeSource::Cosine;
      break;
    case AblationVariant::NoPseudo:
      cfg.pseudo_mode = PseudoMode::None;
      break;
    case AblationVariant::PlainMiner:
      cfg.pseudo_mode = PseudoMode::PlainGcn;
      break;
  }
  return train_nrgnn(g, split, cfg);
}

}  // namespace nrgnn
