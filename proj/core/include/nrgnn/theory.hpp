#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nrgnn::theory {

// Which kind of nodes the k added links attach to.
enum class LinkKind { Labeled, Pseudo };

// One-hop aggregation setting around an unlabeled node of class c: n unlabeled
// neighbors, m labeled neighbors (intra-class with ratio h, labeled correctly
// with probability p_t, falsely as c with probability p_f), expected class-c
// scores for the three neighbor types plus pseudo-labeled nodes, and k added
// links. The degree is m + n before linking and m + n + k after.
struct AggregationParams {
  int64_t n = 0;
  int64_t m = 0;
  double h = 0.0;
  double p_t = 0.0;
  double p_f = 0.0;
  double e_sac = 0.0;  // unlabeled neighbor
  double e_sbc = 0.0;  // neighbor labeled as c
  double e_sdc = 0.0;  // neighbor labeled as another class
  double e_spc = 0.0;  // pseudo-labeled neighbor
  int64_t k = 0;
  LinkKind link = LinkKind::Labeled;
};

// Probability that a linked labeled node carries label c.
double label_c_probability(const AggregationParams& p);  // h p_t + (1-h) p_f

// E(y_uc) before linking.
double expected_yuc(const AggregationParams& p);

// E(y_uc^k) after linking k labeled nodes of class c.
double expected_yuc_after_labeled_links(const AggregationParams& p, int64_t k);

// E(y_uc^k) after linking k pseudo-labeled nodes.
double expected_yuc_after_pseudo_links(const AggregationParams& p, int64_t k);

// Sufficient condition of the labeled-link guarantee:
// p_t > (E(s_ac) - E(s_dc)) / (E(s_bc) - E(s_dc)), strictly.
bool theorem1_condition(const AggregationParams& p);

// Sufficient condition of the pseudo-link guarantee:
// E(s_pc) > max(E(s_ac), p E(s_bc) + (1-p) E(s_dc)), strictly.
bool theorem2_condition(const AggregationParams& p);

// Score distributions for the Monte Carlo oracle. Point masses reproduce the
// closed forms exactly; Beta keeps the configured means but adds variance
// (means must then lie in (0,1)).
enum class ScoreDist { PointMass, Beta };

struct McResult {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

// Samples the generative story behind the closed forms: neighbor types, label
// assignments, per-neighbor class-c scores, then averages y_uc over draws.
McResult monte_carlo_yuc(const AggregationParams& p, int64_t draws, uint64_t seed,
                         ScoreDist dist = ScoreDist::PointMass);

// ---- verification grid ----

struct GridPointReport {
  AggregationParams params;
  bool condition_holds = false;     // theorem condition at this point
  bool monotone = false;            // E(y_uc^k) strictly increasing over k = 0..k_max
  bool closed_form_within_3sigma = false;
  double closed_form = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  bool expected_nonmonotone = false;  // converse probe point
  bool ok = false;                    // this point's verdict
};

struct TheoremReport {
  std::vector<GridPointReport> points;
  bool all_ok = true;
};

// Randomized grid over both theorems plus deterministic converse probes.
// Every point checks closed form vs Monte Carlo within 3 sigma; points whose
// theorem condition holds additionally check strict monotonicity in k.
TheoremReport run_theorem_grid(int64_t points_per_theorem, int64_t draws, uint64_t seed,
                               int64_t k_max = 20);

// Same verification over caller-supplied points (the custom-grid CLI path).
TheoremReport check_points(const std::vector<AggregationParams>& points, int64_t draws,
                           uint64_t seed, int64_t k_max = 20);

// CSV of the grid (stable column order, one row per point).
std::string report_to_csv(const TheoremReport& report);

}  // namespace nrgnn::theory
