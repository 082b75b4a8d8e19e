// Outer-stage training loops for both objective cases, with exact
// gradient-norm logging, sampled-smoothness stepsizes, work counters, and
// the uniformly random output index.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "maml/meta_gradient.hpp"
#include "maml/theory.hpp"

namespace maml {

struct RunConfig {
  ObjectiveCase objective = ObjectiveCase::Resampling;
  int N = 1;
  int K = 10;
  int B = 1;
  int S = 1, D = 1, T = 1;   // resampling batch sizes
  int Bprime = 1, DL = 1;    // stepsize-estimate batches
  double alpha = -1.0;       // < 0 selects 1/(8NL)
  double C_beta = 100.0;
  std::uint64_t seed = 0;
  bool record_exact_grad = true;
  bool allow_unsafe_alpha = false;  // divergence demos only
  bool record_timing = false;       // keep metrics byte-reproducible by default
  int zeta_draws = 100;
  int workers = 1;
  std::optional<Vector> w0;

  void validate() const;
};

struct IterationRow {
  int k = 0;
  double grad_norm = 0.0;  // exact ||grad L(w_k)||, NaN when not recorded
  double loss = 0.0;       // exact L(w_k), NaN when not recorded
  double beta = 0.0;
  double hat_L = 0.0;
  double elapsed_ms = 0.0;
};

struct RunMetrics {
  std::vector<IterationRow> rows;
  int zeta = 0;
  double zeta_mean_grad_norm = 0.0;  // mean over zeta_draws redraws
  double initial_grad_norm = 0.0;
  double final_grad_norm = 0.0;
  double delta = 0.0;        // L(w_0) - L*
  double loss_min = 0.0;     // the L* used for delta
  double theorem_rhs = 0.0;  // NaN when not evaluable
  bool diverged = false;
  int diverged_at = -1;
  bool ball_violation = false;
  long long grad_evals = 0;
  long long hess_evals = 0;
  double resolved_alpha = 0.0;
  Vector w_final;
};

RunMetrics run_maml_resampling(const RunConfig& cfg, const TaskDistribution& dist);
RunMetrics run_maml_finite_sum(const RunConfig& cfg, const TaskDistribution& dist);
RunMetrics run_maml(const RunConfig& cfg, const TaskDistribution& dist);

int select_zeta(const RunMetrics& metrics, RngStream& stream);

// Exact minimum of the meta objective when both stages are quadratic
// (quadratic and MSE families); nullopt if the reduced Hessian is not PSD.
std::optional<double> exact_meta_loss_min(const TaskDistribution& dist,
                                          double alpha, int N);

// L* by a long exact-gradient reference run (nonquadratic families).
double reference_meta_loss_min(const TaskDistribution& dist, double alpha, int N,
                               const Vector& w_start, int iters = 4000);

}  // namespace maml
