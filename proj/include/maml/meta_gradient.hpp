// The meta gradient: the exact product form computed on deterministic inner
// paths, and the stochastic estimators for the resampling and finite-sum
// cases. The Hessian factors are applied as matrix-vector products from the
// last inner step back to the first, which realizes the chain-rule product
// with the step-0 factor outermost at O(N d^2) cost.

#pragma once

#include "maml/inner_loop.hpp"
#include "maml/task.hpp"

namespace maml {

struct MetaGradEstimate {
  Vector value;
  int task_index = 0;
  int S = 0, D = 0, T = 0;  // batch sizes; zero for finite-sum
  InnerPath path;
};

// Post-adaptation loss of one task: l_i(w_N) on the exact gradient-descent
// path (query loss l_T for finite-sum tasks).
double task_meta_loss(const Task& t, const Vector& w, double alpha, int N);

// Exact per-task meta gradient on the deterministic inner path.
Vector exact_task_meta_grad(const Task& t, const Vector& w, double alpha, int N);

// Exact meta objective and its gradient as weighted sums over the finite
// family; this is the noiseless ground truth for every bound check.
double meta_loss(const TaskDistribution& dist, const Vector& w, double alpha,
                 int N);
Vector exact_meta_grad(const TaskDistribution& dist, const Vector& w,
                       double alpha, int N);

// Resampling estimator: SGD inner path on batches S_{k,j}, N fresh Hessian
// batches D_{k,j} and one gradient batch T_k, all from disjoint substreams.
MetaGradEstimate stoch_meta_grad_resample(const Task& t, int task_index,
                                          const Vector& w, double alpha, int N,
                                          int S, int D, int T,
                                          const RngStream& stream,
                                          WorkCounters* counters = nullptr);

// Finite-sum estimator: deterministic given the task; full support-Hessian
// factors applied to the query gradient at the end of the support path.
MetaGradEstimate meta_grad_finite_sum(const Task& t, int task_index,
                                      const Vector& w, double alpha, int N,
                                      WorkCounters* counters = nullptr);

}  // namespace maml
