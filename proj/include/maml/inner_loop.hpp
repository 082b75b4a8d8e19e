// N-step inner-stage optimization paths: exact gradient descent, stochastic
// gradient descent with fresh batches, and the finite-sum full-gradient loop.

#pragma once

#include <stdexcept>
#include <vector>

#include "maml/task.hpp"

namespace maml {

enum class InnerMode { ExactGd, Sgd, FiniteSumGd };

// Raised when an iterate turns non-finite; carries the step at which the
// path broke so stepsize-violation experiments get a clean signal.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct InnerPath {
  std::vector<Vector> iterates;      // w_0 ... w_N
  double alpha = 0.0;
  std::vector<SampleBatch> batches;  // one per step, SGD only
  InnerMode mode = InnerMode::ExactGd;

  int steps() const { return static_cast<int>(iterates.size()) - 1; }
  const Vector& final_iterate() const { return iterates.back(); }
};

InnerPath inner_gd(const Task& t, const Vector& w, double alpha, int N);

// Resampling case: one fresh batch of size S per step, drawn from per-step
// substreams of the given stream; batches are recorded in the path.
InnerPath inner_sgd(const Task& t, int task_index, const Vector& w, double alpha,
                    int N, int S, const RngStream& stream,
                    WorkCounters* counters = nullptr);

// Finite-sum case: full gradient steps on the support loss l_S.
InnerPath inner_gd_finite(const Task& t, const Vector& w, double alpha, int N,
                          WorkCounters* counters = nullptr);

}  // namespace maml
