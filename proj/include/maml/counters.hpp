#pragma once

#include <atomic>
#include <cstdint>

namespace maml {

// Per-sample oracle work, counted (not timed) so complexity claims are
// checkable. Only algorithm-path evaluations are counted; diagnostic calls
// to the exact oracles pass no counter.
struct WorkCounters {
  std::atomic<long long> grad_evals{0};
  std::atomic<long long> hess_evals{0};

  void add_grads(long long n) { grad_evals.fetch_add(n, std::memory_order_relaxed); }
  void add_hessians(long long n) { hess_evals.fetch_add(n, std::memory_order_relaxed); }
};

}  // namespace maml
