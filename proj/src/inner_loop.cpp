#include "maml/inner_loop.hpp"

namespace maml {

namespace {

void check_args(const Task& t, const Vector& w, double alpha, int N) {
  if (w.size() != t.dimension)
    throw std::invalid_argument("dimension mismatch in inner loop");
  if (N < 0) throw std::invalid_argument("N must be >= 0");
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
}

void check_finite(const Vector& v, int step) {
  if (!v.allFinite())
    throw DivergenceError(step, "inner path diverged at step " +
                                    std::to_string(step));
}

}  // namespace

InnerPath inner_gd(const Task& t, const Vector& w, double alpha, int N) {
  check_args(t, w, alpha, N);
  InnerPath p;
  p.alpha = alpha;
  p.mode = InnerMode::ExactGd;
  p.iterates.reserve(N + 1);
  p.iterates.push_back(w);
  for (int j = 0; j < N; ++j) {
    Vector next = p.iterates.back() - alpha * grad(t, p.iterates.back());
    check_finite(next, j + 1);
    p.iterates.push_back(std::move(next));
  }
  return p;
}

InnerPath inner_sgd(const Task& t, int task_index, const Vector& w, double alpha,
                    int N, int S, const RngStream& stream,
                    WorkCounters* counters) {
  check_args(t, w, alpha, N);
  if (t.family == Family::FiniteSumMse)
    throw std::invalid_argument(
        "inner_sgd requires a resampling task; use inner_gd_finite");
  if (S < 1) throw std::invalid_argument("S must be >= 1");
  InnerPath p;
  p.alpha = alpha;
  p.mode = InnerMode::Sgd;
  p.iterates.reserve(N + 1);
  p.batches.reserve(N);
  p.iterates.push_back(w);
  for (int j = 0; j < N; ++j) {
    RngStream step_stream = stream.split(static_cast<std::uint64_t>(j));
    SampleBatch batch = draw_batch(task_index, S, step_stream);
    Vector next = p.iterates.back() -
                  alpha * stoch_grad(t, p.iterates.back(), batch, counters);
    check_finite(next, j + 1);
    p.iterates.push_back(std::move(next));
    p.batches.push_back(std::move(batch));
  }
  return p;
}

InnerPath inner_gd_finite(const Task& t, const Vector& w, double alpha, int N,
                          WorkCounters* counters) {
  check_args(t, w, alpha, N);
  if (t.family != Family::FiniteSumMse)
    throw std::invalid_argument(
        "inner_gd_finite requires a finite-sum task; use inner_gd/inner_sgd");
  InnerPath p;
  p.alpha = alpha;
  p.mode = InnerMode::FiniteSumGd;
  p.iterates.reserve(N + 1);
  p.iterates.push_back(w);
  const auto& mp = std::get<MseParams>(t.params);
  const long long support = mp.support_x.rows();
  for (int j = 0; j < N; ++j) {
    Vector next = p.iterates.back() - alpha * grad(t, p.iterates.back());
    check_finite(next, j + 1);
    p.iterates.push_back(std::move(next));
    if (counters) counters->add_grads(support);
  }
  return p;
}

}  // namespace maml
