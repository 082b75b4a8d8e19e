#include "maml/meta_gradient.hpp"

namespace maml {

namespace {

const Task& at(const TaskDistribution& dist, int i) { return dist.tasks[i]; }

}  // namespace

double task_meta_loss(const Task& t, const Vector& w, double alpha, int N) {
  if (t.family == Family::FiniteSumMse) {
    const InnerPath p = inner_gd_finite(t, w, alpha, N);
    return query_loss(t, p.final_iterate());
  }
  const InnerPath p = inner_gd(t, w, alpha, N);
  return loss(t, p.final_iterate());
}

Vector exact_task_meta_grad(const Task& t, const Vector& w, double alpha, int N) {
  const bool finite_sum = t.family == Family::FiniteSumMse;
  const InnerPath p =
      finite_sum ? inner_gd_finite(t, w, alpha, N) : inner_gd(t, w, alpha, N);
  Vector v = finite_sum ? query_grad(t, p.final_iterate())
                        : grad(t, p.final_iterate());
  for (int j = N - 1; j >= 0; --j)
    v -= alpha * (hess(t, p.iterates[j]) * v);
  return v;
}

double meta_loss(const TaskDistribution& dist, const Vector& w, double alpha,
                 int N) {
  double s = 0.0;
  for (int i = 0; i < dist.num_tasks(); ++i)
    s += dist.weights[i] * task_meta_loss(at(dist, i), w, alpha, N);
  return s;
}

Vector exact_meta_grad(const TaskDistribution& dist, const Vector& w,
                       double alpha, int N) {
  Vector g = Vector::Zero(w.size());
  for (int i = 0; i < dist.num_tasks(); ++i)
    g += dist.weights[i] * exact_task_meta_grad(at(dist, i), w, alpha, N);
  return g;
}

MetaGradEstimate stoch_meta_grad_resample(const Task& t, int task_index,
                                          const Vector& w, double alpha, int N,
                                          int S, int D, int T,
                                          const RngStream& stream,
                                          WorkCounters* counters) {
  if (t.family == Family::FiniteSumMse)
    throw std::invalid_argument(
        "stoch_meta_grad_resample requires a resampling task");
  if (S < 1 || D < 1 || T < 1)
    throw std::invalid_argument("batch sizes S, D, T must be >= 1");

  MetaGradEstimate est;
  est.task_index = task_index;
  est.S = S;
  est.D = D;
  est.T = T;
  est.path = inner_sgd(t, task_index, w, alpha, N,
                       S, stream.split(StreamRole::InnerBatch), counters);

  RngStream t_stream = stream.split(StreamRole::OuterBatch);
  const SampleBatch outer = draw_batch(task_index, T, t_stream);
  Vector v = stoch_grad(t, est.path.final_iterate(), outer, counters);

  const RngStream d_root = stream.split(StreamRole::HessianBatch);
  for (int j = N - 1; j >= 0; --j) {
    RngStream d_stream = d_root.split(static_cast<std::uint64_t>(j));
    const SampleBatch hb = draw_batch(task_index, D, d_stream);
    v -= alpha * (stoch_hess(t, est.path.iterates[j], hb, counters) * v);
  }
  est.value = std::move(v);
  if (!est.value.allFinite())
    throw DivergenceError(N, "meta-gradient estimate is non-finite");
  return est;
}

MetaGradEstimate meta_grad_finite_sum(const Task& t, int task_index,
                                      const Vector& w, double alpha, int N,
                                      WorkCounters* counters) {
  if (t.family != Family::FiniteSumMse)
    throw std::invalid_argument("meta_grad_finite_sum requires a finite-sum task");
  MetaGradEstimate est;
  est.task_index = task_index;
  est.path = inner_gd_finite(t, w, alpha, N, counters);
  Vector v = query_grad(t, est.path.final_iterate());
  const auto& mp = std::get<MseParams>(t.params);
  if (counters) counters->add_grads(mp.query_x.rows());
  for (int j = N - 1; j >= 0; --j) {
    v -= alpha * (hess(t, est.path.iterates[j]) * v);
    if (counters) counters->add_hessians(mp.support_x.rows());
  }
  est.value = std::move(v);
  return est;
}

}  // namespace maml
