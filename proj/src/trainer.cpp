#include "maml/trainer.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace maml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Labels for the per-iteration stream hierarchy.
constexpr std::uint64_t kIterRoot = 0xA110;
constexpr std::uint64_t kSlotRoot = 0x510;
constexpr std::uint64_t kStepsizeRoot = 0x520;

struct LoopContext {
  double alpha = 0.0;
  bool safe_alpha = true;
  double c_L = 0.0;       // smoothness constant of the active case
  double det_term = 0.0;  // (1+alpha L)^{2N} L
};

// Runs the B per-task estimates for one outer iteration, optionally across
// worker threads; the reduction order is fixed by slot index either way.
template <typename SlotFn>
Vector mean_over_slots(int B, int d, int workers, const SlotFn& fn) {
  std::vector<Vector> values(B);
  if (workers <= 1 || B == 1) {
    for (int m = 0; m < B; ++m) values[m] = fn(m);
  } else {
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    const int nw = std::min(workers, B);
    futs.reserve(nw);
    for (int t = 0; t < nw; ++t) {
      futs.push_back(std::async(std::launch::async, [&] {
        for (int m = next.fetch_add(1); m < B; m = next.fetch_add(1))
          values[m] = fn(m);
      }));
    }
    for (auto& f : futs) f.get();
  }
  Vector sum = Vector::Zero(d);
  for (int m = 0; m < B; ++m) sum += values[m];
  return sum / static_cast<double>(B);
}

Vector initial_point(const RunConfig& cfg, const TaskDistribution& dist) {
  if (cfg.w0) {
    if (cfg.w0->size() != dist.dimension())
      throw std::invalid_argument("w0 dimension mismatch");
    return *cfg.w0;
  }
  RngStream s = RngStream(cfg.seed).split(StreamRole::Init);
  return s.uniform_in_ball(dist.dimension(), dist.domain_radius / 2.0);
}

// Resolves the inner stepsize and whether it sits in the regime where the
// theoretical constants are defined. N = 0 has no stepsize bound.
std::pair<double, bool> resolve_alpha(const RunConfig& cfg,
                                      const TaskDistribution& dist) {
  if (cfg.N == 0) {
    if (cfg.alpha < 0.0)
      throw std::invalid_argument("N = 0 runs need an explicit alpha");
    return {cfg.alpha, false};
  }
  const double a =
      cfg.alpha < 0.0 ? default_alpha(cfg.N, dist.profile.L) : cfg.alpha;
  const double bound = inner_stepsize_bound(cfg.N, dist.profile.L);
  if (!(a < bound) && !cfg.allow_unsafe_alpha)
    throw std::domain_error(
        "inner stepsize precondition violated: alpha must satisfy "
        "alpha < (2^{1/(2N)} - 1)/L = " +
        std::to_string(bound) + ", got alpha = " + std::to_string(a) +
        " (pass allow_unsafe_alpha to run a divergence demo)");
  return {a, a < bound};
}

template <typename Constants>
void finish_metrics(const RunConfig& cfg, const TaskDistribution& dist,
                    RunMetrics& m, const Constants* constants,
                    double alpha) {
  RngStream zeta_stream = RngStream(cfg.seed).split(StreamRole::ZetaDraw);
  m.zeta = select_zeta(m, zeta_stream);
  if (cfg.record_exact_grad && !m.rows.empty()) {
    double acc = 0.0;
    for (int i = 0; i < cfg.zeta_draws; ++i) {
      RngStream ds = zeta_stream.split(static_cast<std::uint64_t>(i));
      acc += m.rows[select_zeta(m, ds)].grad_norm;
    }
    m.zeta_mean_grad_norm = acc / cfg.zeta_draws;
    m.initial_grad_norm = m.rows.front().grad_norm;
    m.final_grad_norm = m.rows.back().grad_norm;

    const std::optional<double> closed = exact_meta_loss_min(dist, alpha, cfg.N);
    const Vector w0 = initial_point(cfg, dist);
    m.loss_min = closed ? *closed
                        : reference_meta_loss_min(dist, alpha, cfg.N, w0);
    m.delta = m.rows.front().loss - m.loss_min;
    if (constants != nullptr && constants->theta_factor > 0.0 && !m.diverged) {
      if constexpr (std::is_same_v<Constants, ResamplingConstants>)
        m.theorem_rhs = theorem1_rhs(*constants, m.delta, cfg.K, cfg.S, cfg.B);
      else
        m.theorem_rhs = theorem2_rhs(*constants, m.delta, cfg.K, cfg.B);
    } else {
      m.theorem_rhs = kNaN;
    }
  } else {
    m.zeta_mean_grad_norm = kNaN;
    m.initial_grad_norm = kNaN;
    m.final_grad_norm = kNaN;
    m.delta = kNaN;
    m.loss_min = kNaN;
    m.theorem_rhs = kNaN;
  }
}

}  // namespace

void RunConfig::validate() const {
  if (N < 0) throw std::invalid_argument("N must be >= 0");
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  const int sizes[] = {B, S, D, T, Bprime, DL};
  for (int v : sizes)
    if (v < 1) throw std::invalid_argument("batch sizes must be >= 1");
  if (C_beta <= 0.0) throw std::invalid_argument("C_beta must be positive");
  if (zeta_draws < 1) throw std::invalid_argument("zeta_draws must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

int select_zeta(const RunMetrics& metrics, RngStream& stream) {
  const int k = static_cast<int>(metrics.rows.size());
  if (k == 0) throw std::invalid_argument("select_zeta on empty metrics");
  return static_cast<int>(stream.next_u64() % static_cast<std::uint64_t>(k));
}

RunMetrics run_maml_resampling(const RunConfig& cfg,
                               const TaskDistribution& dist) {
  cfg.validate();
  if (cfg.objective != ObjectiveCase::Resampling ||
      dist.objective != ObjectiveCase::Resampling)
    throw std::invalid_argument("run_maml_resampling needs a resampling config "
                                "and family");
  const auto [alpha, safe] = resolve_alpha(cfg, dist);

  // Constants are available only in the safe-stepsize regime; unsafe runs
  // still need c_L and the deterministic term for the stepsize estimate.
  std::optional<ResamplingConstants> constants;
  ResamplingConstants loose;
  if (safe) {
    constants = resampling_constants(dist.profile, alpha, cfg.N, cfg.C_beta,
                                     cfg.S, cfg.D, cfg.T, cfg.B);
    loose = *constants;
  } else {
    loose.alpha = alpha;
    loose.N = cfg.N;
    loose.profile = dist.profile;
    const double x = 1.0 + alpha * dist.profile.L;
    const double rho = dist.profile.rho, L = dist.profile.L;
    loose.c_L = cfg.N >= 1
                    ? (ipow(x, cfg.N - 1) * alpha * rho +
                       (rho / L) * ipow(x, cfg.N) * (ipow(x, cfg.N - 1) - 1.0)) *
                          ipow(x, cfg.N)
                    : 0.0;
    loose.theta_factor = -1.0;
  }

  RunMetrics metrics;
  WorkCounters counters;
  Vector w = initial_point(cfg, dist);
  const RngStream run_root = RngStream(cfg.seed);
  const RngStream iter_root = run_root.split(kIterRoot);
  const auto t_start = Clock::now();

  for (int k = 0; k < cfg.K; ++k) {
    const RngStream k_stream = iter_root.split(static_cast<std::uint64_t>(k));
    IterationRow row;
    row.k = k;
    row.grad_norm = kNaN;
    row.loss = kNaN;
    if (cfg.record_exact_grad) {
      row.grad_norm = exact_meta_grad(dist, w, alpha, cfg.N).norm();
      row.loss = meta_loss(dist, w, alpha, cfg.N);
    }
    try {
      RngStream draw = k_stream.split(StreamRole::TaskDraw);
      std::vector<int> task_ids(cfg.B);
      for (int m = 0; m < cfg.B; ++m) task_ids[m] = draw.draw_index(dist.weights);

      const double hat_l =
          hat_L_resample(dist, w, cfg.Bprime, cfg.DL, loose,
                         k_stream.split(kStepsizeRoot), &counters);
      const double beta = meta_stepsize(hat_l, cfg.C_beta);

      const RngStream slot_root = k_stream.split(kSlotRoot);
      const Vector mean_g = mean_over_slots(
          cfg.B, dist.dimension(), cfg.workers, [&](int m) {
            const RngStream slot_stream =
                slot_root.split(static_cast<std::uint64_t>(m));
            return stoch_meta_grad_resample(dist.tasks[task_ids[m]],
                                            task_ids[m], w, alpha, cfg.N, cfg.S,
                                            cfg.D, cfg.T, slot_stream, &counters)
                .value;
          });

      w -= beta * mean_g;
      row.beta = beta;
      row.hat_L = hat_l;
      if (!w.allFinite()) throw DivergenceError(k, "meta iterate diverged");
    } catch (const DivergenceError&) {
      metrics.diverged = true;
      metrics.diverged_at = k;
      metrics.rows.push_back(row);
      break;
    }
    if (w.norm() > dist.domain_radius) metrics.ball_violation = true;
    if (cfg.record_timing)
      row.elapsed_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - t_start)
              .count();
    metrics.rows.push_back(row);
  }

  metrics.w_final = w;
  metrics.resolved_alpha = alpha;
  metrics.grad_evals = counters.grad_evals.load();
  metrics.hess_evals = counters.hess_evals.load();
  finish_metrics(cfg, dist, metrics,
                 constants ? &*constants : nullptr, alpha);
  return metrics;
}

RunMetrics run_maml_finite_sum(const RunConfig& cfg,
                               const TaskDistribution& dist) {
  cfg.validate();
  if (cfg.objective != ObjectiveCase::FiniteSum ||
      dist.objective != ObjectiveCase::FiniteSum)
    throw std::invalid_argument("run_maml_finite_sum needs a finite-sum config "
                                "and family");
  const auto [alpha, safe] = resolve_alpha(cfg, dist);

  std::optional<FiniteSumConstants> constants;
  FiniteSumConstants loose;
  if (safe) {
    constants =
        finite_sum_constants(dist.profile, alpha, cfg.N, cfg.C_beta, cfg.B);
    loose = *constants;
  } else {
    loose.alpha = alpha;
    loose.N = cfg.N;
    loose.profile = dist.profile;
    const double x = 1.0 + alpha * dist.profile.L;
    loose.c_b = cfg.N >= 1 ? (alpha * dist.profile.rho +
                              (dist.profile.rho / dist.profile.L) *
                                  ipow(x, cfg.N - 1)) *
                                 ipow(x, 2 * cfg.N)
                           : 0.0;
    loose.c_L = loose.c_b;
    loose.theta_factor = -1.0;
  }

  RunMetrics metrics;
  WorkCounters counters;
  Vector w = initial_point(cfg, dist);
  const RngStream iter_root = RngStream(cfg.seed).split(kIterRoot);
  const auto t_start = Clock::now();

  for (int k = 0; k < cfg.K; ++k) {
    const RngStream k_stream = iter_root.split(static_cast<std::uint64_t>(k));
    IterationRow row;
    row.k = k;
    row.grad_norm = kNaN;
    row.loss = kNaN;
    if (cfg.record_exact_grad) {
      row.grad_norm = exact_meta_grad(dist, w, alpha, cfg.N).norm();
      row.loss = meta_loss(dist, w, alpha, cfg.N);
    }
    try {
      RngStream draw = k_stream.split(StreamRole::TaskDraw);
      std::vector<int> task_ids(cfg.B);
      for (int m = 0; m < cfg.B; ++m) task_ids[m] = draw.draw_index(dist.weights);

      const double hat_l = hat_L_finite(dist, w, cfg.Bprime, loose,
                                        k_stream.split(kStepsizeRoot), &counters);
      const double beta = meta_stepsize(hat_l, cfg.C_beta);

      const Vector mean_g = mean_over_slots(
          cfg.B, dist.dimension(), cfg.workers, [&](int m) {
            return meta_grad_finite_sum(dist.tasks[task_ids[m]], task_ids[m], w,
                                        alpha, cfg.N, &counters)
                .value;
          });

      w -= beta * mean_g;
      row.beta = beta;
      row.hat_L = hat_l;
      if (!w.allFinite()) throw DivergenceError(k, "meta iterate diverged");
    } catch (const DivergenceError&) {
      metrics.diverged = true;
      metrics.diverged_at = k;
      metrics.rows.push_back(row);
      break;
    }
    if (w.norm() > dist.domain_radius) metrics.ball_violation = true;
    if (cfg.record_timing)
      row.elapsed_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - t_start)
              .count();
    metrics.rows.push_back(row);
  }

  metrics.w_final = w;
  metrics.resolved_alpha = alpha;
  metrics.grad_evals = counters.grad_evals.load();
  metrics.hess_evals = counters.hess_evals.load();
  finish_metrics(cfg, dist, metrics,
                 constants ? &*constants : nullptr, alpha);
  return metrics;
}

RunMetrics run_maml(const RunConfig& cfg, const TaskDistribution& dist) {
  return cfg.objective == ObjectiveCase::Resampling
             ? run_maml_resampling(cfg, dist)
             : run_maml_finite_sum(cfg, dist);
}

std::optional<double> exact_meta_loss_min(const TaskDistribution& dist,
                                          double alpha, int N) {
  if (dist.family == Family::Trig) return std::nullopt;
  const int d = dist.dimension();
  Matrix h = Matrix::Zero(d, d);
  Vector lin = Vector::Zero(d);
  double cst = 0.0;
  for (int i = 0; i < dist.num_tasks(); ++i) {
    const Task& t = dist.tasks[i];
    Matrix a_in, q_out;
    Vector b_in, g_out;
    double c0 = 0.0;
    if (t.family == Family::Quadratic) {
      const auto& q = std::get<QuadraticParams>(t.params);
      a_in = q.a;
      b_in = q.b;
      q_out = q.a;
      g_out = q.b;
    } else {
      const auto& m = std::get<MseParams>(t.params);
      a_in = m.support_gram;
      b_in = -m.support_xy;
      q_out = m.query_gram;
      g_out = -m.query_xy;
      c0 = m.query_yy;
    }
    // inner path: w_N = P w + s with P = (I - alpha A)^N
    Matrix step = Matrix::Identity(d, d) - alpha * a_in;
    Matrix p = Matrix::Identity(d, d);
    Vector s = Vector::Zero(d);
    for (int j = 0; j < N; ++j) {
      s = step * s - alpha * b_in;
      p = step * p;
    }
    h += dist.weights[i] * (p.transpose() * q_out * p);
    lin += dist.weights[i] * (p.transpose() * (q_out * s + g_out));
    cst += dist.weights[i] * (0.5 * s.dot(q_out * s) + g_out.dot(s) + c0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, sym_spectral_norm(h)))
    return std::nullopt;
  Eigen::LDLT<Matrix> ldlt(h);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const Vector wstar = ldlt.solve(-lin);
  // A singular reduced Hessian (rank-deficient data) can leave a residual;
  // fall back to the reference run in that case.
  if ((h * wstar + lin).norm() > 1e-8 * std::max(1.0, lin.norm()))
    return std::nullopt;
  return 0.5 * wstar.dot(h * wstar) + lin.dot(wstar) + cst;
}

double reference_meta_loss_min(const TaskDistribution& dist, double alpha, int N,
                               const Vector& w_start, int iters) {
  Vector w = w_start;
  double best = meta_loss(dist, w, alpha, N);
  const double x2n = ipow(1.0 + alpha * dist.profile.L, 2 * N);
  for (int k = 0; k < iters; ++k) {
    const Vector g = exact_meta_grad(dist, w, alpha, N);
    if (g.norm() < 1e-12) break;
    // Safe exact-gradient step under the local smoothness estimate.
    const double lw = x2n * dist.profile.L +
                      ((dist.profile.rho > 0.0)
                           ? 0.6 * dist.profile.rho / dist.profile.L *
                                 mean_grad_norm(dist, w)
                           : 0.0);
    w -= (0.5 / lw) * g;
    best = std::min(best, meta_loss(dist, w, alpha, N));
  }
  return best;
}

}  // namespace maml
