#include "maml/task.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace maml {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_dim(const Task& t, const Vector& w) {
  if (w.size() != t.dimension)
    throw std::invalid_argument("dimension mismatch: task d=" +
                                std::to_string(t.dimension) + ", w has " +
                                std::to_string(w.size()));
}

// Per-sample noise expansion. The draw order (eps first, then the upper
// triangle of the symmetric perturbation row by row) is shared by the
// gradient and Hessian paths so a sample id denotes one fixed realization.
struct NoiseScales {
  double hess = 0.0;
  double grad = 0.0;
};

NoiseScales noise_scales(const Task& t) {
  if (const auto* q = std::get_if<QuadraticParams>(&t.params))
    return {q->hess_noise_scale, q->grad_noise_scale};
  if (const auto* tr = std::get_if<TrigParams>(&t.params))
    return {tr->hess_noise_scale, tr->grad_noise_scale};
  return {};
}

RngStream sample_stream(const Task& t, std::uint64_t sample_id) {
  return RngStream(t.noise_key).split(StreamRole::SampleNoise).split(sample_id);
}

// Adds (E_tau w + eps_tau) for one sample into acc.
void accumulate_grad_noise(const Task& t, const Vector& w, std::uint64_t id,
                           Vector& acc) {
  const auto [s_h, s_g] = noise_scales(t);
  if (s_h == 0.0 && s_g == 0.0) return;
  RngStream rs = sample_stream(t, id);
  const int d = t.dimension;
  if (s_g > 0.0) {
    for (int i = 0; i < d; ++i) acc[i] += s_g * rs.gaussian();
  }
  if (s_h > 0.0) {
    const double diag = s_h * std::sqrt(2.0);
    for (int p = 0; p < d; ++p) {
      acc[p] += diag * rs.gaussian() * w[p];
      for (int q = p + 1; q < d; ++q) {
        const double e = s_h * rs.gaussian();
        acc[p] += e * w[q];
        acc[q] += e * w[p];
      }
    }
  }
}

// Adds E_tau for one sample into acc; draw order matches the gradient path.
void accumulate_hess_noise(const Task& t, std::uint64_t id, Matrix& acc) {
  const auto [s_h, s_g] = noise_scales(t);
  if (s_h == 0.0 && s_g == 0.0) return;
  RngStream rs = sample_stream(t, id);
  const int d = t.dimension;
  if (s_g > 0.0) {
    for (int i = 0; i < d; ++i) rs.gaussian();
  }
  if (s_h > 0.0) {
    const double diag = s_h * std::sqrt(2.0);
    for (int p = 0; p < d; ++p) {
      acc(p, p) += diag * rs.gaussian();
      for (int q = p + 1; q < d; ++q) {
        const double e = s_h * rs.gaussian();
        acc(p, q) += e;
        acc(q, p) += e;
      }
    }
  }
}

Matrix random_symmetric(RngStream& rs, int d) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rs.gaussian();
  return 0.5 * (g + g.transpose());
}

Matrix random_orthogonal(RngStream& rs, int d) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rs.gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  return q;
}

// Exact sup over the ball of E_i || (A_i - mean) w + (b_i - mean) ||^2 for a
// family of affine maps; used for the task-gradient variance constant.
double affine_family_variance_sup(const std::vector<Matrix>& mats,
                                  const std::vector<Vector>& vecs,
                                  const Vector& weights, double radius) {
  const int n = static_cast<int>(mats.size());
  const int d = static_cast<int>(vecs.front().size());
  Matrix mbar = Matrix::Zero(d, d);
  Vector vbar = Vector::Zero(d);
  for (int i = 0; i < n; ++i) {
    mbar += weights[i] * mats[i];
    vbar += weights[i] * vecs[i];
  }
  Matrix m2 = Matrix::Zero(d, d);
  Vector m1 = Vector::Zero(d);
  double m0 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Matrix dm = mats[i] - mbar;
    const Vector dv = vecs[i] - vbar;
    m2 += weights[i] * dm.transpose() * dm;
    m1 += weights[i] * dm.transpose() * dv;
    m0 += weights[i] * dv.squaredNorm();
  }
  return max_convex_quadratic_on_ball(m2, m1, m0, radius);
}

// Calibrates the additive per-sample noise so Assumption 3 holds with the
// requested constants on the ball: E||E_tau||_F^2 = sigma_H^2 and
// sup_ball E||E_tau w + eps_tau||^2 = sigma_g^2.
NoiseScales calibrate_sample_noise(int d, double sigma_g, double sigma_H,
                                   double R) {
  require(sigma_g >= 0.0 && sigma_H >= 0.0, "variances must be nonnegative");
  NoiseScales s;
  s.hess = sigma_H > 0.0 ? sigma_H / std::sqrt(double(d) * double(d + 1)) : 0.0;
  const double hess_grad_part = sigma_H * sigma_H * R * R / double(d);
  require(sigma_g * sigma_g + 1e-15 >= hess_grad_part,
          "sigma_g too small: the Hessian perturbation already contributes "
          "sigma_H^2 R^2 / d to the gradient variance on the ball");
  const double c2 = std::max(0.0, (sigma_g * sigma_g - hess_grad_part) / double(d));
  s.grad = std::sqrt(c2);
  return s;
}

SmoothnessProfile quadratic_profile(const std::vector<Task>& tasks,
                                    const Vector& weights, double R) {
  SmoothnessProfile p;
  std::vector<Matrix> mats;
  std::vector<Vector> vecs;
  for (const auto& t : tasks) {
    const auto& q = std::get<QuadraticParams>(t.params);
    p.L = std::max(p.L, sym_spectral_norm(q.a));
    mats.push_back(q.a);
    vecs.push_back(q.b);
  }
  p.rho = 0.0;
  p.sigma = tasks.size() > 1
                ? std::sqrt(affine_family_variance_sup(mats, vecs, weights, R))
                : 0.0;
  const auto& q0 = std::get<QuadraticParams>(tasks.front().params);
  const int d = tasks.front().dimension;
  p.sigma_H = q0.hess_noise_scale * std::sqrt(double(d) * double(d + 1));
  p.sigma_g = std::sqrt(q0.hess_noise_scale * q0.hess_noise_scale * (d + 1) * R * R +
                        q0.grad_noise_scale * q0.grad_noise_scale * d);
  return p;
}

SmoothnessProfile trig_profile(const std::vector<Task>& tasks,
                               const Vector& weights, double R) {
  SmoothnessProfile p;
  double mean_ca = 0.0;
  for (int i = 0; i < static_cast<int>(tasks.size()); ++i) {
    const auto& tr = std::get<TrigParams>(tasks[i].params);
    const double an = tr.a.norm();
    p.L = std::max(p.L, std::abs(tr.c) * an * an + tr.lambda);
    p.rho = std::max(p.rho, std::abs(tr.c) * an * an * an);
    mean_ca += weights[i] * std::abs(tr.c) * an;
  }
  double var = 0.0;
  for (int i = 0; i < static_cast<int>(tasks.size()); ++i) {
    const auto& tr = std::get<TrigParams>(tasks[i].params);
    const double ca = std::abs(tr.c) * tr.a.norm();
    var += weights[i] * (ca + mean_ca) * (ca + mean_ca);
  }
  p.sigma = tasks.size() > 1 ? std::sqrt(var) : 0.0;
  const auto& t0 = std::get<TrigParams>(tasks.front().params);
  const int d = tasks.front().dimension;
  p.sigma_H = t0.hess_noise_scale * std::sqrt(double(d) * double(d + 1));
  p.sigma_g = std::sqrt(t0.hess_noise_scale * t0.hess_noise_scale * (d + 1) * R * R +
                        t0.grad_noise_scale * t0.grad_noise_scale * d);
  return p;
}

SmoothnessProfile mse_profile(const std::vector<Task>& tasks,
                              const Vector& weights, double R) {
  SmoothnessProfile p;
  std::vector<Matrix> mats;
  std::vector<Vector> vecs;
  for (int i = 0; i < static_cast<int>(tasks.size()); ++i) {
    const auto& m = std::get<MseParams>(tasks[i].params);
    p.L = std::max({p.L, sym_spectral_norm(m.support_gram),
                    sym_spectral_norm(m.query_gram)});
    p.b += weights[i] * m.b_i;
    p.b_tilde += weights[i] * m.b_i * m.b_i;
    mats.push_back(m.query_gram);
    vecs.push_back(-m.query_xy);
  }
  p.rho = 0.0;
  p.sigma = tasks.size() > 1
                ? std::sqrt(affine_family_variance_sup(mats, vecs, weights, R))
                : 0.0;
  return p;
}

SmoothnessProfile compute_profile(const std::vector<Task>& tasks,
                                  const Vector& weights, double R) {
  switch (tasks.front().family) {
    case Family::Quadratic:
      return quadratic_profile(tasks, weights, R);
    case Family::Trig:
      return trig_profile(tasks, weights, R);
    case Family::FiniteSumMse:
      return mse_profile(tasks, weights, R);
  }
  throw std::logic_error("unknown family");
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Quadratic: return "quadratic";
    case Family::Trig: return "trig";
    case Family::FiniteSumMse: return "finite_sum_mse";
  }
  return "?";
}

std::string to_string(ObjectiveCase c) {
  return c == ObjectiveCase::Resampling ? "resampling" : "finite_sum";
}

Family family_from_string(const std::string& s) {
  if (s == "quadratic") return Family::Quadratic;
  if (s == "trig") return Family::Trig;
  if (s == "finite_sum_mse") return Family::FiniteSumMse;
  throw std::invalid_argument("unknown family: " + s);
}

ObjectiveCase case_from_string(const std::string& s) {
  if (s == "resampling") return ObjectiveCase::Resampling;
  if (s == "finite_sum") return ObjectiveCase::FiniteSum;
  throw std::invalid_argument("unknown objective case: " + s);
}

void SmoothnessProfile::validate() const {
  const double vals[] = {L, rho, sigma, sigma_g, sigma_H, b, b_tilde};
  for (double v : vals)
    require(std::isfinite(v) && v >= 0.0,
            "smoothness profile fields must be nonnegative and finite");
}

void MseParams::finalize(double domain_radius) {
  const auto grams = [](const Matrix& x, const Vector& y, Matrix& gram,
                        Vector& xy, double& yy) {
    const double n = static_cast<double>(x.rows());
    gram = (2.0 / n) * x.transpose() * x;
    xy = (2.0 / n) * x.transpose() * y;
    yy = y.squaredNorm() / n;
  };
  grams(support_x, support_y, support_gram, support_xy, support_yy);
  grams(query_x, query_y, query_gram, query_xy, query_yy);
  // grad l_S - grad l_T = (H_S - H_T) w - (r_S - r_T); exact max on the ball.
  b_i = max_affine_norm_on_ball(support_gram - query_gram, support_xy - query_xy,
                                domain_radius);
}

void TaskDistribution::validate() const {
  require(!tasks.empty(), "task distribution must contain at least one task");
  require(weights.size() == static_cast<Eigen::Index>(tasks.size()),
          "weights/tasks size mismatch");
  require(weights.minCoeff() >= 0.0, "weights must be nonnegative");
  require(std::abs(weights.sum() - 1.0) <= 1e-12, "weights must sum to 1");
  require(domain_radius > 0.0, "domain radius must be positive");
  const int d = tasks.front().dimension;
  for (const auto& t : tasks) {
    require(t.dimension == d, "all tasks must share one dimension");
    require(t.family == family, "all tasks must share the family");
  }
  const bool fs = family == Family::FiniteSumMse;
  require(fs == (objective == ObjectiveCase::FiniteSum),
          "finite_sum_mse family pairs with the finite_sum case and vice versa");
  profile.validate();
}

double loss(const Task& t, const Vector& w) {
  check_dim(t, w);
  if (const auto* q = std::get_if<QuadraticParams>(&t.params))
    return 0.5 * w.dot(q->a * w) + q->b.dot(w);
  if (const auto* tr = std::get_if<TrigParams>(&t.params))
    return tr->c * (1.0 - std::cos(tr->a.dot(w) + tr->phase)) +
           0.5 * tr->lambda * w.squaredNorm();
  const auto& m = std::get<MseParams>(t.params);
  return 0.5 * w.dot(m.support_gram * w) - m.support_xy.dot(w) + m.support_yy;
}

Vector grad(const Task& t, const Vector& w) {
  check_dim(t, w);
  if (const auto* q = std::get_if<QuadraticParams>(&t.params))
    return q->a * w + q->b;
  if (const auto* tr = std::get_if<TrigParams>(&t.params))
    return tr->c * std::sin(tr->a.dot(w) + tr->phase) * tr->a + tr->lambda * w;
  const auto& m = std::get<MseParams>(t.params);
  return m.support_gram * w - m.support_xy;
}

Matrix hess(const Task& t, const Vector& w) {
  check_dim(t, w);
  if (const auto* q = std::get_if<QuadraticParams>(&t.params)) return q->a;
  if (const auto* tr = std::get_if<TrigParams>(&t.params)) {
    const int d = t.dimension;
    return tr->c * std::cos(tr->a.dot(w) + tr->phase) * (tr->a * tr->a.transpose()) +
           tr->lambda * Matrix::Identity(d, d);
  }
  return std::get<MseParams>(t.params).support_gram;
}

double query_loss(const Task& t, const Vector& w) {
  if (const auto* m = std::get_if<MseParams>(&t.params)) {
    check_dim(t, w);
    return 0.5 * w.dot(m->query_gram * w) - m->query_xy.dot(w) + m->query_yy;
  }
  return loss(t, w);
}

Vector query_grad(const Task& t, const Vector& w) {
  if (const auto* m = std::get_if<MseParams>(&t.params)) {
    check_dim(t, w);
    return m->query_gram * w - m->query_xy;
  }
  return grad(t, w);
}

Matrix query_hess(const Task& t, const Vector& w) {
  if (const auto* m = std::get_if<MseParams>(&t.params)) {
    check_dim(t, w);
    return m->query_gram;
  }
  return hess(t, w);
}

SampleBatch draw_batch(int task_index, int size, RngStream& stream) {
  require(size >= 1, "batch size must be >= 1");
  SampleBatch b;
  b.task_index = task_index;
  b.samples.resize(size);
  for (auto& s : b.samples) s = stream.next_u64();
  return b;
}

Vector stoch_grad(const Task& t, const Vector& w, const SampleBatch& batch,
                  WorkCounters* counters) {
  check_dim(t, w);
  require(t.family != Family::FiniteSumMse,
          "stochastic oracles are undefined for finite-sum tasks; the "
          "finite-sum inner loop uses full support gradients");
  require(batch.size() >= 1, "empty batch");
  Vector acc = Vector::Zero(t.dimension);
  for (std::uint64_t id : batch.samples) accumulate_grad_noise(t, w, id, acc);
  if (counters) counters->add_grads(batch.size());
  return grad(t, w) + acc / static_cast<double>(batch.size());
}

Matrix stoch_hess(const Task& t, const Vector& w, const SampleBatch& batch,
                  WorkCounters* counters) {
  check_dim(t, w);
  require(t.family != Family::FiniteSumMse,
          "stochastic oracles are undefined for finite-sum tasks");
  require(batch.size() >= 1, "empty batch");
  Matrix acc = Matrix::Zero(t.dimension, t.dimension);
  for (std::uint64_t id : batch.samples) accumulate_hess_noise(t, id, acc);
  if (counters) counters->add_hessians(batch.size());
  return hess(t, w) + acc / static_cast<double>(batch.size());
}

TaskDistribution make_distribution(std::vector<Task> tasks, Vector weights,
                                   ObjectiveCase objective, double R,
                                   std::uint64_t seed) {
  TaskDistribution dist;
  dist.objective = objective;
  dist.family = tasks.front().family;
  dist.tasks = std::move(tasks);
  dist.weights = std::move(weights);
  dist.domain_radius = R;
  dist.seed = seed;
  dist.profile = compute_profile(dist.tasks, dist.weights, R);
  dist.validate();
  return dist;
}

TaskDistribution make_quadratic_family(int d, int num_tasks, double L_target,
                                       double sigma, double sigma_g,
                                       double sigma_H, double R,
                                       std::uint64_t seed) {
  require(d >= 1, "d must be >= 1");
  require(num_tasks >= 1, "num_tasks must be >= 1");
  require(L_target > 0.0, "L_target must be positive");
  require(R > 0.0, "R must be positive");
  require(sigma >= 0.0, "sigma must be nonnegative");
  const NoiseScales ns = calibrate_sample_noise(d, sigma_g, sigma_H, R);

  RngStream root(seed);
  RngStream gen = root.split(1);

  // Shared base with spectrum well inside (0, L_target); per-task symmetric
  // deviations small enough to keep every A_i positive definite with
  // spectral norm <= L_target.
  const bool spread = num_tasks > 1 && sigma > 0.0;
  Matrix qbase = random_orthogonal(gen, d);
  Vector eig(d);
  for (int i = 0; i < d; ++i)
    eig[i] = L_target * (spread ? gen.uniform(0.35, 0.75) : gen.uniform(0.2, 1.0));
  const Matrix abar = qbase * eig.asDiagonal() * qbase.transpose();
  const Vector bbar = gen.gaussian_vector(d) * (0.05 * L_target * R);

  std::vector<Matrix> adev(num_tasks, Matrix::Zero(d, d));
  std::vector<Vector> bdev(num_tasks, Vector::Zero(d));
  Vector weights = Vector::Constant(num_tasks, 1.0 / num_tasks);

  if (spread) {
    for (int i = 0; i < num_tasks; ++i) {
      Matrix m = random_symmetric(gen, d);
      adev[i] = m * (0.15 * L_target * gen.uniform(0.5, 1.0) / sym_spectral_norm(m));
      bdev[i] = gen.gaussian_vector(d);
    }
    Vector bmean = Vector::Zero(d);
    for (int i = 0; i < num_tasks; ++i) bmean += weights[i] * bdev[i];
    for (int i = 0; i < num_tasks; ++i) bdev[i] -= bmean;

    // Cap the matrix-deviation share of the variance budget, then scale the
    // linear deviations so the exact sup on the ball hits sigma^2.
    const auto family_sup = [&](double t_a, double t_b) {
      std::vector<Matrix> mats(num_tasks);
      std::vector<Vector> vecs(num_tasks);
      for (int i = 0; i < num_tasks; ++i) {
        mats[i] = abar + t_a * adev[i];
        vecs[i] = bbar + t_b * bdev[i];
      }
      return affine_family_variance_sup(mats, vecs, weights, R);
    };
    const double sup_a = family_sup(1.0, 0.0);
    double t_a = 1.0;
    if (sup_a > 0.25 * sigma * sigma && sup_a > 0.0)
      t_a = std::sqrt(0.25 * sigma * sigma / sup_a);
    double lo = 0.0, hi = 1.0;
    for (int g = 0; g < 60 && family_sup(t_a, hi) < sigma * sigma; ++g)
      hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (family_sup(t_a, mid) < sigma * sigma ? lo : hi) = mid;
    }
    const double t_b = 0.5 * (lo + hi);
    for (int i = 0; i < num_tasks; ++i) {
      adev[i] *= t_a;
      bdev[i] *= t_b;
    }
  }

  std::vector<Task> tasks(num_tasks);
  for (int i = 0; i < num_tasks; ++i) {
    QuadraticParams qp;
    qp.a = abar + adev[i];
    qp.b = bbar + bdev[i];
    qp.hess_noise_scale = ns.hess;
    qp.grad_noise_scale = ns.grad;
    tasks[i].family = Family::Quadratic;
    tasks[i].dimension = d;
    tasks[i].noise_key = detail::mix64(seed ^ detail::mix64(0x7A5Cull + i));
    tasks[i].params = std::move(qp);
  }
  return make_distribution(std::move(tasks), std::move(weights),
                           ObjectiveCase::Resampling, R, seed);
}

TaskDistribution make_trig_family(int d, int num_tasks, double c_max,
                                  double a_max, double lambda, double R,
                                  double sigma_g, double sigma_H,
                                  std::uint64_t seed) {
  require(d >= 1, "d must be >= 1");
  require(num_tasks >= 1, "num_tasks must be >= 1");
  require(c_max > 0.0 && a_max > 0.0, "c_max and a_max must be positive");
  require(lambda >= 0.0, "lambda must be nonnegative");
  require(R > 0.0, "R must be positive");
  const NoiseScales ns = calibrate_sample_noise(d, sigma_g, sigma_H, R);

  RngStream gen = RngStream(seed).split(2);
  std::vector<Task> tasks(num_tasks);
  for (int i = 0; i < num_tasks; ++i) {
    TrigParams tp;
    tp.c = c_max * gen.uniform(0.5, 1.0);
    tp.a = gen.uniform_on_sphere(d, a_max * gen.uniform(0.6, 1.0));
    tp.phase = gen.uniform(0.0, 6.283185307179586);
    tp.lambda = lambda;
    tp.hess_noise_scale = ns.hess;
    tp.grad_noise_scale = ns.grad;
    tasks[i].family = Family::Trig;
    tasks[i].dimension = d;
    tasks[i].noise_key = detail::mix64(seed ^ detail::mix64(0x7216ull + i));
    tasks[i].params = std::move(tp);
  }
  Vector weights = Vector::Constant(num_tasks, 1.0 / num_tasks);
  TaskDistribution dist = make_distribution(std::move(tasks), std::move(weights),
                                            ObjectiveCase::Resampling, R, seed);
  // The certified family constants use the requested envelope, which
  // dominates every drawn task.
  dist.profile.L = c_max * a_max * a_max + lambda;
  dist.profile.rho = c_max * a_max * a_max * a_max;
  return dist;
}

TaskDistribution make_finite_sum_mse(int d, int num_tasks, int support_size,
                                     int query_size, double noise_std, double R,
                                     std::uint64_t seed) {
  require(d >= 1, "d must be >= 1");
  require(num_tasks >= 1, "num_tasks must be >= 1");
  require(support_size >= 1 && query_size >= 1,
          "support and query sets must be nonempty");
  require(noise_std >= 0.0, "noise_std must be nonnegative");
  require(R > 0.0, "R must be positive");

  RngStream gen = RngStream(seed).split(3);
  std::vector<Task> tasks(num_tasks);
  for (int i = 0; i < num_tasks; ++i) {
    const Vector theta = gen.gaussian_vector(d) / std::sqrt(double(d));
    const auto draw_set = [&](int n, Matrix& x, Vector& y) {
      x.resize(n, d);
      y.resize(n);
      for (int r = 0; r < n; ++r) {
        x.row(r) = gen.gaussian_vector(d).transpose();
        y[r] = x.row(r).dot(theta) + noise_std * gen.gaussian();
      }
    };
    MseParams mp;
    draw_set(support_size, mp.support_x, mp.support_y);
    draw_set(query_size, mp.query_x, mp.query_y);
    mp.finalize(R);
    tasks[i].family = Family::FiniteSumMse;
    tasks[i].dimension = d;
    tasks[i].noise_key = detail::mix64(seed ^ detail::mix64(0x35Eull + i));
    tasks[i].params = std::move(mp);
  }
  Vector weights = Vector::Constant(num_tasks, 1.0 / num_tasks);
  return make_distribution(std::move(tasks), std::move(weights),
                           ObjectiveCase::FiniteSum, R, seed);
}

Vector mean_grad(const TaskDistribution& dist, const Vector& w) {
  Vector g = Vector::Zero(w.size());
  for (int i = 0; i < dist.num_tasks(); ++i)
    g += dist.weights[i] * grad(dist.tasks[i], w);
  return g;
}

Vector mean_query_grad(const TaskDistribution& dist, const Vector& w) {
  Vector g = Vector::Zero(w.size());
  for (int i = 0; i < dist.num_tasks(); ++i)
    g += dist.weights[i] * query_grad(dist.tasks[i], w);
  return g;
}

double mean_grad_norm(const TaskDistribution& dist, const Vector& w) {
  double s = 0.0;
  for (int i = 0; i < dist.num_tasks(); ++i)
    s += dist.weights[i] * grad(dist.tasks[i], w).norm();
  return s;
}

double mean_query_grad_norm(const TaskDistribution& dist, const Vector& w) {
  double s = 0.0;
  for (int i = 0; i < dist.num_tasks(); ++i)
    s += dist.weights[i] * query_grad(dist.tasks[i], w).norm();
  return s;
}

double task_grad_variance(const TaskDistribution& dist, const Vector& w) {
  const bool fs = dist.objective == ObjectiveCase::FiniteSum;
  const Vector mean = fs ? mean_query_grad(dist, w) : mean_grad(dist, w);
  double v = 0.0;
  for (int i = 0; i < dist.num_tasks(); ++i) {
    const Vector g =
        fs ? query_grad(dist.tasks[i], w) : grad(dist.tasks[i], w);
    v += dist.weights[i] * (g - mean).squaredNorm();
  }
  return v;
}

}  // namespace maml
