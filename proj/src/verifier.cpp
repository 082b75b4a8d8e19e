#include "maml/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace maml {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

struct MeanVar {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double se() const { return n > 1 ? std::sqrt(variance() / n) : 0.0; }
};

Vector random_ball_point(RngStream& rng, int d, double radius) {
  return rng.uniform_in_ball(d, radius);
}

}  // namespace

BoundReport make_report(std::string name, long long trials, double empirical,
                        double se, double bound, BoundDirection direction,
                        std::string note) {
  BoundReport r;
  r.name = std::move(name);
  r.trials = trials;
  r.empirical = empirical;
  r.se = se;
  r.bound = bound;
  r.direction = direction;
  r.note = std::move(note);
  const double tol = 1e-9 * std::max(1.0, std::abs(bound));
  if (direction == BoundDirection::Upper) {
    const double lhs = empirical + 3.0 * se;
    r.satisfied = lhs <= bound + tol || std::isinf(bound);
    r.slack_ratio = bound > 0.0 ? lhs / bound : (r.satisfied ? 0.0 : 2.0);
    if (std::isinf(bound)) r.slack_ratio = 0.0;
    if (bound == 0.0 && se > 0.0) {
      // A zero theoretical bound on a Monte-Carlo estimate: require the
      // estimate to be statistically indistinguishable from zero.
      r.satisfied = empirical <= 3.0 * se + tol;
      r.slack_ratio = r.satisfied ? 0.0 : 2.0;
      if (r.note.empty()) r.note = "zero bound: |mean| <= 3 SE rule";
    }
  } else {
    const double lhs = empirical - 3.0 * se;
    r.satisfied = lhs >= bound - tol;
    r.slack_ratio = lhs > 0.0 ? bound / lhs : (r.satisfied ? 0.0 : 2.0);
  }
  if (r.satisfied) r.slack_ratio = std::clamp(r.slack_ratio, 0.0, 1.0);
  return r;
}

std::string report_csv_header() {
  return "name,trials,empirical,se,bound,direction,satisfied,slack_ratio,note";
}

std::string report_csv_row(const BoundReport& r) {
  std::ostringstream out;
  out << r.name << ',' << r.trials << ',' << r.empirical << ',' << r.se << ','
      << r.bound << ',' << (r.direction == BoundDirection::Upper ? "<=" : ">=")
      << ',' << (r.satisfied ? 1 : 0) << ',' << r.slack_ratio << ',' << r.note;
  return out.str();
}

std::string report_line(const BoundReport& r) {
  std::ostringstream out;
  out << (r.satisfied ? "PASS " : "FAIL ") << r.name << ": empirical "
      << r.empirical;
  if (r.se > 0.0) out << " (se " << r.se << ")";
  out << (r.direction == BoundDirection::Upper ? " <= " : " >= ") << r.bound
      << "  [slack " << r.slack_ratio << "]";
  if (!r.note.empty()) out << "  " << r.note;
  return out.str();
}

BoundReport check_meta_grad_fd(const Task& t, const Vector& w, double alpha,
                               int N, double h, double tol) {
  if (h <= 0.0) throw std::invalid_argument("h must be positive");
  const Vector exact = exact_task_meta_grad(t, w, alpha, N);
  Vector fd(w.size());
  for (Eigen::Index c = 0; c < w.size(); ++c) {
    Vector wp = w, wm = w;
    wp[c] += h;
    wm[c] -= h;
    fd[c] = (task_meta_loss(t, wp, alpha, N) - task_meta_loss(t, wm, alpha, N)) /
            (2.0 * h);
  }
  const double scale = std::max({exact.norm(), fd.norm(), 1e-12});
  const double rel = (fd - exact).norm() / scale;
  return make_report("meta_grad_fd", w.size(), rel, 0.0, tol);
}

std::vector<BoundReport> mc_check_prop2(const TaskDistribution& dist,
                                        const Vector& w, double alpha, int N,
                                        int S, int trials, RngStream rng,
                                        bool proof_factor) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const double L = dist.profile.L, sg = dist.profile.sigma_g;

  std::vector<InnerPath> exact_paths(dist.num_tasks());
  std::vector<bool> have(dist.num_tasks(), false);

  std::vector<MeanVar> first(N + 1), second(N + 1);
  for (int tr = 0; tr < trials; ++tr) {
    RngStream ts = rng.split(static_cast<std::uint64_t>(tr));
    const int i = ts.draw_index(dist.weights);
    if (!have[i]) {
      exact_paths[i] = inner_gd(dist.tasks[i], w, alpha, N);
      have[i] = true;
    }
    const InnerPath sgd = inner_sgd(dist.tasks[i], i, w, alpha, N, S,
                                    ts.split(StreamRole::InnerBatch));
    for (int j = 0; j <= N; ++j) {
      const double d = (sgd.iterates[j] - exact_paths[i].iterates[j]).norm();
      first[j].add(d);
      second[j].add(d * d);
    }
  }

  const double growth = proof_factor
                            ? 1.0 + 2.0 * alpha * L + 2.0 * alpha * alpha * L * L
                            : 1.0 + alpha * L + 2.0 * alpha * alpha * L * L;
  std::vector<BoundReport> out;
  for (int j = 1; j <= N; ++j) {
    const double b1 =
        L > 0.0 ? (ipow(1.0 + alpha * L, j) - 1.0) * sg / (L * std::sqrt(double(S)))
                : 0.0;
    const double b2 =
        L > 0.0 ? (ipow(growth, j) - 1.0) * alpha * sg * sg /
                      ((1.0 + alpha * L) * L * S)
                : 0.0;
    out.push_back(make_report("prop2_first_moment_j" + std::to_string(j), trials,
                              first[j].mean, first[j].se(), b1));
    out.push_back(make_report("prop2_second_moment_j" + std::to_string(j), trials,
                              second[j].mean, second[j].se(), b2));
  }
  return out;
}

BoundReport mc_check_prop3(const TaskDistribution& dist, const Vector& w,
                           double alpha, int N, int S, int D, int T, int trials,
                           RngStream rng) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const ResamplingConstants c =
      resampling_constants(dist.profile, alpha, N, 100.0, S, D, T, 1);
  const Vector exact = exact_meta_grad(dist, w, alpha, N);

  const int d = dist.dimension();
  Vector sum = Vector::Zero(d), sumsq = Vector::Zero(d);
  for (int tr = 0; tr < trials; ++tr) {
    RngStream ts = rng.split(static_cast<std::uint64_t>(tr));
    const int i = ts.draw_index(dist.weights);
    const Vector g = stoch_meta_grad_resample(dist.tasks[i], i, w, alpha, N, S,
                                              D, T, ts.split(1))
                         .value;
    sum += g;
    sumsq += g.cwiseProduct(g);
  }
  const Vector mean = sum / trials;
  double var_total = 0.0;
  for (int k = 0; k < d; ++k) {
    const double v =
        (sumsq[k] - trials * mean[k] * mean[k]) / std::max(1, trials - 1);
    var_total += std::max(0.0, v);
  }
  const double se = std::sqrt(var_total / trials);
  const double empirical = (mean - exact).norm();
  const double bound = c.c_err1 / std::sqrt(double(S)) +
                       c.c_err2 / std::sqrt(double(S)) *
                           (exact.norm() + dist.profile.sigma);
  return make_report("prop3_bias", trials, empirical, se, bound);
}

BoundReport mc_check_prop4(const TaskDistribution& dist, const Vector& w,
                           double alpha, int N, int S, int D, int T, int trials,
                           RngStream rng) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const ResamplingConstants c =
      resampling_constants(dist.profile, alpha, N, 100.0, S, D, T, 1);
  const Vector exact = exact_meta_grad(dist, w, alpha, N);

  MeanVar acc;
  for (int tr = 0; tr < trials; ++tr) {
    RngStream ts = rng.split(static_cast<std::uint64_t>(tr));
    const int i = ts.draw_index(dist.weights);
    acc.add(stoch_meta_grad_resample(dist.tasks[i], i, w, alpha, N, S, D, T,
                                     ts.split(1))
                .value.squaredNorm());
  }
  const double bound =
      c.c_squ1 / T + c.c_squ2 / S +
      c.c_squ3 * (exact.squaredNorm() +
                  dist.profile.sigma * dist.profile.sigma);
  return make_report("prop4_second_moment", trials, acc.mean, acc.se(), bound);
}

BoundReport mc_check_prop6(const TaskDistribution& dist, const Vector& w,
                           double alpha, int N) {
  if (dist.objective != ObjectiveCase::FiniteSum)
    throw std::invalid_argument("prop6 applies to the finite-sum case");
  const FiniteSumConstants c =
      finite_sum_constants(dist.profile, alpha, N, 80.0, 1);
  const Vector exact = exact_meta_grad(dist, w, alpha, N);
  double second = 0.0;
  for (int i = 0; i < dist.num_tasks(); ++i)
    second += dist.weights[i] *
              meta_grad_finite_sum(dist.tasks[i], i, w, alpha, N)
                  .value.squaredNorm();
  const double bound = c.a_squ1 * exact.squaredNorm() + c.a_squ2;
  return make_report("prop6_second_moment", dist.num_tasks(), second, 0.0,
                     bound, BoundDirection::Upper, "exact family sum");
}

BoundReport check_smoothness(const TaskDistribution& dist, double alpha, int N,
                             int pairs, RngStream rng) {
  if (pairs < 1) throw std::invalid_argument("pairs must be >= 1");
  const bool fs = dist.objective == ObjectiveCase::FiniteSum;
  const double x2N = ipow(1.0 + alpha * dist.profile.L, 2 * N);
  double c_smooth, c_b = 0.0;
  if (fs) {
    const FiniteSumConstants c =
        finite_sum_constants(dist.profile, alpha, N, 80.0, 1);
    c_smooth = c.c_L;
    c_b = c.c_b;
  } else {
    c_smooth =
        resampling_constants(dist.profile, alpha, N, 100.0, 1, 1, 1, 1).c_L;
  }
  const int d = dist.dimension();
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    RngStream ps = rng.split(static_cast<std::uint64_t>(p));
    const Vector w = random_ball_point(ps, d, dist.domain_radius);
    const Vector u = random_ball_point(ps, d, dist.domain_radius);
    if ((w - u).norm() == 0.0) continue;
    const double lhs = (exact_meta_grad(dist, w, alpha, N) -
                        exact_meta_grad(dist, u, alpha, N))
                           .norm();
    double lw = x2N * dist.profile.L;
    if (fs)
      lw += c_b * dist.profile.b + c_smooth * mean_query_grad_norm(dist, w);
    else
      lw += c_smooth * mean_grad_norm(dist, w);
    worst = std::max(worst, lhs / (lw * (w - u).norm()));
  }
  return make_report(fs ? "prop5_smoothness" : "prop1_smoothness", pairs, worst,
                     0.0, 1.0);
}

std::vector<BoundReport> check_lemma_suite(const TaskDistribution& dist,
                                           double alpha, int N, int trials,
                                           RngStream rng) {
  const double L = dist.profile.L;
  const double x = 1.0 + alpha * L;
  const double x2N = ipow(x, 2 * N);
  const double c_l = x2N - 1.0;
  const int d = dist.dimension();
  const double r = dist.domain_radius;
  const bool fs = dist.objective == ObjectiveCase::FiniteSum;
  const double tiny = 1e-15;

  std::vector<BoundReport> out;
  const auto add_max_ratio = [&](const std::string& name, double worst,
                                 long long n, const std::string& note = "") {
    out.push_back(
        make_report(name, n, worst, 0.0, 1.0, BoundDirection::Upper, note));
  };

  if (!fs) {
    double l1 = 0.0, l2 = 0.0, l3 = 0.0, l4 = 0.0;
    for (int tr = 0; tr < trials; ++tr) {
      RngStream ts = rng.split(static_cast<std::uint64_t>(tr));
      const int i = ts.draw_index(dist.weights);
      const Task& task = dist.tasks[i];
      const Vector w = random_ball_point(ts, d, r);
      const Vector u = random_ball_point(ts, d, r);
      const InnerPath pw = inner_gd(task, w, alpha, N);
      const InnerPath pu = inner_gd(task, u, alpha, N);
      // Lemma 1: path contraction
      for (int j = 0; j <= N; ++j) {
        const double rhs = ipow(x, j) * (w - u).norm();
        l1 = std::max(l1, (pw.iterates[j] - pu.iterates[j]).norm() / (rhs + tiny));
      }
      // Lemma 2: gradient growth
      const double g0 = grad(task, w).norm();
      for (int j = 0; j <= N; ++j) {
        const double rhs = ipow(x, j) * g0;
        l2 = std::max(l2, grad(task, pw.iterates[j]).norm() / (rhs + tiny));
      }
      // Lemma 3: product expansion with the path's actual Hessian factors
      Matrix prod = Matrix::Identity(d, d);
      for (int j = 0; j < N; ++j)
        prod = prod * (Matrix::Identity(d, d) - alpha * hess(task, pw.iterates[j]));
      const double rhs3 = ipow(x, N) - 1.0;
      if (N >= 1)
        l3 = std::max(l3, operator_norm(Matrix::Identity(d, d) - prod) /
                              (rhs3 + tiny));
      // Lemma 4: gradient vs meta-gradient gap
      const Vector mg = exact_task_meta_grad(task, w, alpha, N);
      l4 = std::max(l4, (grad(task, w) - mg).norm() / (c_l * g0 + tiny));
    }
    add_max_ratio("lemma1_path_contraction", l1, trials);
    add_max_ratio("lemma2_gradient_growth", l2, trials);
    add_max_ratio("lemma3_product_bound", l3, trials);
    add_max_ratio("lemma4_grad_metagrad_gap", l4, trials);

    // Lemma 5: ||grad l(w)|| <= (||grad L(w)|| + c_l sigma) / (1 - c_l),
    // exact family means; needs c_l < 1, guaranteed by the alpha bound.
    double l5 = 0.0;
    const int family_pts = std::min(trials, 200);
    for (int p = 0; p < family_pts; ++p) {
      RngStream ps = rng.split(0xF00 + static_cast<std::uint64_t>(p));
      const Vector w = random_ball_point(ps, d, r);
      const double lhs = mean_grad(dist, w).norm();
      const double rhs = (exact_meta_grad(dist, w, alpha, N).norm() +
                          c_l * dist.profile.sigma) /
                         (1.0 - c_l);
      l5 = std::max(l5, lhs / (rhs + tiny));
    }
    add_max_ratio("lemma5_mean_grad_bound", l5, family_pts);
  } else {
    double l6 = 0.0, l7 = 0.0;
    const double xN = ipow(x, N);
    for (int tr = 0; tr < trials; ++tr) {
      RngStream ts = rng.split(static_cast<std::uint64_t>(tr));
      const int i = ts.draw_index(dist.weights);
      const Task& task = dist.tasks[i];
      const Vector w = random_ball_point(ts, d, r);
      const InnerPath pw = inner_gd_finite(task, w, alpha, N);
      // Lemma 6: support-gradient growth along the support path
      const double gs0 = grad(task, w).norm();
      for (int j = 0; j <= N; ++j) {
        const double rhs = ipow(x, j) * gs0;
        l6 = std::max(l6, grad(task, pw.iterates[j]).norm() / (rhs + tiny));
      }
      // Lemma 7: query-gradient vs meta-gradient gap
      const Vector mg = exact_task_meta_grad(task, w, alpha, N);
      const double lhs = (query_grad(task, w) - mg).norm();
      const double rhs = (xN - 1.0) * query_grad(task, w).norm() +
                         xN * (xN - 1.0) * grad(task, w).norm();
      l7 = std::max(l7, lhs / (rhs + tiny));
    }
    add_max_ratio("lemma6_support_gradient_growth", l6, trials);
    add_max_ratio("lemma7_query_metagrad_gap", l7, trials);

    // Lemma 8: ||grad l_T(w)|| <= (||grad L(w)|| + C_2) / C_1.
    const double c1 = 2.0 - x2N;
    const double c2 = (x2N - 1.0) * dist.profile.sigma +
                      xN * (xN - 1.0) * dist.profile.b;
    double l8 = 0.0;
    const int family_pts = std::min(trials, 200);
    for (int p = 0; p < family_pts; ++p) {
      RngStream ps = rng.split(0xF00 + static_cast<std::uint64_t>(p));
      const Vector w = random_ball_point(ps, d, r);
      const double lhs = mean_query_grad(dist, w).norm();
      const double rhs =
          (exact_meta_grad(dist, w, alpha, N).norm() + c2) / c1;
      l8 = std::max(l8, lhs / (rhs + tiny));
    }
    add_max_ratio("lemma8_mean_query_grad_bound", l8, family_pts);
  }
  return out;
}

std::vector<BoundReport> mc_check_stepsize_moments(const TaskDistribution& dist,
                                                   const Vector& w, double alpha,
                                                   int N, double C_beta,
                                                   int Bprime, int DL,
                                                   int trials, RngStream rng) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<BoundReport> out;
  if (dist.objective == ObjectiveCase::Resampling) {
    const ResamplingConstants c =
        resampling_constants(dist.profile, alpha, N, C_beta, 1, 1, 1, 1);
    if (!(Bprime > c.bprime_min))
      throw std::domain_error("Bprime below the stepsize-estimate threshold " +
                              std::to_string(c.bprime_min));
    if (!(DL > c.dl_min))
      throw std::domain_error("DL below the stepsize-estimate threshold " +
                              std::to_string(c.dl_min));
    const double lw = smoothness_at(dist, c, w);
    MeanVar beta, beta2;
    for (int tr = 0; tr < trials; ++tr) {
      RngStream ts = rng.split(static_cast<std::uint64_t>(tr));
      const double b =
          meta_stepsize(hat_L_resample(dist, w, Bprime, DL, c, ts), C_beta);
      beta.add(b);
      beta2.add(b * b);
    }
    out.push_back(make_report("stepsize_beta_mean", trials, beta.mean, beta.se(),
                              4.0 / (5.0 * C_beta * lw), BoundDirection::Lower));
    out.push_back(make_report("stepsize_beta_second", trials, beta2.mean,
                              beta2.se(), 4.0 / (C_beta * C_beta * lw * lw),
                              BoundDirection::Upper));
  } else {
    const FiniteSumConstants c =
        finite_sum_constants(dist.profile, alpha, N, C_beta, 1);
    if (!(Bprime >= c.bprime_min))
      throw std::domain_error("Bprime below the stepsize-estimate threshold " +
                              std::to_string(c.bprime_min));
    const double lw = smoothness_at(dist, c, w);
    MeanVar inv1, inv2;
    for (int tr = 0; tr < trials; ++tr) {
      RngStream ts = rng.split(static_cast<std::uint64_t>(tr));
      const double hat = hat_L_finite(dist, w, Bprime, c, ts);
      inv1.add(1.0 / hat);
      inv2.add(1.0 / (hat * hat));
    }
    out.push_back(make_report("stepsize_invLhat_mean", trials, inv1.mean,
                              inv1.se(), 1.0 / lw, BoundDirection::Lower));
    out.push_back(make_report("stepsize_invLhat_second", trials, inv2.mean,
                              inv2.se(), 2.0 / (lw * lw),
                              BoundDirection::Upper));
  }
  return out;
}

std::vector<BoundReport> run_verify_suite(const TaskDistribution& dist,
                                          const VerifySettings& s) {
  const double alpha =
      s.alpha < 0.0 ? default_alpha(s.N, dist.profile.L) : s.alpha;
  RngStream rng = RngStream(s.seed).split(StreamRole::Scratch);
  RngStream wstream = rng.split(1);
  const Vector w =
      wstream.uniform_in_ball(dist.dimension(), dist.domain_radius / 2.0);

  std::vector<BoundReport> out;
  {
    RngStream fd = rng.split(2);
    const int i = fd.draw_index(dist.weights);
    const Vector wf = fd.uniform_in_ball(dist.dimension(), dist.domain_radius / 2.0);
    const double h = 1e-5 * (1.0 + wf.norm());
    const double tol = dist.family == Family::Trig ? 1e-5 : 1e-8;
    out.push_back(check_meta_grad_fd(dist.tasks[i], wf, alpha, s.N, h, tol));
  }
  if (dist.objective == ObjectiveCase::Resampling) {
    auto p2 = mc_check_prop2(dist, w, alpha, s.N, s.S, s.path_trials, rng.split(3));
    out.insert(out.end(), p2.begin(), p2.end());
    out.push_back(mc_check_prop3(dist, w, alpha, s.N, s.S, s.D, s.T,
                                 s.moment_trials, rng.split(4)));
    out.push_back(mc_check_prop4(dist, w, alpha, s.N, s.S, s.D, s.T,
                                 s.moment_trials, rng.split(5)));
  } else {
    out.push_back(mc_check_prop6(dist, w, alpha, s.N));
  }
  out.push_back(check_smoothness(dist, alpha, s.N, s.pairs, rng.split(6)));
  auto lemmas = check_lemma_suite(dist, alpha, s.N, s.lemma_trials, rng.split(7));
  out.insert(out.end(), lemmas.begin(), lemmas.end());
  auto steps = mc_check_stepsize_moments(dist, w, alpha, s.N, s.C_beta, s.Bprime,
                                         s.DL, s.moment_trials, rng.split(8));
  out.insert(out.end(), steps.begin(), steps.end());
  return out;
}

}  // namespace maml
