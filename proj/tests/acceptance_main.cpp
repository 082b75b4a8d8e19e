// Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
// runs one criterion (argv[1] in 1..10) or all of them with no argument and
// exits nonzero if any executed criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "maml/family_io.hpp"
#include "maml/trainer.hpp"
#include "maml/verifier.hpp"

using namespace maml;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
  int id;
  std::string label;
  std::function<bool(std::string&)> run;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool check(bool ok, const std::string& what, std::string& detail) {
  if (!ok) detail += (detail.empty() ? "" : "; ") + what;
  return ok;
}

Vector fd_meta_grad(const Task& t, const Vector& w, double alpha, int N) {
  const double h = 1e-5 * (1.0 + w.norm());
  Vector g(w.size());
  for (Eigen::Index c = 0; c < w.size(); ++c) {
    Vector wp = w, wm = w;
    wp[c] += h;
    wm[c] -= h;
    g[c] = (task_meta_loss(t, wp, alpha, N) - task_meta_loss(t, wm, alpha, N)) /
           (2.0 * h);
  }
  return g;
}

Vector quad_closed_form_meta_grad(const Matrix& a, const Vector& b,
                                  const Vector& w, double alpha, int N) {
  const auto d = w.size();
  const Matrix step = Matrix::Identity(d, d) - alpha * a;
  Matrix pow = Matrix::Identity(d, d);
  Vector geo = Vector::Zero(d);
  for (int j = 0; j < N; ++j) {
    geo += pow * b;
    pow = step * pow;
  }
  const Vector wn = pow * w - alpha * geo;
  return pow * (a * wn + b);
}

// ---- criterion 1: meta-gradient correctness -------------------------------
bool criterion1(std::string& detail) {
  const auto t0 = Clock::now();
  bool ok = true;
  const int dims[] = {2, 5, 10};
  const int ns[] = {1, 3, 5, 10};
  RngStream rng(1001);
  int count = 0;
  double worst_quad = 0.0, worst_trig = 0.0, worst_closed = 0.0;
  while (count < 100) {
    const int d = dims[count % 3];
    const int n = ns[(count / 3) % 4];
    const auto quad = make_quadratic_family(d, 2, 1.0, 0.2, 0.0, 0.0, 2.0,
                                            2000 + count);
    const auto trig = make_trig_family(d, 2, 0.7, 1.4, 0.3, 2.0, 0.0, 0.0,
                                       3000 + count);
    RngStream ws = rng.split(count);
    const Vector w = ws.uniform_in_ball(d, 2.0);
    const double aq = default_alpha(n, quad.profile.L);
    const double at = default_alpha(n, trig.profile.L);

    const Task& qt = quad.tasks[count % 2];
    const Vector gq = exact_task_meta_grad(qt, w, aq, n);
    worst_quad = std::max(worst_quad, (fd_meta_grad(qt, w, aq, n) - gq).norm() /
                                          std::max(1.0, gq.norm()));
    const auto& qp = std::get<QuadraticParams>(qt.params);
    worst_closed = std::max(
        worst_closed,
        (quad_closed_form_meta_grad(qp.a, qp.b, w, aq, n) - gq).norm() /
            std::max(1.0, gq.norm()));

    const Task& tt = trig.tasks[count % 2];
    const Vector gt = exact_task_meta_grad(tt, w, at, n);
    worst_trig = std::max(worst_trig, (fd_meta_grad(tt, w, at, n) - gt).norm() /
                                          std::max(1.0, gt.norm()));
    ++count;
  }
  ok &= check(worst_quad <= 1e-8,
              "quadratic FD rel err " + std::to_string(worst_quad), detail);
  ok &= check(worst_trig <= 1e-5,
              "trig FD rel err " + std::to_string(worst_trig), detail);
  ok &= check(worst_closed <= 1e-10,
              "closed-form rel err " + std::to_string(worst_closed), detail);
  const double secs = seconds_since(t0);
  ok &= check(secs < 10.0, "runtime " + std::to_string(secs) + "s", detail);
  detail += detail.empty() ? "" : " | ";
  std::ostringstream extra;
  extra << "max rel err: quad " << worst_quad << ", trig " << worst_trig
        << ", closed " << worst_closed << ", " << secs << "s";
  detail += extra.str();
  return ok;
}

// ---- criterion 2: lemma suite ---------------------------------------------
bool criterion2(std::string& detail) {
  const auto t0 = Clock::now();
  bool ok = true;
  const auto trig = make_trig_family(5, 8, 0.6, 1.5, 0.8, 2.0, 0.3, 0.25, 2101);
  const auto mse = make_finite_sum_mse(5, 10, 8, 8, 0.1, 4.0, 2102);
  const int n = 4;
  for (const auto* dist : {&trig, &mse}) {
    const double alpha = default_alpha(n, dist->profile.L);
    const auto reports =
        check_lemma_suite(*dist, alpha, n, 1000, RngStream(2103));
    for (const auto& r : reports) {
      ok &= check(r.satisfied, r.name + " ratio " + std::to_string(r.empirical),
                  detail);
    }
  }
  const double secs = seconds_since(t0);
  ok &= check(secs < 30.0, "runtime " + std::to_string(secs) + "s", detail);
  if (ok) detail = "all lemma inequalities hold on 1000 instances each";
  return ok;
}

// ---- criterion 3: proposition 2 path moments ------------------------------
bool criterion3(std::string& detail) {
  bool ok = true;
  const int N = 3;
  const int trials = 10000;
  const auto quad = make_quadratic_family(5, 6, 1.0, 0.3, 0.4, 0.2, 2.0, 2301);
  const auto trig = make_trig_family(5, 6, 0.6, 1.5, 0.8, 2.0, 0.4, 0.3, 2302);
  for (const auto* dist : {&quad, &trig}) {
    const double alpha = default_alpha(N, dist->profile.L);
    RngStream rng(2303);
    const Vector w = rng.uniform_in_ball(5, 1.0);
    std::vector<double> log_s, log_first;
    for (int S : {10, 100, 1000}) {
      const auto reports =
          mc_check_prop2(*dist, w, alpha, N, S, trials, rng.split(S));
      for (const auto& r : reports) {
        ok &= check(r.satisfied,
                    to_string(dist->family) + " S=" + std::to_string(S) + " " +
                        r.name,
                    detail);
        if (r.name == "prop2_first_moment_j3") {
          log_s.push_back(std::log(double(S)));
          log_first.push_back(std::log(r.empirical));
        }
      }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_s.size(); ++i) {
      sx += log_s[i];
      sy += log_first[i];
      sxx += log_s[i] * log_s[i];
      sxy += log_s[i] * log_first[i];
    }
    const double m = 3.0;
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    ok &= check(std::abs(slope + 0.5) <= 0.1,
                to_string(dist->family) + " slope " + std::to_string(slope),
                detail);
    detail += detail.empty() ? "" : "; ";
    detail += to_string(dist->family) + " slope " + std::to_string(slope);
  }
  return ok;
}

// ---- criterion 4: proposition 3 bias --------------------------------------
bool criterion4(std::string& detail) {
  bool ok = true;
  const int N = 3;
  const int trials = 100000;
  const auto noisy = make_trig_family(5, 8, 0.6, 1.5, 0.8, 2.0, 0.4, 0.3, 2401);
  const auto thresholds = corollary1_batch_thresholds(noisy.profile);
  const int S = std::max(10, static_cast<int>(std::ceil(thresholds.S_min)));
  const int D = std::max(10, static_cast<int>(std::ceil(thresholds.D_min)));
  const double alpha = default_alpha(N, noisy.profile.L);
  RngStream rng(2402);
  const Vector w = rng.uniform_in_ball(5, 1.0);
  const auto r = mc_check_prop3(noisy, w, alpha, N, S, D, 10, trials,
                                rng.split(1));
  ok &= check(r.satisfied, "bias bound: " + report_line(r), detail);

  const auto calm = make_trig_family(5, 8, 0.6, 1.5, 0.8, 2.0, 0.0, 0.0, 2403);
  const auto r0 = mc_check_prop3(calm, w, default_alpha(N, calm.profile.L), N,
                                 S, D, 10, trials, rng.split(2));
  ok &= check(r0.satisfied && r0.bound == 0.0,
              "zero-noise consistency: " + report_line(r0), detail);
  if (ok) {
    std::ostringstream os;
    os << "bias " << r.empirical << " <= " << r.bound << " (slack "
       << r.slack_ratio << "); sigma_g=0 case |mean|=" << r0.empirical
       << " <= 3SE=" << 3.0 * r0.se;
    detail = os.str();
  }
  return ok;
}

// ---- criterion 5: propositions 4 and 6 second moments ---------------------
bool criterion5(std::string& detail) {
  bool ok = true;
  const int N = 3;
  const auto trig = make_trig_family(5, 8, 0.6, 1.5, 0.8, 2.0, 0.4, 0.3, 2501);
  const double alpha = default_alpha(N, trig.profile.L);
  RngStream rng(2502);
  const Vector w = rng.uniform_in_ball(5, 1.0);
  const auto r4 =
      mc_check_prop4(trig, w, alpha, N, 10, 10, 10, 100000, rng.split(1));
  ok &= check(r4.satisfied, "prop4: " + report_line(r4), detail);

  const auto mse = make_finite_sum_mse(5, 12, 8, 8, 0.15, 4.0, 2503);
  const auto r6 = mc_check_prop6(mse, w, default_alpha(N, mse.profile.L), N);
  ok &= check(r6.satisfied, "prop6: " + report_line(r6), detail);
  if (ok) {
    std::ostringstream os;
    os << "prop4 slack " << r4.slack_ratio << ", prop6 slack " << r6.slack_ratio;
    detail = os.str();
  }
  return ok;
}

// ---- criterion 6: stepsize moments ----------------------------------------
bool criterion6(std::string& detail) {
  const auto t0 = Clock::now();
  bool ok = true;
  const int N = 3;
  const int trials = 100000;
  const auto trig = make_trig_family(5, 8, 0.6, 1.5, 0.8, 2.0, 0.3, 0.25, 2601);
  const double alpha = default_alpha(N, trig.profile.L);
  RngStream rng(2602);
  const Vector w = rng.uniform_in_ball(5, 1.0);
  const auto c = resampling_constants(trig.profile, alpha, N, 100.0, 1, 1, 1, 1);
  const int bprime = std::max(4, static_cast<int>(std::ceil(c.bprime_min)) + 1);
  const int dl = std::max(4, static_cast<int>(std::ceil(c.dl_min)) + 1);
  for (const auto& r : mc_check_stepsize_moments(trig, w, alpha, N, 100.0,
                                                 bprime, dl, trials,
                                                 rng.split(1)))
    ok &= check(r.satisfied, report_line(r), detail);

  const auto mse = make_finite_sum_mse(5, 12, 8, 8, 0.15, 4.0, 2603);
  const double alpha_f = default_alpha(N, mse.profile.L);
  const auto cf = finite_sum_constants(mse.profile, alpha_f, N, 80.0, 1);
  const int bprime_f = std::max(4, static_cast<int>(std::ceil(cf.bprime_min)));
  for (const auto& r : mc_check_stepsize_moments(mse, w, alpha_f, N, 80.0,
                                                 bprime_f, 4, trials,
                                                 rng.split(2)))
    ok &= check(r.satisfied, report_line(r), detail);
  const double secs = seconds_since(t0);
  ok &= check(secs < 60.0, "runtime " + std::to_string(secs) + "s", detail);
  if (ok) detail = "all four moment bounds hold (" + std::to_string(secs) + "s)";
  return ok;
}

// ---- criterion 7: convergence, resampling ---------------------------------
bool criterion7(std::string& detail) {
  const auto t0 = Clock::now();
  bool ok = true;
  // 10-task trig family, d = 10; corollary-1 configuration.
  const auto dist =
      make_trig_family(10, 10, 0.25, 1.0, 2.0, 6.0, 0.3, 0.1, 2701);
  const auto thr = corollary1_batch_thresholds(dist.profile);
  RunConfig cfg;
  cfg.objective = ObjectiveCase::Resampling;
  cfg.N = 3;
  cfg.K = 1000;
  cfg.B = 20;
  cfg.S = std::max(10, static_cast<int>(std::ceil(thr.S_min)));
  cfg.D = std::max(10, static_cast<int>(std::ceil(thr.D_min)));
  cfg.T = 10;
  cfg.C_beta = 100.0;
  cfg.alpha = default_alpha(cfg.N, dist.profile.L);
  const auto cc = resampling_constants(dist.profile, cfg.alpha, cfg.N,
                                       cfg.C_beta, cfg.S, cfg.D, cfg.T, cfg.B);
  cfg.Bprime = std::max(4, static_cast<int>(std::ceil(cc.bprime_min)) + 1);
  cfg.DL = std::max(4, static_cast<int>(std::ceil(cc.dl_min)) + 1);
  cfg.seed = 2702;
  cfg.zeta_draws = 100;

  const auto m = run_maml_resampling(cfg, dist);
  ok &= check(!m.diverged, "run diverged", detail);
  ok &= check(!m.ball_violation, "iterates left the certified ball", detail);
  ok &= check(std::isfinite(m.theorem_rhs), "theorem RHS not evaluable", detail);
  ok &= check(m.zeta_mean_grad_norm <= m.theorem_rhs,
              "E||grad|| " + std::to_string(m.zeta_mean_grad_norm) +
                  " > theorem-1 RHS " + std::to_string(m.theorem_rhs),
              detail);
  ok &= check(m.zeta_mean_grad_norm <= 0.1 * m.initial_grad_norm,
              "E||grad|| " + std::to_string(m.zeta_mean_grad_norm) + " > 0.1 x " +
                  std::to_string(m.initial_grad_norm),
              detail);
  const double secs = seconds_since(t0);
  ok &= check(secs < 300.0, "runtime " + std::to_string(secs) + "s", detail);
  std::ostringstream os;
  os << " [E=" << m.zeta_mean_grad_norm << ", rhs=" << m.theorem_rhs
     << ", init=" << m.initial_grad_norm << ", final=" << m.final_grad_norm
     << ", " << secs << "s]";
  detail += os.str();
  return ok;
}

// ---- criterion 8: convergence, finite-sum ---------------------------------
bool criterion8(std::string& detail) {
  const auto t0 = Clock::now();
  bool ok = true;
  const auto dist = make_finite_sum_mse(4, 20, 24, 24, 0.1, 8.0, 2801);
  RunConfig cfg;
  cfg.objective = ObjectiveCase::FiniteSum;
  cfg.N = 3;
  cfg.K = 1000;
  cfg.B = 10;
  cfg.C_beta = 80.0;
  cfg.alpha = default_alpha(cfg.N, dist.profile.L);
  const auto cc =
      finite_sum_constants(dist.profile, cfg.alpha, cfg.N, cfg.C_beta, cfg.B);
  cfg.Bprime = std::max(4, static_cast<int>(std::ceil(cc.bprime_min)));
  cfg.seed = 2802;
  cfg.zeta_draws = 100;

  const auto m = run_maml_finite_sum(cfg, dist);
  ok &= check(!m.diverged, "run diverged", detail);
  ok &= check(!m.ball_violation, "iterates left the certified ball", detail);
  ok &= check(std::isfinite(m.theorem_rhs), "theorem RHS not evaluable", detail);
  ok &= check(m.zeta_mean_grad_norm <= m.theorem_rhs,
              "E||grad|| " + std::to_string(m.zeta_mean_grad_norm) +
                  " > theorem-2 RHS " + std::to_string(m.theorem_rhs),
              detail);
  ok &= check(m.zeta_mean_grad_norm <= 0.1 * m.initial_grad_norm,
              "E||grad|| " + std::to_string(m.zeta_mean_grad_norm) + " > 0.1 x " +
                  std::to_string(m.initial_grad_norm),
              detail);
  const double secs = seconds_since(t0);
  ok &= check(secs < 300.0, "runtime " + std::to_string(secs) + "s", detail);
  std::ostringstream os;
  os << " [E=" << m.zeta_mean_grad_norm << ", rhs=" << m.theorem_rhs
     << ", init=" << m.initial_grad_norm << ", final=" << m.final_grad_norm
     << ", " << secs << "s]";
  detail += os.str();
  return ok;
}

// ---- criterion 9: complexity counters -------------------------------------
bool criterion9(std::string& detail) {
  bool ok = true;
  const auto dist = make_trig_family(4, 6, 0.5, 1.2, 0.6, 3.0, 0.25, 0.15, 2901);
  RunConfig cfg;
  cfg.objective = ObjectiveCase::Resampling;
  cfg.K = 5;
  cfg.B = 3;
  cfg.S = 4;
  cfg.D = 3;
  cfg.T = 5;
  cfg.Bprime = 2;
  cfg.DL = 3;
  cfg.seed = 2902;
  cfg.zeta_draws = 10;
  std::vector<long long> grads_per_iter;
  for (int n = 1; n <= 5; ++n) {
    cfg.N = n;
    cfg.alpha = default_alpha(n, dist.profile.L);
    const auto m = run_maml_resampling(cfg, dist);
    const long long expect_g =
        cfg.B * (static_cast<long long>(n) * cfg.S + cfg.T) +
        static_cast<long long>(cfg.Bprime) * cfg.DL;
    const long long expect_h = static_cast<long long>(cfg.B) * n * cfg.D;
    ok &= check(m.grad_evals == expect_g * cfg.K,
                "N=" + std::to_string(n) + " grad evals " +
                    std::to_string(m.grad_evals) + " != " +
                    std::to_string(expect_g * cfg.K),
                detail);
    ok &= check(m.hess_evals == expect_h * cfg.K,
                "N=" + std::to_string(n) + " hess evals", detail);
    grads_per_iter.push_back(m.grad_evals / cfg.K);
  }
  // linear in N: constant second difference
  for (std::size_t i = 2; i < grads_per_iter.size(); ++i)
    ok &= check(grads_per_iter[i] - grads_per_iter[i - 1] ==
                    grads_per_iter[1] - grads_per_iter[0],
                "gradient work not linear in N", detail);
  if (ok) detail = "counters match B(NS+T) + B'DL and BND exactly, linear in N";
  return ok;
}

// ---- criterion 10: determinism --------------------------------------------
bool criterion10(std::string& detail) {
  bool ok = true;
  const auto trig = make_trig_family(4, 6, 0.5, 1.2, 0.6, 3.0, 0.25, 0.15, 3001);
  RunConfig cfg;
  cfg.objective = ObjectiveCase::Resampling;
  cfg.N = 2;
  cfg.K = 12;
  cfg.B = 8;
  cfg.S = 3;
  cfg.D = 3;
  cfg.T = 3;
  cfg.Bprime = 3;
  cfg.DL = 3;
  cfg.seed = 3002;
  cfg.zeta_draws = 10;
  const auto m1 = run_maml_resampling(cfg, trig);
  RunConfig cfg2 = cfg;
  cfg2.workers = 4;
  const auto m2 = run_maml_resampling(cfg2, trig);
  RunConfig cfg3 = cfg;
  cfg3.workers = 2;
  const auto m3 = run_maml_resampling(cfg3, trig);
  ok &= check(metrics_to_csv(m1) == metrics_to_csv(m2),
              "workers=1 vs workers=4 CSVs differ", detail);
  ok &= check(metrics_to_csv(m1) == metrics_to_csv(m3),
              "workers=1 vs workers=2 CSVs differ", detail);

  const auto mse = make_finite_sum_mse(4, 8, 6, 6, 0.1, 4.0, 3003);
  RunConfig fcfg = cfg;
  fcfg.objective = ObjectiveCase::FiniteSum;
  fcfg.C_beta = 80.0;
  const auto f1 = run_maml_finite_sum(fcfg, mse);
  RunConfig fcfg2 = fcfg;
  fcfg2.workers = 3;
  const auto f2 = run_maml_finite_sum(fcfg2, mse);
  ok &= check(metrics_to_csv(f1) == metrics_to_csv(f2),
              "finite-sum CSVs differ across worker counts", detail);
  if (ok) detail = "byte-identical CSVs across worker counts and reruns";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {1, "meta-gradient vs finite differences", criterion1},
      {2, "appendix lemma suite, zero violations", criterion2},
      {3, "proposition 2 path moments and 1/sqrt(S) scaling", criterion3},
      {4, "proposition 3 estimation bias", criterion4},
      {5, "propositions 4/6 second moments", criterion5},
      {6, "stepsize moment bounds", criterion6},
      {7, "resampling convergence vs theorem-1 RHS", criterion7},
      {8, "finite-sum convergence vs theorem-2 RHS", criterion8},
      {9, "complexity counters", criterion9},
      {10, "byte-identical determinism", criterion10},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  bool all_ok = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", c.id,
                c.label.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
