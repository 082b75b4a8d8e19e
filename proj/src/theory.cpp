#include "maml/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace maml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

void check_alpha(double alpha, int N, double L) {
  if (N < 1) throw std::domain_error("N must be >= 1 for the stepsize bound");
  if (L <= 0.0) throw std::domain_error("L must be positive");
  const double bound = inner_stepsize_bound(N, L);
  if (!(alpha < bound))
    throw std::domain_error(
        "inner stepsize precondition violated: alpha must satisfy "
        "alpha < (2^{1/(2N)} - 1)/L = " +
        std::to_string(bound) + ", got alpha = " + std::to_string(alpha));
  if (alpha < 0.0) throw std::domain_error("alpha must be nonnegative");
}

// sign-aware division by C_L, which is zero when rho = 0
double over_cl(double numer, double c_L) {
  if (c_L > 0.0) return numer / c_L;
  if (numer == 0.0) return 0.0;
  return numer > 0.0 ? kInf : -kInf;
}

}  // namespace

double inner_stepsize_bound(int N, double L) {
  if (N < 1)
    throw std::domain_error(
        "inner_stepsize_bound undefined for N = 0 (plain SGD regime)");
  if (L <= 0.0) throw std::domain_error("L must be positive");
  return (std::pow(2.0, 1.0 / (2.0 * N)) - 1.0) / L;
}

double default_alpha(int N, double L) {
  if (N < 1) throw std::domain_error("N must be >= 1");
  if (L <= 0.0) throw std::domain_error("L must be positive");
  return 1.0 / (8.0 * N * L);
}

double meta_stepsize(double hat_L, double C_beta) {
  if (hat_L <= 0.0 || C_beta <= 0.0)
    throw std::domain_error("meta_stepsize requires hat_L > 0 and C_beta > 0");
  return 1.0 / (C_beta * hat_L);
}

ResamplingConstants resampling_constants(const SmoothnessProfile& p,
                                         double alpha, int N, double C_beta,
                                         int S, int D, int T, int B) {
  check_alpha(alpha, N, p.L);
  if (S < 1 || D < 1 || T < 1 || B < 1)
    throw std::domain_error("batch sizes S, D, T, B must be >= 1");
  if (C_beta <= 0.0) throw std::domain_error("C_beta must be positive");

  ResamplingConstants c;
  c.alpha = alpha;
  c.C_beta = C_beta;
  c.N = N;
  c.S = S;
  c.D = D;
  c.T = T;
  c.B = B;
  c.profile = p;
  c.alpha_max = inner_stepsize_bound(N, p.L);

  const double L = p.L, rho = p.rho, sg = p.sigma_g, sh = p.sigma_H,
               sigma = p.sigma;
  const double x = 1.0 + alpha * L;
  const double xN = ipow(x, N);
  const double x2N = xN * xN;
  const double x4N = x2N * x2N;
  const double c1 = 2.0 - x2N;  // positive by the alpha precondition

  c.c_L = (ipow(x, N - 1) * alpha * rho + (rho / L) * xN * (ipow(x, N - 1) - 1.0)) * xN;
  c.c_err1 = x2N * sg;
  c.c_err2 = x4N * rho * sg / (c1 * L * L);

  const double hess_factor = alpha * alpha * sh * sh / D + x * x;
  c.c_squ1 = 3.0 * ipow(hess_factor, N) * sg * sg;
  // 2 c_squ1 x^{2N} / (c1^2 sigma_g^2) with the sigma_g^2 cancelled, so the
  // value is defined at sigma_g = 0 as well.
  c.c_squ3 = 6.0 * ipow(hess_factor, N) * x2N / (c1 * c1);
  c.c_squ2 =
      c.c_squ1 * (ipow(1.0 + 2.0 * alpha * L + 2.0 * alpha * alpha * L * L, N) - 1.0) *
      alpha * L / x;

  c.chi = over_cl(c1 * x2N * L, c.c_L) + sigma;
  c.xi = (6.0 / (C_beta * L)) * (0.2 + 2.0 / C_beta) *
         (c.c_err1 * c.c_err1 + c.c_err2 * c.c_err2 * sigma * sigma);
  c.phi = (2.0 / (C_beta * C_beta * L)) *
          (c.c_squ1 / T + c.c_squ2 / S + c.c_squ3 * sigma * sigma);
  c.theta_factor = 0.2 - (0.6 + 6.0 / C_beta) * c.c_err2 * c.c_err2 / S -
                   c.c_squ3 / (C_beta * B) - 2.0 / C_beta;
  c.theta = over_cl(2.0 * c1 * c.theta_factor / C_beta, c.c_L);

  c.c_l = x2N - 1.0;
  c.bprime_min = 4.0 * c.c_L * c.c_L * sigma * sigma / (3.0 * x4N * L * L);
  c.dl_min = 64.0 * sg * sg * c.c_L * c.c_L / (x4N * L * L);
  return c;
}

FiniteSumConstants finite_sum_constants(const SmoothnessProfile& p, double alpha,
                                        int N, double C_beta, int B) {
  check_alpha(alpha, N, p.L);
  if (B < 1) throw std::domain_error("B must be >= 1");
  if (C_beta <= 0.0) throw std::domain_error("C_beta must be positive");

  FiniteSumConstants c;
  c.alpha = alpha;
  c.C_beta = C_beta;
  c.N = N;
  c.B = B;
  c.profile = p;
  c.alpha_max = inner_stepsize_bound(N, p.L);

  const double L = p.L, rho = p.rho, sigma = p.sigma, b = p.b, bt = p.b_tilde;
  const double x = 1.0 + alpha * L;
  const double xN = ipow(x, N);
  const double x2N = xN * xN;
  const double x3N = x2N * xN;
  const double x4N = x2N * x2N;
  const double x8N = x4N * x4N;
  const double c1 = 2.0 - x2N;

  c.c_b = (alpha * rho + (rho / L) * ipow(x, N - 1)) * x2N;
  c.c_L = c.c_b;
  c.a_squ1 = 4.0 * x4N / (c1 * c1);
  c.a_squ2 = 4.0 * x8N * (sigma + b) * (sigma + b) / (c1 * c1) +
             2.0 * x4N * (sigma * sigma + bt);
  c.c_1 = c1;
  c.c_2 = (x2N - 1.0) * sigma + xN * (xN - 1.0) * b;
  c.c_l = x2N - 1.0;

  c.xi = over_cl(c1 * x2N * L + c1 * c.c_b * b, c.c_L) + x3N * b;
  c.theta_factor = 1.0 / C_beta - (c.a_squ1 / B + 1.0) / (C_beta * C_beta);
  c.theta = over_cl(c1 * c.theta_factor, c.c_L);
  c.phi = c.a_squ2 / (L * C_beta * C_beta);

  const double denom = c.c_b * b + x2N * L;
  c.bprime_min = 2.0 * c.c_L * c.c_L * sigma * sigma / (denom * denom);
  return c;
}

double smoothness_at(const TaskDistribution& dist, const ResamplingConstants& c,
                     const Vector& w) {
  const double x2N = ipow(1.0 + c.alpha * c.profile.L, 2 * c.N);
  return x2N * c.profile.L + c.c_L * mean_grad_norm(dist, w);
}

double smoothness_at(const TaskDistribution& dist, const FiniteSumConstants& c,
                     const Vector& w) {
  const double x2N = ipow(1.0 + c.alpha * c.profile.L, 2 * c.N);
  return x2N * c.profile.L + c.c_b * c.profile.b +
         c.c_L * mean_query_grad_norm(dist, w);
}

double hat_L_resample(const TaskDistribution& dist, const Vector& w, int Bprime,
                      int DL, const ResamplingConstants& c,
                      const RngStream& stream, WorkCounters* counters) {
  if (Bprime < 1 || DL < 1)
    throw std::domain_error("Bprime and DL must be >= 1");
  const double x2N = ipow(1.0 + c.alpha * c.profile.L, 2 * c.N);
  RngStream task_stream = stream.split(StreamRole::StepsizeTasks);
  const RngStream batch_root = stream.split(StreamRole::StepsizeBatch);
  double mean_norm = 0.0;
  for (int m = 0; m < Bprime; ++m) {
    const int i = task_stream.draw_index(dist.weights);
    RngStream bs = batch_root.split(static_cast<std::uint64_t>(m));
    const SampleBatch batch = draw_batch(i, DL, bs);
    mean_norm += stoch_grad(dist.tasks[i], w, batch, counters).norm();
  }
  mean_norm /= Bprime;
  return x2N * c.profile.L + c.c_L * mean_norm;
}

double hat_L_finite(const TaskDistribution& dist, const Vector& w, int Bprime,
                    const FiniteSumConstants& c, const RngStream& stream,
                    WorkCounters* counters) {
  if (Bprime < 1) throw std::domain_error("Bprime must be >= 1");
  const double x2N = ipow(1.0 + c.alpha * c.profile.L, 2 * c.N);
  RngStream task_stream = stream.split(StreamRole::StepsizeTasks);
  double mean_norm = 0.0;
  for (int m = 0; m < Bprime; ++m) {
    const int i = task_stream.draw_index(dist.weights);
    mean_norm += query_grad(dist.tasks[i], w).norm();
    if (counters)
      counters->add_grads(std::get<MseParams>(dist.tasks[i].params).query_x.rows());
  }
  mean_norm /= Bprime;
  return x2N * c.profile.L + c.c_b * c.profile.b + c.c_L * mean_norm;
}

double theorem1_rhs(const ResamplingConstants& c, double delta, int K, int S,
                    int B) {
  if (K < 1 || S < 1 || B < 1) throw std::domain_error("K, S, B must be >= 1");
  if (!(c.theta_factor > 0.0))
    throw std::domain_error(
        "theorem 1 requires theta > 0; choose C_beta, S and B accordingly");
  const double x2N = ipow(1.0 + c.alpha * c.profile.L, 2 * c.N);
  const double c1 = 2.0 - x2N;
  const double mix = delta / K + c.xi / S + c.phi / B;
  // sum = (Delta/K + xi/S + phi/B) / theta, with theta's 1/C_L cancelled
  const double sum = c.C_beta * c.c_L * mix / (2.0 * c1 * c.theta_factor);
  // chi/theta stays finite as C_L -> 0
  const double chi_over_theta =
      c.C_beta * (c1 * x2N * c.profile.L + c.profile.sigma * c.c_L) /
      (2.0 * c1 * c.theta_factor);
  return sum + std::sqrt(0.5 * chi_over_theta * mix);
}

double theorem2_rhs(const FiniteSumConstants& c, double delta, int K, int B) {
  if (K < 1 || B < 1) throw std::domain_error("K and B must be >= 1");
  if (!(c.theta_factor > 0.0))
    throw std::domain_error(
        "theorem 2 requires theta > 0; choose C_beta and B accordingly");
  const double x = 1.0 + c.alpha * c.profile.L;
  const double x2N = ipow(x, 2 * c.N);
  const double x3N = ipow(x, 3 * c.N);
  const double c1 = 2.0 - x2N;
  const double mix = delta / K + c.phi / B;
  const double half = c.c_L * mix / (2.0 * c1 * c.theta_factor);
  const double xi_over_theta =
      (x2N * c.profile.L + c.c_b * c.profile.b + c.c_L * x3N * c.profile.b / c1) /
      c.theta_factor;
  return half + std::sqrt(xi_over_theta * mix + half * half);
}

CorollaryCrossChecks corollary1_cross_checks(const SmoothnessProfile& p,
                                             double alpha, int N) {
  check_alpha(alpha, N, p.L);
  CorollaryCrossChecks c;
  const double x = 1.0 + alpha * p.L;
  const double xN = ipow(x, N);
  const double xNm1 = ipow(x, N - 1);
  c.c_err1_tight = xN * (xN - 1.0) * p.sigma_g;
  c.c_err2_tight = (xNm1 - 1.0) * (xNm1 - 1.0) * ipow(x, 2 * N - 1) * p.rho *
                   p.sigma_g / ((2.0 - xN * xN) * p.L * p.L);
  return c;
}

Corollary1Batches corollary1_batch_thresholds(const SmoothnessProfile& p) {
  Corollary1Batches t;
  t.S_min = 15.0 * p.rho * p.rho * p.sigma_g * p.sigma_g / ipow(p.L, 4);
  // The statement prints sigma_H^2 L^2 while the corollary proof uses
  // sigma_H^2 / L^2; meeting both keeps every derived bound valid.
  t.D_min = std::max(p.sigma_H * p.sigma_H * p.L * p.L,
                     p.sigma_H * p.sigma_H / (p.L * p.L));
  return t;
}

}  // namespace maml
