#include <doctest.h>

#include <cmath>

#include "maml/theory.hpp"

using namespace maml;

namespace {

SmoothnessProfile sample_profile() {
  SmoothnessProfile p;
  p.L = 2.0;
  p.rho = 1.0;
  p.sigma = 0.3;
  p.sigma_g = 0.5;
  p.sigma_H = 0.4;
  return p;
}

double ipow(double b, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

TEST_CASE("inner stepsize bound values and monotonicity") {
  CHECK(inner_stepsize_bound(1, 1.0) ==
        doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
  CHECK(inner_stepsize_bound(5, 2.0) ==
        doctest::Approx((std::pow(2.0, 0.1) - 1.0) / 2.0).epsilon(1e-12));
  double prev = 1e9;
  for (int n = 1; n <= 20; ++n) {
    const double b = inner_stepsize_bound(n, 1.0);
    CHECK(b < prev);
    prev = b;
  }
  CHECK_THROWS_AS(inner_stepsize_bound(0, 1.0), std::domain_error);
  CHECK_THROWS_AS(inner_stepsize_bound(1, 0.0), std::domain_error);
}

TEST_CASE("default alpha sits below the bound with the corollary margins") {
  CHECK(default_alpha(5, 2.0) == doctest::Approx(0.0125).epsilon(1e-15));
  for (int n = 1; n <= 50; ++n) {
    const double L = 0.7;
    const double a = default_alpha(n, L);
    CHECK(a < inner_stepsize_bound(n, L));
    CHECK(ipow(1.0 + a * L, n) < 1.25);
    CHECK(ipow(1.0 + a * L, 2 * n) < 1.5);
  }
}

TEST_CASE("rho = 0 collapses the curvature constants") {
  SmoothnessProfile p = sample_profile();
  p.rho = 0.0;
  const auto c = resampling_constants(p, default_alpha(3, p.L), 3, 100.0, 8, 8,
                                      8, 4);
  CHECK(c.c_L == 0.0);
  CHECK(c.c_err2 == 0.0);
  CHECK(std::isinf(c.chi));
  CHECK(std::isinf(c.theta));
  CHECK(c.theta_factor > 0.0);

  const auto f = finite_sum_constants(p, default_alpha(3, p.L), 3, 80.0, 4);
  CHECK(f.c_b == 0.0);
  CHECK(f.c_L == 0.0);
}

TEST_CASE("corollary-1 constant chain holds across N") {
  const SmoothnessProfile p = sample_profile();
  const auto thresholds = corollary1_batch_thresholds(p);
  const int S = std::max(1, static_cast<int>(std::ceil(thresholds.S_min)));
  const int D = std::max(1, static_cast<int>(std::ceil(thresholds.D_min)));
  // ceiling on the exact C_squ3 under alpha = 1/(8NL):
  // 8 e^{1/4} / (2 - e^{1/4})^2
  const double csqu3_cap =
      8.0 * std::exp(0.25) / ((2.0 - std::exp(0.25)) * (2.0 - std::exp(0.25)));
  for (int n = 1; n <= 50; ++n) {
    const double alpha = default_alpha(n, p.L);
    for (int B : {3, 20}) {
      const auto c = resampling_constants(p, alpha, n, 100.0, S, D, 8, B);
      // exact (displayed) constants obey their derivable envelopes
      CHECK(c.c_err1 < 25.0 * p.sigma_g / 16.0);
      CHECK(c.c_squ1 < 4.0 * p.sigma_g * p.sigma_g);
      CHECK(c.c_squ3 <= csqu3_cap);
      CHECK(c.theta >= p.L / (1500.0 * p.rho));
      if (n >= 2) {
        CHECK(c.c_L > p.rho / (16.0 * p.L));
        CHECK(c.c_L < 3.0 * p.rho / (5.0 * p.L));
      }
      // the corollary's printed numbers hold for the proof-level constants
      const auto cc = corollary1_cross_checks(p, alpha, n);
      CHECK(cc.c_err1_tight < 5.0 * p.sigma_g / 16.0);
      CHECK(cc.c_err2_tight < 3.0 * p.rho * p.sigma_g / (4.0 * p.L * p.L));
      CHECK(cc.c_err1_tight <= c.c_err1);
      CHECK(cc.c_err2_tight <= c.c_err2);
    }
  }
}

TEST_CASE("alpha = 0 substitutions") {
  const SmoothnessProfile p = sample_profile();
  const auto c = resampling_constants(p, 0.0, 1, 100.0, 4, 4, 4, 2);
  CHECK(c.c_err1 == doctest::Approx(p.sigma_g).epsilon(1e-15));
  CHECK(c.c_squ1 ==
        doctest::Approx(3.0 * p.sigma_g * p.sigma_g).epsilon(1e-15));
  CHECK(c.c_l == 0.0);
}

TEST_CASE("corollary-2 constants: theta floor and A_squ1 ceiling") {
  SmoothnessProfile p = sample_profile();
  p.b = 0.2;
  p.b_tilde = 0.05;
  for (int n = 1; n <= 50; ++n) {
    const double alpha = default_alpha(n, p.L);
    for (int B : {1, 10}) {
      const auto c = finite_sum_constants(p, alpha, n, 80.0, B);
      CHECK(c.a_squ1 < 32.0);
      CHECK(c.theta >= p.L / (200.0 * p.rho));
    }
  }
}

TEST_CASE("A_squ2 vanishes with sigma = b = b_tilde = 0, and A_squ1 = 4 at alpha 0") {
  SmoothnessProfile p = sample_profile();
  p.sigma = 0.0;
  p.b = 0.0;
  p.b_tilde = 0.0;
  const auto c = finite_sum_constants(p, default_alpha(2, p.L), 2, 80.0, 4);
  CHECK(c.a_squ2 == 0.0);
  const auto c0 = finite_sum_constants(p, 0.0, 2, 80.0, 4);
  CHECK(c0.a_squ1 == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("the alpha precondition is surfaced as a structured error") {
  const SmoothnessProfile p = sample_profile();
  const double bad = inner_stepsize_bound(3, p.L) * 1.01;
  CHECK_THROWS_WITH_AS(resampling_constants(p, bad, 3, 100.0, 1, 1, 1, 1),
                       doctest::Contains("2^{1/(2N)} - 1"), std::domain_error);
  CHECK_THROWS_AS(finite_sum_constants(p, bad, 3, 80.0, 1), std::domain_error);
}

TEST_CASE("meta stepsize arithmetic and cap") {
  CHECK(meta_stepsize(2.0, 100.0) == doctest::Approx(0.005).epsilon(1e-15));
  CHECK_THROWS_AS(meta_stepsize(0.0, 100.0), std::domain_error);
  CHECK_THROWS_AS(meta_stepsize(1.0, 0.0), std::domain_error);

  // beta_k <= 1/(C_beta (1+alpha L)^{2N} L): hat_L is floored by its
  // deterministic term.
  const auto dist = make_trig_family(3, 4, 0.5, 1.2, 0.5, 2.0, 0.2, 0.15, 51);
  const double alpha = default_alpha(3, dist.profile.L);
  const auto c =
      resampling_constants(dist.profile, alpha, 3, 100.0, 4, 4, 4, 2);
  RngStream rng(52);
  const Vector w = rng.uniform_in_ball(3, 1.0);
  const double floor_term =
      ipow(1.0 + alpha * dist.profile.L, 6) * dist.profile.L;
  for (int i = 0; i < 50; ++i) {
    const double hat = hat_L_resample(dist, w, 2, 3, c, rng.split(i));
    CHECK(hat >= floor_term);
    CHECK(meta_stepsize(hat, 100.0) <= 1.0 / (100.0 * floor_term) + 1e-18);
  }
}

TEST_CASE("hat_L is deterministic when the curvature constant vanishes") {
  const auto dist = make_quadratic_family(3, 4, 1.5, 0.3, 0.2, 0.1, 2.0, 53);
  const double alpha = default_alpha(2, dist.profile.L);
  const auto c =
      resampling_constants(dist.profile, alpha, 2, 100.0, 4, 4, 4, 2);
  REQUIRE(c.c_L == 0.0);
  RngStream rng(54);
  const Vector w = rng.uniform_in_ball(3, 1.0);
  const double expect = ipow(1.0 + alpha * dist.profile.L, 4) * dist.profile.L;
  CHECK(hat_L_resample(dist, w, 3, 3, c, rng.split(1)) ==
        doctest::Approx(expect).epsilon(1e-15));
  CHECK(hat_L_resample(dist, w, 3, 3, c, rng.split(2)) ==
        doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("hat_L Monte-Carlo mean brackets the exact smoothness constant") {
  const auto dist = make_trig_family(3, 6, 0.5, 1.3, 0.5, 2.0, 0.3, 0.2, 57);
  const int N = 3;
  const double alpha = default_alpha(N, dist.profile.L);
  const auto c =
      resampling_constants(dist.profile, alpha, N, 100.0, 4, 4, 4, 2);
  RngStream rng(58);
  const Vector w = rng.uniform_in_ball(3, 1.0);
  const double lw = smoothness_at(dist, c, w);
  const int bprime = 16, dl = 16, trials = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double h = hat_L_resample(dist, w, bprime, dl, c, rng.split(i + 1));
    sum += h;
    sumsq += h * h;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sumsq / trials - mean * mean) / trials);
  const double slack =
      c.c_L * (dist.profile.sigma_g / std::sqrt(double(dl)) +
               dist.profile.sigma / std::sqrt(double(bprime)));
  CHECK(mean >= lw - slack - 4.0 * se);
  CHECK(mean <= lw + slack + 4.0 * se);
}

TEST_CASE("single noiseless task gives the exact hat_L value") {
  const auto dist = make_trig_family(3, 1, 0.5, 1.5, 0.4, 2.0, 0.0, 0.0, 55);
  const double alpha = default_alpha(2, dist.profile.L);
  const auto c =
      resampling_constants(dist.profile, alpha, 2, 100.0, 4, 4, 4, 2);
  RngStream rng(56);
  const Vector w = rng.uniform_in_ball(3, 1.5);
  const double expect = ipow(1.0 + alpha * dist.profile.L, 4) * dist.profile.L +
                        c.c_L * grad(dist.tasks[0], w).norm();
  CHECK(hat_L_resample(dist, w, 5, 3, c, rng.split(3)) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("theorem RHS evaluators stay finite at rho = 0 and positive otherwise") {
  SmoothnessProfile p = sample_profile();
  {
    const auto c = resampling_constants(p, default_alpha(3, p.L), 3, 100.0, 8,
                                        8, 8, 4);
    const double rhs = theorem1_rhs(c, 1.0, 1000, 8, 4);
    CHECK(std::isfinite(rhs));
    CHECK(rhs > 0.0);
  }
  p.rho = 0.0;
  {
    const auto c = resampling_constants(p, default_alpha(3, p.L), 3, 100.0, 8,
                                        8, 8, 4);
    const double rhs = theorem1_rhs(c, 1.0, 1000, 8, 4);
    CHECK(std::isfinite(rhs));
    CHECK(rhs > 0.0);
  }
  {
    p.b = 0.1;
    p.b_tilde = 0.02;
    const auto c = finite_sum_constants(p, default_alpha(3, p.L), 3, 80.0, 10);
    const double rhs = theorem2_rhs(c, 1.0, 1000, 10);
    CHECK(std::isfinite(rhs));
    CHECK(rhs > 0.0);
  }
}

TEST_CASE("theorem RHS ratio form equals the literal form when rho > 0") {
  const SmoothnessProfile p = sample_profile();
  const double alpha = default_alpha(3, p.L);
  const auto c = resampling_constants(p, alpha, 3, 100.0, 30, 8, 8, 20);
  REQUIRE(c.theta_factor > 0.0);
  REQUIRE(std::isfinite(c.theta));
  const double delta = 2.0;
  const int K = 500, S = 30, B = 20;
  const double sum = delta / (c.theta * K) + c.xi / (c.theta * S) +
                     c.phi / (c.theta * B);
  const double literal = sum + std::sqrt(c.chi / 2.0) * std::sqrt(sum);
  CHECK(theorem1_rhs(c, delta, K, S, B) ==
        doctest::Approx(literal).epsilon(1e-12));

  SmoothnessProfile pf = p;
  pf.b = 0.15;
  pf.b_tilde = 0.03;
  const auto f = finite_sum_constants(pf, alpha, 3, 80.0, 10);
  REQUIRE(std::isfinite(f.theta));
  const double half = delta / (2.0 * f.theta * K) + f.phi / (2.0 * f.theta * 10);
  const double lit2 =
      half + std::sqrt(f.xi * (delta / (f.theta * K) + f.phi / (f.theta * 10)) +
                       half * half);
  CHECK(theorem2_rhs(f, delta, K, 10) == doctest::Approx(lit2).epsilon(1e-12));
}

TEST_CASE("C_L sign tracks rho, and the hat_L coefficient is nonnegative") {
  SmoothnessProfile p = sample_profile();
  for (int n : {1, 3, 7}) {
    const double alpha = default_alpha(n, p.L);
    const auto c = resampling_constants(p, alpha, n, 100.0, 2, 2, 2, 2);
    CHECK(c.c_L > 0.0);  // rho > 0, N >= 1, alpha > 0
    CHECK(std::isfinite(c.c_L));
  }
  p.rho = 0.0;
  const auto c0 = resampling_constants(p, default_alpha(2, p.L), 2, 100.0, 2,
                                       2, 2, 2);
  CHECK(c0.c_L == 0.0);
}

TEST_CASE("constants are pure functions of their inputs") {
  const SmoothnessProfile p = sample_profile();
  const auto a = resampling_constants(p, 0.01, 4, 100.0, 5, 6, 7, 8);
  const auto b = resampling_constants(p, 0.01, 4, 100.0, 5, 6, 7, 8);
  CHECK(a.c_L == b.c_L);
  CHECK(a.c_err1 == b.c_err1);
  CHECK(a.c_err2 == b.c_err2);
  CHECK(a.c_squ1 == b.c_squ1);
  CHECK(a.c_squ2 == b.c_squ2);
  CHECK(a.c_squ3 == b.c_squ3);
  CHECK(a.theta == b.theta);
  CHECK(a.xi == b.xi);
  CHECK(a.phi == b.phi);
  CHECK(a.chi == b.chi);
}

TEST_CASE("resampling constants match hand-evaluated formulas") {
  SmoothnessProfile p;
  p.L = 1.0;
  p.rho = 0.5;
  p.sigma = 0.2;
  p.sigma_g = 0.3;
  p.sigma_H = 0.4;
  const double alpha = 0.05;
  const int N = 2;
  const auto c = resampling_constants(p, alpha, N, 100.0, 10, 5, 6, 4);
  const double x = 1.05;
  const double x2n = ipow(x, 4);
  CHECK(c.c_err1 == doctest::Approx(x2n * 0.3).epsilon(1e-15));
  CHECK(c.c_err2 == doctest::Approx(ipow(x, 8) * 0.5 * 0.3 /
                                    ((2.0 - x2n) * 1.0))
                        .epsilon(1e-14));
  const double hf = alpha * alpha * 0.16 / 5.0 + x * x;
  CHECK(c.c_squ1 == doctest::Approx(3.0 * hf * hf * 0.09).epsilon(1e-14));
  CHECK(c.c_squ3 ==
        doctest::Approx(6.0 * hf * hf * x2n / ((2.0 - x2n) * (2.0 - x2n)))
            .epsilon(1e-14));
  const double growth = 1.0 + 2.0 * alpha + 2.0 * alpha * alpha;
  CHECK(c.c_squ2 == doctest::Approx(c.c_squ1 * (growth * growth - 1.0) * alpha /
                                    x)
                        .epsilon(1e-14));
  CHECK(c.c_L ==
        doctest::Approx((x * alpha * 0.5 + 0.5 * ipow(x, 2) * (x - 1.0)) *
                        ipow(x, 2))
            .epsilon(1e-14));
  // thresholds
  CHECK(c.bprime_min == doctest::Approx(4.0 * c.c_L * c.c_L * 0.04 /
                                        (3.0 * ipow(x, 8)))
                            .epsilon(1e-13));
  CHECK(c.dl_min ==
        doctest::Approx(64.0 * 0.09 * c.c_L * c.c_L / ipow(x, 8)).epsilon(1e-13));
}

TEST_CASE("finite-sum constants match hand-evaluated formulas") {
  SmoothnessProfile p;
  p.L = 1.0;
  p.rho = 0.5;
  p.sigma = 0.2;
  p.b = 0.3;
  p.b_tilde = 0.12;
  const double alpha = 0.04;
  const int N = 2;
  const auto c = finite_sum_constants(p, alpha, N, 80.0, 5);
  const double x = 1.04;
  const double xn = ipow(x, N), x2n = xn * xn, x4n = x2n * x2n;
  CHECK(c.c_b == doctest::Approx((alpha * 0.5 + 0.5 * x) * x2n).epsilon(1e-14));
  CHECK(c.c_L == c.c_b);
  CHECK(c.a_squ1 ==
        doctest::Approx(4.0 * x4n / ((2.0 - x2n) * (2.0 - x2n))).epsilon(1e-14));
  CHECK(c.a_squ2 ==
        doctest::Approx(4.0 * x4n * x4n * 0.25 / ((2.0 - x2n) * (2.0 - x2n)) +
                        2.0 * x4n * (0.04 + 0.12))
            .epsilon(1e-14));
  CHECK(c.c_1 == doctest::Approx(2.0 - x2n).epsilon(1e-15));
  CHECK(c.c_2 ==
        doctest::Approx((x2n - 1.0) * 0.2 + xn * (xn - 1.0) * 0.3).epsilon(1e-14));
  const double denom = c.c_b * 0.3 + x2n;
  CHECK(c.bprime_min ==
        doctest::Approx(2.0 * c.c_L * c.c_L * 0.04 / (denom * denom))
            .epsilon(1e-13));
}
