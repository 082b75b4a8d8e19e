// Monte-Carlo and deterministic verification of the propositions and
// lemmas. Stochastic upper bounds use the rule empirical + 3 SE <= bound;
// lower bounds use empirical - 3 SE >= bound; deterministic inequalities are
// checked on every sampled instance.

#pragma once

#include <string>
#include <vector>

#include "maml/meta_gradient.hpp"
#include "maml/theory.hpp"

namespace maml {

enum class BoundDirection { Upper, Lower };

struct BoundReport {
  std::string name;
  long long trials = 0;
  double empirical = 0.0;
  double se = 0.0;  // zero for deterministic checks
  double bound = 0.0;
  BoundDirection direction = BoundDirection::Upper;
  bool satisfied = false;
  double slack_ratio = 0.0;  // in [0, 1] when satisfied
  std::string note;
};

BoundReport make_report(std::string name, long long trials, double empirical,
                        double se, double bound,
                        BoundDirection direction = BoundDirection::Upper,
                        std::string note = "");

std::string report_csv_header();
std::string report_csv_row(const BoundReport& r);
std::string report_line(const BoundReport& r);

// Meta gradient vs central finite differences of w -> l_i(w_N(w)).
BoundReport check_meta_grad_fd(const Task& t, const Vector& w, double alpha,
                               int N, double h, double tol);

// Proposition 2 path moments, conditioned on w; one report per moment and
// inner step. `proof_factor` selects the proof's second-moment growth factor
// (1 + 2 alpha L + 2 alpha^2 L^2); the statement's printed factor drops one
// alpha L term and is exposed as the alternative.
std::vector<BoundReport> mc_check_prop2(const TaskDistribution& dist,
                                        const Vector& w, double alpha, int N,
                                        int S, int trials, RngStream rng,
                                        bool proof_factor = true);

// Proposition 3 estimation bias ||E G_hat - grad L||.
BoundReport mc_check_prop3(const TaskDistribution& dist, const Vector& w,
                           double alpha, int N, int S, int D, int T, int trials,
                           RngStream rng);

// Proposition 4 second moment E ||G_hat||^2.
BoundReport mc_check_prop4(const TaskDistribution& dist, const Vector& w,
                           double alpha, int N, int S, int D, int T, int trials,
                           RngStream rng);

// Proposition 6 second moment, exact finite-family expectation.
BoundReport mc_check_prop6(const TaskDistribution& dist, const Vector& w,
                           double alpha, int N);

// Propositions 1 / 5 gradient-Lipschitz property on sampled pairs.
BoundReport check_smoothness(const TaskDistribution& dist, double alpha, int N,
                             int pairs, RngStream rng);

// Deterministic lemma inequalities on sampled instances: path contraction,
// gradient growth, the product-expansion bound, the gradient/meta-gradient
// gap, and the full-family mean bounds (and their finite-sum analogues).
std::vector<BoundReport> check_lemma_suite(const TaskDistribution& dist,
                                           double alpha, int N, int trials,
                                           RngStream rng);

// Stepsize moment bounds for beta_k (resampling) and 1/L_hat (finite-sum).
std::vector<BoundReport> mc_check_stepsize_moments(const TaskDistribution& dist,
                                                   const Vector& w, double alpha,
                                                   int N, double C_beta,
                                                   int Bprime, int DL,
                                                   int trials, RngStream rng);

struct VerifySettings {
  int N = 3;
  double alpha = -1.0;  // < 0 selects 1/(8NL)
  int S = 10, D = 10, T = 10;
  double C_beta = 100.0;
  int Bprime = 8, DL = 8;
  int path_trials = 10000;
  int moment_trials = 100000;
  int lemma_trials = 1000;
  int pairs = 200;
  std::uint64_t seed = 2024;
};

// Runs every check applicable to the distribution's objective case.
std::vector<BoundReport> run_verify_suite(const TaskDistribution& dist,
                                          const VerifySettings& s);

}  // namespace maml
