// Synthetic task families with closed-form losses, gradients, Hessians,
// per-sample stochastic oracles, and exactly computable smoothness constants.

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "maml/counters.hpp"
#include "maml/linalg.hpp"
#include "maml/rng.hpp"

namespace maml {

enum class Family { Quadratic, Trig, FiniteSumMse };
enum class ObjectiveCase { Resampling, FiniteSum };

std::string to_string(Family f);
std::string to_string(ObjectiveCase c);
Family family_from_string(const std::string& s);
ObjectiveCase case_from_string(const std::string& s);

// Constants of the smoothness/variance assumptions, certified on the ball
// ||w|| <= domain_radius of the owning distribution.
struct SmoothnessProfile {
  double L = 0.0;        // gradient-Lipschitz bound, max over tasks
  double rho = 0.0;      // Hessian-Lipschitz bound, max over tasks
  double sigma = 0.0;    // task-gradient variance bound (across tasks)
  double sigma_g = 0.0;  // per-sample gradient variance bound
  double sigma_H = 0.0;  // per-sample Hessian variance bound
  double b = 0.0;        // mean of b_i (finite-sum support/query gradient gap)
  double b_tilde = 0.0;  // mean of b_i^2

  void validate() const;
};

// A batch of per-sample payloads. In the resampling case a payload is a
// 64-bit sample id; the noise realization it denotes is re-derived on every
// oracle call, so identical batches give bit-identical results.
struct SampleBatch {
  int task_index = 0;
  std::vector<std::uint64_t> samples;

  int size() const { return static_cast<int>(samples.size()); }
};

// l(w) = 1/2 w'Aw + b'w, per-sample (A + E_tau, b + eps_tau) with E_tau a
// zero-mean GOE-style symmetric matrix and eps_tau isotropic Gaussian.
struct QuadraticParams {
  Matrix a;
  Vector b;
  double hess_noise_scale = 0.0;  // per-entry GOE scale
  double grad_noise_scale = 0.0;  // per-coordinate eps scale
};

// l(w) = c (1 - cos(a'w + phase)) + lambda/2 ||w||^2; same additive
// per-sample noise model as the quadratic family.
struct TrigParams {
  double c = 0.0;
  Vector a;
  double phase = 0.0;
  double lambda = 0.0;
  double hess_noise_scale = 0.0;
  double grad_noise_scale = 0.0;
};

// Fixed support/query regression sets, l_S(w) = mean ||y - w'x||^2 over S.
// Rows of the x matrices are samples. Gram forms are cached at construction.
struct MseParams {
  Matrix support_x;
  Vector support_y;
  Matrix query_x;
  Vector query_y;

  Matrix support_gram;  // 2/|S| sum x x'
  Vector support_xy;    // 2/|S| sum y x
  double support_yy = 0.0;
  Matrix query_gram;
  Vector query_xy;
  double query_yy = 0.0;
  double b_i = 0.0;  // exact max over the ball of ||grad l_S - grad l_T||

  void finalize(double domain_radius);
};

struct Task {
  Family family = Family::Quadratic;
  int dimension = 0;
  std::uint64_t noise_key = 0;  // seeds per-sample payload expansion
  std::variant<QuadraticParams, TrigParams, MseParams> params;
};

struct TaskDistribution {
  ObjectiveCase objective = ObjectiveCase::Resampling;
  Family family = Family::Quadratic;
  std::vector<Task> tasks;
  Vector weights;
  double domain_radius = 1.0;
  std::uint64_t seed = 0;
  SmoothnessProfile profile;

  int dimension() const { return tasks.empty() ? 0 : tasks.front().dimension; }
  int num_tasks() const { return static_cast<int>(tasks.size()); }
  void validate() const;
};

// ---- exact oracles (support-side loss for the finite-sum family) ----
double loss(const Task& t, const Vector& w);
Vector grad(const Task& t, const Vector& w);
Matrix hess(const Task& t, const Vector& w);

// Query-side oracles; identical to the plain ones except for MSE tasks.
double query_loss(const Task& t, const Vector& w);
Vector query_grad(const Task& t, const Vector& w);
Matrix query_hess(const Task& t, const Vector& w);

// ---- stochastic oracles (resampling families only) ----
SampleBatch draw_batch(int task_index, int size, RngStream& stream);
Vector stoch_grad(const Task& t, const Vector& w, const SampleBatch& batch,
                  WorkCounters* counters = nullptr);
Matrix stoch_hess(const Task& t, const Vector& w, const SampleBatch& batch,
                  WorkCounters* counters = nullptr);

// ---- family builders ----
TaskDistribution make_quadratic_family(int d, int num_tasks, double L_target,
                                       double sigma, double sigma_g,
                                       double sigma_H, double R,
                                       std::uint64_t seed);

TaskDistribution make_trig_family(int d, int num_tasks, double c_max,
                                  double a_max, double lambda, double R,
                                  double sigma_g, double sigma_H,
                                  std::uint64_t seed);

TaskDistribution make_finite_sum_mse(int d, int num_tasks, int support_size,
                                     int query_size, double noise_std, double R,
                                     std::uint64_t seed);

// Assembles a distribution from explicitly built tasks and computes the
// exact profile (used by tests and by degenerate constructions such as
// all-zero Hessians).
TaskDistribution make_distribution(std::vector<Task> tasks, Vector weights,
                                   ObjectiveCase objective, double R,
                                   std::uint64_t seed);

// Exact weighted task statistics used throughout the bound checks.
Vector mean_grad(const TaskDistribution& dist, const Vector& w);          // resampling l_i
Vector mean_query_grad(const TaskDistribution& dist, const Vector& w);    // finite-sum l_T
double mean_grad_norm(const TaskDistribution& dist, const Vector& w);     // E_i ||grad l_i||
double mean_query_grad_norm(const TaskDistribution& dist, const Vector& w);
double task_grad_variance(const TaskDistribution& dist, const Vector& w);  // E_i||g_i - g||^2

}  // namespace maml
