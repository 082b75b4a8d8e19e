// Counter-based splittable random streams (Philox 4x32-10).
//
// Every consumer of randomness receives an explicit RngStream. Streams are
// split hierarchically by integer labels (outer iteration, task slot, inner
// step, batch role), so the set of drawn samples is a pure function of the
// run seed and the label path, never of scheduling or evaluation order.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

#include <Eigen/Core>

namespace maml {

namespace detail {

// SplitMix64 finalizer; used to derive child keys from (key, label) pairs.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
  constexpr std::uint64_t M0 = 0xD2511F53ULL;
  constexpr std::uint64_t M1 = 0xCD9E8D57ULL;
  const std::uint64_t p0 = M0 * ctr[0];
  const std::uint64_t p1 = M1 * ctr[2];
  const std::array<std::uint32_t, 4> out = {
      static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
      static_cast<std::uint32_t>(p1),
      static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
      static_cast<std::uint32_t>(p0)};
  ctr = out;
  key[0] += 0x9E3779B9u;
  key[1] += 0xBB67AE85u;
}

inline std::array<std::uint32_t, 4> philox10(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) philox_round(ctr, key);
  return ctr;
}

}  // namespace detail

// Batch roles; each role owns a disjoint key subspace so that e.g. the inner
// training batches S_{k,j} are independent of the Hessian batches D_{k,j}
// and of the outer gradient batch T_k, as the estimator requires.
enum class StreamRole : std::uint64_t {
  InnerBatch = 1,      // S_{k,j}
  HessianBatch = 2,    // D_{k,j}
  OuterBatch = 3,      // T_k
  StepsizeTasks = 4,   // B'_k
  StepsizeBatch = 5,   // D_{L_k}
  TaskDraw = 6,        // B_k
  Init = 7,            // w_0
  ZetaDraw = 8,        // output index
  SampleNoise = 9,     // per-sample payload expansion
  Scratch = 10,        // tests / ad-hoc
};

class RngStream {
 public:
  RngStream() : key_(0), counter_(0) {}
  explicit RngStream(std::uint64_t seed) : key_(detail::mix64(seed)), counter_(0) {}

  // Derives an independent child stream; does not advance this stream.
  [[nodiscard]] RngStream split(std::uint64_t label) const {
    RngStream child;
    child.key_ = detail::mix64(key_ ^ detail::mix64(label << 1 | 1));
    child.counter_ = 0;
    return child;
  }
  [[nodiscard]] RngStream split(StreamRole role) const {
    return split(0xF00D000000000000ULL | static_cast<std::uint64_t>(role));
  }
  [[nodiscard]] RngStream split(std::initializer_list<std::uint64_t> labels) const {
    RngStream s = *this;
    for (std::uint64_t l : labels) s = s.split(l);
    return s;
  }

  std::uint64_t next_u64() {
    const std::uint64_t c = counter_++;
    const auto out = detail::philox10(
        {static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32), 0u, 0u},
        {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; implemented here (not std::normal_distribution) so that the
  // value sequence is identical across standard libraries.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  Eigen::VectorXd gaussian_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  // Uniform on the solid ball of the given radius (gaussian direction,
  // radius ~ U^{1/d}).
  Eigen::VectorXd uniform_in_ball(Eigen::Index d, double radius) {
    Eigen::VectorXd v = gaussian_vector(d);
    const double nrm = v.norm();
    if (nrm == 0.0) return Eigen::VectorXd::Zero(d);
    const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(d));
    return v * (r / nrm);
  }

  Eigen::VectorXd uniform_on_sphere(Eigen::Index d, double radius) {
    Eigen::VectorXd v = gaussian_vector(d);
    const double nrm = v.norm();
    if (nrm == 0.0) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
      e[0] = radius;
      return e;
    }
    return v * (radius / nrm);
  }

  // Index draw by CDF inversion over the given probability weights.
  int draw_index(const Eigen::VectorXd& weights) {
    const double u = uniform();
    double acc = 0.0;
    const int n = static_cast<int>(weights.size());
    for (int i = 0; i < n; ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace maml
