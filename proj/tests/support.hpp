#pragma once

// Random instances shared by the unit and acceptance suites.

#include <cstdint>
#include <random>

#include "aris/channel.hpp"
#include "aris/harness.hpp"
#include "aris/types.hpp"

namespace aris::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  cplx cgauss() {
    std::normal_distribution<double> n(0.0, 1.0);
    const double re = n(gen_);
    return {re, n(gen_)};
  }
  cmat cmatrix(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    cmat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * cgauss();
    return m;
  }
  cvec cvector(Eigen::Index n, double scale = 1.0) { return cmatrix(n, 1, scale).col(0); }
  rvec positive(Eigen::Index n, double lo, double hi) {
    rvec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }
  /// Hermitian PSD with a chosen rank.
  cmat psd(Eigen::Index n, Eigen::Index rank) {
    const cmat f = cmatrix(n, rank);
    return f * f.adjoint();
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// Unit-scale channel set (entries O(1), noise O(0.1..1)); well conditioned
/// for identity checks that do not care about physical path loss.
inline ChannelSet unit_channels(Rng& rng, int m, int n, int k) {
  ChannelSet ch;
  ch.bs_user = rng.cmatrix(m, k);
  ch.ris_user = rng.cmatrix(n, k, 0.5);
  ch.bs_ris = rng.cmatrix(n, m, 0.5);
  ch.noise_ris = rng.uniform(0.05, 0.5);
  ch.noise_user = rng.positive(k, 0.1, 1.0);
  return ch;
}

/// The harness scenario with the given dimensions (physical parameters).
inline harness::Scenario desk_scenario(Dims dims, int users, double p_max_dbm, int trial,
                                       std::uint64_t base_seed = 1) {
  harness::ExperimentConfig cfg;
  cfg.users = users;
  cfg.base_seed = base_seed;
  return harness::make_scenario(cfg, dims, p_max_dbm, trial);
}

inline double rel_diff(const cmat& a, const cmat& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace aris::testing
