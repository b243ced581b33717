#pragma once

// Dense assembly kernels used once per BSUM iteration.
//
// Every kernel has a plain-loop serial reference and an OpenMP version. The
// OpenMP versions assign whole output columns to threads and never reduce
// across threads, so their results do not depend on the thread count. The
// serial versions are kept as the test oracle and as the benchmark baseline.

#include "aris/types.hpp"

namespace aris {

enum class Backend { serial, parallel };

namespace kernels {

struct PhiQuadraticInputs {
  const cmat& ris_user;   // N x K, f_k
  const cmat& bs_ris_w;   // N x K, G w_k
  const cvec& u;
  const rvec& rho;
  double noise_ris;
};

struct PhiLinearInputs {
  const cmat& ris_user;     // N x K, f_k
  const cmat& bs_ris_w;     // N x K, G w_k
  const cmat& direct_gain;  // K x K, (k, i) = hbar_k^H w_i
  const cvec& u;
  const rvec& rho;
};

namespace serial {

/// h_k = hbar_k + G^H (conj(phi) .* f_k), returned as M x K.
cmat effective_channels(const cmat& bs_user, const cmat& ris_user, const cmat& bs_ris,
                        const cvec& phi);
/// (k, i) = h_k^H w_i.
cmat cross_gains(const cmat& channels, const Precoder& w);
/// sum_k c_k h_k h_k^H.
cmat weighted_gram(const cmat& channels, const rvec& weights);
/// G^H Diag(|phi|^2) G.
cmat reflected_gram(const cmat& bs_ris, const cvec& phi);
/// G W as N x K.
cmat apply_bs_ris(const cmat& bs_ris, const Precoder& w);
/// lambda_n = sum_k |(G w_k)_n|^2 + sigma_v^2.
rvec ris_power_weights(const cmat& bs_ris_w, double noise_ris);
cmat phi_quadratic(const PhiQuadraticInputs& in);
cvec phi_linear(const PhiLinearInputs& in);

}  // namespace serial

namespace parallel {

cmat effective_channels(const cmat& bs_user, const cmat& ris_user, const cmat& bs_ris,
                        const cvec& phi);
cmat cross_gains(const cmat& channels, const Precoder& w);
cmat weighted_gram(const cmat& channels, const rvec& weights);
cmat reflected_gram(const cmat& bs_ris, const cvec& phi);
cmat apply_bs_ris(const cmat& bs_ris, const Precoder& w);
rvec ris_power_weights(const cmat& bs_ris_w, double noise_ris);
cmat phi_quadratic(const PhiQuadraticInputs& in);
cvec phi_linear(const PhiLinearInputs& in);

}  // namespace parallel

/// Dispatches to one of the two implementations.
class KernelSet {
 public:
  explicit KernelSet(Backend backend = Backend::parallel) : backend_(backend) {}

  Backend backend() const { return backend_; }

  cmat effective_channels(const cmat& bs_user, const cmat& ris_user, const cmat& bs_ris,
                          const cvec& phi) const;
  cmat cross_gains(const cmat& channels, const Precoder& w) const;
  cmat weighted_gram(const cmat& channels, const rvec& weights) const;
  cmat reflected_gram(const cmat& bs_ris, const cvec& phi) const;
  cmat apply_bs_ris(const cmat& bs_ris, const Precoder& w) const;
  rvec ris_power_weights(const cmat& bs_ris_w, double noise_ris) const;
  cmat phi_quadratic(const PhiQuadraticInputs& in) const;
  cvec phi_linear(const PhiLinearInputs& in) const;

 private:
  Backend backend_;
};

/// Pins the OpenMP thread count for the kernels; 0 keeps the runtime default.
void set_num_threads(int threads);
int max_threads();

}  // namespace kernels
}  // namespace aris
