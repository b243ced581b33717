#pragma once

#include "aris/channel.hpp"
#include "aris/types.hpp"

namespace aris {

/// Per-user terms of the received-signal budget at a given (w, phi).
struct LinkTerms {
  rvec signal;        // |h_k^H w_k|^2
  rvec interference;  // sum_{i != k} |h_k^H w_i|^2
  rvec ris_noise;     // ||f_k^H Phi||^2 sigma_v^2
  rvec user_noise;    // sigma_k^2
  cvec desired;       // h_k^H w_k

  rvec total() const { return signal + interference + ris_noise + user_noise; }
  rvec sinr() const;
};

LinkTerms link_terms(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi);

double sinr(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi, int k);
rvec sinr_all(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi);

/// sum_k log2(1 + SINR_k), bits/s/Hz.
double sum_rate(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi);
rvec user_rates(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi);

/// WMMSE surrogate g = sum_k rho_k F_k - ln(rho_k).
///
/// Uses the natural log, so at the optimal (u, rho) it equals
/// K - ln(2) * sum_rate. Throws std::invalid_argument if any rho_k <= 0.
double surrogate_g(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi,
                   const AuxiliaryVars& aux);

/// Per-user MSE term F_k(w, phi, u_k).
rvec mse_terms(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi, const cvec& u);

/// Constraint violations. Positive means violated. The *_rel fields divide by
/// the matching budget (P_B or P_B/M, eta_n, P_A).
struct ConstraintResiduals {
  double bs = 0.0;
  double ris_elem = 0.0;
  double ris_power = 0.0;
  double bs_rel = 0.0;
  double ris_elem_rel = 0.0;
  double ris_power_rel = 0.0;

  double max_relative() const;
  bool feasible(double rel_tol = 1e-8) const { return max_relative() <= rel_tol; }
};

ConstraintResiduals constraint_residuals(const Precoder& w, const ReflectCoeffs& phi,
                                         const PowerBudget& budget, const ChannelSet& ch);

/// RIS output power sum_k ||Phi G w_k||^2 + ||phi||^2 sigma_v^2.
double ris_output_power(const Precoder& w, const ReflectCoeffs& phi, const ChannelSet& ch);

}  // namespace aris
