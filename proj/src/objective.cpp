#include "aris/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "aris/kernels.hpp"

namespace aris {

void PowerBudget::validate() const {
  if (!(p_bs > 0.0)) throw std::invalid_argument("P_B must be positive");
  if (!(p_ris > 0.0)) throw std::invalid_argument("P_A must be positive");
  if (eta.size() == 0) throw std::invalid_argument("per-element caps are empty");
  if (!(eta.array() > 0.0).all()) throw std::invalid_argument("every eta_n must be positive");
}

namespace {

void check_shapes(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi) {
  if (w.rows() != ch.num_antennas() || w.cols() != ch.num_users())
    throw std::invalid_argument("precoder must be M x K");
  if (phi.size() != ch.num_elements()) throw std::invalid_argument("phi must have N entries");
}

}  // namespace

rvec LinkTerms::sinr() const {
  return signal.array() / (interference + ris_noise + user_noise).array();
}

LinkTerms link_terms(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi) {
  check_shapes(ch, w, phi);
  const cmat h = effective_channel(ch, phi);
  const cmat gains = kernels::parallel::cross_gains(h, w);
  const rvec phi_power = phi.cwiseAbs2();

  const auto k_users = ch.num_users();
  LinkTerms t;
  t.desired = gains.diagonal();
  t.signal = t.desired.cwiseAbs2();
  t.interference.resize(k_users);
  t.ris_noise.resize(k_users);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    double leak = 0.0;
    for (Eigen::Index i = 0; i < k_users; ++i)
      if (i != k) leak += std::norm(gains(k, i));
    t.interference(k) = leak;
    t.ris_noise(k) = ch.ris_user.col(k).cwiseAbs2().dot(phi_power) * ch.noise_ris;
  }
  t.user_noise = ch.noise_user;
  return t;
}

double sinr(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi, int k) {
  if (k < 0 || k >= ch.num_users()) throw std::out_of_range("user index out of range");
  return sinr_all(ch, w, phi)(k);
}

rvec sinr_all(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi) {
  return link_terms(ch, w, phi).sinr();
}

rvec user_rates(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi) {
  return sinr_all(ch, w, phi).unaryExpr([](double s) { return std::log2(1.0 + s); });
}

double sum_rate(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi) {
  return user_rates(ch, w, phi).sum();
}

rvec mse_terms(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi, const cvec& u) {
  const LinkTerms t = link_terms(ch, w, phi);
  if (u.size() != ch.num_users()) throw std::invalid_argument("u must have K entries");
  const rvec total = t.total();
  rvec f(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k)
    f(k) = std::norm(u(k)) * total(k) - 2.0 * (std::conj(u(k)) * t.desired(k)).real() + 1.0;
  return f;
}

double surrogate_g(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi,
                   const AuxiliaryVars& aux) {
  if (aux.rho.size() != ch.num_users()) throw std::invalid_argument("rho must have K entries");
  if (!(aux.rho.array() > 0.0).all()) throw std::invalid_argument("rho_k must be positive");
  const rvec f = mse_terms(ch, w, phi, aux.u);
  double g = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) g += aux.rho(k) * f(k) - std::log(aux.rho(k));
  return g;
}

double ris_output_power(const Precoder& w, const ReflectCoeffs& phi, const ChannelSet& ch) {
  const cmat gw = kernels::parallel::apply_bs_ris(ch.bs_ris, w);
  const rvec per_element = gw.rowwise().squaredNorm();
  return phi.cwiseAbs2().dot(per_element) + phi.squaredNorm() * ch.noise_ris;
}

double ConstraintResiduals::max_relative() const {
  return std::max({bs_rel, ris_elem_rel, ris_power_rel});
}

ConstraintResiduals constraint_residuals(const Precoder& w, const ReflectCoeffs& phi,
                                         const PowerBudget& budget, const ChannelSet& ch) {
  check_shapes(ch, w, phi);
  if (budget.eta.size() != phi.size()) throw std::invalid_argument("eta must have N entries");

  ConstraintResiduals r;
  if (budget.per_antenna) {
    const double cap = budget.p_bs / static_cast<double>(w.rows());
    r.bs = w.rowwise().squaredNorm().maxCoeff() - cap;
    r.bs_rel = r.bs / cap;
  } else {
    r.bs = w.squaredNorm() - budget.p_bs;
    r.bs_rel = r.bs / budget.p_bs;
  }

  const rvec excess = phi.cwiseAbs() - budget.eta;
  r.ris_elem = excess.maxCoeff();
  r.ris_elem_rel = excess.cwiseQuotient(budget.eta).maxCoeff();

  r.ris_power = ris_output_power(w, phi, ch) - budget.p_ris;
  r.ris_power_rel = r.ris_power / budget.p_ris;
  return r;
}

}  // namespace aris
