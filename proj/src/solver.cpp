#include "aris/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace aris {

namespace {

using Clock = std::chrono::steady_clock;

// Floor for P = P_A - ||phi||^2 sigma_v^2 when phi iterates overshoot the RIS budget.
constexpr double kRisBudgetFloor = 1e-6;

double effective_ris_budget(const ChannelSet& ch, const ReflectCoeffs& phi, double p_ris,
                            bool* clamped = nullptr) {
  const double p = p_ris - phi.squaredNorm() * ch.noise_ris;
  const double floor = kRisBudgetFloor * p_ris;
  if (clamped) *clamped = p < floor;
  return std::max(p, floor);
}

Precoder project_bs(const Precoder& w, const PowerBudget& budget) {
  return budget.per_antenna ? project_per_antenna(w, budget.p_bs) : project_ball(w, budget.p_bs);
}

void check_budget(const ChannelSet& ch, const PowerBudget& budget) {
  budget.validate();
  if (budget.eta.size() != ch.num_elements())
    throw std::invalid_argument("eta must have one cap per RIS element");
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

void SolverConfig::validate() const {
  if (mu0 && !(*mu0 > 0.0)) throw std::invalid_argument("mu0 must be positive");
  if (!(mu_growth >= 1.0)) throw std::invalid_argument("mu growth factor must be >= 1");
  if (mu_max && !(*mu_max > 0.0)) throw std::invalid_argument("mu_max must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(feas_tol > 0.0)) throw std::invalid_argument("feas_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
}

cvec update_u(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi) {
  const LinkTerms t = link_terms(ch, w, phi);
  return t.desired.cwiseQuotient(t.total().cast<cplx>());
}

rvec update_rho(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi, const cvec& u) {
  const LinkTerms t = link_terms(ch, w, phi);
  if (u.size() != t.desired.size()) throw std::invalid_argument("u must have K entries");
  rvec rho(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double denom = (1.0 - std::conj(u(k)) * t.desired(k)).real();
    if (!(denom > 0.0))
      throw std::domain_error("rho update: 1 - u_k^* h_k^H w_k is not positive for user " +
                              std::to_string(k));
    rho(k) = 1.0 / denom;
  }
  return rho;
}

WSubproblem assemble_w_subproblem(const ChannelSet& ch, const ReflectCoeffs& phi,
                                  const AuxiliaryVars& aux, const PowerBudget& budget,
                                  const kernels::KernelSet& ks) {
  const cmat h = ks.effective_channels(ch.bs_user, ch.ris_user, ch.bs_ris, phi);
  const rvec weights = aux.rho.cwiseProduct(aux.u.cwiseAbs2());

  WSubproblem sub;
  sub.a_matrix = ks.weighted_gram(h, weights);
  // b_k = rho_k u_k h_k so that Re(b_k^H w_k) = rho_k Re(u_k^* h_k^H w_k)
  sub.b = h * (aux.rho.cast<cplx>().cwiseProduct(aux.u)).asDiagonal();
  sub.psi = ks.reflected_gram(ch.bs_ris, phi);
  sub.p_eff = effective_ris_budget(ch, phi, budget.p_ris, &sub.p_clamped);
  return sub;
}

Precoder update_w(const WSubproblem& sub, const Precoder& w_prev, double mu,
                  const PowerBudget& budget) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  const auto m_ant = sub.a_matrix.rows();
  const Precoder anchor_bs = project_bs(w_prev, budget);
  const Precoder anchor_br = project_ellipsoid(w_prev, sub.psi, sub.p_eff).w;

  const cmat lhs = sub.a_matrix + cmat::Identity(m_ant, m_ant) * (2.0 * mu);
  const Eigen::LLT<cmat> llt(lhs);
  if (llt.info() != Eigen::Success) throw std::runtime_error("2 mu I + A is not positive definite");
  return llt.solve(sub.b + mu * (anchor_bs + anchor_br));
}

PhiSubproblem assemble_phi_subproblem(const ChannelSet& ch, const Precoder& w,
                                      const AuxiliaryVars& aux, const kernels::KernelSet& ks) {
  const cmat gw = ks.apply_bs_ris(ch.bs_ris, w);
  const cmat direct = ks.cross_gains(ch.bs_user, w);

  PhiSubproblem sub;
  sub.lambda_diag = ks.ris_power_weights(gw, ch.noise_ris);
  sub.q_matrix = ks.phi_quadratic({ch.ris_user, gw, aux.u, aux.rho, ch.noise_ris});
  sub.z = ks.phi_linear({ch.ris_user, gw, direct, aux.u, aux.rho});
  return sub;
}

ReflectCoeffs update_phi(const PhiSubproblem& sub, const ReflectCoeffs& phi_prev, double mu,
                         const PowerBudget& budget) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  const auto n_el = sub.q_matrix.rows();
  const ReflectCoeffs anchor =
      project_box_ellipsoid(phi_prev, budget.eta, sub.lambda_diag, budget.p_ris).phi;

  const cmat lhs = sub.q_matrix + cmat::Identity(n_el, n_el) * mu;
  const Eigen::LLT<cmat> llt(lhs);
  if (llt.info() != Eigen::Success) throw std::runtime_error("Q + mu I is not positive definite");
  return llt.solve(sub.z + mu * anchor);
}

std::pair<Precoder, ReflectCoeffs> enforce_feasibility(const ChannelSet& ch, const Precoder& w,
                                                       const ReflectCoeffs& phi,
                                                       const PowerBudget& budget) {
  Precoder out_w = project_bs(w, budget);
  const cmat psi = kernels::parallel::reflected_gram(ch.bs_ris, phi);
  out_w = project_ellipsoid(out_w, psi, effective_ris_budget(ch, phi, budget.p_ris)).w;
  // (I + 2 nu Psi)^{-1} is a contraction, so the ball survives; antenna rows may not
  out_w = project_bs(out_w, budget);

  const cmat gw = kernels::parallel::apply_bs_ris(ch.bs_ris, out_w);
  const rvec lambda = kernels::parallel::ris_power_weights(gw, ch.noise_ris);
  ReflectCoeffs out_phi = project_box_ellipsoid(phi, budget.eta, lambda, budget.p_ris).phi;
  return {std::move(out_w), std::move(out_phi)};
}

std::pair<Precoder, ReflectCoeffs> initial_point(const ChannelSet& ch, const PowerBudget& budget,
                                                 std::uint64_t seed) {
  check_budget(ch, budget);
  Precoder w = ch.bs_user;
  const double norm = w.norm();
  if (norm > 0.0) w *= std::sqrt(budget.p_bs) / norm;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  ReflectCoeffs phi(ch.num_elements());
  for (Eigen::Index n = 0; n < phi.size(); ++n) phi(n) = std::polar(budget.eta(n), angle(rng));

  return enforce_feasibility(ch, w, phi, budget);
}

double penalized_objective(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi,
                           const AuxiliaryVars& aux, double mu, const PowerBudget& budget) {
  const double g = surrogate_g(ch, w, phi, aux);

  const double d_bs = (w - project_bs(w, budget)).squaredNorm();
  const cmat psi = kernels::parallel::reflected_gram(ch.bs_ris, phi);
  const double d_br_w =
      (w - project_ellipsoid(w, psi, effective_ris_budget(ch, phi, budget.p_ris)).w)
          .squaredNorm();

  const cmat gw = kernels::parallel::apply_bs_ris(ch.bs_ris, w);
  const rvec lambda = kernels::parallel::ris_power_weights(gw, ch.noise_ris);
  const double d_phi =
      (phi - project_box_ellipsoid(phi, budget.eta, lambda, budget.p_ris).phi).squaredNorm();

  return g + mu * (d_bs + d_br_w + d_phi);
}

Solution bsum_solve(const ChannelSet& ch, const PowerBudget& budget_in, const SolverConfig& cfg,
                    const std::optional<std::pair<Precoder, ReflectCoeffs>>& init) {
  ch.validate();
  cfg.validate();
  PowerBudget budget = budget_in;
  budget.per_antenna = budget.per_antenna || cfg.per_antenna;
  check_budget(ch, budget);

  const auto start = Clock::now();
  const kernels::KernelSet ks(cfg.backend);

  auto [w, phi] = init ? *init : initial_point(ch, budget, cfg.init_seed);
  if (w.rows() != ch.num_antennas() || w.cols() != ch.num_users() ||
      phi.size() != ch.num_elements())
    throw std::invalid_argument("initial point has wrong dimensions");

  Solution sol;
  rvec rates = user_rates(ch, w, phi);
  sol.initial_sum_rate = rates.sum();

  double mu = 0.0;
  if (cfg.mu0) {
    mu = *cfg.mu0;
  } else {
    const cvec u0 = update_u(ch, w, phi);
    const rvec rho0 = update_rho(ch, w, phi, u0);
    const cmat h = ks.effective_channels(ch.bs_user, ch.ris_user, ch.bs_ris, phi);
    const double trace_a = ks.weighted_gram(h, rho0.cwiseProduct(u0.cwiseAbs2())).trace().real();
    mu = trace_a > 0.0 ? 1e-3 * trace_a : 1e-3;
  }
  const double mu_cap = cfg.mu_max ? *cfg.mu_max : 1e6 * mu;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    AuxiliaryVars aux;
    aux.u = update_u(ch, w, phi);
    aux.rho = update_rho(ch, w, phi, aux.u);

    const WSubproblem wsub = assemble_w_subproblem(ch, phi, aux, budget, ks);
    Precoder w_next = update_w(wsub, w, mu, budget);
    const PhiSubproblem psub = assemble_phi_subproblem(ch, w_next, aux, ks);
    ReflectCoeffs phi_next = update_phi(psub, phi, mu, budget);

    if (!w_next.allFinite() || !phi_next.allFinite())
      throw SolverDivergence("non-finite iterate at iteration " + std::to_string(iter),
                             std::move(sol.trace));

    w = std::move(w_next);
    phi = std::move(phi_next);
    const rvec next_rates = user_rates(ch, w, phi);

    TraceRecord rec;
    rec.iteration = iter;
    rec.sum_rate = next_rates.sum();
    rec.surrogate = surrogate_g(ch, w, phi, aux);
    if (cfg.record_penalized) rec.penalized = penalized_objective(ch, w, phi, aux, mu, budget);
    rec.mu = mu;
    const ConstraintResiduals res = constraint_residuals(w, phi, budget, ch);
    rec.res_bs = res.bs_rel;
    rec.res_ris_elem = res.ris_elem_rel;
    rec.res_ris_power = res.ris_power_rel;
    rec.wall_ms = elapsed_ms(start);
    sol.trace.push_back(rec);
    sol.iterations = iter;

    const double change = cfg.stop_per_user ? (next_rates - rates).cwiseAbs().maxCoeff()
                                            : std::abs(next_rates.sum() - rates.sum());
    rates = next_rates;
    mu = std::min(mu * cfg.mu_growth, mu_cap);
    if (change <= cfg.tol && res.max_relative() <= cfg.feas_tol) {
      sol.converged = true;
      break;
    }
  }

  sol.sum_rate_unprojected = rates.sum();
  std::tie(sol.w, sol.phi) = enforce_feasibility(ch, w, phi, budget);
  sol.sum_rate = sum_rate(ch, sol.w, sol.phi);
  sol.residuals = constraint_residuals(sol.w, sol.phi, budget, ch);
  return sol;
}

}  // namespace aris
