#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aris/channel.hpp"
#include "aris/kernels.hpp"
#include "aris/objective.hpp"
#include "aris/projections.hpp"
#include "aris/types.hpp"

namespace aris {

struct SolverConfig {
  /// Initial penalty. Unset: 1e-3 * trace(A) at the initial point.
  std::optional<double> mu0;
  double mu_growth = 1.2;
  /// Penalty cap. Unset: 1e6 * mu0.
  std::optional<double> mu_max;
  double tol = 1e-4;
  /// The rate-change test only counts once every relative constraint residual
  /// of the raw iterate is at most this; early rate plateaus far outside the
  /// feasible set are not convergence.
  double feas_tol = 1e-3;
  int max_iters = 500;
  bool per_antenna = false;
  /// Stop on the largest per-user rate change instead of the sum-rate change.
  bool stop_per_user = false;
  /// Seed of the random initial RIS phases.
  std::uint64_t init_seed = 0;
  Backend backend = Backend::parallel;
  /// Also evaluate penalized_objective every iteration (extra projections).
  bool record_penalized = false;

  void validate() const;
};

/// Quadratic data of the w-block: sum_k w_k^H A w_k - 2 Re(b_k^H w_k)
/// subject to the BS set and sum_k w_k^H Psi w_k <= p_eff.
struct WSubproblem {
  cmat a_matrix;  // M x M
  cmat b;         // M x K, column k = b_k
  cmat psi;       // M x M
  double p_eff = 0.0;
  bool p_clamped = false;  // P_A - ||phi||^2 sigma_v^2 was below the floor
};

/// Quadratic data of the phi-block: phi^H Q phi - 2 Re(phi^H z)
/// subject to |phi_n| <= eta_n and phi^H Lambda phi <= P_A.
struct PhiSubproblem {
  cmat q_matrix;     // N x N
  cvec z;            // N
  rvec lambda_diag;  // N
};

struct TraceRecord {
  int iteration = 0;
  double sum_rate = 0.0;
  double surrogate = 0.0;  // g at (w, phi, u, rho) after the phi update
  double penalized = 0.0;  // g + mu * (squared distances to the three sets)
  double mu = 0.0;
  double res_bs = 0.0;  // relative constraint residuals of the raw iterate
  double res_ris_elem = 0.0;
  double res_ris_power = 0.0;
  double wall_ms = 0.0;  // since the start of the solve
};

struct Solution {
  Precoder w;
  ReflectCoeffs phi;
  double sum_rate = 0.0;              // after the final feasibility projection
  double sum_rate_unprojected = 0.0;  // last raw iterate
  double initial_sum_rate = 0.0;
  int iterations = 0;
  bool converged = false;
  ConstraintResiduals residuals;
  std::vector<TraceRecord> trace;
};

/// Thrown when an iterate stops being finite; carries the trace so far.
class SolverDivergence : public std::runtime_error {
 public:
  SolverDivergence(const std::string& what, std::vector<TraceRecord> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRecord>& trace() const { return trace_; }

 private:
  std::vector<TraceRecord> trace_;
};

/// MMSE receive scalars u_k = h_k^H w_k / (total received power at user k).
cvec update_u(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi);

/// MSE weights rho_k = 1 / Re(1 - u_k^* h_k^H w_k). Throws std::domain_error
/// when the denominator is not positive (u was not the MMSE choice).
rvec update_rho(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi, const cvec& u);

WSubproblem assemble_w_subproblem(const ChannelSet& ch, const ReflectCoeffs& phi,
                                  const AuxiliaryVars& aux, const PowerBudget& budget,
                                  const kernels::KernelSet& ks = kernels::KernelSet{});

/// w_k = (2 mu I + A)^{-1} (b_k + mu [Pi_BS(w_prev)]_k + mu [Pi_BR(w_prev)]_k).
Precoder update_w(const WSubproblem& sub, const Precoder& w_prev, double mu,
                  const PowerBudget& budget);

/// phi-block data at the freshly updated precoder w.
PhiSubproblem assemble_phi_subproblem(const ChannelSet& ch, const Precoder& w,
                                      const AuxiliaryVars& aux,
                                      const kernels::KernelSet& ks = kernels::KernelSet{});

/// phi = (Q + mu I)^{-1} (z + mu Pi_{C_RIS cap C_BR}(phi_prev)).
ReflectCoeffs update_phi(const PhiSubproblem& sub, const ReflectCoeffs& phi_prev, double mu,
                         const PowerBudget& budget);

/// Matched-filter precoder at full power and random-phase RIS at full gain,
/// both projected onto their feasible sets.
std::pair<Precoder, ReflectCoeffs> initial_point(const ChannelSet& ch, const PowerBudget& budget,
                                                 std::uint64_t seed);

/// Pushes (w, phi) onto the feasible set: BS set, w-side ellipsoid, then
/// phi onto C_RIS cap C_BR(w). The result always satisfies every constraint.
std::pair<Precoder, ReflectCoeffs> enforce_feasibility(const ChannelSet& ch, const Precoder& w,
                                                       const ReflectCoeffs& phi,
                                                       const PowerBudget& budget);

/// g + mu * [dist^2(w, C_BS) + dist^2(w, C_BR(phi)) + dist^2(phi, C_RIS cap C_BR(w))].
double penalized_objective(const ChannelSet& ch, const Precoder& w, const ReflectCoeffs& phi,
                           const AuxiliaryVars& aux, double mu, const PowerBudget& budget);

/// Block successive upper-bound minimization with homotopy on mu.
Solution bsum_solve(const ChannelSet& ch, const PowerBudget& budget, const SolverConfig& cfg,
                    const std::optional<std::pair<Precoder, ReflectCoeffs>>& init = std::nullopt);

}  // namespace aris
