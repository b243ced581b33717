#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aris/solver.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace aris;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PowerBudget make_budget(int n, double p_bs, double p_ris, double eta, bool per_antenna = false) {
  PowerBudget b;
  b.p_bs = p_bs;
  b.p_ris = p_ris;
  b.eta = rvec::Constant(n, eta);
  b.per_antenna = per_antenna;
  return b;
}

AuxiliaryVars optimal_aux(const ChannelSet& ch, const cmat& w, const cvec& phi) {
  AuxiliaryVars aux;
  aux.u = update_u(ch, w, phi);
  aux.rho = update_rho(ch, w, phi, aux.u);
  return aux;
}

double hermitian_defect(const cmat& a) { return (a - a.adjoint()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const cmat& a) {
  return Eigen::SelfAdjointEigenSolver<cmat>(a).eigenvalues().minCoeff();
}

double w_quadratic(const WSubproblem& sub, const cmat& w) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < w.cols(); ++k)
    acc += (w.col(k).dot(sub.a_matrix * w.col(k))).real() - 2.0 * sub.b.col(k).dot(w.col(k)).real();
  return acc;
}

double phi_quadratic(const PhiSubproblem& sub, const cvec& phi) {
  return phi.dot(sub.q_matrix * phi).real() - 2.0 * phi.dot(sub.z).real();
}

// Scalar link with unit direct gain, RIS disconnected, unit noise.
ChannelSet scalar_link() {
  ChannelSet ch;
  ch.bs_user = cmat::Ones(1, 1);
  ch.ris_user = cmat::Zero(1, 1);
  ch.bs_ris = cmat::Zero(1, 1);
  ch.noise_ris = 1.0;
  ch.noise_user = rvec::Ones(1);
  return ch;
}

// Small unit-scale instances whose budgets are tight enough that every
// constraint family, including the coupled RIS power, is active.
struct Stress {
  ChannelSet ch;
  PowerBudget budget;
  cmat w;
  cvec phi;
};

Stress stress_instance(testing::Rng& rng, bool per_antenna = false) {
  const int m = rng.integer(2, 6), n = rng.integer(2, 6), k = rng.integer(1, 4);
  Stress s{testing::unit_channels(rng, m, n, k), make_budget(n, 1.0, 0.5, 1.0, per_antenna),
           rng.cmatrix(m, k), rng.cvector(n, 1.5)};
  return s;
}

}  // namespace

TEST_CASE("receive scalar and MSE weight on a scalar link") {
  const ChannelSet ch = scalar_link();
  const cmat w = cmat::Ones(1, 1);
  const cvec phi = cvec::Zero(1);
  const cvec u = update_u(ch, w, phi);
  CHECK(std::abs(u(0) - cplx(0.5)) <= 1e-15);
  // SINR = 1, so rho = 1 + SINR = 2
  CHECK_THAT(update_rho(ch, w, phi, u)(0), WithinAbs(2.0, 1e-14));
}

TEST_CASE("u and rho at a silent precoder") {
  testing::Rng rng(51);
  const ChannelSet ch = testing::unit_channels(rng, 3, 3, 2);
  const cmat w = cmat::Zero(3, 2);
  const cvec u = update_u(ch, w, rng.cvector(3));
  CHECK(u.isZero(0.0));
  CHECK(update_rho(ch, w, rng.cvector(3), u) == rvec::Ones(2));
}

TEST_CASE("rho update rejects a non-MMSE receiver") {
  const ChannelSet ch = scalar_link();
  const cvec u = cvec::Constant(1, 2.0);  // 1 - u^* h^H w = -1
  CHECK_THROWS_AS(update_rho(ch, cmat::Ones(1, 1), cvec::Zero(1), u), std::domain_error);
}

TEST_CASE("rho equals one plus SINR") {
  testing::Rng rng(52);
  const ChannelSet ch = testing::unit_channels(rng, 4, 5, 3);
  const cmat w = rng.cmatrix(4, 3);
  const cvec phi = rng.cvector(5);
  const AuxiliaryVars aux = optimal_aux(ch, w, phi);
  const rvec s = sinr_all(ch, w, phi);
  for (int k = 0; k < 3; ++k) CHECK_THAT(aux.rho(k), WithinRel(1.0 + s(k), 1e-12));
}

TEST_CASE("w-subproblem assembly") {
  testing::Rng rng(53);
  const ChannelSet ch = testing::unit_channels(rng, 4, 5, 3);
  const PowerBudget budget = make_budget(5, 1.0, 10.0, 1.0);

  SECTION("u = 0 gives A = 0 and b = 0") {
    const AuxiliaryVars aux{cvec::Zero(3), rvec::Ones(3)};
    const WSubproblem sub = assemble_w_subproblem(ch, rng.cvector(5), aux, budget);
    CHECK(sub.a_matrix.isZero(0.0));
    CHECK(sub.b.isZero(0.0));
  }
  SECTION("phi = 0 gives Psi = 0 and the full RIS budget") {
    const AuxiliaryVars aux{rng.cvector(3), rng.positive(3, 1.0, 2.0)};
    const WSubproblem sub = assemble_w_subproblem(ch, cvec::Zero(5), aux, budget);
    CHECK(sub.psi.isZero(0.0));
    CHECK(sub.p_eff == budget.p_ris);
    CHECK_FALSE(sub.p_clamped);
  }
  SECTION("dense oracle, structure and the exact quadratic in w") {
    for (int rep = 0; rep < 10; ++rep) {
      const cvec phi = rng.cvector(5);
      const cmat w0 = rng.cmatrix(4, 3);
      const AuxiliaryVars aux = optimal_aux(ch, w0, phi);
      const WSubproblem sub = assemble_w_subproblem(ch, phi, aux, budget);
      const cmat h = oracle::effective_channel(ch, phi);

      CHECK(testing::rel_diff(sub.a_matrix, oracle::a_matrix(h, aux.u, aux.rho)) <= 1e-12);
      CHECK(testing::rel_diff(sub.psi, oracle::psi_matrix(ch, phi)) <= 1e-12);
      for (int k = 0; k < 3; ++k)
        CHECK((sub.b.col(k) - aux.rho(k) * aux.u(k) * h.col(k)).norm() <= 1e-12);
      CHECK_THAT(sub.p_eff,
                 WithinRel(std::max(10.0 - phi.squaredNorm() * ch.noise_ris, 1e-5), 1e-14));

      CHECK(hermitian_defect(sub.a_matrix) <= 1e-12);
      CHECK(hermitian_defect(sub.psi) <= 1e-12);
      CHECK(min_eigenvalue(sub.a_matrix) >= -1e-10 * sub.a_matrix.trace().real());
      CHECK(min_eigenvalue(sub.psi) >= -1e-10 * sub.psi.trace().real());

      // g(w) - quadratic(w) must not depend on w
      const cmat w1 = rng.cmatrix(4, 3), w2 = rng.cmatrix(4, 3, 3.0);
      const double c1 = surrogate_g(ch, w1, phi, aux) - w_quadratic(sub, w1);
      const double c2 = surrogate_g(ch, w2, phi, aux) - w_quadratic(sub, w2);
      CHECK(std::abs(c1 - c2) <= 1e-9 * (1.0 + std::abs(c1)));
    }
  }
  SECTION("RIS budget floor") {
    const AuxiliaryVars aux{rng.cvector(3), rng.positive(3, 1.0, 2.0)};
    const cvec phi = cvec::Constant(5, 100.0);  // ||phi||^2 sigma_v^2 far above P_A
    const WSubproblem sub = assemble_w_subproblem(ch, phi, aux, budget);
    CHECK(sub.p_clamped);
    CHECK_THAT(sub.p_eff, WithinRel(1e-6 * budget.p_ris, 1e-14));
  }
}

TEST_CASE("phi-subproblem assembly") {
  testing::Rng rng(54);
  const ChannelSet ch = testing::unit_channels(rng, 4, 5, 3);

  SECTION("silent precoder") {
    const AuxiliaryVars aux{rng.cvector(3), rng.positive(3, 1.0, 2.0)};
    const PhiSubproblem sub = assemble_phi_subproblem(ch, cmat::Zero(4, 3), aux);
    CHECK((sub.lambda_diag - rvec::Constant(5, ch.noise_ris)).norm() <= 1e-15);
    CHECK(sub.z.isZero(0.0));
    cmat expected = cmat::Zero(5, 5);
    for (int k = 0; k < 3; ++k)
      expected += ch.noise_ris * std::norm(aux.u(k)) * aux.rho(k) *
                  cmat(ch.ris_user.col(k).cwiseAbs2().cast<cplx>().asDiagonal());
    CHECK(testing::rel_diff(sub.q_matrix, expected) <= 1e-13);
  }
  SECTION("u = 0 gives Q = 0 and z = 0") {
    const AuxiliaryVars aux{cvec::Zero(3), rvec::Ones(3)};
    const PhiSubproblem sub = assemble_phi_subproblem(ch, rng.cmatrix(4, 3), aux);
    CHECK(sub.q_matrix.isZero(0.0));
    CHECK(sub.z.isZero(0.0));
  }
  SECTION("dense oracle, structure and the exact quadratic in phi") {
    for (int rep = 0; rep < 10; ++rep) {
      const cmat w = rng.cmatrix(4, 3);
      const AuxiliaryVars aux = optimal_aux(ch, w, rng.cvector(5));
      const PhiSubproblem sub = assemble_phi_subproblem(ch, w, aux);

      CHECK(testing::rel_diff(sub.q_matrix, oracle::phi_quadratic(ch, w, aux.u, aux.rho)) <=
            1e-12);
      CHECK(testing::rel_diff(sub.z, oracle::phi_linear(ch, w, aux.u, aux.rho)) <= 1e-12);
      CHECK((sub.lambda_diag - oracle::lambda_diag(ch, w)).norm() <=
            1e-12 * sub.lambda_diag.norm());
      CHECK((sub.lambda_diag.array() >= ch.noise_ris).all());

      CHECK(hermitian_defect(sub.q_matrix) <= 1e-12);
      CHECK(min_eigenvalue(sub.q_matrix) >= -1e-10 * sub.q_matrix.trace().real());

      const cvec p1 = rng.cvector(5), p2 = rng.cvector(5, 2.0);
      const double c1 = surrogate_g(ch, w, p1, aux) - phi_quadratic(sub, p1);
      const double c2 = surrogate_g(ch, w, p2, aux) - phi_quadratic(sub, p2);
      CHECK(std::abs(c1 - c2) <= 1e-9 * (1.0 + std::abs(c1)));
    }
  }
}

TEST_CASE("w update") {
  testing::Rng rng(55);
  const PowerBudget budget = make_budget(3, 4.0, 1.0, 1.0);

  SECTION("feasible point is a fixed point of the pure penalty step") {
    WSubproblem sub{cmat::Zero(4, 4), cmat::Zero(4, 2), rng.psd(4, 2), 1e6, false};
    cmat w = rng.cmatrix(4, 2);
    w *= 1.0 / w.norm();
    CHECK(testing::rel_diff(update_w(sub, w, 0.7, budget), w) <= 1e-14);
  }
  SECTION("large mu pins the iterate to a feasible previous point") {
    WSubproblem sub{rng.psd(4, 4), rng.cmatrix(4, 2), rng.psd(4, 2), 1e6, false};
    cmat w = rng.cmatrix(4, 2);
    w *= 1.0 / w.norm();
    CHECK(testing::rel_diff(update_w(sub, w, 1e10, budget), w) <= 1e-8);
  }
  SECTION("matches a dense solve of the majorized quadratic") {
    for (int rep = 0; rep < 10; ++rep) {
      const WSubproblem sub{rng.psd(4, 3), rng.cmatrix(4, 2), rng.psd(4, 4),
                            rng.uniform(0.1, 2.0), false};
      const cmat w_prev = rng.cmatrix(4, 2, 2.0);
      const double mu = rng.uniform(0.05, 5.0);
      const cmat w = update_w(sub, w_prev, mu, budget);

      const cmat a_bs = project_ball(w_prev, budget.p_bs);
      const cmat a_br = project_ellipsoid(w_prev, sub.psi, sub.p_eff).w;
      // Kronecker form over vec(W): (I_K (x) (A + 2 mu I)) vec(W) = vec(B + mu (a_bs + a_br))
      const int m = 4, k = 2;
      cmat big = cmat::Zero(m * k, m * k);
      cvec rhs(m * k);
      for (int j = 0; j < k; ++j) {
        big.block(j * m, j * m, m, m) = sub.a_matrix + 2.0 * mu * cmat::Identity(m, m);
        rhs.segment(j * m, m) = sub.b.col(j) + mu * (a_bs.col(j) + a_br.col(j));
      }
      const cvec ref = big.fullPivLu().solve(rhs);
      CHECK((Eigen::Map<const cvec>(w.data(), m * k) - ref).norm() <= 1e-10 * (1.0 + ref.norm()));

      auto majorizer = [&](const cmat& x) {
        return w_quadratic(sub, x) + mu * ((x - a_bs).squaredNorm() + (x - a_br).squaredNorm());
      };
      for (int s = 0; s < 50; ++s)
        CHECK(majorizer(w) <= majorizer(w + rng.cmatrix(4, 2, 1e-3)) + 1e-12);
    }
  }
  SECTION("non-positive mu is rejected") {
    WSubproblem sub{cmat::Zero(2, 2), cmat::Zero(2, 1), cmat::Zero(2, 2), 1.0, false};
    CHECK_THROWS_AS(update_w(sub, cmat::Ones(2, 1), 0.0, budget), std::invalid_argument);
  }
}

TEST_CASE("phi update") {
  testing::Rng rng(56);
  const PowerBudget budget = make_budget(5, 1.0, 1.0, 1.0);
  const rvec lambda = rng.positive(5, 0.1, 1.0);

  SECTION("solves (Q + mu I) phi = z + mu Pi(phi_prev)") {
    for (int rep = 0; rep < 10; ++rep) {
      const PhiSubproblem sub{rng.psd(5, 3), rng.cvector(5), lambda};
      const cvec prev = rng.cvector(5, 2.0);
      const double mu = rng.uniform(0.01, 10.0);
      const cvec phi = update_phi(sub, prev, mu, budget);
      const cvec rhs =
          sub.z + mu * project_box_ellipsoid(prev, budget.eta, lambda, budget.p_ris).phi;
      const cmat lhs = sub.q_matrix + mu * cmat::Identity(5, 5);
      CHECK((lhs * phi - rhs).norm() <= 1e-10 * rhs.norm());
    }
  }
  SECTION("Q = 0 and z = 0 reduce to the projection") {
    const PhiSubproblem sub{cmat::Zero(5, 5), cvec::Zero(5), lambda};
    const cvec prev = rng.cvector(5, 3.0);
    const cvec expected = project_box_ellipsoid(prev, budget.eta, lambda, budget.p_ris).phi;
    CHECK((update_phi(sub, prev, 2.0, budget) - expected).norm() <= 1e-14);
  }
  SECTION("large mu pins a feasible previous point") {
    const PhiSubproblem sub{rng.psd(5, 5), rng.cvector(5), lambda};
    const cvec prev = project_box_ellipsoid(rng.cvector(5), budget.eta, lambda, budget.p_ris).phi;
    CHECK((update_phi(sub, prev, 1e10, budget) - prev).norm() <= 1e-8);
  }
  SECTION("non-positive mu is rejected") {
    const PhiSubproblem sub{cmat::Zero(5, 5), cvec::Zero(5), lambda};
    CHECK_THROWS_AS(update_phi(sub, cvec::Ones(5), -1.0, budget), std::invalid_argument);
  }
}

TEST_CASE("each block update decreases its penalized majorized objective") {
  // Distances are measured to the sets seen by the block being updated:
  // the w-step sees C_BS and C_BR(phi), the phi-step sees C_RIS cap C_BR(w_next).
  testing::Rng rng(57);
  for (int rep = 0; rep < 40; ++rep) {
    const Stress s = stress_instance(rng, rep % 2 == 1);
    const double mu = std::pow(10.0, rng.uniform(-2.0, 1.0));
    const AuxiliaryVars aux = optimal_aux(s.ch, s.w, s.phi);

    const WSubproblem wsub = assemble_w_subproblem(s.ch, s.phi, aux, s.budget);
    auto w_cost = [&](const cmat& w) {
      const cmat bs = s.budget.per_antenna ? project_per_antenna(w, s.budget.p_bs)
                                           : project_ball(w, s.budget.p_bs);
      const cmat br = project_ellipsoid(w, wsub.psi, wsub.p_eff).w;
      return surrogate_g(s.ch, w, s.phi, aux) + mu * ((w - bs).squaredNorm() + (w - br).squaredNorm());
    };
    const cmat w_next = update_w(wsub, s.w, mu, s.budget);
    const double w_before = w_cost(s.w), w_after = w_cost(w_next);
    CHECK(w_after <= w_before + 1e-10 * std::abs(w_before));

    const PhiSubproblem psub = assemble_phi_subproblem(s.ch, w_next, aux);
    auto phi_cost = [&](const cvec& phi) {
      const cvec p = project_box_ellipsoid(phi, s.budget.eta, psub.lambda_diag, s.budget.p_ris).phi;
      return surrogate_g(s.ch, w_next, phi, aux) + mu * (phi - p).squaredNorm();
    };
    const cvec phi_next = update_phi(psub, s.phi, mu, s.budget);
    const double phi_before = phi_cost(s.phi), phi_after = phi_cost(phi_next);
    CHECK(phi_after <= phi_before + 1e-10 * std::abs(phi_before));
  }
}

TEST_CASE("feasibility enforcement lands inside every constraint") {
  testing::Rng rng(58);
  for (int rep = 0; rep < 30; ++rep) {
    const Stress s = stress_instance(rng, rep % 2 == 1);
    const auto [w, phi] = enforce_feasibility(s.ch, 3.0 * s.w, 3.0 * s.phi, s.budget);
    const ConstraintResiduals r = constraint_residuals(w, phi, s.budget, s.ch);
    CHECK(r.feasible(1e-8));
  }
}

TEST_CASE("initial point is feasible and nonzero") {
  testing::Rng rng(59);
  const Stress s = stress_instance(rng);
  const auto [w, phi] = initial_point(s.ch, s.budget, 7);
  CHECK(constraint_residuals(w, phi, s.budget, s.ch).feasible(1e-8));
  CHECK(w.norm() > 0.0);
  CHECK(phi.norm() > 0.0);
  const auto [w2, phi2] = initial_point(s.ch, s.budget, 7);
  CHECK(w == w2);
  CHECK(phi == phi2);
}

TEST_CASE("solver end to end on stress instances") {
  testing::Rng rng(60);
  for (int rep = 0; rep < 10; ++rep) {
    const Stress s = stress_instance(rng, rep % 2 == 1);
    SolverConfig cfg;
    cfg.init_seed = static_cast<std::uint64_t>(rep);
    const Solution sol = bsum_solve(s.ch, s.budget, cfg);
    CHECK(sol.residuals.feasible(1e-8));
    CHECK(sol.iterations == static_cast<int>(sol.trace.size()));
    CHECK(sol.sum_rate >= 0.0);
    CHECK_THAT(sol.sum_rate, WithinAbs(sum_rate(s.ch, sol.w, sol.phi), 1e-12));
  }
}

TEST_CASE("a rate plateau outside the feasible set is not convergence") {
  // On this draw the raw iterate's rate flattens after ~10 iterations while
  // the precoder is still several times over the BS budget.
  const harness::Scenario sc = testing::desk_scenario({64, 32}, 8, 30.0, 13);
  const Solution sol = bsum_solve(sc.channels, sc.budget, sc.solver);
  REQUIRE(sol.converged);
  const TraceRecord& last = sol.trace.back();
  CHECK(std::max({last.res_bs, last.res_ris_elem, last.res_ris_power}) <= sc.solver.feas_tol);
  CHECK(sol.iterations > 20);
  CHECK(std::abs(sol.sum_rate - sol.sum_rate_unprojected) <= 1e-2 * sol.sum_rate);
}

TEST_CASE("solver started at the origin stays there") {
  testing::Rng rng(61);
  const Stress s = stress_instance(rng);
  const std::pair<Precoder, ReflectCoeffs> origin{cmat::Zero(s.w.rows(), s.w.cols()),
                                                  cvec::Zero(s.phi.size())};
  SolverConfig cfg;
  cfg.mu0 = 1.0;
  const Solution sol = bsum_solve(s.ch, s.budget, cfg, origin);
  CHECK(sol.w.isZero(0.0));
  CHECK(sol.sum_rate == 0.0);
  CHECK(sol.converged);
  CHECK(sol.iterations == 1);
}

TEST_CASE("fixed penalty on the desk scenario does not increase the penalized objective") {
  const harness::Scenario sc = testing::desk_scenario({16, 8}, 4, 30.0, 0);
  SolverConfig cfg = sc.solver;
  cfg.mu_growth = 1.0;
  cfg.max_iters = 40;
  cfg.tol = 1e-300;
  cfg.record_penalized = true;
  const Solution sol = bsum_solve(sc.channels, sc.budget, cfg);
  REQUIRE(sol.trace.size() == 40);
  for (std::size_t i = 1; i < sol.trace.size(); ++i) {
    const double prev = sol.trace[i - 1].penalized, cur = sol.trace[i].penalized;
    CHECK(cur <= prev + 1e-8 * std::abs(prev));
  }
}

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.mu0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.mu_growth = 0.9;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.feas_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("serial and parallel backends give the same solve") {
  const harness::Scenario sc = testing::desk_scenario({12, 6}, 3, 20.0, 2);
  SolverConfig cfg = sc.solver;
  cfg.backend = Backend::serial;
  const Solution a = bsum_solve(sc.channels, sc.budget, cfg);
  cfg.backend = Backend::parallel;
  const Solution b = bsum_solve(sc.channels, sc.budget, cfg);
  CHECK(a.iterations == b.iterations);
  CHECK_THAT(a.sum_rate, WithinRel(b.sum_rate, 1e-8));
}
