#pragma once

#include "aris/types.hpp"

namespace aris {

/// KKT evidence returned with every dual-bisection projection.
///
/// All residuals are scale-free: stationarity is relative to 1 + ||input||,
/// feasibility and complementary slackness are relative to the radius.
struct ProjectionCertificate {
  double dual = 0.0;  // gamma (box-ellipsoid) or nu (ellipsoid)
  double complementary_slackness = 0.0;
  double stationarity = 0.0;
  double feasibility = 0.0;
  int iterations = 0;    // bisection steps taken
  bool flagged = false;  // iteration cap hit, or degenerate radius

  bool satisfied(double tol = 1e-8) const {
    return !flagged && complementary_slackness <= tol && stationarity <= tol && feasibility <= tol;
  }
};

struct EllipsoidProjection {
  Precoder w;
  ProjectionCertificate certificate;
};

struct BoxEllipsoidProjection {
  ReflectCoeffs phi;
  ProjectionCertificate certificate;
};

/// Bisection stops on |target - radius| <= tol * radius or after max_iters.
/// Inputs within that same tolerance of the radius count as feasible, so
/// projecting a projection output returns it unchanged.
struct BisectionOptions {
  double rel_tol = 1e-10;
  int max_iters = 200;
};

/// Projection onto sum_k ||w_k||^2 <= p_bs (radial scaling).
Precoder project_ball(const Precoder& w, double p_bs);

/// Projection onto ||row_m(w)||^2 <= p_bs / M for every antenna m.
Precoder project_per_antenna(const Precoder& w, double p_bs);

/// Projection onto sum_k w_k^H Psi w_k <= radius, Psi Hermitian PSD.
///
/// Returns (I + 2 nu Psi)^{-1} w_k with nu bisected on the eigenbasis of Psi.
/// radius <= 0 has no interior: the result is the limit nu -> inf, i.e. the
/// component of w in the null space of Psi, and the certificate is flagged
/// unless that limit is a genuine projection (radius == 0, null space present).
EllipsoidProjection project_ellipsoid(const Precoder& w, const cmat& psi, double radius,
                                      BisectionOptions opts = {});

/// Projection onto {|phi_i| <= eta_i} cap {sum_i lambda_i |phi_i|^2 <= p_ris}.
///
/// Phases are kept; moduli are min(|phi_i| / (1 + gamma lambda_i), eta_i)
/// with gamma >= 0 bisected to hit the power budget. Zero entries stay zero.
/// Throws std::invalid_argument if p_ris <= 0 or any lambda_i, eta_i <= 0.
BoxEllipsoidProjection project_box_ellipsoid(const ReflectCoeffs& phi, const rvec& eta,
                                             const rvec& lambda, double p_ris,
                                             BisectionOptions opts = {});

/// sum_i lambda_i min(|phi_i| / (1 + gamma lambda_i), eta_i)^2; non-increasing in gamma.
double box_ellipsoid_power(const ReflectCoeffs& phi, const rvec& eta, const rvec& lambda,
                           double gamma);

}  // namespace aris
