#include "aris/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aris {

namespace {

// Upper end of a dual bracket: doubled from 1 until the (non-increasing)
// target drops to the radius.
template <class Target>
double bracket_upper(const Target& target, double radius) {
  double hi = 1.0;
  for (int i = 0; i < 2100 && target(hi) > radius; ++i) hi *= 2.0;
  return hi;
}

struct BisectionResult {
  double dual;
  int iterations;
  bool capped;
};

template <class Target>
BisectionResult bisect_dual(const Target& target, double radius, const BisectionOptions& opts) {
  double lo = 0.0;
  double hi = bracket_upper(target, radius);
  for (int it = 1; it <= opts.max_iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket collapsed to adjacent doubles
    const double value = target(mid);
    if (std::abs(value - radius) <= opts.rel_tol * radius) return {mid, it, false};
    if (value > radius)
      lo = mid;
    else
      hi = mid;
  }
  return {hi, opts.max_iters, true};
}

double quad_form_sum(const cmat& psi, const Precoder& w) {
  return (w.adjoint() * psi * w).trace().real();
}

}  // namespace

Precoder project_ball(const Precoder& w, double p_bs) {
  if (!(p_bs > 0.0)) throw std::invalid_argument("P_B must be positive");
  const double energy = w.squaredNorm();
  if (energy <= p_bs) return w;
  return w * (std::sqrt(p_bs) / std::sqrt(energy));
}

Precoder project_per_antenna(const Precoder& w, double p_bs) {
  if (!(p_bs > 0.0)) throw std::invalid_argument("P_B must be positive");
  if (w.rows() == 0) return w;
  const double cap = std::sqrt(p_bs / static_cast<double>(w.rows()));
  Precoder out = w;
  for (Eigen::Index m = 0; m < w.rows(); ++m) {
    const double norm = w.row(m).norm();
    if (norm > cap) out.row(m) *= cap / norm;
  }
  return out;
}

EllipsoidProjection project_ellipsoid(const Precoder& w, const cmat& psi, double radius,
                                      BisectionOptions opts) {
  if (psi.rows() != psi.cols() || psi.rows() != w.rows())
    throw std::invalid_argument("Psi must be M x M");

  EllipsoidProjection out{w, {}};
  const double current = quad_form_sum(psi, w);
  if (radius > 0.0 && current <= radius * (1.0 + opts.rel_tol)) return out;

  const Eigen::SelfAdjointEigenSolver<cmat> eig(psi);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition of Psi failed");
  const rvec d = eig.eigenvalues().cwiseMax(0.0);
  const cmat& basis = eig.eigenvectors();
  const cmat coeff = basis.adjoint() * w;
  const rvec mass = coeff.rowwise().squaredNorm();

  auto& cert = out.certificate;
  if (radius <= 0.0) {
    const double floor = 1e-13 * std::max(d.maxCoeff(), std::numeric_limits<double>::min());
    cmat kept = coeff;
    bool has_null_space = false;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d(i) > floor)
        kept.row(i).setZero();
      else
        has_null_space = true;
    }
    out.w = basis * kept;
    cert.dual = std::numeric_limits<double>::infinity();
    cert.flagged = radius < 0.0 || !has_null_space;
    const double reached = quad_form_sum(psi, out.w);
    cert.feasibility = std::max(0.0, reached - radius) / std::max(std::abs(radius), 1.0);
    return out;
  }

  auto target = [&](double nu) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double s = 1.0 + 2.0 * nu * d(i);
      acc += d(i) * mass(i) / (s * s);
    }
    return acc;
  };

  const BisectionResult bis = bisect_dual(target, radius, opts);
  const double nu = bis.dual;
  const rvec shrink = (1.0 + 2.0 * nu * d.array()).inverse().matrix();
  out.w = basis * (shrink.cast<cplx>().asDiagonal() * coeff);

  const double reached = quad_form_sum(psi, out.w);
  cert.dual = nu;
  cert.iterations = bis.iterations;
  cert.flagged = bis.capped;
  cert.stationarity = (out.w - w + 2.0 * nu * (psi * out.w)).norm() / (1.0 + w.norm());
  cert.complementary_slackness = nu / (1.0 + nu) * std::abs(reached - radius) / radius;
  cert.feasibility = std::max(0.0, reached - radius) / radius;
  return out;
}

double box_ellipsoid_power(const ReflectCoeffs& phi, const rvec& eta, const rvec& lambda,
                           double gamma) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double mod = std::min(std::abs(phi(i)) / (1.0 + gamma * lambda(i)), eta(i));
    acc += lambda(i) * mod * mod;
  }
  return acc;
}

BoxEllipsoidProjection project_box_ellipsoid(const ReflectCoeffs& phi, const rvec& eta,
                                             const rvec& lambda, double p_ris,
                                             BisectionOptions opts) {
  const auto n = phi.size();
  if (eta.size() != n || lambda.size() != n)
    throw std::invalid_argument("eta and lambda must match phi");
  if (!(p_ris > 0.0)) throw std::invalid_argument("P_A must be positive");
  if (!(lambda.array() > 0.0).all()) throw std::invalid_argument("lambda_i must be positive");
  if (!(eta.array() > 0.0).all()) throw std::invalid_argument("eta_i must be positive");

  BoxEllipsoidProjection out{phi, {}};
  auto& cert = out.certificate;

  double gamma = 0.0;
  if (box_ellipsoid_power(phi, eta, lambda, 0.0) > p_ris * (1.0 + opts.rel_tol)) {
    auto target = [&](double g) { return box_ellipsoid_power(phi, eta, lambda, g); };
    const BisectionResult bis = bisect_dual(target, p_ris, opts);
    gamma = bis.dual;
    cert.iterations = bis.iterations;
    cert.flagged = bis.capped;
  }

  const rvec amp = phi.cwiseAbs();
  double stationarity = 0.0, slack = 0.0, excess = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shrunk = amp(i) / (1.0 + gamma * lambda(i));
    const bool capped = shrunk > eta(i);
    const double mod = capped ? eta(i) : shrunk;
    out.phi(i) = amp(i) > 0.0 ? phi(i) * (mod / amp(i)) : cplx(0.0);

    // beta_i recovered from |y_i| (1 + gamma lambda_i + beta_i) = |phi_i|
    const double beta = capped ? amp(i) / eta(i) - 1.0 - gamma * lambda(i) : 0.0;
    stationarity = std::max(
        stationarity, std::abs(out.phi(i) * (1.0 + gamma * lambda(i) + beta) - phi(i)));
    const double cap2 = eta(i) * eta(i);
    slack = std::max(slack, beta / (1.0 + beta) * std::abs(std::norm(out.phi(i)) - cap2) / cap2);
    excess = std::max(excess, (std::abs(out.phi(i)) - eta(i)) / eta(i));
  }
  const double reached = lambda.dot(out.phi.cwiseAbs2());
  cert.dual = gamma;
  cert.stationarity = stationarity / (1.0 + phi.norm());
  cert.complementary_slackness =
      std::max(slack, gamma / (1.0 + gamma) * std::abs(reached - p_ris) / p_ris);
  cert.feasibility = std::max({0.0, excess, (reached - p_ris) / p_ris});
  return out;
}

}  // namespace aris
