#include "aris/kernels.hpp"

#include <omp.h>

namespace aris::kernels {

using Eigen::Index;

namespace serial {

cmat effective_channels(const cmat& bs_user, const cmat& ris_user, const cmat& bs_ris,
                        const cvec& phi) {
  const Index m_ant = bs_user.rows(), n_el = ris_user.rows(), k_users = bs_user.cols();
  cmat out = bs_user;
  for (Index k = 0; k < k_users; ++k)
    for (Index m = 0; m < m_ant; ++m) {
      cplx acc = 0.0;
      for (Index n = 0; n < n_el; ++n)
        acc += std::conj(bs_ris(n, m)) * std::conj(phi(n)) * ris_user(n, k);
      out(m, k) += acc;
    }
  return out;
}

cmat cross_gains(const cmat& channels, const Precoder& w) {
  const Index k_users = channels.cols(), streams = w.cols(), m_ant = w.rows();
  cmat out(k_users, streams);
  for (Index i = 0; i < streams; ++i)
    for (Index k = 0; k < k_users; ++k) {
      cplx acc = 0.0;
      for (Index m = 0; m < m_ant; ++m) acc += std::conj(channels(m, k)) * w(m, i);
      out(k, i) = acc;
    }
  return out;
}

cmat weighted_gram(const cmat& channels, const rvec& weights) {
  const Index m_ant = channels.rows(), k_users = channels.cols();
  cmat out = cmat::Zero(m_ant, m_ant);
  for (Index l = 0; l < m_ant; ++l)
    for (Index m = 0; m < m_ant; ++m) {
      cplx acc = 0.0;
      for (Index k = 0; k < k_users; ++k)
        acc += weights(k) * channels(m, k) * std::conj(channels(l, k));
      out(m, l) = acc;
    }
  return out;
}

cmat reflected_gram(const cmat& bs_ris, const cvec& phi) {
  const Index n_el = bs_ris.rows(), m_ant = bs_ris.cols();
  cmat out(m_ant, m_ant);
  for (Index l = 0; l < m_ant; ++l)
    for (Index m = 0; m < m_ant; ++m) {
      cplx acc = 0.0;
      for (Index n = 0; n < n_el; ++n)
        acc += std::conj(bs_ris(n, m)) * std::norm(phi(n)) * bs_ris(n, l);
      out(m, l) = acc;
    }
  return out;
}

cmat apply_bs_ris(const cmat& bs_ris, const Precoder& w) {
  const Index n_el = bs_ris.rows(), m_ant = bs_ris.cols(), k_users = w.cols();
  cmat out(n_el, k_users);
  for (Index k = 0; k < k_users; ++k)
    for (Index n = 0; n < n_el; ++n) {
      cplx acc = 0.0;
      for (Index m = 0; m < m_ant; ++m) acc += bs_ris(n, m) * w(m, k);
      out(n, k) = acc;
    }
  return out;
}

rvec ris_power_weights(const cmat& bs_ris_w, double noise_ris) {
  rvec out(bs_ris_w.rows());
  for (Index n = 0; n < bs_ris_w.rows(); ++n) {
    double acc = noise_ris;
    for (Index k = 0; k < bs_ris_w.cols(); ++k) acc += std::norm(bs_ris_w(n, k));
    out(n) = acc;
  }
  return out;
}

cmat phi_quadratic(const PhiQuadraticInputs& in) {
  const cmat& f = in.ris_user;
  const cmat& b = in.bs_ris_w;
  const Index n_el = f.rows(), k_users = f.cols();
  cmat out(n_el, n_el);
  for (Index m = 0; m < n_el; ++m)
    for (Index n = 0; n < n_el; ++n) {
      cplx weighted = 0.0;  // sum_k rho_k |u_k|^2 f_kn conj(f_km)
      for (Index k = 0; k < k_users; ++k)
        weighted += in.rho(k) * std::norm(in.u(k)) * f(n, k) * std::conj(f(m, k));
      cplx gram = 0.0;  // (G W G^H)_nm
      for (Index i = 0; i < b.cols(); ++i) gram += b(n, i) * std::conj(b(m, i));
      out(n, m) = weighted * std::conj(gram);
      if (n == m) out(n, m) += in.noise_ris * weighted.real();
    }
  return out;
}

cvec phi_linear(const PhiLinearInputs& in) {
  const cmat& f = in.ris_user;
  const cmat& b = in.bs_ris_w;
  const Index n_el = f.rows(), k_users = f.cols();
  cvec out = cvec::Zero(n_el);
  for (Index n = 0; n < n_el; ++n) {
    cplx acc = 0.0;
    for (Index k = 0; k < k_users; ++k) {
      cplx leak = 0.0;
      for (Index i = 0; i < b.cols(); ++i) leak += std::conj(b(n, i)) * in.direct_gain(k, i);
      acc += in.rho(k) * f(n, k) *
             (in.u(k) * std::conj(b(n, k)) - std::norm(in.u(k)) * leak);
    }
    out(n) = acc;
  }
  return out;
}

}  // namespace serial

namespace parallel {

cmat effective_channels(const cmat& bs_user, const cmat& ris_user, const cmat& bs_ris,
                        const cvec& phi) {
  const Index k_users = bs_user.cols();
  cmat out(bs_user.rows(), k_users);
  const cvec phi_conj = phi.conjugate();
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < k_users; ++k) {
    const cvec reflected = phi_conj.cwiseProduct(ris_user.col(k));
    out.col(k).noalias() = bs_user.col(k) + bs_ris.adjoint() * reflected;
  }
  return out;
}

cmat cross_gains(const cmat& channels, const Precoder& w) {
  const Index streams = w.cols();
  cmat out(channels.cols(), streams);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < streams; ++i) out.col(i).noalias() = channels.adjoint() * w.col(i);
  return out;
}

cmat weighted_gram(const cmat& channels, const rvec& weights) {
  const Index m_ant = channels.rows();
  cmat out(m_ant, m_ant);
#pragma omp parallel for schedule(static)
  for (Index l = 0; l < m_ant; ++l) {
    const cvec coeff = weights.cast<cplx>().cwiseProduct(channels.row(l).adjoint());
    out.col(l).noalias() = channels * coeff;
  }
  return out;
}

cmat reflected_gram(const cmat& bs_ris, const cvec& phi) {
  const Index m_ant = bs_ris.cols();
  const cvec gain = phi.cwiseAbs2().cast<cplx>();
  cmat out(m_ant, m_ant);
#pragma omp parallel for schedule(static)
  for (Index l = 0; l < m_ant; ++l) {
    const cvec scaled = gain.cwiseProduct(bs_ris.col(l));
    out.col(l).noalias() = bs_ris.adjoint() * scaled;
  }
  return out;
}

cmat apply_bs_ris(const cmat& bs_ris, const Precoder& w) {
  const Index k_users = w.cols();
  cmat out(bs_ris.rows(), k_users);
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < k_users; ++k) out.col(k).noalias() = bs_ris * w.col(k);
  return out;
}

rvec ris_power_weights(const cmat& bs_ris_w, double noise_ris) {
  const Index n_el = bs_ris_w.rows();
  rvec out(n_el);
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < n_el; ++n) out(n) = noise_ris + bs_ris_w.row(n).squaredNorm();
  return out;
}

cmat phi_quadratic(const PhiQuadraticInputs& in) {
  const cmat& f = in.ris_user;
  const cmat& b = in.bs_ris_w;
  const Index n_el = f.rows();
  const cvec c = (in.rho.array() * in.u.array().abs2()).matrix().cast<cplx>();
  cmat out(n_el, n_el);
#pragma omp parallel for schedule(static)
  for (Index m = 0; m < n_el; ++m) {
    // column m of S = sum_k c_k f_k f_k^H and of conj(G W G^H)
    const cvec s_col = f * c.cwiseProduct(f.row(m).adjoint());
    const cvec gram_col = (b * b.row(m).adjoint()).conjugate();
    out.col(m) = s_col.cwiseProduct(gram_col);
    out(m, m) += in.noise_ris * s_col(m).real();
  }
  return out;
}

cvec phi_linear(const PhiLinearInputs& in) {
  const cmat& f = in.ris_user;
  const cmat& b = in.bs_ris_w;
  const Index n_el = f.rows(), k_users = f.cols();
  // leak(n, k) = sum_i conj(b_ni) (hbar_k^H w_i)
  const cmat leak = b.conjugate() * in.direct_gain.transpose();
  cvec out(n_el);
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < n_el; ++n) {
    cplx acc = 0.0;
    for (Index k = 0; k < k_users; ++k)
      acc += in.rho(k) * f(n, k) *
             (in.u(k) * std::conj(b(n, k)) - std::norm(in.u(k)) * leak(n, k));
    out(n) = acc;
  }
  return out;
}

}  // namespace parallel

#define ARIS_DISPATCH(name, ...)                                                 \
  return backend_ == Backend::serial ? serial::name(__VA_ARGS__) : parallel::name(__VA_ARGS__)

cmat KernelSet::effective_channels(const cmat& bs_user, const cmat& ris_user, const cmat& bs_ris,
                                   const cvec& phi) const {
  ARIS_DISPATCH(effective_channels, bs_user, ris_user, bs_ris, phi);
}
cmat KernelSet::cross_gains(const cmat& channels, const Precoder& w) const {
  ARIS_DISPATCH(cross_gains, channels, w);
}
cmat KernelSet::weighted_gram(const cmat& channels, const rvec& weights) const {
  ARIS_DISPATCH(weighted_gram, channels, weights);
}
cmat KernelSet::reflected_gram(const cmat& bs_ris, const cvec& phi) const {
  ARIS_DISPATCH(reflected_gram, bs_ris, phi);
}
cmat KernelSet::apply_bs_ris(const cmat& bs_ris, const Precoder& w) const {
  ARIS_DISPATCH(apply_bs_ris, bs_ris, w);
}
rvec KernelSet::ris_power_weights(const cmat& bs_ris_w, double noise_ris) const {
  ARIS_DISPATCH(ris_power_weights, bs_ris_w, noise_ris);
}
cmat KernelSet::phi_quadratic(const PhiQuadraticInputs& in) const {
  ARIS_DISPATCH(phi_quadratic, in);
}
cvec KernelSet::phi_linear(const PhiLinearInputs& in) const { ARIS_DISPATCH(phi_linear, in); }

#undef ARIS_DISPATCH

void set_num_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace aris::kernels
