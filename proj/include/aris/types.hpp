#pragma once

#include <complex>

#include <Eigen/Dense>

namespace aris {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

/// BS precoder, M x K. Column k is w_k; row m is the per-antenna view.
using Precoder = cmat;

/// Active RIS reflection coefficients, one complex gain per element.
using ReflectCoeffs = cvec;

/// Power limits of the BS and the active RIS, in watts.
struct PowerBudget {
  double p_bs = 0.0;   // P_B
  double p_ris = 0.0;  // P_A
  rvec eta;            // per-element amplitude caps
  bool per_antenna = false;

  /// Throws std::invalid_argument unless P_B, P_A and every cap are positive.
  void validate() const;
};

/// WMMSE auxiliary block: receive scalars u_k and MSE weights rho_k > 0.
struct AuxiliaryVars {
  cvec u;
  rvec rho;
};

}  // namespace aris
