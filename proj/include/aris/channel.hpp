#pragma once

#include <array>
#include <cstdint>

#include "aris/types.hpp"

namespace aris {

using Point2 = std::array<double, 2>;

struct Geometry {
  Point2 bs_position{0.0, 0.0};
  Point2 ris_position{100.0, 0.0};
  double user_radius = 8.0;  // users are dropped uniformly in this disk around the RIS
  int num_users = 8;

  void validate() const;
};

/// Log-distance path loss, PL[dB] = intercept + slope * log10(d[m]).
struct PathLossModel {
  double intercept_db = 0.0;
  double slope = 0.0;

  double loss_db(double distance_m) const;
  /// Linear power gain 10^(-PL/10).
  double gain(double distance_m) const;
};

inline constexpr PathLossModel kBsUserPathLoss{41.2, 28.7};
inline constexpr PathLossModel kRisLinkPathLoss{37.3, 22.0};

struct FadingConfig {
  double rician_factor = 10.0;  // kappa, linear; 0 gives Rayleigh
  std::uint64_t seed = 0;
  PathLossModel pathloss_bs_user = kBsUserPathLoss;
  PathLossModel pathloss_ris_links = kRisLinkPathLoss;
  double noise_ris = 1e-11;   // sigma_v^2 [W]
  double noise_user = 1e-11;  // sigma_k^2 [W], same for every user

  void validate() const;
};

struct Dims {
  int m = 0;  // BS antennas
  int n = 0;  // RIS elements
};

/// One downlink realization. Immutable once generated.
struct ChannelSet {
  cmat bs_user;  // M x K, column k = hbar_k
  cmat ris_user; // N x K, column k = f_k
  cmat bs_ris;   // N x M, G
  double noise_ris = 0.0;
  rvec noise_user;  // K

  int num_antennas() const { return static_cast<int>(bs_user.rows()); }
  int num_elements() const { return static_cast<int>(ris_user.rows()); }
  int num_users() const { return static_cast<int>(bs_user.cols()); }

  /// Throws std::invalid_argument on inconsistent dimensions, non-finite
  /// entries or non-positive noise.
  void validate() const;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Uniform linear array response with half-wavelength spacing,
/// a_n = exp(j*pi*n*sin(theta)).
cvec ula_steering(int length, double theta);

/// Seeded Rician channel draw. Identical inputs give bit-identical output.
ChannelSet generate_channels(const Geometry& geometry, const FadingConfig& fading, Dims dims);

/// Effective BS-user channels h_k (M x K) with h_k^H = hbar_k^H + f_k^H Diag(phi) G.
cmat effective_channel(const ChannelSet& ch, const ReflectCoeffs& phi);

}  // namespace aris
