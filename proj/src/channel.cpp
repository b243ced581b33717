#include "aris/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "aris/kernels.hpp"

namespace aris {

namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

void require_positive_distance(double d, const char* link) {
  if (!(d > 0.0))
    throw std::invalid_argument(std::string("zero distance on ") + link +
                                " link; path loss undefined");
}

bool finite(const cmat& m) { return m.allFinite(); }

// Draws are taken from one stream in a fixed order: user drops, LOS angles,
// then NLOS entries (G, hbar, f). Changing that order changes every channel.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return uniform_(rng_); }
  double angle() { return 2.0 * std::numbers::pi * uniform(); }
  cplx complex_gaussian() {
    const double re = normal_(rng_);
    const double im = normal_(rng_);
    return cplx(re, im) * (std::numbers::sqrt2 / 2.0);
  }
  cmat complex_gaussian(Eigen::Index rows, Eigen::Index cols) {
    cmat out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = complex_gaussian();
    return out;
  }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

void Geometry::validate() const {
  if (!(user_radius > 0.0)) throw std::invalid_argument("user radius must be positive");
  if (num_users < 1) throw std::invalid_argument("need at least one user");
  require_positive_distance(distance(bs_position, ris_position), "BS-RIS");
}

double PathLossModel::loss_db(double distance_m) const {
  return intercept_db + slope * std::log10(distance_m);
}

double PathLossModel::gain(double distance_m) const {
  return std::pow(10.0, -loss_db(distance_m) / 10.0);
}

void FadingConfig::validate() const {
  if (!(rician_factor >= 0.0) || !std::isfinite(rician_factor))
    throw std::invalid_argument("rician factor must be finite and >= 0");
  for (const auto& pl : {pathloss_bs_user, pathloss_ris_links})
    if (!std::isfinite(pl.intercept_db) || !std::isfinite(pl.slope))
      throw std::invalid_argument("path-loss coefficients must be finite");
  if (!(noise_ris > 0.0) || !(noise_user > 0.0))
    throw std::invalid_argument("noise powers must be positive");
}

void ChannelSet::validate() const {
  const auto m = bs_user.rows(), n = ris_user.rows(), k = bs_user.cols();
  if (m < 1 || n < 1 || k < 1) throw std::invalid_argument("empty channel set");
  if (ris_user.cols() != k || bs_ris.rows() != n || bs_ris.cols() != m || noise_user.size() != k)
    throw std::invalid_argument("channel dimensions are inconsistent");
  if (!finite(bs_user) || !finite(ris_user) || !finite(bs_ris) || !noise_user.allFinite())
    throw std::invalid_argument("channel entries must be finite");
  if (!(noise_ris > 0.0) || !(noise_user.array() > 0.0).all())
    throw std::invalid_argument("noise powers must be positive");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

cvec ula_steering(int length, double theta) {
  cvec a(length);
  const double phase = std::numbers::pi * std::sin(theta);
  for (int i = 0; i < length; ++i) a(i) = std::polar(1.0, phase * i);
  return a;
}

ChannelSet generate_channels(const Geometry& geometry, const FadingConfig& fading, Dims dims) {
  geometry.validate();
  fading.validate();
  if (dims.m < 1 || dims.n < 1) throw std::invalid_argument("M and N must be >= 1");

  const int k_users = geometry.num_users;
  Sampler rng(fading.seed);

  std::vector<Point2> users(k_users);
  for (auto& p : users) {
    const double radius = geometry.user_radius * std::sqrt(rng.uniform());
    const double angle = rng.angle();
    p = {geometry.ris_position[0] + radius * std::cos(angle),
         geometry.ris_position[1] + radius * std::sin(angle)};
  }

  const double d_bs_ris = distance(geometry.bs_position, geometry.ris_position);
  std::vector<double> d_bs_user(k_users), d_ris_user(k_users);
  for (int k = 0; k < k_users; ++k) {
    d_bs_user[k] = distance(geometry.bs_position, users[k]);
    d_ris_user[k] = distance(geometry.ris_position, users[k]);
    require_positive_distance(d_bs_user[k], "BS-user");
    require_positive_distance(d_ris_user[k], "RIS-user");
  }

  const double kappa = fading.rician_factor;
  const double los_weight = std::sqrt(kappa / (kappa + 1.0));
  const double nlos_weight = std::sqrt(1.0 / (kappa + 1.0));

  const double g_aoa = rng.angle(), g_aod = rng.angle();
  std::vector<double> bs_user_aod(k_users), ris_user_aod(k_users);
  for (auto& a : bs_user_aod) a = rng.angle();
  for (auto& a : ris_user_aod) a = rng.angle();

  const cmat g_nlos = rng.complex_gaussian(dims.n, dims.m);
  const cmat h_nlos = rng.complex_gaussian(dims.m, k_users);
  const cmat f_nlos = rng.complex_gaussian(dims.n, k_users);

  ChannelSet ch;
  const cmat g_los = ula_steering(dims.n, g_aoa) * ula_steering(dims.m, g_aod).adjoint();
  ch.bs_ris = std::sqrt(fading.pathloss_ris_links.gain(d_bs_ris)) *
              (los_weight * g_los + nlos_weight * g_nlos);

  ch.bs_user.resize(dims.m, k_users);
  ch.ris_user.resize(dims.n, k_users);
  for (int k = 0; k < k_users; ++k) {
    ch.bs_user.col(k) = std::sqrt(fading.pathloss_bs_user.gain(d_bs_user[k])) *
                        (los_weight * ula_steering(dims.m, bs_user_aod[k]) +
                         nlos_weight * h_nlos.col(k));
    ch.ris_user.col(k) = std::sqrt(fading.pathloss_ris_links.gain(d_ris_user[k])) *
                         (los_weight * ula_steering(dims.n, ris_user_aod[k]) +
                          nlos_weight * f_nlos.col(k));
  }
  ch.noise_ris = fading.noise_ris;
  ch.noise_user = rvec::Constant(k_users, fading.noise_user);
  ch.validate();
  return ch;
}

cmat effective_channel(const ChannelSet& ch, const ReflectCoeffs& phi) {
  if (phi.size() != ch.num_elements())
    throw std::invalid_argument("phi length does not match RIS size");
  return kernels::parallel::effective_channels(ch.bs_user, ch.ris_user, ch.bs_ris, phi);
}

}  // namespace aris
