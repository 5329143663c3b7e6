#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "rqm/errors.hpp"
#include "rqm/fourier.hpp"
#include "rqm/spacetime.hpp"

namespace rqm {

using Cx = std::complex<double>;

/// Uniform momentum grid p_j = -p_max + j*dp, dp = 2 p_max / n, for a
/// Klein-Gordon particle of mass m. Natural units; the Compton wavelength
/// 1/m is the reporting length unit.
struct MomentumGrid {
  int n{1024};
  double p_max{16.0};
  double mass{1.0};

  double dp() const { return 2.0 * p_max / n; }
  double p(int j) const { return -p_max + dp() * j; }
  double omega(int j) const {
    const double pj = p(j);
    return std::sqrt(pj * pj + mass * mass);
  }
  double compton() const { return 1.0 / mass; }
  /// Position span of the conjugate representation, 2*pi/dp.
  double position_span() const { return 2.0 * std::numbers::pi / dp(); }

  bool operator==(const MomentumGrid&) const = default;
};

enum class EnergySign : int { Plus = +1, Minus = -1 };

inline double sign_of(EnergySign s) { return s == EnergySign::Plus ? 1.0 : -1.0; }
inline EnergySign opposite(EnergySign s) {
  return s == EnergySign::Plus ? EnergySign::Minus : EnergySign::Plus;
}

/// Two-component (energy-sign) momentum wavefunction in Newton-Wigner
/// normalization: norm^2 = sum_j (|plus_j|^2 + |minus_j|^2) dp.
/// States are Heisenberg-picture objects and never evolve; all time
/// dependence lives in the operators acting on them.
struct KGState {
  MomentumGrid grid;
  Eigen::VectorXcd plus;
  Eigen::VectorXcd minus;

  static KGState zero(const MomentumGrid& g) {
    return {g, Eigen::VectorXcd::Zero(g.n), Eigen::VectorXcd::Zero(g.n)};
  }
  Eigen::VectorXcd& sector(EnergySign s) { return s == EnergySign::Plus ? plus : minus; }
  const Eigen::VectorXcd& sector(EnergySign s) const {
    return s == EnergySign::Plus ? plus : minus;
  }
};

inline void require_same_grid(const MomentumGrid& a, const MomentumGrid& b) {
  if (!(a == b)) throw GridMismatchError("momentum grids differ");
}

inline Cx inner(const KGState& a, const KGState& b) {
  require_same_grid(a.grid, b.grid);
  return (a.plus.dot(b.plus) + a.minus.dot(b.minus)) * a.grid.dp();
}

inline double norm(const KGState& s) {
  return std::sqrt((s.plus.squaredNorm() + s.minus.squaredNorm()) * s.grid.dp());
}

inline KGState normalize(const KGState& s) {
  const double n = norm(s);
  if (n < 1e-14) throw NullStateError("cannot normalize a null state");
  return {s.grid, s.plus / n, s.minus / n};
}

struct PacketDiagnostics {
  double tail_mass{0.0};  // analytic probability mass beyond the cutoff
  bool cutoff_warning{false};
};

/// Gaussian wavepacket centred at position x0 and momentum p0 in the given
/// energy-sign sector: amplitude ~ exp(-(p-p0)^2/(4 sigma_p^2)) exp(-i p x0),
/// numerically normalized. Newton-Wigner position density is then an exact
/// Gaussian of width 1/(2 sigma_p) at x0.
inline KGState gaussian_packet(const MomentumGrid& g, double x0, double p0,
                               double sigma_p, EnergySign sign,
                               PacketDiagnostics* diag = nullptr) {
  if (!(sigma_p > 0.0)) throw std::invalid_argument("sigma_p must be positive");
  KGState s = KGState::zero(g);
  auto& amp = s.sector(sign);
  for (int j = 0; j < g.n; ++j) {
    const double pj = g.p(j);
    const double envelope = std::exp(-(pj - p0) * (pj - p0) / (4.0 * sigma_p * sigma_p));
    amp(j) = envelope * std::exp(Cx(0.0, -pj * x0));
  }
  if (diag) {
    const double a = (g.p_max - p0) / (std::numbers::sqrt2 * sigma_p);
    const double b = (g.p_max + p0) / (std::numbers::sqrt2 * sigma_p);
    diag->tail_mass = 0.5 * (std::erfc(a) + std::erfc(b));
    diag->cutoff_warning = diag->tail_mass > 1e-6;
  }
  return normalize(s);
}

namespace detail {

/// Periodic Dirichlet kernel of the grid's trigonometric-polynomial space:
/// Dir(s) = sin(pi s)/(n sin(pi s/n)) e^{-i pi s/n}, n-periodic, Dir(k)=d_k0.
inline Cx dirichlet(double s, int n) {
  s -= n * std::round(s / n);  // reduce to [-n/2, n/2]
  if (std::abs(s) < 1e-9) return Cx(1.0, 0.0);
  const double pi = std::numbers::pi;
  const double ratio = std::sin(pi * s) / (n * std::sin(pi * s / n));
  return ratio * std::exp(Cx(0.0, -pi * s / n));
}

/// Boosted momentum argument: spatial part of the inverse boost of the
/// on-shell four-momentum (eps*omega, p).
inline double boosted_argument(const MomentumGrid& g, double chi, EnergySign eps,
                               int i) {
  return g.p(i) * std::cosh(chi) - sign_of(eps) * g.omega(i) * std::sinh(chi);
}

}  // namespace detail

/// Linear (un-normalized) boost action on one sector. The covariant
/// amplitude sqrt(2 omega) phi is evaluated at the boosted argument by
/// trigonometric interpolation, which is exact on the grid's function space,
/// so the only loss is genuine cutoff leakage (arguments outside the grid).
inline Eigen::VectorXcd boost_sector(const MomentumGrid& g, Rapidity r,
                                     EnergySign eps, const Eigen::VectorXcd& amp) {
  if (r.chi == 0.0) return amp;
  const int n = g.n;
  Eigen::VectorXcd cov(n);
  for (int j = 0; j < n; ++j) cov(j) = std::sqrt(2.0 * g.omega(j)) * amp(j);

  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  const double dp = g.dp();
  for (int i = 0; i < n; ++i) {
    const double q = detail::boosted_argument(g, r.chi, eps, i);
    if (q < -g.p_max || q >= g.p_max) continue;
    const double t = (q + g.p_max) / dp;
    Cx acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) acc += cov(j) * detail::dirichlet(t - j, n);
    out(i) = acc / std::sqrt(2.0 * g.omega(i));
  }
  return out;
}

/// Dense matrix of the same linear boost map, cached per
/// (grid, rapidity, sector). Used by projector conjugation where the map is
/// applied many times; boost_state streams instead.
inline std::shared_ptr<const Eigen::MatrixXcd> boost_matrix(const MomentumGrid& g,
                                                            Rapidity r,
                                                            EnergySign eps) {
  using Key = std::tuple<int, double, double, double, int>;
  static std::map<Key, std::shared_ptr<const Eigen::MatrixXcd>> cache;
  static std::mutex mutex;
  const Key key{g.n, g.p_max, g.mass, r.chi, static_cast<int>(eps)};
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const int n = g.n;
  auto w = std::make_shared<Eigen::MatrixXcd>(n, n);
  w->setZero();
  const double dp = g.dp();
  for (int i = 0; i < n; ++i) {
    const double q = detail::boosted_argument(g, r.chi, eps, i);
    if (q < -g.p_max || q >= g.p_max) continue;
    const double t = (q + g.p_max) / dp;
    const double scale = 1.0 / std::sqrt(2.0 * g.omega(i));
    for (int j = 0; j < n; ++j)
      (*w)(i, j) = scale * detail::dirichlet(t - j, n) * std::sqrt(2.0 * g.omega(j));
  }
  std::lock_guard<std::mutex> lock(mutex);
  auto [it, inserted] = cache.emplace(key, std::move(w));
  return it->second;
}

struct BoostDiagnostics {
  double norm_drift{0.0};   // |norm before renormalization - 1|
  double leaked_mass{0.0};  // probability mass lost to the cutoff
  bool cutoff_warning{false};
};

/// Unitary boost of a state (active; a rest packet boosted by chi > 0 gains
/// positive momentum). Renormalized; the pre-renormalization drift is
/// reported through `diag`.
inline KGState boost_state(const KGState& s, Rapidity r,
                           BoostDiagnostics* diag = nullptr) {
  KGState out{s.grid, boost_sector(s.grid, r, EnergySign::Plus, s.plus),
              boost_sector(s.grid, r, EnergySign::Minus, s.minus)};
  const double n = norm(out);
  if (diag) {
    diag->norm_drift = std::abs(n - 1.0);
    diag->leaked_mass = std::max(0.0, 1.0 - n * n);
    diag->cutoff_warning = diag->leaked_mass > 1e-6;
  }
  if (n < 1e-14) throw NullStateError("boost pushed the state outside the cutoff");
  return {s.grid, out.plus / n, out.minus / n};
}

/// d/dp of the grid's trigonometric interpolant, evaluated at the nodes.
/// Spectrally accurate for amplitudes that decay inside the cutoff.
inline Eigen::VectorXcd spectral_derivative(const MomentumGrid& g,
                                            const Eigen::VectorXcd& amp) {
  const int n = g.n;
  Eigen::VectorXcd coeff = fourier::fft(amp);
  const double span = 2.0 * g.p_max;
  for (int k = 0; k < n; ++k) {
    const int f = fourier::dft_frequency(k, n);
    if (2 * f == -n) {
      coeff(k) = Cx(0.0, 0.0);  // unpaired Nyquist mode has no odd derivative
      continue;
    }
    coeff(k) *= Cx(0.0, 2.0 * std::numbers::pi * f / span);
  }
  return fourier::ifft(coeff);  // Eigen's inverse FFT carries the 1/n scaling
}

}  // namespace rqm
