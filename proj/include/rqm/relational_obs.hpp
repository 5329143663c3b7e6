#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>

#include "rqm/errors.hpp"
#include "rqm/fourier.hpp"
#include "rqm/kg_hilbert.hpp"

namespace rqm {

namespace detail {

/// Analytic region integral of the Newton-Wigner projector kernel,
/// I_R(d) = (e^{-i d x1} - e^{-i d x2}) / (2 pi i d), I_R(0) = (x2-x1)/(2 pi),
/// evaluated in the cancellation-free form e^{-i d c} sin(d h)/(pi d) with
/// c = (x1+x2)/2, h = (x2-x1)/2.
inline Cx region_integral(double delta, double c, double h) {
  if (delta == 0.0) return Cx(h / std::numbers::pi, 0.0);
  const double mod = std::sin(delta * h) / (std::numbers::pi * delta);
  return mod * std::exp(Cx(0.0, -delta * c));
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits; avoids the
/// implementation-defined std::uniform_real_distribution.
inline double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// A local measurement realized on the momentum grid. The stored kernel is
/// the device rest-frame matrix K(p_j,p_k) = e^{i eps (w_j - w_k) T}
/// I_R(p_j - p_k) dp acting on one energy-sign sector; for a device of
/// rapidity eta the lab action is U(+eta) K U(-eta). Complements act as
/// s - P s on the sector and as the identity on the opposite sector, which
/// keeps P + complement(P) = I exact on every state.
class ProjectorMatrix {
 public:
  static ProjectorMatrix nw(const MomentumGrid& grid, double region_lo,
                            double region_hi, double proper_time, Rapidity frame,
                            EnergySign sector) {
    if (!(region_hi - region_lo >= 1e-12 * grid.compton()))
      throw std::invalid_argument("degenerate projector region");
    ProjectorMatrix p(grid, sector);
    p.region_lo_ = region_lo;
    p.region_hi_ = region_hi;
    p.proper_time_ = proper_time;
    p.frame_ = frame;
    p.identity_kernel_ = false;

    const int n = grid.n;
    const double dp = grid.dp();
    const double c = 0.5 * (region_lo + region_hi);
    const double h = 0.5 * (region_hi - region_lo);
    // Hermitian by construction: column entries for negative offsets are the
    // exact conjugates of the positive ones.
    Eigen::VectorXcd offsets = Eigen::VectorXcd::Zero(2 * n);
    for (int m = 0; m < n; ++m) {
      const Cx v = detail::region_integral(m * dp, c, h) * dp;
      offsets(m) = v;
      if (m > 0) offsets(2 * n - m) = std::conj(v);
    }
    p.toeplitz_ = fourier::ToeplitzOperator::from_column(offsets);
    p.column_ = offsets;

    p.phase_.resize(n);
    for (int j = 0; j < n; ++j)
      p.phase_(j) = std::exp(Cx(0.0, sign_of(sector) * grid.omega(j) * proper_time));
    if (frame.chi != 0.0) {
      p.into_rest_ = boost_matrix(grid, Rapidity{-frame.chi}, sector);
      p.from_rest_ = boost_matrix(grid, Rapidity{+frame.chi}, sector);
    }
    return p;
  }

  static ProjectorMatrix energy_sign(const MomentumGrid& grid, EnergySign sector) {
    ProjectorMatrix p(grid, sector);
    p.identity_kernel_ = true;
    return p;
  }

  ProjectorMatrix complement() const {
    ProjectorMatrix p = *this;
    p.complemented_ = !p.complemented_;
    return p;
  }

  const MomentumGrid& grid() const { return grid_; }
  EnergySign sector() const { return sector_; }
  bool complemented() const { return complemented_; }
  bool is_energy_sign() const { return identity_kernel_; }
  double region_lo() const { return region_lo_; }
  double region_hi() const { return region_hi_; }
  double proper_time() const { return proper_time_; }
  Rapidity frame() const { return frame_; }

  /// Lab-frame linear action on the acting sector.
  Eigen::VectorXcd sector_apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd base;
    if (frame_.chi == 0.0) {
      base = kernel_apply(v);
    } else {
      base = (*from_rest_) * kernel_apply((*into_rest_) * v);
    }
    return complemented_ ? Eigen::VectorXcd(v - base) : base;
  }

  /// Adjoint of the implemented lab-frame map (exact conjugate transpose of
  /// the boost matrices; the rest kernel is Hermitian by construction).
  Eigen::VectorXcd sector_apply_adjoint(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd base;
    if (frame_.chi == 0.0) {
      base = kernel_apply(v);
    } else {
      base = into_rest_->adjoint() * kernel_apply(from_rest_->adjoint() * v);
    }
    return complemented_ ? Eigen::VectorXcd(v - base) : base;
  }

  /// Full-state action: Zero on the opposite sector for a projector,
  /// identity there for a complement.
  KGState apply(const KGState& s) const {
    require_same_grid(s.grid, grid_);
    KGState out = KGState::zero(grid_);
    out.sector(sector_) = sector_apply(s.sector(sector_));
    if (complemented_) out.sector(opposite(sector_)) = s.sector(opposite(sector_));
    return out;
  }

  KGState apply_adjoint(const KGState& s) const {
    require_same_grid(s.grid, grid_);
    KGState out = KGState::zero(grid_);
    out.sector(sector_) = sector_apply_adjoint(s.sector(sector_));
    if (complemented_) out.sector(opposite(sector_)) = s.sector(opposite(sector_));
    return out;
  }

  /// Born value <s|P|s> (real part; the kernel is Hermitian).
  double probability(const KGState& s) const {
    return std::real(inner(s, apply(s)));
  }

  /// The rest-frame matrix field, materialized: entries (j,k) and (k,j) are
  /// exact conjugates. Complements materialize I - K.
  Eigen::MatrixXcd dense() const {
    const int n = grid_.n;
    Eigen::MatrixXcd m(n, n);
    if (identity_kernel_) {
      m = Eigen::MatrixXcd::Identity(n, n);
    } else {
      for (int j = 0; j < n; ++j) {
        for (int k = j; k < n; ++k) {
          // offset j - k <= 0 lives in the wrapped half of the column
          const Cx v =
              phase_(j) * column_((j - k + 2 * n) % (2 * n)) * std::conj(phase_(k));
          m(j, k) = v;
          m(k, j) = std::conj(v);
        }
      }
    }
    if (complemented_) m = Eigen::MatrixXcd::Identity(n, n) - m;
    return m;
  }

 private:
  ProjectorMatrix(const MomentumGrid& g, EnergySign s) : grid_(g), sector_(s) {}

  Eigen::VectorXcd kernel_apply(const Eigen::VectorXcd& v) const {
    if (identity_kernel_) return v;
    return phase_.cwiseProduct(toeplitz_.apply(phase_.conjugate().cwiseProduct(v)));
  }

  MomentumGrid grid_;
  EnergySign sector_;
  bool complemented_{false};
  bool identity_kernel_{false};
  double region_lo_{0.0}, region_hi_{0.0};
  double proper_time_{0.0};
  Rapidity frame_{};
  Eigen::VectorXcd phase_;
  Eigen::VectorXcd column_;  // Toeplitz offsets, size 2n (slot n unused)
  fourier::ToeplitzOperator toeplitz_;
  std::shared_ptr<const Eigen::MatrixXcd> into_rest_, from_rest_;
};

inline ProjectorMatrix nw_projector(const MomentumGrid& grid, double region_lo,
                                    double region_hi, double proper_time,
                                    Rapidity frame, EnergySign sector) {
  return ProjectorMatrix::nw(grid, region_lo, region_hi, proper_time, frame, sector);
}

inline ProjectorMatrix energy_sign_projector(const MomentumGrid& grid,
                                             EnergySign sign) {
  return ProjectorMatrix::energy_sign(grid, sign);
}

inline ProjectorMatrix complement(const ProjectorMatrix& p) { return p.complement(); }

inline KGState apply(const ProjectorMatrix& p, const KGState& s) {
  return p.apply(s);
}

/// Relational position expectation <X(T)> = <q> + T <p/p0> with q = i d/dp
/// (spectral derivative) and p0 = eps * omega per sector. Expects a
/// normalized state.
inline double expectation_X(const KGState& s, double T) {
  const double dp = s.grid.dp();
  double q = 0.0, v = 0.0;
  for (EnergySign eps : {EnergySign::Plus, EnergySign::Minus}) {
    const auto& amp = s.sector(eps);
    if (amp.squaredNorm() == 0.0) continue;
    const Eigen::VectorXcd d = spectral_derivative(s.grid, amp);
    q += std::real(amp.dot(Cx(0.0, 1.0) * d)) * dp;
    for (int j = 0; j < s.grid.n; ++j)
      v += sign_of(eps) * (s.grid.p(j) / s.grid.omega(j)) * std::norm(amp(j)) * dp;
  }
  return q + T * v;
}

/// <p/p0>: the relational drift velocity.
inline double expectation_velocity(const KGState& s) {
  const double dp = s.grid.dp();
  double v = 0.0;
  for (EnergySign eps : {EnergySign::Plus, EnergySign::Minus}) {
    const auto& amp = s.sector(eps);
    for (int j = 0; j < s.grid.n; ++j)
      v += sign_of(eps) * (s.grid.p(j) / s.grid.omega(j)) * std::norm(amp(j)) * dp;
  }
  return v;
}

inline double expectation_momentum(const KGState& s) {
  const double dp = s.grid.dp();
  double v = 0.0;
  for (EnergySign eps : {EnergySign::Plus, EnergySign::Minus}) {
    const auto& amp = s.sector(eps);
    for (int j = 0; j < s.grid.n; ++j) v += s.grid.p(j) * std::norm(amp(j)) * dp;
  }
  return v;
}

/// A linear map on states together with its adjoint; the unit power
/// iteration runs on these.
struct LinearOp {
  std::function<KGState(const KGState&)> forward;
  std::function<KGState(const KGState&)> adjoint;
};

inline double plain_dot(const KGState& a, const KGState& b) {
  return std::real(a.plus.dot(b.plus) + a.minus.dot(b.minus));
}

/// Spectral norm of a linear map by power iteration on A^dagger A with the
/// stated relative convergence of the squared-norm estimate. The start
/// vector is a fixed seeded pseudo-random state, so results are
/// deterministic.
inline double spectral_norm(const LinearOp& op, const MomentumGrid& grid,
                            double rel_tol = 1e-8, int max_iterations = 200000,
                            std::uint64_t seed = 0x5eed5eed5eed5eedULL) {
  KGState v = KGState::zero(grid);
  std::uint64_t rng = seed;
  for (int j = 0; j < grid.n; ++j) {
    v.plus(j) = Cx(detail::uniform01(rng) - 0.5, detail::uniform01(rng) - 0.5);
    v.minus(j) = Cx(detail::uniform01(rng) - 0.5, detail::uniform01(rng) - 0.5);
  }
  {
    const double n0 = std::sqrt(plain_dot(v, v));
    v.plus /= n0;
    v.minus /= n0;
  }

  double lambda_prev = -1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const KGState y = op.forward(v);
    const double lambda = plain_dot(y, y);  // = <v|A^dagger A|v>
    if (lambda < 1e-280) return 0.0;
    KGState z = op.adjoint(y);
    const double zn = std::sqrt(plain_dot(z, z));
    if (zn < 1e-280) return 0.0;
    z.plus /= zn;
    z.minus /= zn;
    v = z;
    if (it > 0 && std::abs(lambda - lambda_prev) <= rel_tol * lambda)
      return std::sqrt(lambda);
    lambda_prev = lambda;
  }
  return std::sqrt(std::max(lambda_prev, 0.0));
}

inline LinearOp commutator_op(ProjectorMatrix a, ProjectorMatrix b) {
  LinearOp op;
  op.forward = [a, b](const KGState& v) {
    KGState ab = a.apply(b.apply(v));
    KGState ba = b.apply(a.apply(v));
    return KGState{v.grid, ab.plus - ba.plus, ab.minus - ba.minus};
  };
  op.adjoint = [a, b](const KGState& v) {
    KGState ba = b.apply_adjoint(a.apply_adjoint(v));
    KGState ab = a.apply_adjoint(b.apply_adjoint(v));
    return KGState{v.grid, ba.plus - ab.plus, ba.minus - ab.minus};
  };
  return op;
}

/// Spectral norm of P1 P2 - P2 P1 (power iteration, 1e-8 relative
/// convergence). Projectors on different sectors commute exactly and report
/// zero without iteration noise.
inline double commutator_norm(const ProjectorMatrix& p1, const ProjectorMatrix& p2) {
  require_same_grid(p1.grid(), p2.grid());
  return spectral_norm(commutator_op(p1, p2), p1.grid());
}

}  // namespace rqm
