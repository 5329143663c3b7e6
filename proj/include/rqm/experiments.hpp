#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "rqm/causal_order.hpp"
#include "rqm/errors.hpp"
#include "rqm/kg_hilbert.hpp"
#include "rqm/reduction.hpp"
#include "rqm/relational_obs.hpp"

namespace rqm {

struct PacketSpec {
  double x0{0.0};
  double p0{0.0};
  double sigma_p{0.5};
  EnergySign sign{EnergySign::Plus};
};

/// A validated measurement arrangement plus the prepared state. The packet
/// spec describes the preparation in the original lab frame;
/// `description_frame` accumulates the rapidity of boosted re-descriptions.
struct Experiment {
  MomentumGrid grid;
  PacketSpec packet;
  Rapidity description_frame{};
  Device preparer;
  std::vector<Device> detectors;
  LayerDecomposition layers;
  KGState initial;
  PacketDiagnostics packet_diagnostics{};
  BoostDiagnostics boost_diagnostics{};

  std::vector<Device> all_devices() const {
    std::vector<Device> out{preparer};
    out.insert(out.end(), detectors.begin(), detectors.end());
    return out;
  }
  const Device& device(const std::string& id) const {
    if (preparer.id == id) return preparer;
    for (const auto& d : detectors)
      if (d.id == id) return d;
    throw std::invalid_argument("unknown device id: " + id);
  }
};

/// Base projector realizing one detector. Position detectors measure the
/// rest-frame region of their segment at their proper time in the positive
/// energy sector; energy-sign detectors measure epsilon itself.
inline ProjectorMatrix device_projector(const MomentumGrid& grid, const Device& d) {
  if (d.kind == DeviceKind::EnergySignDetector)
    return energy_sign_projector(grid, EnergySign::Plus);
  const Event rest_center = boost_event(d.segment.center, Rapidity{-d.segment.rapidity.chi});
  return nw_projector(grid, rest_center.x - d.segment.half_length,
                      rest_center.x + d.segment.half_length, d.proper_time,
                      d.segment.rapidity, EnergySign::Plus);
}

inline std::vector<MeasurementLayer> measurement_layers(const Experiment& e) {
  std::vector<MeasurementLayer> out;
  for (const auto& ids : e.layers.layers) {
    MeasurementLayer layer;
    for (const auto& id : ids) {
      const Device& d = e.device(id);
      layer.push_back({id, d.kind, device_projector(e.grid, d)});
    }
    out.push_back(std::move(layer));
  }
  return out;
}

/// Validates the arrangement and prepares the initial packet. Returns the
/// ValidationReport instead of an Experiment when the arrangement violates
/// the causal assumptions.
inline std::variant<Experiment, ValidationReport> try_make_experiment(
    const MomentumGrid& grid, const PacketSpec& packet, const Device& preparer,
    const std::vector<Device>& detectors) {
  std::vector<Device> all{preparer};
  all.insert(all.end(), detectors.begin(), detectors.end());
  ValidationReport report = validate(all);
  if (!report.ok()) return report;

  Experiment e{grid, packet, Rapidity{0.0}, preparer, detectors, {}, KGState::zero(grid)};
  e.layers = layer(build_precedence(all));
  e.initial = gaussian_packet(grid, packet.x0, packet.p0, packet.sigma_p,
                              packet.sign, &e.packet_diagnostics);

  // The preparation event (crossing of the packet's mean worldline with the
  // preparer's segment) must lie on the segment.
  const double v = expectation_velocity(e.initial);
  const Event c = preparer.segment.center;
  const double ch = std::cosh(preparer.segment.rapidity.chi);
  const double sh = std::sinh(preparer.segment.rapidity.chi);
  const double s = (packet.x0 + v * c.t - c.x) / (ch - v * sh);
  if (std::abs(s) > preparer.segment.half_length * (1.0 + 1e-9))
    throw ValidationError("preparation event lies off the preparer segment");
  return e;
}

inline Experiment make_experiment(const MomentumGrid& grid, const PacketSpec& packet,
                                  const Device& preparer,
                                  const std::vector<Device>& detectors) {
  auto r = try_make_experiment(grid, packet, preparer, detectors);
  if (std::holds_alternative<ValidationReport>(r)) {
    std::string msg = "experiment validation failed:";
    for (const auto& viol : std::get<ValidationReport>(r).violations) {
      msg += std::string(" ") + to_string(viol.kind);
      for (const auto& id : viol.device_ids) msg += " " + id;
      msg += ";";
    }
    throw ValidationError(msg);
  }
  return std::get<Experiment>(std::move(r));
}

/// Re-describe the experiment from a frame boosted by chi: device centers
/// boosted, device rapidities incremented, proper times and proper widths
/// unchanged (frame-intrinsic), state boosted unitarily.
inline Experiment boost_experiment(const Experiment& e, Rapidity chi) {
  auto boost_device = [&](const Device& d) {
    Device out = d;
    out.segment.center = boost_event(d.segment.center, chi);
    out.segment.rapidity.chi += chi.chi;
    return out;
  };
  Experiment out = e;
  out.description_frame.chi += chi.chi;
  out.preparer = boost_device(e.preparer);
  out.detectors.clear();
  for (const auto& d : e.detectors) out.detectors.push_back(boost_device(d));
  out.layers = layer(build_precedence(out.all_devices()));
  out.initial = boost_state(e.initial, chi, &out.boost_diagnostics);
  return out;
}

struct CovarianceRow {
  OutcomeTuple outcomes;  // flattened over all layers
  double lab{0.0};
  double boosted{0.0};
};

/// Per-outcome probability comparison between the experiment and its
/// boosted re-description.
struct CovarianceReport {
  double chi{0.0};
  std::vector<CovarianceRow> rows;
  bool outcome_sets_match{true};
  double max_abs_deviation{0.0};
  double max_rel_deviation{0.0};
  double boost_norm_drift{0.0};  // interpolation/cutoff diagnostic
};

namespace detail {

inline std::map<OutcomeTuple, double> flatten_paths(const RunResult& r) {
  std::map<OutcomeTuple, double> out;
  for (const auto& path : r.paths) {
    OutcomeTuple flat;
    for (const auto& layer : path.layers)
      for (const auto& [id, o] : layer.outcome) flat[id] = o;
    out[flat] += path.probability;
  }
  return out;
}

}  // namespace detail

inline CovarianceReport covariance_report(const Experiment& e, Rapidity chi) {
  const Experiment boosted = boost_experiment(e, chi);
  const RunResult lab_run = run_enumerate(e.initial, measurement_layers(e));
  const RunResult boo_run = run_enumerate(boosted.initial, measurement_layers(boosted));
  const auto lab = detail::flatten_paths(lab_run);
  const auto boo = detail::flatten_paths(boo_run);

  CovarianceReport report;
  report.chi = chi.chi;
  report.boost_norm_drift = boosted.boost_diagnostics.norm_drift;
  std::map<OutcomeTuple, CovarianceRow> rows;
  for (const auto& [k, p] : lab) rows[k] = {k, p, 0.0};
  for (const auto& [k, p] : boo) {
    auto it = rows.find(k);
    if (it == rows.end())
      rows[k] = {k, 0.0, p};
    else
      it->second.boosted = p;
  }
  report.outcome_sets_match = lab.size() == boo.size() && lab.size() == rows.size();
  for (auto& [k, row] : rows) {
    const double dev = std::abs(row.lab - row.boosted);
    const double scale = std::max(row.lab, row.boosted);
    report.max_abs_deviation = std::max(report.max_abs_deviation, dev);
    if (scale > 0.0)
      report.max_rel_deviation = std::max(report.max_rel_deviation, dev / scale);
    report.rows.push_back(row);
  }
  return report;
}

/// Commutator decay curve: same-T, rapidity-zero regions of the given width
/// (Compton units) centred +-d/2 apart, for each separation d (Compton
/// units). Returns (d, spectral norm of the commutator).
inline std::vector<std::pair<double, double>> commutator_scan(
    const MomentumGrid& grid, double width_compton, double proper_time,
    const std::vector<double>& separations_compton) {
  const double lc = grid.compton();
  std::vector<std::pair<double, double>> curve;
  for (double d : separations_compton) {
    if (d < 0.0) throw std::invalid_argument("separations must be non-negative");
    const double w = width_compton * lc;
    const double c1 = -0.5 * d * lc, c2 = +0.5 * d * lc;
    const auto p1 = nw_projector(grid, c1 - 0.5 * w, c1 + 0.5 * w, proper_time,
                                 Rapidity{0.0}, EnergySign::Plus);
    const auto p2 = nw_projector(grid, c2 - 0.5 * w, c2 + 0.5 * w, proper_time,
                                 Rapidity{0.0}, EnergySign::Plus);
    curve.emplace_back(d, commutator_norm(p1, p2));
  }
  return curve;
}

struct DensitySample {
  double x{0.0};
  double density{0.0};
};

/// Newton-Wigner position density on the slice of coordinate time t in the
/// frame reached by boosting the state with chi:
/// rho(x) = sum_eps |(2 pi)^{-1/2} sum_j phi_eps(p_j) e^{i p_j x - i eps w_j t} dp|^2.
inline std::vector<DensitySample> density_on_slice(const KGState& state,
                                                   Rapidity frame, double t,
                                                   int n_samples = 0,
                                                   BoostDiagnostics* diag = nullptr) {
  const KGState s = frame.chi == 0.0 ? state : boost_state(state, frame, diag);
  const MomentumGrid& g = s.grid;
  const int m = n_samples > 0 ? n_samples : 2 * g.n;
  const double span = g.position_span();
  const double dx = span / m;
  const double dp = g.dp();
  const double norm_factor = dp / std::sqrt(2.0 * std::numbers::pi);

  std::vector<DensitySample> out(m);
  for (int k = 0; k < m; ++k) {
    const double x = -0.5 * span + k * dx;
    double rho = 0.0;
    for (EnergySign eps : {EnergySign::Plus, EnergySign::Minus}) {
      const auto& amp = s.sector(eps);
      if (amp.squaredNorm() == 0.0) continue;
      // recurrence over e^{i p_j x}, p_j = -p_max + j dp
      const Cx step = std::exp(Cx(0.0, dp * x));
      Cx phase = std::exp(Cx(0.0, -g.p_max * x));
      Cx acc(0.0, 0.0);
      for (int j = 0; j < g.n; ++j) {
        const Cx evol = std::exp(Cx(0.0, -sign_of(eps) * g.omega(j) * t));
        acc += amp(j) * evol * phase;
        phase *= step;
      }
      rho += std::norm(acc * norm_factor);
    }
    out[k] = {x, rho};
  }
  return out;
}

enum class ScenarioName { TwoSlit, NonlocalPair, Chain };

inline ScenarioName scenario_from_string(const std::string& s) {
  if (s == "two_slit") return ScenarioName::TwoSlit;
  if (s == "nonlocal_pair") return ScenarioName::NonlocalPair;
  if (s == "chain") return ScenarioName::Chain;
  throw std::invalid_argument("unknown scenario: " + s);
}

/// Canned desk-scale arrangements. All regions are >= 2 Compton wavelengths
/// wide and separations >= 5, keeping sub-Compton corrections below grid
/// error; every scenario passes validation by construction.
inline Experiment scenario(ScenarioName name) {
  const MomentumGrid grid{1024, 16.0, 1.0};
  auto seg = [](double t, double x, double half) {
    return SpacelikeSegment{{t, x}, half, Rapidity{0.0}};
  };
  const Device preparer{"a0", DeviceKind::Preparer, seg(0.0, 0.0, 2.0), 0.0};

  switch (name) {
    case ScenarioName::TwoSlit: {
      const PacketSpec packet{0.0, 0.5, 0.5, EnergySign::Plus};
      std::vector<Device> dets{
          {"slit_l", DeviceKind::PositionDetector, seg(12.0, -7.0, 2.0), 12.0},
          {"slit_r", DeviceKind::PositionDetector, seg(12.0, +7.0, 2.0), 12.0},
          // screen cells sit inside the causal future of both slits
          {"screen_0", DeviceKind::PositionDetector, seg(30.0, -9.6, 3.0), 30.0},
          {"screen_1", DeviceKind::PositionDetector, seg(30.0, -3.4, 3.0), 30.0},
          {"screen_2", DeviceKind::PositionDetector, seg(30.0, +2.8, 3.0), 30.0},
          {"screen_3", DeviceKind::PositionDetector, seg(30.0, +9.0, 3.0), 30.0},
      };
      return make_experiment(grid, packet, preparer, dets);
    }
    case ScenarioName::NonlocalPair: {
      const PacketSpec packet{0.0, 0.0, 0.5, EnergySign::Plus};
      std::vector<Device> dets{
          {"left", DeviceKind::PositionDetector, seg(10.0, -6.0, 2.0), 10.0},
          {"right", DeviceKind::PositionDetector, seg(10.0, +6.0, 2.0), 10.0},
      };
      return make_experiment(grid, packet, preparer, dets);
    }
    case ScenarioName::Chain: {
      const PacketSpec packet{0.0, 0.5, 0.5, EnergySign::Plus};
      std::vector<Device> dets{
          {"b", DeviceKind::PositionDetector, seg(8.0, 0.0, 3.0), 8.0},
          {"c", DeviceKind::PositionDetector, seg(16.0, 0.0, 4.0), 16.0},
          {"d", DeviceKind::PositionDetector, seg(24.0, 0.0, 5.0), 24.0},
      };
      return make_experiment(grid, packet, preparer, dets);
    }
  }
  throw std::invalid_argument("unknown scenario");
}

}  // namespace rqm
