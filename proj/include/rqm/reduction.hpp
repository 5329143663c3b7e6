#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rqm/causal_order.hpp"
#include "rqm/errors.hpp"
#include "rqm/relational_obs.hpp"

namespace rqm {

enum class Outcome { Detected, NotDetected, Plus, Minus };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Detected: return "detected";
    case Outcome::NotDetected: return "not_detected";
    case Outcome::Plus: return "plus";
    case Outcome::Minus: return "minus";
  }
  return "?";
}

/// Map device id -> outcome; keys are exactly the ids of one layer.
using OutcomeTuple = std::map<std::string, Outcome>;

/// One device of a measurement layer: its base projector (the Detected /
/// Plus branch); the opposite branch is the complement.
struct MeasurementFactor {
  std::string device_id;
  DeviceKind kind{DeviceKind::PositionDetector};
  ProjectorMatrix projector;

  std::pair<Outcome, Outcome> outcomes() const {
    if (kind == DeviceKind::EnergySignDetector)
      return {Outcome::Plus, Outcome::Minus};
    return {Outcome::Detected, Outcome::NotDetected};
  }
};

/// Factors of one layer; canonical order is ascending device id.
using MeasurementLayer = std::vector<MeasurementFactor>;

enum class FactorOrder { Ascending, Descending };

inline MeasurementLayer sorted_layer(MeasurementLayer layer, FactorOrder order) {
  std::sort(layer.begin(), layer.end(),
            [](const MeasurementFactor& a, const MeasurementFactor& b) {
              return a.device_id < b.device_id;
            });
  if (order == FactorOrder::Descending) std::reverse(layer.begin(), layer.end());
  return layer;
}

struct ProbabilityTable {
  int layer_index{0};
  std::vector<std::pair<OutcomeTuple, double>> entries;

  double total() const {
    double t = 0.0;
    for (const auto& [_, p] : entries) t += p;
    return t;
  }
};

/// Composite operator of one layer outcome: product of base projectors /
/// complements, factors applied to the state in canonical order (first
/// factor first).
struct LayerOperator {
  std::vector<ProjectorMatrix> factors;

  KGState apply(const KGState& s) const {
    KGState out = s;
    for (const auto& f : factors) out = f.apply(out);
    return out;
  }
  KGState apply_adjoint(const KGState& s) const {
    KGState out = s;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it)
      out = it->apply_adjoint(out);
    return out;
  }
  LinearOp as_linear_op() const {
    LayerOperator self = *this;
    return LinearOp{
        [self](const KGState& v) { return self.apply(v); },
        [self](const KGState& v) { return self.apply_adjoint(v); },
    };
  }
};

inline LayerOperator layer_operator(const MeasurementLayer& layer,
                                    const OutcomeTuple& outcome,
                                    FactorOrder order = FactorOrder::Ascending) {
  const MeasurementLayer sorted = sorted_layer(layer, order);
  LayerOperator op;
  for (const auto& f : sorted) {
    auto it = outcome.find(f.device_id);
    if (it == outcome.end())
      throw std::invalid_argument("outcome tuple is missing device " + f.device_id);
    const auto [base, other] = f.outcomes();
    if (it->second == base)
      op.factors.push_back(f.projector);
    else if (it->second == other)
      op.factors.push_back(f.projector.complement());
    else
      throw std::invalid_argument("outcome kind does not match device " + f.device_id);
  }
  return op;
}

/// Maximum pairwise commutator norm among the layer's base projectors: the
/// residual order-ambiguity of the "simultaneous" measurements (a
/// complement only flips the commutator's sign).
inline double layer_order_ambiguity(const MeasurementLayer& layer) {
  double worst = 0.0;
  for (size_t i = 0; i < layer.size(); ++i)
    for (size_t j = i + 1; j < layer.size(); ++j)
      worst = std::max(worst,
                       commutator_norm(layer[i].projector, layer[j].projector));
  return worst;
}

inline constexpr double kBranchPruneThreshold = 1e-12;
inline constexpr int kMaxLayerSize = 16;
inline constexpr std::uint64_t kMaxBranchCount = 4096;

namespace detail {

/// A (partial) branch of the sequential reduction chain within one layer.
struct LayerBranch {
  OutcomeTuple outcome;
  double probability{1.0};  // product of stepwise linear Born values
  double raw_norm{1.0};     // |Op psi| accumulated over the applied factors
  KGState state;            // normalized current state
  bool dead{false};         // pruned: probability forced to exactly 0
};

/// Expand one layer into its 2^k outcome branches. Each factor contributes
/// the linear Born value <s|F|s> as the conditional probability and the
/// normalized projection F s / |F s| as the next state; the two branches of
/// a device telescope exactly (F + complement = identity on states), so the
/// branch probabilities of the layer sum to 1 up to rounding.
inline std::vector<LayerBranch> expand_layer(const KGState& state,
                                             const MeasurementLayer& layer,
                                             FactorOrder order) {
  if (static_cast<int>(layer.size()) > kMaxLayerSize)
    throw GuardError("layer size exceeds the combinatorial guard (16)");
  const MeasurementLayer sorted = sorted_layer(layer, order);
  std::vector<LayerBranch> frontier{LayerBranch{{}, 1.0, 1.0, state, false}};
  for (const auto& factor : sorted) {
    std::vector<LayerBranch> next;
    next.reserve(frontier.size() * 2);
    const auto [base, other] = factor.outcomes();
    for (const auto& node : frontier) {
      if (node.dead) {
        for (Outcome o : {base, other}) {
          LayerBranch leaf = node;
          leaf.outcome[factor.device_id] = o;
          next.push_back(std::move(leaf));
        }
        continue;
      }
      for (Outcome o : {base, other}) {
        const ProjectorMatrix proj =
            o == base ? factor.projector : factor.projector.complement();
        const KGState projected = proj.apply(node.state);
        const double cond = std::clamp(std::real(inner(node.state, projected)),
                                       0.0, 1.0);
        const double pnorm = norm(projected);
        LayerBranch leaf;
        leaf.outcome = node.outcome;
        leaf.outcome[factor.device_id] = o;
        leaf.probability = node.probability * cond;
        leaf.raw_norm = node.raw_norm * pnorm;
        if (leaf.probability < kBranchPruneThreshold || pnorm < 1e-140) {
          leaf.probability = 0.0;
          leaf.dead = true;
          leaf.state = node.state;
        } else {
          leaf.state = KGState{state.grid, projected.plus / pnorm,
                               projected.minus / pnorm};
        }
        next.push_back(std::move(leaf));
      }
    }
    frontier = std::move(next);
  }
  return frontier;
}

}  // namespace detail

/// All outcome tuples of one layer with their probabilities for the given
/// (normalized) state.
inline ProbabilityTable enumerate_layer(const KGState& state,
                                        const MeasurementLayer& layer,
                                        int layer_index = 1,
                                        FactorOrder order = FactorOrder::Ascending) {
  ProbabilityTable table;
  table.layer_index = layer_index;
  for (const auto& b : detail::expand_layer(state, layer, order))
    table.entries.emplace_back(b.outcome, b.probability);
  return table;
}

/// Normalized projection onto one layer outcome: normalize(Op * state).
/// Throws NullOutcomeError on a branch of probability <= 1e-12.
inline KGState collapse(const KGState& state, const MeasurementLayer& layer,
                        const OutcomeTuple& outcome,
                        double* probability_out = nullptr,
                        double* raw_norm_out = nullptr) {
  for (const auto& b : detail::expand_layer(state, layer, FactorOrder::Ascending)) {
    if (b.outcome != outcome) continue;
    if (b.dead || b.probability <= kBranchPruneThreshold)
      throw NullOutcomeError("collapse onto a zero-probability branch");
    if (probability_out) *probability_out = b.probability;
    if (raw_norm_out) *raw_norm_out = b.raw_norm;
    return b.state;
  }
  throw std::invalid_argument("outcome tuple does not match the layer");
}

struct LayerRecord {
  int layer_index{1};
  OutcomeTuple outcome;
  double probability{1.0};             // conditional on the path so far
  double pre_normalization_norm{1.0};  // |Op psi| before renormalization
};

/// One full history: per-layer records in layer order; `probability` is the
/// product of the per-layer conditionals.
struct RunPath {
  std::vector<LayerRecord> layers;
  double probability{1.0};
};

enum class RunMode { Enumerate, Sample };

struct RunResult {
  RunMode mode{RunMode::Enumerate};
  std::optional<std::uint64_t> seed;
  std::vector<RunPath> paths;

  double total_probability() const {
    double t = 0.0;
    for (const auto& p : paths) t += p.probability;
    return t;
  }
};

inline std::uint64_t branch_count(const std::vector<MeasurementLayer>& layers) {
  std::uint64_t count = 1;
  for (const auto& l : layers) {
    if (static_cast<int>(l.size()) > kMaxLayerSize)
      throw GuardError("layer size exceeds the combinatorial guard (16)");
    for (size_t i = 0; i < l.size(); ++i) {
      count *= 2;
      if (count > kMaxBranchCount)
        throw GuardError("enumeration tree exceeds the branch guard (4096)");
    }
  }
  return count;
}

namespace detail {

inline void enumerate_paths(const KGState& state,
                            const std::vector<MeasurementLayer>& layers,
                            size_t layer_pos, const RunPath& prefix,
                            std::vector<RunPath>& out, FactorOrder order) {
  if (layer_pos == layers.size()) {
    out.push_back(prefix);
    return;
  }
  for (const auto& b : expand_layer(state, layers[layer_pos], order)) {
    if (b.dead || b.probability < kBranchPruneThreshold) continue;
    RunPath path = prefix;
    path.layers.push_back({static_cast<int>(layer_pos) + 1, b.outcome,
                           b.probability, b.raw_norm});
    path.probability *= b.probability;
    enumerate_paths(b.state, layers, layer_pos + 1, path, out, order);
  }
}

}  // namespace detail

/// Full branching tree over all layers. Path probabilities sum to 1 up to
/// rounding plus pruned mass (bounded by 4096 * 1e-12).
inline RunResult run_enumerate(const KGState& initial,
                               const std::vector<MeasurementLayer>& layers,
                               FactorOrder order = FactorOrder::Ascending) {
  branch_count(layers);  // combinatorial guard
  RunResult result;
  result.mode = RunMode::Enumerate;
  detail::enumerate_paths(initial, layers, 0, RunPath{}, result.paths, order);
  return result;
}

/// Draw one history from the enumerated distribution; the seeded generator
/// makes the draw deterministic (one uniform selects the leaf).
inline RunResult run_sample(const KGState& initial,
                            const std::vector<MeasurementLayer>& layers,
                            std::uint64_t seed) {
  const RunResult all = run_enumerate(initial, layers);
  std::uint64_t rng = seed;
  const double u = detail::uniform01(rng) * all.total_probability();
  double acc = 0.0;
  const RunPath* chosen = &all.paths.back();
  for (const auto& p : all.paths) {
    acc += p.probability;
    if (u < acc) {
      chosen = &p;
      break;
    }
  }
  RunResult result;
  result.mode = RunMode::Sample;
  result.seed = seed;
  result.paths = {*chosen};
  return result;
}

/// P(target outcome | given partial outcomes on earlier layers), as a ratio
/// of summed path probabilities from the enumerated tree.
inline double conditional_probability(const RunResult& tree,
                                      const OutcomeTuple& given,
                                      const std::string& target_id,
                                      Outcome target_outcome) {
  double p_given = 0.0, p_joint = 0.0;
  for (const auto& path : tree.paths) {
    OutcomeTuple flat;
    for (const auto& layer : path.layers)
      for (const auto& [id, o] : layer.outcome) flat[id] = o;
    bool matches = true;
    for (const auto& [id, o] : given) {
      auto it = flat.find(id);
      if (it == flat.end() || it->second != o) {
        matches = false;
        break;
      }
    }
    if (!matches) continue;
    p_given += path.probability;
    auto it = flat.find(target_id);
    if (it != flat.end() && it->second == target_outcome)
      p_joint += path.probability;
  }
  if (p_given <= 0.0) throw NullOutcomeError("conditioning on a null branch");
  return p_joint / p_given;
}

}  // namespace rqm
