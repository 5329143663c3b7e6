#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rqm/errors.hpp"
#include "rqm/spacetime.hpp"

namespace rqm {

enum class DeviceKind { Preparer, PositionDetector, EnergySignDetector };

/// A measurement device: where it sits (segment), how it moves (the segment's
/// rapidity), and what its own clock reads when it fires.
struct Device {
  std::string id;
  DeviceKind kind{DeviceKind::PositionDetector};
  SpacelikeSegment segment;
  double proper_time{0.0};  // clock reading in the device rest frame
};

/// Precedence DAG over devices: edge a -> b iff causal_relation(a, b) is
/// Precedes. Nodes are kept sorted by id so downstream layering is
/// independent of input order.
struct PrecedenceDag {
  std::vector<std::string> nodes;  // sorted ids, preparer included
  std::string preparer_id;         // empty if the device set has none
  std::vector<std::pair<std::string, std::string>> edges;  // sorted pairs
  std::vector<std::pair<std::string, std::string>> partial_pairs;

  std::vector<std::string> predecessors(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& [a, b] : edges)
      if (b == id) out.push_back(a);
    return out;
  }
};

enum class ViolationKind { PartialOverlap, NotInPreparerCone, DuplicateId, NoPreparer };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::PartialOverlap: return "PartialOverlap";
    case ViolationKind::NotInPreparerCone: return "NotInPreparerCone";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::NoPreparer: return "NoPreparer";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::vector<std::string> device_ids;
};

/// Outcome of validating an arrangement against the assumptions the layer
/// decomposition relies on. `warnings` are informational only (within-layer
/// x-range overlaps) and do not block layering.
struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

/// Intrinsic causal layers S^1..S^k; the preparer sits at layer 0 and is not
/// listed. layer_index maps every device id (preparer included, as 0).
struct LayerDecomposition {
  std::vector<std::vector<std::string>> layers;
  std::map<std::string, int> layer_index;

  bool operator==(const LayerDecomposition& o) const { return layers == o.layers; }
};

inline PrecedenceDag build_precedence(const std::vector<Device>& devices) {
  PrecedenceDag dag;
  {
    std::set<std::string> seen;
    for (const auto& d : devices) {
      if (!seen.insert(d.id).second)
        throw ValidationError("duplicate device id: " + d.id);
      dag.nodes.push_back(d.id);
      if (d.kind == DeviceKind::Preparer && dag.preparer_id.empty())
        dag.preparer_id = d.id;
    }
  }
  std::sort(dag.nodes.begin(), dag.nodes.end());

  std::vector<const Device*> byid(devices.size());
  {
    std::map<std::string, const Device*> m;
    for (const auto& d : devices) m[d.id] = &d;
    for (size_t i = 0; i < dag.nodes.size(); ++i) byid[i] = m[dag.nodes[i]];
  }
  for (size_t i = 0; i < byid.size(); ++i) {
    for (size_t j = 0; j < byid.size(); ++j) {
      if (i == j) continue;
      const auto rel = causal_relation(byid[i]->segment, byid[j]->segment);
      if (rel == CausalRelation::Precedes)
        dag.edges.emplace_back(byid[i]->id, byid[j]->id);
      else if (rel == CausalRelation::Partial && i < j)
        dag.partial_pairs.emplace_back(byid[i]->id, byid[j]->id);
    }
  }
  std::sort(dag.edges.begin(), dag.edges.end());
  return dag;
}

inline ValidationReport validate(const std::vector<Device>& devices) {
  ValidationReport report;

  std::set<std::string> seen, dups;
  for (const auto& d : devices)
    if (!seen.insert(d.id).second) dups.insert(d.id);
  for (const auto& id : dups)
    report.violations.push_back({ViolationKind::DuplicateId, {id}});
  if (!dups.empty()) return report;  // ids must be unique before anything else

  std::vector<std::string> preparers;
  for (const auto& d : devices)
    if (d.kind == DeviceKind::Preparer) preparers.push_back(d.id);
  if (preparers.size() != 1) {
    // NoPreparer also covers the ill-formed multi-preparer arrangement:
    // there is no unique initial condition either way.
    report.violations.push_back({ViolationKind::NoPreparer, preparers});
    return report;
  }

  const auto dag = build_precedence(devices);
  for (const auto& [a, b] : dag.partial_pairs)
    report.violations.push_back({ViolationKind::PartialOverlap, {a, b}});

  std::set<std::string> preceded_by_preparer;
  for (const auto& [a, b] : dag.edges)
    if (a == dag.preparer_id) preceded_by_preparer.insert(b);
  for (const auto& id : dag.nodes)
    if (id != dag.preparer_id && !preceded_by_preparer.count(id))
      report.violations.push_back({ViolationKind::NotInPreparerCone, {id}});

  // Same-layer x-range overlaps are legal geometry but weaken projector
  // commutativity; flag them without rejecting.
  if (report.ok()) {
    std::map<std::string, const Device*> m;
    for (const auto& d : devices) m[d.id] = &d;
    for (size_t i = 0; i < dag.nodes.size(); ++i) {
      for (size_t j = i + 1; j < dag.nodes.size(); ++j) {
        const Device* a = m[dag.nodes[i]];
        const Device* b = m[dag.nodes[j]];
        if (a->kind == DeviceKind::Preparer || b->kind == DeviceKind::Preparer)
          continue;
        if (causal_relation(a->segment, b->segment) != CausalRelation::Spacelike)
          continue;
        const auto [alo, ahi] = segment_endpoints(a->segment);
        const auto [blo, bhi] = segment_endpoints(b->segment);
        if (std::max(alo.x, blo.x) < std::min(ahi.x, bhi.x))
          report.warnings.push_back("x-ranges of spacelike pair overlap: " +
                                    a->id + ", " + b->id);
      }
    }
  }
  return report;
}

/// Longest-path layering from the preparer: layer(d) = 1 + max over
/// predecessor layers with layer(preparer) = 0. Equivalent to the iterative
/// definition "S^i = devices preceded only by S^j (j<i) and the preparer",
/// and independent of input order since nodes and edges are sorted.
inline LayerDecomposition layer(const PrecedenceDag& dag) {
  if (dag.preparer_id.empty())
    throw ValidationError("layering requires a preparer device");
  if (!dag.partial_pairs.empty())
    throw ValidationError("layering rejects arrangements with Partial overlaps");

  std::map<std::string, std::vector<std::string>> preds;
  std::set<std::string> in_preparer_cone;
  for (const auto& [a, b] : dag.edges) {
    preds[b].push_back(a);
    if (a == dag.preparer_id) in_preparer_cone.insert(b);
  }
  for (const auto& id : dag.nodes)
    if (id != dag.preparer_id && !in_preparer_cone.count(id))
      throw ValidationError("device outside the preparer cone: " + id);

  LayerDecomposition out;
  out.layer_index[dag.preparer_id] = 0;
  // Precedence is a strict partial order (Partial rejected), so repeated
  // relaxation over sorted nodes terminates with the longest-path levels.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& id : dag.nodes) {
      if (id == dag.preparer_id) continue;
      int lv = 1;
      bool ready = true;
      for (const auto& p : preds[id]) {
        auto it = out.layer_index.find(p);
        if (it == out.layer_index.end()) {
          ready = false;
          break;
        }
        lv = std::max(lv, it->second + 1);
      }
      if (!ready) continue;
      auto it = out.layer_index.find(id);
      if (it == out.layer_index.end() || it->second != lv) {
        out.layer_index[id] = lv;
        changed = true;
      }
    }
  }

  int depth = 0;
  for (const auto& [id, lv] : out.layer_index) depth = std::max(depth, lv);
  out.layers.assign(depth, {});
  for (const auto& [id, lv] : out.layer_index)
    if (lv > 0) out.layers[lv - 1].push_back(id);
  for (auto& l : out.layers) std::sort(l.begin(), l.end());
  return out;
}

inline LayerDecomposition layer(const std::vector<Device>& devices) {
  return layer(build_precedence(devices));
}

}  // namespace rqm
