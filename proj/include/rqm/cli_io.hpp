#pragma once

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rqm/errors.hpp"
#include "rqm/experiments.hpp"
#include "rqm/version.hpp"

namespace rqm {

using Json = nlohmann::ordered_json;

// Experiment files are JSON. Dimensional keys follow the unit convention of
// the suffixes: *_over_m values are multiples of the mass; positions, times
// and half-lengths are in Compton wavelengths (1/m). Every field is
// required and unknown keys are rejected; defaults exist only in the canned
// scenario generators.

namespace detail {

inline void require_keys(const Json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ParseError("expected an object at " + where, where);
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ParseError("unknown key '" + key + "' in " + where, where + "/" + key);
  for (const auto& key : allowed)
    if (!obj.contains(key))
      throw ParseError("missing key '" + key + "' in " + where, where + "/" + key);
}

inline double get_number(const Json& obj, const std::string& where,
                         const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number())
    throw ParseError("key '" + key + "' in " + where + " must be a number",
                     where + "/" + key);
  return v.get<double>();
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

struct ParsedExperimentFile {
  double mass{1.0};
  MomentumGrid grid;
  PacketSpec packet;
  Device preparer;
  std::vector<Device> devices;
  Json echo;  // normalized re-serialization of the accepted input
};

inline ParsedExperimentFile parse_experiment_json(const Json& root) {
  detail::require_keys(root, "$", {"mass", "grid", "packet", "preparer", "devices"});
  ParsedExperimentFile out;

  out.mass = detail::get_number(root, "$", "mass");
  if (!(out.mass > 0.0)) throw ParseError("mass must be positive", "$/mass");
  const double lc = 1.0 / out.mass;

  const Json& grid = root.at("grid");
  detail::require_keys(grid, "$/grid", {"n", "p_max_over_m"});
  if (!grid.at("n").is_number_integer())
    throw ParseError("grid.n must be an integer", "$/grid/n");
  const int n = grid.at("n").get<int>();
  const double pmax_rel = detail::get_number(grid, "$/grid", "p_max_over_m");
  if (n < 2) throw ParseError("grid.n must be >= 2", "$/grid/n");
  if (!(pmax_rel > 0.0))
    throw ParseError("grid.p_max_over_m must be positive", "$/grid/p_max_over_m");
  out.grid = MomentumGrid{n, pmax_rel * out.mass, out.mass};

  const Json& packet = root.at("packet");
  detail::require_keys(packet, "$/packet",
                       {"x0", "p0_over_m", "sigma_p_over_m", "epsilon"});
  out.packet.x0 = detail::get_number(packet, "$/packet", "x0") * lc;
  out.packet.p0 = detail::get_number(packet, "$/packet", "p0_over_m") * out.mass;
  out.packet.sigma_p =
      detail::get_number(packet, "$/packet", "sigma_p_over_m") * out.mass;
  if (!(out.packet.sigma_p > 0.0))
    throw ParseError("packet.sigma_p_over_m must be positive",
                     "$/packet/sigma_p_over_m");
  const double eps = detail::get_number(packet, "$/packet", "epsilon");
  if (eps != 1.0 && eps != -1.0)
    throw ParseError("packet.epsilon must be +1 or -1", "$/packet/epsilon");
  out.packet.sign = eps > 0 ? EnergySign::Plus : EnergySign::Minus;

  const Json& prep = root.at("preparer");
  detail::require_keys(prep, "$/preparer",
                       {"center_t", "center_x", "half_length", "rapidity"});
  out.preparer.id = "a0";
  out.preparer.kind = DeviceKind::Preparer;
  out.preparer.segment.center = {detail::get_number(prep, "$/preparer", "center_t") * lc,
                                 detail::get_number(prep, "$/preparer", "center_x") * lc};
  out.preparer.segment.half_length =
      detail::get_number(prep, "$/preparer", "half_length") * lc;
  out.preparer.segment.rapidity.chi = detail::get_number(prep, "$/preparer", "rapidity");
  out.preparer.proper_time = 0.0;
  if (!(out.preparer.segment.half_length > 0.0))
    throw ParseError("preparer.half_length must be positive", "$/preparer/half_length");

  const Json& devices = root.at("devices");
  if (!devices.is_array() || devices.empty())
    throw ParseError("devices must be a non-empty array", "$/devices");
  int idx = 0;
  for (const auto& dev : devices) {
    const std::string where = "$/devices/" + std::to_string(idx++);
    detail::require_keys(dev, where,
                         {"id", "kind", "center_t", "center_x", "half_length",
                          "rapidity", "proper_time"});
    Device d;
    if (!dev.at("id").is_string())
      throw ParseError("device id must be a string", where + "/id");
    d.id = dev.at("id").get<std::string>();
    if (d.id.empty()) throw ParseError("device id must not be empty", where + "/id");
    const std::string kind = dev.at("kind").is_string()
                                 ? dev.at("kind").get<std::string>()
                                 : throw ParseError("device kind must be a string",
                                                    where + "/kind");
    if (kind == "position")
      d.kind = DeviceKind::PositionDetector;
    else if (kind == "energy_sign")
      d.kind = DeviceKind::EnergySignDetector;
    else
      throw ParseError("device kind must be 'position' or 'energy_sign'",
                       where + "/kind");
    d.segment.center = {detail::get_number(dev, where, "center_t") * lc,
                        detail::get_number(dev, where, "center_x") * lc};
    d.segment.half_length = detail::get_number(dev, where, "half_length") * lc;
    if (!(d.segment.half_length > 0.0))
      throw ParseError("device half_length must be positive", where + "/half_length");
    d.segment.rapidity.chi = detail::get_number(dev, where, "rapidity");
    d.proper_time = detail::get_number(dev, where, "proper_time") * lc;
    out.devices.push_back(std::move(d));
  }

  out.echo = root;
  return out;
}

inline ParsedExperimentFile parse_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open experiment file: " + path, path);
  Json root;
  try {
    root = Json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ParseError(std::string("JSON syntax error: ") + err.what(),
                     "byte " + std::to_string(err.byte));
  }
  return parse_experiment_json(root);
}

/// Parse and validate. Physics-level rejections come back as the report;
/// I/O, syntax and schema problems throw ParseError.
inline std::variant<Experiment, ValidationReport> parse(const std::string& path) {
  const ParsedExperimentFile f = parse_experiment_file(path);
  return try_make_experiment(f.grid, f.packet, f.preparer, f.devices);
}

inline Json to_json(const ValidationReport& report) {
  Json out;
  out["ok"] = report.ok();
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    Json item;
    item["kind"] = to_string(v.kind);
    item["devices"] = v.device_ids;
    violations.push_back(item);
  }
  out["violations"] = violations;
  out["warnings"] = report.warnings;
  return out;
}

inline Json to_json(const LayerDecomposition& layers) {
  Json out = Json::array();
  for (const auto& l : layers.layers) out.push_back(l);
  return out;
}

inline Json to_json(const OutcomeTuple& outcome) {
  Json out;
  for (const auto& [id, o] : outcome) out[id] = to_string(o);
  return out;
}

inline Json to_json(const RunPath& path) {
  Json out;
  Json layers = Json::array();
  for (const auto& rec : path.layers) {
    Json item;
    item["layer"] = rec.layer_index;
    item["outcomes"] = to_json(rec.outcome);
    item["conditional_probability"] = rec.probability;
    item["pre_normalization_norm"] = rec.pre_normalization_norm;
    layers.push_back(item);
  }
  out["layers"] = layers;
  out["probability"] = path.probability;
  return out;
}

inline Json tool_stamp() {
  Json t;
  t["name"] = kToolName;
  t["version"] = kToolVersion;
  return t;
}

/// Machine-readable run report; byte-for-byte deterministic for identical
/// inputs and seed.
inline Json run_report(const ParsedExperimentFile& input, const Experiment& e,
                       const RunResult& result) {
  Json out;
  out["tool"] = tool_stamp();
  out["mode"] = result.mode == RunMode::Enumerate ? "enumerate" : "sample";
  if (result.seed)
    out["seed"] = *result.seed;
  else
    out["seed"] = nullptr;
  out["input"] = input.echo;
  out["frame_rapidity"] = e.description_frame.chi;
  out["layers"] = to_json(e.layers);

  const auto layers = measurement_layers(e);
  if (result.mode == RunMode::Enumerate) {
    Json paths = Json::array();
    for (const auto& p : result.paths) paths.push_back(to_json(p));
    out["paths"] = paths;
    out["total_probability"] = result.total_probability();
    if (!layers.empty()) {
      Json table = Json::array();
      for (const auto& [outcome, prob] :
           enumerate_layer(e.initial, layers.front(), 1).entries) {
        Json row;
        row["outcomes"] = to_json(outcome);
        row["probability"] = prob;
        table.push_back(row);
      }
      out["first_layer_table"] = table;
    }
  } else {
    out["sampled_path"] = to_json(result.paths.front());
  }

  Json diag;
  diag["packet_tail_mass"] = e.packet_diagnostics.tail_mass;
  diag["packet_cutoff_warning"] = e.packet_diagnostics.cutoff_warning;
  diag["boost_norm_drift"] = e.boost_diagnostics.norm_drift;
  Json idem = Json::array();
  for (const auto& layer : layers) {
    for (const auto& f : layer) {
      const KGState once = f.projector.apply(e.initial);
      const KGState twice = f.projector.apply(once);
      Json item;
      item["device"] = f.device_id;
      item["idempotence_residual"] =
          norm(KGState{e.grid, twice.plus - once.plus, twice.minus - once.minus});
      idem.push_back(item);
    }
  }
  diag["idempotence_residuals"] = idem;
  Json comm = Json::array();
  for (size_t i = 0; i < layers.size(); ++i) {
    Json item;
    item["layer"] = static_cast<int>(i) + 1;
    item["max_pairwise_commutator_norm"] = layer_order_ambiguity(layers[i]);
    comm.push_back(item);
  }
  diag["layer_commutator_norms"] = comm;
  out["diagnostics"] = diag;
  return out;
}

inline Json to_json(const CovarianceReport& report) {
  Json out;
  out["tool"] = tool_stamp();
  out["rapidity"] = report.chi;
  out["outcome_sets_match"] = report.outcome_sets_match;
  out["max_abs_deviation"] = report.max_abs_deviation;
  out["max_rel_deviation"] = report.max_rel_deviation;
  out["boost_norm_drift"] = report.boost_norm_drift;
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json item;
    item["outcomes"] = to_json(row.outcomes);
    item["lab"] = row.lab;
    item["boosted"] = row.boosted;
    item["abs_deviation"] = std::abs(row.lab - row.boosted);
    const double scale = std::max(row.lab, row.boosted);
    item["rel_deviation"] = scale > 0.0 ? std::abs(row.lab - row.boosted) / scale : 0.0;
    rows.push_back(item);
  }
  out["rows"] = rows;
  return out;
}

inline std::string to_csv(const std::vector<std::pair<double, double>>& curve) {
  std::string out = "separation_compton,commutator_norm\n";
  for (const auto& [d, v] : curve)
    out += detail::format_double(d) + "," + detail::format_double(v) + "\n";
  return out;
}

inline std::string to_csv(const std::vector<DensitySample>& samples) {
  std::string out = "x,density\n";
  for (const auto& s : samples)
    out += detail::format_double(s.x) + "," + detail::format_double(s.density) + "\n";
  return out;
}

}  // namespace rqm
