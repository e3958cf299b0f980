#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "erlab/degeneracy.hpp"
#include "erlab/dimlab.hpp"
#include "erlab/foldgeom.hpp"
#include "erlab/number.hpp"
#include "erlab/specialform.hpp"
#include "erlab/thresholds.hpp"

namespace erlab {

using json = nlohmann::ordered_json;

/// Exact rationals are objects {num, den}; numbers too wide for 64 bits are
/// written as decimal strings.
inline json rational_json(const Rational& q) {
  if (auto s = q.small()) return {{"num", s->first}, {"den", s->second}};
  return {{"num", q.num().str()}, {"den", q.den().str()}};
}

/// Non-finite doubles become null.
inline json real_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json reals_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(real_json(x));
  return a;
}

inline json box_json(const Box& b) {
  json a = json::array();
  for (const auto& i : b) a.push_back({real_json(i.lo), real_json(i.hi)});
  return a;
}

inline json to_json(const ThresholdReport& r) {
  json j;
  j["theorem"] = r.name();
  json p = json::object();
  for (const auto& [k, v] : r.params) p[k] = rational_json(v);
  j["params"] = p;
  j["expansion_offset"] = r.expansion_offset ? rational_json(*r.expansion_offset) : json(nullptr);
  j["expansion"] = r.expansion_offset ? json(r.expansion_form()) : json(nullptr);
  j["measure"] = r.measure ? rational_json(*r.measure) : json(nullptr);
  j["interior"] = r.interior ? rational_json(*r.interior) : json(nullptr);
  j["notes"] = r.notes;
  return j;
}

inline json to_json(const CertificateStatus& c) {
  json j;
  j["name"] = c.name;
  j["expr"] = to_string(c.expr);
  j["status"] = to_string(c.status);
  j["symbolic"] = c.symbolic;
  j["witness"] = reals_json(c.witness);
  j["witness_value"] = real_json(c.witness_value);
  if (!c.zero_point.empty()) j["zero_point"] = reals_json(c.zero_point);
  j["scale"] = real_json(c.scale);
  return j;
}

inline json to_json(const DegeneracyReport& r) {
  json j;
  j["classification"] = to_string(r.classification);
  j["arity"] = r.arity;
  j["reason"] = r.reason;
  j["witness_point"] = reals_json(r.witness_point);
  j["witness_box"] = r.witness_box ? box_json(*r.witness_box) : json(nullptr);
  if (r.arity == 3) j["i0"] = r.i0;
  json certs = json::array();
  for (const auto& c : r.certificates) certs.push_back(to_json(c));
  j["certificates"] = certs;
  j["notes"] = r.notes;
  return j;
}

inline json to_json(const FoldConfig& c) {
  return {{"x", real_json(c.x)}, {"yp", real_json(c.yp)}, {"xp", real_json(c.xp)}, {"theta", real_json(c.theta)}};
}

inline json to_json(const FoldReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["reason"] = r.reason;
  j["base"] = {real_json(r.x0), real_json(r.y0)};
  j["theta"] = real_json(r.theta);
  j["fx"] = real_json(r.fx);
  j["fy"] = real_json(r.fy);
  j["fxy"] = real_json(r.fxy);
  j["kappa"] = real_json(r.kappa);
  j["det_residual"] = real_json(r.det_residual);
  j["det_residual_fd"] = real_json(r.det_residual_fd);
  j["probe"] = to_json(r.probe);
  j["det_probe"] = real_json(r.det_probe);
  j["det_probe_fd"] = real_json(r.det_probe_fd);
  j["det_agreement"] = real_json(r.det_agreement);
  j["dx_det_fd"] = real_json(r.dx_det_fd);
  j["dx_det_predicted"] = real_json(r.dx_det_predicted);
  j["dx_rel_error"] = real_json(r.dx_rel_error);
  j["transversality"] = real_json(r.transversality);
  j["kernel_predicted"] = {r.kernel_predicted[0], r.kernel_predicted[1], r.kernel_predicted[2], r.kernel_predicted[3]};
  j["kernel_numeric"] = {r.kernel_numeric[0], r.kernel_numeric[1], r.kernel_numeric[2], r.kernel_numeric[3]};
  j["kernel_error"] = real_json(r.kernel_error);
  return j;
}

inline json component_summary(const Component& c) {
  json j;
  j["name"] = c.name;
  if (!c.var.empty()) j["var"] = c.var;
  if (c.fn.size() > 0) {
    j["nodes"] = c.fn.size();
    j["domain"] = {real_json(c.fn.lo()), real_json(c.fn.hi())};
    j["range"] = {real_json(c.fn.min_value()), real_json(c.fn.max_value())};
  }
  return j;
}

inline json to_json(const RecoveryResult& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["message"] = r.message;
  j["vars"] = r.vars;
  j["base"] = reals_json(r.base);
  json inner = json::array();
  for (const auto& c : r.inner) inner.push_back(component_summary(c));
  j["inner"] = inner;
  j["outer"] = component_summary(r.outer);
  j["separability"] = real_json(r.separability);
  if (!r.separability_point.empty()) j["separability_point"] = reals_json(r.separability_point);
  j["residual"] = real_json(r.residual);
  j["relative_residual"] = real_json(r.relative_residual);
  if (!r.worst_point.empty()) j["worst_point"] = reals_json(r.worst_point);
  j["verify_grid"] = r.verify_grid;
  return j;
}

inline json to_json(const Ladder& l) {
  json a = json::array();
  for (const auto& r : l) a.push_back({{"delta", real_json(r.delta)}, {"count", r.count}});
  return a;
}

inline json to_json(const DimEstimate& d) {
  json j;
  j["slope"] = real_json(d.slope);
  j["intercept"] = real_json(d.intercept);
  j["r2"] = real_json(d.r2);
  j["degenerate"] = d.degenerate;
  j["window"] = {real_json(d.ladder[d.window_begin].delta), real_json(d.ladder[d.window_end - 1].delta)};
  j["rungs"] = d.rungs();
  j["ladder"] = to_json(d.ladder);
  if (!d.note.empty()) j["note"] = d.note;
  return j;
}

inline json to_json(const ExperimentReport& r) {
  json j;
  j["pass"] = r.pass;
  j["slack"] = real_json(r.slack);
  json inputs = json::array();
  for (const auto& in : r.inputs) {
    json i;
    i["spec"] = in.provenance;
    i["points"] = in.points;
    i["declared_dimension"] = real_json(in.declared_dimension);
    i["estimate"] = in.estimate ? to_json(*in.estimate) : json(nullptr);
    if (!in.note.empty()) i["note"] = in.note;
    inputs.push_back(i);
  }
  j["inputs"] = inputs;
  j["declared_sum"] = real_json(r.declared_sum_value);
  j["thresholds"] = to_json(r.thresholds);
  j["lower_bound"] = r.lower_bound ? rational_json(*r.lower_bound) : json(nullptr);
  j["image"] = to_json(r.image);
  json cov = json::array();
  for (const auto& [d, f] : r.covered) cov.push_back({{"delta", real_json(d)}, {"fraction", real_json(f)}});
  j["covered_fraction"] = cov;
  j["population"] = r.population;
  j["tuples"] = r.tuples;
  j["out_of_range"] = r.out_of_range;
  j["range"] = {real_json(r.range_lo), real_json(r.range_hi)};
  j["delta_min"] = real_json(r.delta_min);
  j["warnings"] = r.warnings;
  j["note"] = "box-counting dimension stands in for Hausdorff dimension; box >= Hausdorff, so lower bounds "
              "remain one-sided checks up to estimator noise";
  return j;
}

inline json to_json(const SurfaceCheck& s) {
  return {{"verdict", s.tangent ? "Tangent" : "Nondegenerate"}, {"det", real_json(s.det)}};
}

}  // namespace erlab
