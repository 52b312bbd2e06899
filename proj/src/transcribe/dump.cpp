/*
 Copyright 2026 The octrans Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <json.hpp>
#include <ostream>

#include "octrans/transcribe/nlp.hpp"

namespace octrans::transcribe {

namespace {

using nlohmann::json;

json range_json(const IndexRange& r) {
  json j;
  j["lo"] = r.lo;
  j["hi"] = r.hi;
  j["endpoints_only"] = r.endpoints;
  return j;
}

json kernel_json(const kernel::Evaluator& ev) {
  json j;
  const auto& g = ev.kernel().graph;
  json roots = json::array();
  for (int r : ev.kernel().roots) roots.push_back(g.to_prefix(r));
  j["roots"] = roots;
  json inputs = json::array();
  for (size_t i = 0; i < g.inputs().size(); ++i) {
    json in;
    in["label"] = g.input_labels()[i];
    in["base"] = g.inputs()[i].base;
    in["stride"] = g.inputs()[i].stride;
    inputs.push_back(in);
  }
  j["inputs"] = inputs;
  j["jac_nnz"] = ev.pattern().jac.size();
  j["hess_nnz"] = ev.pattern().hess.size();
  return j;
}

}  // namespace

void StructuredNlp::dump(std::ostream& os) const {
  json j;
  j["name"] = name;
  j["scheme"] = scheme_name(scheme);
  j["grid_steps"] = N;
  j["nvar"] = layout.nvar;
  j["m_con"] = m_con;
  j["maximize"] = maximize;

  json slabs = json::array();
  for (const auto& s : layout.slabs) {
    json sj;
    sj["decl"] = s.decl;
    sj["kind"] = s.kind == dsl::VarKind::state ? "state" : s.kind == dsl::VarKind::control ? "control" : "variable";
    sj["dim"] = s.dim;
    sj["base"] = s.base;
    sj["nodes"] = s.nodes;
    slabs.push_back(sj);
  }
  j["layout"] = slabs;

  json cons = json::array();
  for (const auto& g : con_groups) {
    json cj;
    cj["label"] = g.label;
    cj["kind"] = g.kind == ConstraintGroup::Kind::dynamics ? "dynamics"
                 : g.kind == ConstraintGroup::Kind::path   ? "path"
                                                           : "boundary";
    cj["range"] = range_json(g.range);
    cj["out_dim"] = g.out_dim;
    cj["row_base"] = g.row_base;
    cj["lower"] = g.lower;
    cj["upper"] = g.upper;
    cj["kernel"] = kernel_json(g.eval);
    cons.push_back(cj);
  }
  j["constraint_groups"] = cons;

  json objs = json::array();
  for (const auto& g : obj_groups) {
    json oj;
    oj["label"] = g.label;
    oj["range"] = range_json(g.range);
    oj["weight"] = g.weight;
    oj["kernel"] = kernel_json(g.eval);
    objs.push_back(oj);
  }
  j["objective_groups"] = objs;

  j["lvar"] = lvar;
  j["uvar"] = uvar;
  j["x_start"] = x_start;

  os << j.dump(2) << "\n";
}

}  // namespace octrans::transcribe
