#pragma once

// JSON serialization for the wire formats: matrices as {"re": [[...]],
// "im": [[...]]} (row-major), TrigPoly as {"d", "n", "omega", "modes": [...]},
// certificates as lists of checked inequalities, class reports, case files,
// and pipeline step records.

#include <json.hpp>

#include "qpr/reduction.hpp"
#include "qpr/resonance.hpp"
#include "qpr/synth.hpp"

namespace qpr::serialization {

using nlohmann::json;

// --- matrices ---------------------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rrow = json::array(), irow = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rrow.push_back(m(i, j).real());
      irow.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.contains("re") || !j.contains("im"))
    throw MalformedInput("matrix: missing re/im fields");
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (!re.is_array() || re.empty() || !re[0].is_array())
    throw MalformedInput("matrix: re must be a 2d array");
  const size_t rows = re.size();
  const size_t cols = re[0].size();
  if (im.size() != rows) throw MalformedInput("matrix: re/im shape mismatch");
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (re[i].size() != cols || im[i].size() != cols)
      throw MalformedInput("matrix: ragged rows");
    for (size_t j = 0; j < cols; ++j)
      m(i, j) = Complex(re[i][j].get<double>(), im[i][j].get<double>());
  }
  return m;
}

// --- trig polynomials ---------------------------------------------------------

/// Schema: {"d": int, "n": int, "omega": [float], "modes": [{"k": [int],
/// "re": [[float]], "im": [[float]]}]}. Modes are emitted in the map's
/// deterministic order; absent modes mean zero.
inline json trigpoly_to_json(const harmonics::TrigPoly& p, const std::vector<double>& omega) {
  json modes = json::array();
  for (const auto& [k, m] : p.modes()) {
    json entry = matrix_to_json(m);
    entry["k"] = k;
    modes.push_back(std::move(entry));
  }
  return json{{"d", p.torus_dimension()},
              {"n", p.matrix_dimension()},
              {"omega", omega},
              {"modes", std::move(modes)}};
}

struct ParsedTrigPoly {
  harmonics::TrigPoly poly;
  std::vector<double> omega;
};

inline ParsedTrigPoly trigpoly_from_json(const json& j) {
  try {
    const int d = j.at("d").get<int>();
    const int n = j.at("n").get<int>();
    ParsedTrigPoly out{harmonics::TrigPoly(d, n), j.at("omega").get<std::vector<double>>()};
    for (const auto& entry : j.at("modes")) {
      const auto k = entry.at("k").get<std::vector<int>>();
      out.poly.set_mode(k, matrix_from_json(entry));
    }
    return out;
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("trigpoly: ") + e.what());
  }
}

// --- checks ---------------------------------------------------------------------

inline json check_to_json(const Check& c) {
  json j{{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}};
  if (c.log_scale) j["log10"] = true;
  if (c.advisory) j["advisory"] = true;
  return j;
}

inline json checklist_to_json(const CheckList& list) {
  json arr = json::array();
  for (const auto& c : list.checks) arr.push_back(check_to_json(c));
  return arr;
}

// --- resonance class reports ------------------------------------------------------

inline json class_report_to_json(const resonance::ClassReport& report) {
  json classes = json::array();
  for (const auto& cls : report.classes) {
    json assignments = json::array();
    for (const auto& asg : cls.assignments) {
      assignments.push_back(json{{"node", asg.node},
                                 {"case", resonance::case_tag_name(asg.tag)},
                                 {"k", asg.k},
                                 {"defect_bound", asg.defect_bound},
                                 {"walk_length", asg.walk_length}});
    }
    classes.push_back(json{{"nodes", cls.nodes},
                           {"odd_loop", cls.odd_loop},
                           {"sigma1", cls.sigma1},
                           {"sigma2", cls.sigma2},
                           {"anchor", cls.anchor},
                           {"witnesses", std::move(assignments)}});
  }
  json nodes = json::array();
  for (const auto& v : report.node_values)
    nodes.push_back(json{{"re", v.real()}, {"im", v.imag()}});
  return json{{"N", report.N},
              {"rho", report.rho},
              {"nodes", std::move(nodes)},
              {"classes", std::move(classes)},
              {"checks", checklist_to_json(report.checks)}};
}

inline json graph_to_json(const resonance::ResonanceGraph& g) {
  json nodes = json::array();
  for (size_t i = 0; i < g.nodes.size(); ++i)
    nodes.push_back(json{{"re", g.nodes[i].real()},
                         {"im", g.nodes[i].imag()},
                         {"multiplicity", g.multiplicities[i]}});
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back(json{{"i", e.i}, {"j", e.j}, {"k", e.witness.k},
                         {"defect", e.witness.defect}});
  return json{{"N", g.N}, {"rho", g.rho}, {"star", g.star},
              {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

// --- cocycles, triples, case files ---------------------------------------------------

inline json cocycle_to_json(const reduction::Cocycle& c) {
  return json{{"omega", c.omega.omega()},
              {"kappa", c.omega.kappa()},
              {"tau", c.omega.tau()},
              {"A", trigpoly_to_json(c.A, c.omega.omega())}};
}

inline reduction::Cocycle cocycle_from_json(const json& j) {
  try {
    harmonics::FrequencyVector fv(j.at("omega").get<std::vector<double>>(),
                                  j.at("kappa").get<double>(), j.at("tau").get<double>());
    auto parsed = trigpoly_from_json(j.at("A"));
    return reduction::Cocycle(std::move(fv), std::move(parsed.poly));
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("cocycle: ") + e.what());
  }
}

inline json triple_to_json(const reduction::ConjugationTriple& t,
                           const std::vector<double>& omega) {
  return json{{"Z", trigpoly_to_json(t.Z, omega)},
              {"Z_inv", trigpoly_to_json(t.Z_inv, omega)},
              {"B", matrix_to_json(t.B)},
              {"F", trigpoly_to_json(t.F, omega)},
              {"residual_norm", t.residual_norm},
              {"inverse_error", t.inverse_error}};
}

inline reduction::ConjugationTriple triple_from_json(const json& j) {
  try {
    reduction::ConjugationTriple t;
    t.Z = trigpoly_from_json(j.at("Z")).poly;
    t.Z_inv = trigpoly_from_json(j.at("Z_inv")).poly;
    t.B = matrix_from_json(j.at("B"));
    t.F = trigpoly_from_json(j.at("F")).poly;
    t.residual_norm = j.value("residual_norm", 0.0);
    t.inverse_error = j.value("inverse_error", 0.0);
    return t;
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("triple: ") + e.what());
  }
}

inline json case_params_to_json(const cli::CaseParams& p) {
  return json{{"N", p.N},     {"rho", p.rho},     {"epsilon", p.epsilon}, {"m", p.m},
              {"r_max", p.r_max}, {"mode", p.mode}, {"seed", p.seed}};
}

inline cli::CaseParams case_params_from_json(const json& j) {
  cli::CaseParams p;
  p.N = j.value("N", 0);
  p.rho = j.value("rho", 0.0);
  p.epsilon = j.value("epsilon", 1e-3);
  p.m = j.value("m", 2);
  p.r_max = j.value("r_max", 3);
  p.mode = j.value("mode", std::string("diagnostic"));
  p.seed = j.value("seed", std::uint64_t{0});
  if (p.mode != "strict" && p.mode != "diagnostic")
    throw MalformedInput("params.mode must be 'strict' or 'diagnostic'");
  return p;
}

inline json case_file_to_json(const cli::CaseFile& cf) {
  json triples = json::array();
  for (const auto& t : cf.triples) triples.push_back(triple_to_json(t, cf.cocycle.omega.omega()));
  return json{{"cocycle", cocycle_to_json(cf.cocycle)},
              {"triples", std::move(triples)},
              {"params", case_params_to_json(cf.params)}};
}

inline cli::CaseFile case_file_from_json(const json& j) {
  try {
    cli::CaseFile cf{cocycle_from_json(j.at("cocycle")), {}, {}};
    for (const auto& tj : j.at("triples")) cf.triples.push_back(triple_from_json(tj));
    if (j.contains("params")) cf.params = case_params_from_json(j.at("params"));
    const int d = cf.cocycle.omega.dimension();
    const int n = cf.cocycle.dimension();
    for (const auto& t : cf.triples) {
      if (t.Z.torus_dimension() != d || t.Z.matrix_dimension() != n ||
          t.B.rows() != n || t.B.cols() != n || t.F.matrix_dimension() != n)
        throw MalformedInput("case file: triple dimensions do not match the cocycle");
    }
    return cf;
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("case file: ") + e.what());
  }
}

// --- pipeline reports -------------------------------------------------------------------

inline json step_record_to_json(const reduction::StepRecord& s) {
  return json{{"step", s.step},
              {"op", s.op},
              {"inequalities", checklist_to_json(s.inequalities)},
              {"residual_before", s.residual_before},
              {"residual_after", s.residual_after}};
}

inline json pipeline_report_to_json(const reduction::PipelineReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(step_record_to_json(s));
  return json{{"steps", std::move(steps)}};
}

}  // namespace qpr::serialization
