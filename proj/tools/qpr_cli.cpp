// Command-line front end: case-file I/O and the pipeline commands.
//
// Exit codes: 0 ok, 2 certificate failure, 3 malformed input,
// 4 hypothesis failure (strict mode).

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "qpr/qpr.hpp"
#include "qpr/serialization.hpp"
#include "qpr/synth.hpp"

namespace {

using namespace qpr;
using nlohmann::json;
namespace ser = qpr::serialization;

constexpr int kExitOk = 0;
constexpr int kExitCertificate = 2;
constexpr int kExitMalformed = 3;
constexpr int kExitHypothesis = 4;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open input file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

void write_output(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << j.dump(2) << "\n";
  }
}

/// Prints failed (non-advisory) checks; returns how many there were.
int summarize_failures(const CheckList& checks, const std::string& context) {
  int failures = 0;
  for (const auto& c : checks.checks) {
    if (!c.pass && !c.advisory) {
      std::cerr << context << ": FAILED " << c.name << " (lhs " << c.lhs << ", rhs " << c.rhs
                << (c.log_scale ? ", log10" : "") << ")\n";
      ++failures;
    }
  }
  return failures;
}

struct CommonFlags {
  std::string mode = "diagnostic";
  std::string out;
  int grid = 0;
  int n_lattice = 0;
  double rho = 0.0;

  bool strict() const { return mode == "strict"; }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--mode", flags.mode, "strict or diagnostic")
      ->check(CLI::IsMember({"strict", "diagnostic"}));
  cmd->add_option("--out", flags.out, "write the JSON report to this file");
  cmd->add_option("--grid", flags.grid, "grid points per dimension for sup norms");
  cmd->add_option("--n-lattice", flags.n_lattice, "lattice cutoff N override");
  cmd->add_option("--rho", flags.rho, "resonance width rho override");
}

int cmd_synth(int n, int d, int degree, int gauge, std::uint64_t seed, double amplitude,
              const CommonFlags& flags) {
  cli::SynthOptions opt;
  opt.amplitude = amplitude;
  cli::CaseFile cf = cli::synth_case(n, d, degree, gauge, seed, opt);
  cf.params.mode = flags.mode;
  if (flags.n_lattice > 0) cf.params.N = flags.n_lattice;
  if (flags.rho > 0.0) cf.params.rho = flags.rho;
  write_output(ser::case_file_to_json(cf), flags.out);
  std::cerr << "synth: residual of emitted triple " << cf.triples[0].residual_norm << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& path, const CommonFlags& flags) {
  const cli::CaseFile cf = ser::case_file_from_json(load_json(path));
  json report = json::array();
  int failures = 0;
  for (size_t i = 0; i < cf.triples.size(); ++i) {
    const auto& t = cf.triples[i];
    const harmonics::TrigPoly r = reduction::residual(cf.cocycle, t);
    const double rnorm = harmonics::cr_norm(r, 0, harmonics::NormMethod::GridSup, flags.grid);
    const auto det_rep = reduction::det_transport_check(cf.cocycle, t, flags.grid);
    CheckList checks;
    checks.add(Check::leq("verify.residual_matches_stored",
                          std::abs(rnorm - t.residual_norm), 1e-12 + 1e-6 * rnorm));
    json entry{{"triple", i},
               {"residual", rnorm},
               {"stored_residual", t.residual_norm},
               {"inverse_error", t.inverse_error},
               {"det_transport_defect", det_rep.max_defect},
               {"checks", ser::checklist_to_json(checks)}};
    report.push_back(std::move(entry));
    failures += summarize_failures(checks, "verify triple " + std::to_string(i));
  }
  write_output(json{{"op", "verify"}, {"triples", report}}, flags.out);
  return (failures > 0 && flags.strict()) ? kExitCertificate : kExitOk;
}

int cmd_jordan(const std::string& path, double epsilon, int m, const CommonFlags& flags) {
  const json j = load_json(path);
  const Matrix n_mat = ser::matrix_from_json(j);
  std::vector<int> blocks;
  if (j.contains("blocks"))
    blocks = j.at("blocks").get<std::vector<int>>();
  else
    blocks = {static_cast<int>(n_mat.rows())};
  const auto cert = jordan::nilpotent_jnf(n_mat, blocks, epsilon, m);
  json report{{"op", "jordan"},
              {"S", ser::matrix_to_json(cert.S)},
              {"J", ser::matrix_to_json(cert.J)},
              {"F_residual", ser::matrix_to_json(cert.F_residual)},
              {"bound_S_log10", cert.bound_S_log10},
              {"bound_F_log10", cert.bound_F_log10},
              {"k_used", cert.k_used},
              {"checks", ser::checklist_to_json(cert.checks)}};
  write_output(report, flags.out);
  const int failures = summarize_failures(cert.checks, "jordan");
  return (failures > 0 && flags.strict()) ? kExitCertificate : kExitOk;
}

int cmd_separate(const std::string& path, std::vector<double> gammas, const CommonFlags& flags) {
  const json j = load_json(path);
  const Matrix a = ser::matrix_from_json(j);
  if (gammas.empty() && j.contains("gammas")) gammas = j.at("gammas").get<std::vector<double>>();
  if (gammas.empty()) throw MalformedInput("separate: provide --gammas");
  const auto res = spectral::adaptive_separation(a, gammas);
  json blocks = json::array();
  for (const auto& spec : res.decoupling.cluster_spectra) {
    json b = json::array();
    for (const auto& v : spec) b.push_back(json{{"re", v.real()}, {"im", v.imag()}});
    blocks.push_back(std::move(b));
  }
  json report{{"op", "separate"},
              {"d0", res.d0},
              {"M", ser::matrix_to_json(res.decoupling.M)},
              {"D", ser::matrix_to_json(res.decoupling.D)},
              {"block_dims", res.decoupling.block_dims},
              {"block_spectra", std::move(blocks)},
              {"residual", res.decoupling.residual},
              {"checks", ser::checklist_to_json(res.decoupling.checks)}};
  write_output(report, flags.out);
  const int failures = summarize_failures(res.decoupling.checks, "separate");
  return (failures > 0 && flags.strict()) ? kExitCertificate : kExitOk;
}

int cmd_resonances(const std::string& path, const CommonFlags& flags) {
  const json j = load_json(path);
  std::vector<Complex> spectrum;
  try {
    for (const auto& v : j.at("spectrum"))
      spectrum.emplace_back(v.at("re").get<double>(), v.at("im").get<double>());
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("resonances: ") + e.what());
  }
  harmonics::FrequencyVector omega(j.at("omega").get<std::vector<double>>(),
                                   j.value("kappa", 0.1), j.value("tau", 1.2));
  const int n_lattice = flags.n_lattice > 0 ? flags.n_lattice : j.value("N", 8);
  const double rho = flags.rho > 0.0 ? flags.rho : j.value("rho", 1e-6);
  const auto graph = resonance::build_graph(spectrum, omega, n_lattice, rho, flags.strict());
  json report{{"op", "resonances"}, {"graph", ser::graph_to_json(graph)}};
  int failures = 0;
  if (graph.star) {
    const auto classes = resonance::analyze_classes(graph);
    report["classes"] = ser::class_report_to_json(classes);
    failures = summarize_failures(classes.checks, "resonances");
  } else {
    report["classes"] = nullptr;
    std::cerr << "resonances: star property fails; class analysis skipped\n";
  }
  write_output(report, flags.out);
  return (failures > 0 && flags.strict()) ? kExitCertificate : kExitOk;
}

int cmd_realify(const std::string& path, int triple_index, const CommonFlags& flags) {
  const cli::CaseFile cf = ser::case_file_from_json(load_json(path));
  if (triple_index < 0 || triple_index >= static_cast<int>(cf.triples.size()))
    throw MalformedInput("realify: triple index out of range");
  reduction::RealifyOptions opt;
  opt.grid = flags.grid;
  const auto res = reduction::realify_step(cf.cocycle, cf.triples[triple_index], opt);
  json report{{"op", "realify"},
              {"lambda0", res.lambda0},
              {"residual_before", res.residual_before},
              {"residual_after", res.residual_after},
              {"triple", ser::triple_to_json(res.triple, cf.cocycle.omega.omega())},
              {"checks", ser::checklist_to_json(res.checks)}};
  write_output(report, flags.out);
  const int failures = summarize_failures(res.checks, "realify");
  return (failures > 0 && flags.strict()) ? kExitCertificate : kExitOk;
}

int cmd_reduce(const std::string& path, const CommonFlags& flags) {
  const cli::CaseFile cf = ser::case_file_from_json(load_json(path));
  reduction::PipelineParams params;
  params.strict = flags.strict() || cf.params.mode == "strict";
  params.m = cf.params.m;
  params.r_max = cf.params.r_max;
  params.grid = flags.grid;
  if (flags.n_lattice > 0)
    params.N_override = flags.n_lattice;
  else if (cf.params.N > 0)
    params.N_override = cf.params.N;
  if (flags.rho > 0.0)
    params.rho_override = flags.rho;
  else if (cf.params.rho > 0.0)
    params.rho_override = cf.params.rho;

  const auto out = reduction::full_pipeline(cf.cocycle, cf.triples, params);
  json triples = json::array();
  for (const auto& t : out.triples)
    triples.push_back(ser::triple_to_json(t, out.doubled.omega.omega()));
  json report{{"op", "reduce"},
              {"report", ser::pipeline_report_to_json(out.report)},
              {"doubled_cocycle", ser::cocycle_to_json(out.doubled)},
              {"triples", std::move(triples)}};
  write_output(report, flags.out);
  int failures = 0;
  for (const auto& s : out.report.steps)
    failures += summarize_failures(s.inequalities, "reduce step " + std::to_string(s.step) +
                                                       " (" + s.op + ")");
  return (failures > 0 && params.strict) ? kExitCertificate : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constructive almost-reducibility toolkit for quasi-periodic cocycles"};
  app.require_subcommand(1);

  CommonFlags flags;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic case file");
  int n = 2, d = 2, degree = 1, gauge = 1;
  std::uint64_t seed = 1;
  double amplitude = 0.1;
  synth->add_option("--n", n, "matrix dimension");
  synth->add_option("--d", d, "torus dimension");
  synth->add_option("--degree", degree, "gauge degree");
  synth->add_option("--gauge", gauge, "gauge complexity: 0 real, 1 scalar phase, 2 unitary");
  synth->add_option("--seed", seed, "RNG seed");
  synth->add_option("--amplitude", amplitude, "gauge amplitude");
  add_common(synth, flags);

  // file-based commands
  std::string input_path;
  auto* verify = app.add_subcommand("verify", "residuals and determinant transport of a case file");
  verify->add_option("case", input_path, "case file")->required();
  add_common(verify, flags);

  auto* jordan_cmd = app.add_subcommand("jordan", "nilpotent Jordan form with certified bounds");
  double epsilon = 1e-3;
  int m_param = 2;
  jordan_cmd->add_option("matrix", input_path, "matrix JSON file")->required();
  jordan_cmd->add_option("--epsilon", epsilon, "thresholding epsilon in (0,1)");
  jordan_cmd->add_option("--m", m_param, "certificate exponent m");
  add_common(jordan_cmd, flags);

  auto* separate = app.add_subcommand("separate", "adaptive spectrum separation");
  std::vector<double> gammas;
  separate->add_option("matrix", input_path, "matrix JSON file")->required();
  separate->add_option("--gammas", gammas, "decreasing Gamma sequence")->delimiter(',');
  add_common(separate, flags);

  auto* resonances = app.add_subcommand("resonances", "resonance graph and chain classes");
  resonances->add_option("spectrum", input_path, "spectrum JSON file")->required();
  add_common(resonances, flags);

  auto* realify = app.add_subcommand("realify", "real conjugation from a complex triple");
  int triple_index = 0;
  realify->add_option("case", input_path, "case file")->required();
  realify->add_option("--triple-index", triple_index, "triple to realify");
  add_common(realify, flags);

  auto* reduce = app.add_subcommand("reduce", "full pipeline to real triples for (omega/2, A2)");
  reduce->add_option("case", input_path, "case file")->required();
  add_common(reduce, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(n, d, degree, gauge, seed, amplitude, flags);
    if (verify->parsed()) return cmd_verify(input_path, flags);
    if (jordan_cmd->parsed()) return cmd_jordan(input_path, epsilon, m_param, flags);
    if (separate->parsed()) return cmd_separate(input_path, gammas, flags);
    if (resonances->parsed()) return cmd_resonances(input_path, flags);
    if (realify->parsed()) return cmd_realify(input_path, triple_index, flags);
    if (reduce->parsed()) return cmd_reduce(input_path, flags);
  } catch (const MalformedInput& e) {
    std::cerr << "error (malformed input): " << e.what() << "\n";
    return kExitMalformed;
  } catch (const HypothesisFailure& e) {
    std::cerr << "error (hypothesis failure): " << e.what() << "\n";
    return kExitHypothesis;
  } catch (const CertificateFailure& e) {
    std::cerr << "error (certificate failure): " << e.what() << "\n";
    return kExitCertificate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  }
  return kExitOk;
}
