#pragma once

// Checked-inequality records. Every nontrivial construction attaches a list
// of these; strict callers turn failures into errors, diagnostic callers
// keep them as data.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpr {

/// One checked inequality lhs <= rhs. Values may be stored as log10
/// magnitudes when the raw numbers overflow double range; `log_scale`
/// records which convention a given entry uses.
struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  bool log_scale = false;
  // Advisory checks record a bound exactly as a source states it even where
  // it is genuinely violable (unspecified constants, degenerate regimes);
  // they are logged and never gate a run.
  bool advisory = false;

  static Check leq(std::string name, double lhs, double rhs) {
    Check c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.pass = lhs <= rhs;
    return c;
  }

  /// lhs and rhs given as natural logs; stored as log10 for readability.
  static Check leq_log(std::string name, double log_lhs, double log_rhs) {
    Check c;
    c.name = std::move(name);
    c.lhs = log_lhs / std::log(10.0);
    c.rhs = log_rhs / std::log(10.0);
    c.pass = log_lhs <= log_rhs;
    c.log_scale = true;
    return c;
  }

  Check as_advisory() && {
    advisory = true;
    return std::move(*this);
  }
};

struct CheckList {
  std::vector<Check> checks;

  void add(Check c) { checks.push_back(std::move(c)); }
  void append(const CheckList& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }
  /// Advisory entries do not gate.
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass && !c.advisory) return false;
    return true;
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> f;
    for (const auto& c : checks)
      if (!c.pass && !c.advisory) f.push_back(c.name);
    return f;
  }
};

/// Input file/JSON is structurally invalid. CLI exit code 3.
struct MalformedInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A certificate inequality failed in a context that demands it. Exit code 2.
struct CertificateFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A hypothesis of one of the constructions failed in strict mode. Exit code 4.
struct HypothesisFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qpr
